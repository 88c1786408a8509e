//! Scenario configuration, presets and the runs behind the command-line tool.
//!
//! A run returns a [`Report`] holding the JSON summary, CSV tables and
//! one-line messages; nothing is written here. [`write_report`] is the single
//! writer used by the binary.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::calib::{ac_stark_quadratic, dressed_sensitivity, echo_schedule, StarkSetup};
use crate::channels::{
    amplitude_damping_qutrit, combined_error, decay_ghz_fidelity, depolarize_independent, embed_qubits_in_excited,
    overwhelming_dephasing, pi_pulse_ground_e1, qutrit_ghz_pair, IntegratedNoiseModel, NoiseDistribution,
};
use crate::constants::{self, D52_LIFETIME};
use crate::dfs::{best_dfs, enumerate_dfs, optimal_state, spectral_range, DfsCensus};
use crate::error::{Error, Result};
use crate::estimation::{
    cfi_line, derive_seed, random_guess_rmse, run_campaign, shots_scaling, CampaignConfig, CampaignResult,
};
use crate::fields::{kernel_direction, noise_matrix, FieldComponent, SensorLayout};
use crate::metrology::{commutator_derivative, improvement_db, parity_cfi, qfi_pure, rmse_bound, sld_and_qfi, ParityModel};
use crate::optimize::{optimize_problem, reoptimize_depolarized, OptimizerConfig, SeparableProblem, SimplexConfig};
use crate::statespace::{build_signal_generator, AmplitudeRecord, DensityMatrix, DiagonalGenerator, PureState, SensorLevels};
use crate::tomography::{
    bootstrap_errorbars, coherence_amplitude, ghz_fidelity, reconstruct_mle, register_ghz_pair, simulate_all_bases,
    MleConfig,
};

/// Field component as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub kind: FieldKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(default = "one")]
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Poly,
    Table,
}

fn one() -> f64 {
    1.0
}

impl FieldSpec {
    pub fn poly(order: u32) -> Self {
        Self {
            kind: FieldKind::Poly,
            order: Some(order),
            strength: 1.0,
            samples: None,
        }
    }

    pub fn component(&self) -> Result<FieldComponent> {
        match (self.kind, &self.order, &self.samples) {
            (FieldKind::Poly, Some(order), None) => Ok(FieldComponent::polynomial(*order, self.strength)),
            (FieldKind::Table, None, Some(samples)) => Ok(FieldComponent::tabulated(samples.clone(), self.strength)),
            (FieldKind::Poly, _, _) => Err(config_error("field: kind \"poly\" needs `order` and no `samples`")),
            (FieldKind::Table, _, _) => Err(config_error("field: kind \"table\" needs `samples` and no `order`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Swd,
    SeparableTwoLevel,
    SixLevelOptimized,
    CustomState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub restarts: usize,
    pub max_evaluations: usize,
    pub polish_rounds: usize,
    pub start_box: f64,
    /// Outcome-depolarization strengths for the robustness re-optimizations.
    pub robustness: Vec<f64>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            restarts: d.restarts,
            max_evaluations: d.simplex.max_evaluations,
            polish_rounds: d.polish_rounds,
            start_box: d.start_box,
            robustness: vec![0.01, 0.05, 0.1],
        }
    }
}

impl OptimizerSection {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            restarts: self.restarts,
            start_box: self.start_box,
            simplex: SimplexConfig {
                max_evaluations: self.max_evaluations,
                ..SimplexConfig::default()
            },
            polish_rounds: self.polish_rounds,
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomographyState {
    /// `(|000⟩ + |111⟩)/√2`
    Ghz,
    /// GHZ after the per-qubit depolarizing model of the mapping pulses.
    GhzDepolarized,
    /// Product state after overwhelming dephasing, on the configured levels.
    SeparableDephased,
    Mixed,
    /// The matrix given in `rho`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomographySection {
    pub state: TomographyState,
    pub shots: u64,
    pub bootstrap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<DensityMatrix>,
    /// Basis indices of the GHZ pair for `custom` states.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    pub pi_pulse_error: f64,
    pub addressing_error: Vec<f64>,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            state: TomographyState::Ghz,
            shots: 480,
            bootstrap: 300,
            rho: None,
            pair: None,
            pi_pulse_error: constants::PI_PULSE_ERROR,
            addressing_error: constants::ADDRESSING_ERROR.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    /// Rabi frequencies, rad/s.
    pub rabi: Vec<f64>,
    pub detuning: f64,
    pub correction: f64,
    pub lande: f64,
    pub echo_reduction: f64,
    pub echo_segments: usize,
    /// `[Δ, Ω]` pairs, rad/s.
    pub dressed: Vec<[f64; 2]>,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            rabi: constants::STARK_RABI_FREQUENCIES.to_vec(),
            detuning: constants::STARK_DETUNING,
            correction: constants::STARK_CORRECTION,
            lande: constants::LANDE_D52,
            echo_reduction: 0.5,
            echo_segments: 1,
            dressed: vec![[1.0, 0.0], [1.0, 1.0], [1.0, 3.0]],
        }
    }
}

/// A complete, validated run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    /// Sensor positions, µm.
    pub positions: Vec<f64>,
    pub levels: Vec<Vec<f64>>,
    pub noise: Vec<FieldSpec>,
    /// One distribution per noise component; empty means overwhelming.
    pub noise_model: Vec<NoiseDistribution>,
    pub signal: FieldSpec,
    pub kappa: f64,
    pub time: f64,
    pub protocol: Protocol,
    pub custom_state: Vec<AmplitudeRecord>,
    pub amplitude_swd: f64,
    pub amplitude_separable: f64,
    pub offset_swd: f64,
    pub offset_separable: f64,
    pub signals: Vec<f64>,
    pub shots: u64,
    pub repeats: usize,
    pub phase_points: usize,
    pub phase_end: f64,
    pub window: f64,
    pub bins: usize,
    pub seed: u64,
    pub output: PathBuf,
    /// Shot counts of the scaling study; empty skips it.
    pub shot_grid: Vec<u64>,
    pub scaling_repeats: usize,
    pub optimizer: OptimizerSection,
    pub tomography: TomographySection,
    pub calibration: CalibrationSection,
    pub sweep_max_sensors: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let d = constants::ION_SPACING;
        Self {
            name: "paper-experiment".into(),
            positions: vec![-d, 0.0, d],
            levels: vec![vec![-1.0, 1.0], vec![-2.0, 2.0], vec![-1.0, 1.0]],
            noise: vec![FieldSpec::poly(0), FieldSpec::poly(1)],
            noise_model: Vec::new(),
            signal: FieldSpec::poly(2),
            kappa: constants::KAPPA,
            time: constants::INTERROGATION_TIME,
            protocol: Protocol::Swd,
            custom_state: Vec::new(),
            amplitude_swd: constants::AMPLITUDE_SWD,
            amplitude_separable: constants::AMPLITUDE_SEPARABLE,
            offset_swd: constants::PHASE_OFFSET_SWD,
            offset_separable: constants::PHASE_OFFSET_SEPARABLE,
            signals: constants::EXPERIMENT_SIGNALS.to_vec(),
            shots: constants::SHOTS_PER_ESTIMATE as u64,
            repeats: 500,
            phase_points: constants::PHASE_GRID_POINTS,
            phase_end: constants::PHASE_GRID_END,
            window: constants::PHASE_WINDOW,
            bins: 20,
            seed: 2024,
            output: PathBuf::from("out"),
            shot_grid: vec![4, 8, 12, 16, 24, 32, 48, 72],
            scaling_repeats: 200,
            optimizer: OptimizerSection::default(),
            tomography: TomographySection::default(),
            calibration: CalibrationSection::default(),
            sweep_max_sensors: 7,
        }
    }
}

pub const PRESETS: [&str; 2] = ["paper-experiment", "full-manifold"];

/// Built-in scenarios.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    match name {
        "paper-experiment" => Ok(ScenarioConfig::default()),
        "full-manifold" => Ok(ScenarioConfig {
            name: name.into(),
            levels: vec![vec![-2.0, -1.0, 0.0, 1.0, 2.0, 3.0]; 3],
            protocol: Protocol::SixLevelOptimized,
            ..ScenarioConfig::default()
        }),
        other => Err(config_error(format!("unknown preset `{other}` (known: {})", PRESETS.join(", ")))),
    }
}

fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, p) => *b = p,
    }
}

/// Parses a JSON object. The optional key `"preset"` names the base
/// scenario; the remaining keys override it. Unknown keys are rejected.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut patch: Value = serde_json::from_str(text).map_err(|e| config_error(format!("parse error: {e}")))?;
    let obj = patch
        .as_object_mut()
        .ok_or_else(|| config_error("parse error: top level must be a JSON object"))?;
    let base_name = match obj.remove("preset") {
        None => "paper-experiment".to_string(),
        Some(Value::String(s)) => s,
        Some(_) => return Err(config_error("`preset` must be a string")),
    };
    let mut base = serde_json::to_value(preset(&base_name)?).map_err(|e| config_error(e.to_string()))?;
    merge(&mut base, patch);
    let config: ScenarioConfig = serde_json::from_value(base).map_err(|e| config_error(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

impl ScenarioConfig {
    /// Checks every field against the preconditions of the runs.
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: &str| Err(config_error(format!("{field}: {why}")));
        if self.shots == 0 {
            return bad("shots", "N must be ≥ 1");
        }
        if self.repeats == 0 {
            return bad("repeats", "M must be ≥ 1");
        }
        if self.scaling_repeats == 0 {
            return bad("scaling_repeats", "must be ≥ 1");
        }
        if self.shot_grid.contains(&0) {
            return bad("shot_grid", "N must be ≥ 1");
        }
        if self.phase_points == 0 {
            return bad("phase_points", "must be ≥ 1");
        }
        if !(self.window > 0.0 && self.window <= PI / 2.0) {
            return bad("window", "half-width must lie in (0, π/2]");
        }
        if self.bins == 0 {
            return bad("bins", "must be ≥ 1");
        }
        if self.signals.is_empty() {
            return bad("signals", "need at least one signal");
        }
        if !(self.kappa != 0.0 && self.kappa.is_finite()) {
            return bad("kappa", "must be finite and nonzero");
        }
        if !(self.time > 0.0 && self.time.is_finite()) {
            return bad("time", "must be positive");
        }
        for (field, a) in [("amplitude_swd", self.amplitude_swd), ("amplitude_separable", self.amplitude_separable)] {
            if !(a > 0.0 && a <= 1.0) {
                return bad(field, "amplitude must lie in (0, 1]");
            }
        }
        if self.levels.len() != self.positions.len() {
            return bad("levels", "need one level list per sensor position");
        }
        self.layout().map_err(|e| config_error(format!("positions: {e}")))?;
        self.sensor_levels().map_err(|e| config_error(format!("levels: {e}")))?;
        self.noise_components()?;
        self.signal.component()?;
        if !self.noise_model.is_empty() {
            if self.noise_model.len() != self.noise.len() {
                return bad("noise_model", "need one distribution per noise component");
            }
            IntegratedNoiseModel::new(self.noise_model.clone()).map_err(|e| config_error(format!("noise_model: {e}")))?;
        }
        if self.protocol == Protocol::CustomState && self.custom_state.is_empty() {
            return bad("custom_state", "protocol custom-state needs amplitudes");
        }
        if self.optimizer.restarts == 0 {
            return bad("optimizer.restarts", "must be ≥ 1");
        }
        if self.optimizer.robustness.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return bad("optimizer.robustness", "ε must lie in [0, 1]");
        }
        if self.tomography.shots == 0 {
            return bad("tomography.shots", "must be ≥ 1");
        }
        if self.tomography.bootstrap < 2 {
            return bad("tomography.bootstrap", "need at least two repeats");
        }
        if self.tomography.state == TomographyState::Custom && self.tomography.rho.is_none() {
            return bad("tomography.rho", "state custom needs a density matrix");
        }
        if !(self.calibration.echo_reduction > 0.0 && self.calibration.echo_reduction <= 1.0) {
            return bad("calibration.echo_reduction", "F_red must lie in (0, 1]");
        }
        if self.calibration.echo_segments == 0 {
            return bad("calibration.echo_segments", "k must be ≥ 1");
        }
        if self.calibration.detuning == 0.0 {
            return bad("calibration.detuning", "Δ_q must be nonzero");
        }
        if self.sweep_max_sensors < 2 {
            return bad("sweep_max_sensors", "must be ≥ 2");
        }
        Ok(())
    }

    pub fn layout(&self) -> Result<SensorLayout> {
        SensorLayout::new(self.positions.clone())
    }

    pub fn sensor_levels(&self) -> Result<SensorLevels> {
        SensorLevels::new(self.levels.clone())
    }

    pub fn noise_components(&self) -> Result<Vec<FieldComponent>> {
        self.noise.iter().map(FieldSpec::component).collect()
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn phase_grid(&self) -> Vec<f64> {
        constants::phase_grid(self.phase_points, self.phase_end)
    }
}

/// Census, generator and the best subspace of a configuration.
pub struct Setup {
    pub levels: SensorLevels,
    pub layout: SensorLayout,
    pub census: DfsCensus,
    pub generator: DiagonalGenerator,
    /// Spectral range of the best subspace, the SWD phase slope.
    pub omega: f64,
}

impl Setup {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        let levels = config.sensor_levels()?;
        let layout = config.layout()?;
        let census = enumerate_dfs(&levels, &layout, &config.noise_components()?)?;
        let signal = config.signal.component()?.unit();
        let generator = build_signal_generator(&layout, &signal, config.kappa, config.time, &levels)?;
        let best = best_dfs(&census.subspaces, &generator)?;
        let omega = spectral_range(best, &generator).delta;
        Ok(Self {
            levels,
            layout,
            census,
            generator,
            omega,
        })
    }

    /// Basis indices `(s_max, s_min)` of the best subspace.
    pub fn ghz_pair(&self) -> Result<(usize, usize)> {
        let r = spectral_range(best_dfs(&self.census.subspaces, &self.generator)?, &self.generator);
        Ok((r.argmax, r.argmin))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dfs,
    Bounds,
    Simulate,
    Optimize,
    Tomography,
    Calibrate,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dfs => "dfs",
            Self::Bounds => "bounds",
            Self::Simulate => "simulate",
            Self::Optimize => "optimize",
            Self::Tomography => "tomography",
            Self::Calibrate => "calibrate",
            Self::Sweep => "sweep",
        }
    }
}

/// Comma-separated table with one header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(file: &str, header: &[&str]) -> Self {
        Self {
            file: file.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }
}

/// Results of one run, not yet written anywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: Command,
    pub results: Value,
    pub tables: Vec<Table>,
    pub lines: Vec<String>,
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn run(command: Command, config: &ScenarioConfig) -> Result<Report> {
    config.validate()?;
    match command {
        Command::Dfs => run_dfs(config),
        Command::Bounds => run_bounds(config),
        Command::Simulate => run_simulate(config),
        Command::Optimize => run_optimize(config),
        Command::Tomography => run_tomography(config),
        Command::Calibrate => run_calibrate(config),
        Command::Sweep => run_sweep(config),
    }
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialize")
}

pub fn run_dfs(config: &ScenarioConfig) -> Result<Report> {
    let setup = Setup::new(config)?;
    let mut table = Table::new("dfs.csv", &["index", "eta", "dimension", "members", "delta_over_omega"]);
    let mut entries = Vec::new();
    for (k, d) in setup.census.subspaces.iter().enumerate() {
        let delta = spectral_range(d, &setup.generator).delta;
        let members: Vec<String> = d.member_labels(&setup.levels).map(|b| b.to_string()).collect();
        let eta: Vec<String> = d.eta().iter().map(|x| num(*x)).collect();
        table.push(vec![
            k.to_string(),
            eta.join(";"),
            d.dimension().to_string(),
            members.join(" "),
            num(delta / setup.omega),
        ]);
        entries.push(json!({"eta": d.eta(), "dimension": d.dimension(), "members": members, "delta": delta}));
    }
    let maximal = setup.census.count_with_range(&setup.generator, setup.omega, 1e-9 * setup.omega);
    let count = setup.census.len();
    Ok(Report {
        command: Command::Dfs,
        results: json!({
            "dfs_count": count,
            "maximal_count": maximal,
            "omega": setup.omega,
            "remainder_dimension": setup.census.remainder.len(),
            "subspaces": entries,
        }),
        tables: vec![table],
        lines: vec![format!("{count} DFSs, {maximal} maximal (Δ = ω = {:.6} rad per pT/µm²)", setup.omega)],
    })
}

/// Noise-free QFI of the configured protocol.
fn protocol_fisher(config: &ScenarioConfig, setup: &Setup) -> Result<f64> {
    let w = setup.omega;
    match config.protocol {
        Protocol::Swd => {
            let best = best_dfs(&setup.census.subspaces, &setup.generator)?;
            qfi_pure(&optimal_state(best, &setup.generator)?, &setup.generator)
        }
        Protocol::SeparableTwoLevel => Ok(w * w / 16.0),
        Protocol::SixLevelOptimized => Ok(3.3 * w * w / 16.0),
        Protocol::CustomState => {
            let psi = PureState::from_records(&setup.levels, &config.custom_state)?;
            let rho = overwhelming_dephasing(&DensityMatrix::from_pure(&psi), &setup.census)?;
            Ok(sld_and_qfi(&rho, &commutator_derivative(&setup.generator, &rho)?)?.1)
        }
    }
}

pub fn run_bounds(config: &ScenarioConfig) -> Result<Report> {
    let setup = Setup::new(config)?;
    let w = setup.omega;
    let heisenberg = rmse_bound(w * w)?;
    let two_level = rmse_bound(w * w / 16.0)?;
    let six_level = rmse_bound(3.3 * w * w / 16.0)?;
    let protocol = rmse_bound(protocol_fisher(config, &setup)?)?;
    let phase = 1.5;
    let swd_cfi = parity_cfi(config.amplitude_swd, w, phase);
    let sep_cfi = parity_cfi(config.amplitude_separable, w, phase);
    let infinite_shot_db = improvement_db(rmse_bound(sep_cfi)?, rmse_bound(swd_cfi)?)?;
    let lines = vec![
        format!("omega = {w:.6}"),
        format!("entangled QFI line      {heisenberg:.4} pT/µm²"),
        format!("two-level separable     {two_level:.4} pT/µm²"),
        format!("six-level separable     {six_level:.4} pT/µm²"),
        format!("protocol {:?} bound {protocol:.4} pT/µm²", config.protocol),
        format!("infinite-shot gain at Φ = {phase}: {infinite_shot_db:.2} dB"),
    ];
    Ok(Report {
        command: Command::Bounds,
        results: json!({
            "omega": w,
            "rmse_entangled": heisenberg,
            "rmse_two_level_separable": two_level,
            "rmse_six_level_separable": six_level,
            "rmse_protocol": protocol,
            "db_entangled_vs_two_level": improvement_db(two_level, heisenberg)?,
            "db_entangled_vs_six_level": improvement_db(six_level, heisenberg)?,
            "infinite_shot_phase": phase,
            "infinite_shot_db": infinite_shot_db,
        }),
        tables: Vec::new(),
        lines,
    })
}

/// The three parity models compared by `simulate`: SWD, separable, ideal separable.
pub fn protocol_models(config: &ScenarioConfig, omega: f64) -> Result<[(&'static str, ParityModel); 3]> {
    let l = config.positions.len() as u32;
    Ok([
        ("swd", ParityModel::new(config.amplitude_swd, omega, config.offset_swd)?.with_sensors(l)),
        ("separable", ParityModel::new(config.amplitude_separable, omega, config.offset_separable)?.with_sensors(l)),
        (
            "separable_ideal",
            ParityModel::new(constants::AMPLITUDE_SEPARABLE_IDEAL, omega, config.offset_separable)?.with_sensors(l),
        ),
    ])
}

pub fn campaign_config(config: &ScenarioConfig, seed: u64) -> CampaignConfig {
    CampaignConfig {
        signals: config.signals.clone(),
        phase_grid: config.phase_grid(),
        shots: config.shots,
        repeats: config.repeats,
        window: config.window,
        seed,
        bins: config.bins,
    }
}

pub fn run_simulate(config: &ScenarioConfig) -> Result<Report> {
    let setup = Setup::new(config)?;
    let models = protocol_models(config, setup.omega)?;
    let mut rmse_table = Table::new(
        "simulate_rmse.csv",
        &["protocol", "signal", "mean", "std", "standard_error", "bias", "rmse", "rmse_error", "estimates"],
    );
    let mut hist_table = Table::new("simulate_histogram.csv", &["protocol", "signal", "bin", "bin_center", "count"]);
    let mut campaigns: BTreeMap<&str, CampaignResult> = BTreeMap::new();
    let mut lines = Vec::new();
    for (q, (name, model)) in models.iter().enumerate() {
        let r = run_campaign(model, &campaign_config(config, derive_seed(config.seed, q as u64)))?;
        for s in &r.signals {
            rmse_table.push(vec![
                name.to_string(),
                num(s.signal),
                num(s.mean),
                num(s.std),
                num(s.standard_error),
                num(s.bias()),
                num(s.rmse),
                num(s.rmse_error),
                s.estimates.len().to_string(),
            ]);
            for (k, (c, n)) in s.histogram.centers().iter().zip(&s.histogram.counts).enumerate() {
                hist_table.push(vec![name.to_string(), num(s.signal), k.to_string(), num(*c), n.to_string()]);
            }
        }
        lines.push(format!("{name}: average RMSE {:.3} ± {:.3} pT/µm²", r.average_rmse, r.average_rmse_error));
        campaigns.insert(name, r);
    }
    let grid = config.phase_grid();
    let (swd, sep, ideal) = (&campaigns["swd"], &campaigns["separable"], &campaigns["separable_ideal"]);
    let ratio = sep.average_rmse / swd.average_rmse;
    let ratio_ideal = ideal.average_rmse / swd.average_rmse;
    lines.push(format!(
        "improvement {ratio:.2}x ({:.2} dB), over ideal separable {ratio_ideal:.2}x",
        10.0 * ratio.log10()
    ));
    let summary_of = |r: &CampaignResult| {
        json!({
            "model": r.model,
            "average_rmse": r.average_rmse,
            "average_rmse_error": r.average_rmse_error,
            "cfi_line": cfi_line(&r.model, &config.signals, &grid, config.window).ok(),
            "signals": r.signals.iter().map(|s| json!({
                "signal": s.signal, "mean": s.mean, "std": s.std, "standard_error": s.standard_error,
                "rmse": s.rmse, "rmse_error": s.rmse_error, "phases": s.phases,
            })).collect::<Vec<_>>(),
        })
    };
    let mut results = json!({
        "omega": setup.omega,
        "random_guess_rmse": random_guess_rmse(setup.omega),
        "improvement_separable_over_swd": ratio,
        "improvement_db": 10.0 * ratio.log10(),
        "improvement_ideal_separable_over_swd": ratio_ideal,
        "campaigns": campaigns.iter().map(|(k, v)| (k.to_string(), summary_of(v))).collect::<BTreeMap<_, _>>(),
    });
    let mut tables = vec![rmse_table, hist_table];
    if !config.shot_grid.is_empty() {
        let base = CampaignConfig {
            repeats: config.scaling_repeats,
            ..campaign_config(config, derive_seed(config.seed, 100))
        };
        let rows = shots_scaling(&[models[0].1, models[1].1], &config.shot_grid, &base)?;
        let mut t = Table::new(
            "simulate_scaling.csv",
            &[
                "shots", "rmse_swd", "rmse_swd_error", "bound_swd", "rmse_separable", "rmse_separable_error",
                "bound_separable", "random_guess", "improvement_db", "improvement_db_error",
            ],
        );
        for r in &rows {
            t.push(vec![
                r.shots.to_string(),
                num(r.rmse[0]),
                num(r.rmse_error[0]),
                num(r.bound[0]),
                num(r.rmse[1]),
                num(r.rmse_error[1]),
                num(r.bound[1]),
                num(random_guess_rmse(setup.omega)),
                num(r.improvement_db.unwrap_or(f64::NAN)),
                num(r.improvement_db_error.unwrap_or(f64::NAN)),
            ]);
        }
        results["scaling"] = to_value(&rows);
        tables.push(t);
    }
    Ok(Report {
        command: Command::Simulate,
        results,
        tables,
        lines,
    })
}

/// Separable-protocol problem for the configured levels, noise and signal.
pub fn separable_problem(config: &ScenarioConfig) -> Result<(SeparableProblem, f64)> {
    let setup = Setup::new(config)?;
    Ok((SeparableProblem::new(&setup.levels, &setup.census, &setup.generator)?, setup.omega))
}

pub fn run_optimize(config: &ScenarioConfig) -> Result<Report> {
    let (problem, w) = separable_problem(config)?;
    let opt = config.optimizer.config();
    let result = optimize_problem(&problem, &opt, config.seed, 0.0)?;
    let unit = w * w / 16.0;
    let mut lines = vec![format!(
        "{} parameters, F = {:.4} ω²/16 = {:.4} ω² over {} restarts",
        problem.parameter_count(),
        result.best / unit,
        result.best / (w * w),
        result.restarts.len()
    )];
    let robustness = config
        .optimizer
        .robustness
        .iter()
        .map(|&eps| reoptimize_depolarized(&problem, &result.parameters, eps, &opt))
        .collect::<Result<Vec<_>>>()?;
    for r in &robustness {
        lines.push(format!(
            "ε = {}: F = {:.4} ω²/16 after re-optimization, noise-free {:.4} ω²/16",
            r.epsilon,
            r.reoptimized / unit,
            r.noise_free_at_reoptimized / unit
        ));
    }
    Ok(Report {
        command: Command::Optimize,
        results: json!({
            "omega": w,
            "parameter_count": problem.parameter_count(),
            "best": result.best,
            "ratio_omega2_over_16": result.best / unit,
            "ratio_omega2": result.best / (w * w),
            "parameters": result.parameters,
            "restarts": result.restarts,
            "robustness": robustness,
        }),
        tables: Vec::new(),
        lines,
    })
}

fn ghz_register() -> DensityMatrix {
    let mut rho = nalgebra::DMatrix::zeros(8, 8);
    for &(i, j) in &[(0, 0), (0, 7), (7, 0), (7, 7)] {
        rho[(i, j)] = num_complex::Complex64::new(0.5, 0.0);
    }
    DensityMatrix::new(rho).expect("valid GHZ")
}

fn mapping_errors(t: &TomographySection) -> Vec<f64> {
    t.addressing_error.iter().map(|&a| combined_error(t.pi_pulse_error, a)).collect()
}

/// The state and GHZ pair a tomography run characterizes.
pub fn tomography_target(config: &ScenarioConfig) -> Result<(DensityMatrix, (usize, usize))> {
    let t = &config.tomography;
    match t.state {
        TomographyState::Ghz => Ok((ghz_register(), register_ghz_pair(3))),
        TomographyState::GhzDepolarized => Ok((depolarize_independent(&ghz_register(), &mapping_errors(t))?, register_ghz_pair(3))),
        TomographyState::Mixed => Ok((DensityMatrix::maximally_mixed(8), register_ghz_pair(3))),
        TomographyState::SeparableDephased => {
            let setup = Setup::new(config)?;
            let (hi, lo) = setup.ghz_pair()?;
            let psi = PureState::separable_pm(&setup.levels, setup.levels.label(hi).labels())?;
            Ok((overwhelming_dephasing(&DensityMatrix::from_pure(&psi), &setup.census)?, (hi, lo)))
        }
        TomographyState::Custom => {
            let rho = t.rho.clone().ok_or_else(|| config_error("tomography.rho missing"))?;
            let pair = t.pair.unwrap_or((0, rho.dim() - 1));
            Ok((rho, pair))
        }
    }
}

pub fn run_tomography(config: &ScenarioConfig) -> Result<Report> {
    let t = &config.tomography;
    let (target, pair) = tomography_target(config)?;
    let mle = MleConfig::default();
    let counts = simulate_all_bases(&target, t.shots, config.seed)?;
    let rec = reconstruct_mle(&counts, &mle)?;
    let boot_seed = derive_seed(config.seed, 1);
    let fidelity = bootstrap_errorbars(&counts, |r| ghz_fidelity(r, pair), t.bootstrap, boot_seed, &mle)?;
    let amplitude = bootstrap_errorbars(&counts, |r| coherence_amplitude(r, pair), t.bootstrap, boot_seed, &mle)?;

    // error models of the experiment applied to an ideal GHZ state
    let p = mapping_errors(t);
    let ghz = ghz_register();
    let depolarized = depolarize_independent(&ghz, &p)?;
    let decay_fidelity = decay_ghz_fidelity(&ghz, config.time, D52_LIFETIME)?;
    let damped = pi_pulse_ground_e1(&amplitude_damping_qutrit(&embed_qubits_in_excited(&depolarized)?, config.time, D52_LIFETIME)?)?;
    let model_amplitude = coherence_amplitude(&damped, qutrit_ghz_pair());

    let lines = vec![
        format!(
            "reconstructed fidelity {:.4} ± {:.4}, amplitude {:.4} ± {:.4} ({} iterations{})",
            fidelity.value,
            fidelity.std,
            amplitude.value,
            amplitude.std,
            rec.iterations,
            if rec.hit_iteration_cap { ", iteration cap reached" } else { "" }
        ),
        format!(
            "true fidelity {:.4}; error model: depolarizing drop {:.4}, decay drop {:.4}, amplitude {:.4}",
            ghz_fidelity(&target, pair),
            1.0 - ghz_fidelity(&depolarized, register_ghz_pair(3)),
            1.0 - decay_fidelity,
            model_amplitude
        ),
    ];
    Ok(Report {
        command: Command::Tomography,
        results: json!({
            "state": t.state,
            "pair": pair,
            "true_fidelity": ghz_fidelity(&target, pair),
            "true_amplitude": coherence_amplitude(&target, pair),
            "fidelity": fidelity,
            "amplitude": amplitude,
            "iterations": rec.iterations,
            "hit_iteration_cap": rec.hit_iteration_cap,
            "log_likelihood": rec.log_likelihood,
            "rho": rec.rho,
            "error_model": {
                "depolarizing_probabilities": p,
                "depolarizing_fidelity_drop": 1.0 - ghz_fidelity(&depolarized, register_ghz_pair(3)),
                "decay_fidelity_drop": 1.0 - decay_fidelity,
                "combined_amplitude": model_amplitude,
            },
        }),
        tables: Vec::new(),
        lines,
    })
}

pub fn run_calibrate(config: &ScenarioConfig) -> Result<Report> {
    let c = &config.calibration;
    let d = config.positions.windows(2).map(|w| w[1] - w[0]).next().unwrap_or(constants::ION_SPACING);
    let mut table = Table::new(
        "calibrate.csv",
        &["rabi_khz", "stark_shift_hz", "corrected_shift_hz", "central_offset_pt", "quadratic_field"],
    );
    let mut entries = Vec::new();
    for &rabi in &c.rabi {
        let r = ac_stark_quadratic(&StarkSetup {
            rabi,
            detuning: c.detuning,
            correction: c.correction,
            spacing: d,
            lande: c.lande,
        })?;
        table.push(vec![
            num(rabi / (2.0 * PI * 1e3)),
            num(r.stark_shift_hz),
            num(r.corrected_shift_hz),
            num(r.central_offset_pt),
            num(r.quadratic_field),
        ]);
        entries.push(r);
    }
    let fields: Vec<String> = entries.iter().map(|e| format!("{:.2}", e.quadratic_field.abs())).collect();
    let mut lines = vec![format!("|B^q| = [{}] pT/µm²", fields.join(", "))];
    // the largest shift expressed as a field difference, under three conventions
    let conventions = entries.iter().max_by(|a, b| a.corrected_shift_hz.abs().total_cmp(&b.corrected_shift_hz.abs())).map(|e| {
        let single_level = e.corrected_shift_hz.abs() / (constants::BOHR_MAGNETON_HZ_PER_PT * c.lande);
        json!({
            "shift_hz": e.corrected_shift_hz.abs(),
            "taylor_offset_pt": e.central_offset_pt.abs(),
            "quadratic_times_spacing_squared_pt": e.quadratic_field.abs() * d * d,
            "single_level_equivalent_pt": single_level,
        })
    });
    if let Some(v) = &conventions {
        lines.push(format!(
            "largest shift {:.2} Hz: B^q d²/2 = {:.0} pT, B^q d² = {:.0} pT, δ/(μ_B g) = {:.0} pT",
            v["shift_hz"].as_f64().unwrap_or(0.0),
            v["taylor_offset_pt"].as_f64().unwrap_or(0.0),
            v["quadratic_times_spacing_squared_pt"].as_f64().unwrap_or(0.0),
            v["single_level_equivalent_pt"].as_f64().unwrap_or(0.0)
        ));
    }
    let echo = echo_schedule(c.echo_reduction, config.time, c.echo_segments)?;
    lines.push(format!(
        "echo schedule: {} flips, effective ratio {:.6}",
        echo.echo_times.len(),
        echo.effective_ratio()
    ));
    let dressed = c
        .dressed
        .iter()
        .map(|&[delta, rabi]| Ok(json!({"detuning": delta, "rabi": rabi, "s": dressed_sensitivity(delta, rabi)?})))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report {
        command: Command::Calibrate,
        results: json!({
            "stark": entries,
            "shift_conventions": conventions,
            "echo": {"schedule": echo, "effective_ratio": echo.effective_ratio()},
            "dressed": dressed,
        }),
        tables: vec![table],
        lines,
    })
}

/// One row of the sensor-count study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sensors: usize,
    pub kernel: Vec<f64>,
    pub delta: f64,
    pub entangled_qfi: f64,
    /// Closed form `2^(1−m) Δ²`.
    pub separable_limit: f64,
    /// SLD-based QFI of the dephased balanced product state.
    pub separable_qfi: f64,
    pub bound_ratio: f64,
}

/// `m` sensors spaced like the configuration, noise of Taylor orders
/// `0..m−2`, signal of order `m−1`, two levels `±r_i` per sensor.
pub fn sweep_row(m: usize, spacing: f64, kappa: f64, time: f64) -> Result<SweepRow> {
    let layout = SensorLayout::equidistant(m, spacing)?;
    let noise: Vec<FieldComponent> = (0..m as u32 - 1).map(FieldComponent::taylor).collect();
    let kernel = kernel_direction(&noise_matrix(&noise, &layout)?)?;
    let levels = SensorLevels::new(kernel.iter().map(|&r| if r == 0.0 { vec![0.0] } else { vec![-r.abs(), r.abs()] }).collect())?;
    let g = build_signal_generator(&layout, &FieldComponent::taylor(m as u32 - 1), kappa, time, &levels)?;
    let census = enumerate_dfs(&levels, &layout, &noise)?;
    let best = best_dfs(&census.subspaces, &g)?;
    let delta = spectral_range(best, &g).delta;
    let psi = PureState::separable_pm(&levels, &kernel)?;
    let rho = overwhelming_dephasing(&DensityMatrix::from_pure(&psi), &census)?;
    let separable_qfi = sld_and_qfi(&rho, &commutator_derivative(&g, &rho)?)?.1;
    let separable_limit = 2f64.powi(1 - m as i32) * delta * delta;
    Ok(SweepRow {
        sensors: m,
        kernel,
        delta,
        entangled_qfi: delta * delta,
        separable_limit,
        separable_qfi,
        bound_ratio: rmse_bound(separable_limit)? / rmse_bound(delta * delta)?,
    })
}

pub fn run_sweep(config: &ScenarioConfig) -> Result<Report> {
    let spacing = config.layout()?.spacing().unwrap_or(constants::ION_SPACING);
    let rows = (2..=config.sweep_max_sensors)
        .map(|m| sweep_row(m, spacing, config.kappa, config.time))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(
        "sweep.csv",
        &["sensors", "kernel", "delta", "entangled_qfi", "separable_limit", "separable_qfi", "bound_ratio"],
    );
    let mut lines = Vec::new();
    for r in &rows {
        let k: Vec<String> = r.kernel.iter().map(|x| num(*x)).collect();
        table.push(vec![
            r.sensors.to_string(),
            k.join(";"),
            num(r.delta),
            num(r.entangled_qfi),
            num(r.separable_limit),
            num(r.separable_qfi),
            num(r.bound_ratio),
        ]);
        lines.push(format!(
            "m = {}: Δ = {:.4e}, separable/entangled QFI = {:.5}, RMSE ratio {:.3}",
            r.sensors,
            r.delta,
            r.separable_qfi / r.entangled_qfi,
            r.bound_ratio
        ));
    }
    Ok(Report {
        command: Command::Sweep,
        results: json!({ "rows": rows }),
        tables: vec![table],
        lines,
    })
}

/// Summary document written next to the tables.
pub fn summary(report: &Report, config: &ScenarioConfig, timestamp: Option<u64>) -> Value {
    let mut v = json!({
        "command": report.command.name(),
        "config_hash": config.hash(),
        "config": config,
        "results": report.results,
    });
    if let Some(t) = timestamp {
        v["generated_unix"] = json!(t);
    }
    v
}

/// Writes `<command>.json` and every table into `dir`; returns the paths.
pub fn write_report(report: &Report, config: &ScenarioConfig, dir: &Path, timestamp: Option<u64>) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    let path = dir.join(format!("{}.json", report.command.name()));
    let mut text = serde_json::to_string_pretty(&summary(report, config, timestamp)).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io)?;
    written.push(path);
    for t in &report.tables {
        let path = dir.join(&t.file);
        std::fs::write(&path, t.to_csv()).map_err(io)?;
        written.push(path);
    }
    Ok(written)
}

/// Human-readable digest of a report.
pub fn render_lines(report: &Report) -> String {
    let mut s = String::new();
    for l in &report.lines {
        let _ = writeln!(s, "{}: {l}", report.command.name());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> ScenarioConfig {
        ScenarioConfig {
            repeats: 40,
            shot_grid: vec![8, 72],
            scaling_repeats: 20,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn preset_constants() {
        let c = preset("paper-experiment").unwrap();
        assert_eq!(c.kappa, 2.0 * PI * 0.0168);
        assert_eq!(c.positions, vec![-4.9, 0.0, 4.9]);
        assert_eq!(c.time, 0.08);
        assert_eq!((c.amplitude_swd, c.amplitude_separable), (0.45, 0.146));
        assert_eq!((c.window, c.shots), (0.73, 72));
        assert_eq!(c.signals, vec![0.0, 2.1, 4.7, 7.6, 9.5, 11.9, 15.2]);
        assert!(preset("nope").unwrap_err().is_config());
    }

    #[test]
    fn parse_errors_and_validation() {
        let e = parse_config("").unwrap_err();
        assert!(e.is_config() && e.to_string().contains("parse error"), "{e}");
        let e = parse_config(r#"{"shots": 0}"#).unwrap_err();
        assert!(e.to_string().contains("N must be ≥ 1"), "{e}");
        let e = parse_config(r#"{"colour": 1}"#).unwrap_err();
        assert!(e.to_string().contains("colour"), "{e}");
        let e = parse_config(r#"{"noise": [{"kind": "poly"}]}"#).unwrap_err();
        assert!(e.to_string().contains("order"), "{e}");
        let c = parse_config(r#"{"preset": "full-manifold", "repeats": 7, "optimizer": {"restarts": 3}}"#).unwrap();
        assert_eq!(c.levels[0].len(), 6);
        assert_eq!(c.repeats, 7);
        assert_eq!(c.optimizer.restarts, 3);
        assert_eq!(c.optimizer.robustness, vec![0.01, 0.05, 0.1]);
    }

    #[test]
    fn config_round_trip_and_hash() {
        let c = quick();
        let text = serde_json::to_string(&c).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_ne!(preset("full-manifold").unwrap().hash(), c.hash());
    }

    #[test]
    fn dfs_on_full_manifold() {
        let r = run(Command::Dfs, &preset("full-manifold").unwrap()).unwrap();
        assert_eq!(r.lines[0].split(',').next().unwrap(), "68 DFSs");
        assert!(r.lines[0].contains("32 maximal"));
        assert_eq!(r.tables[0].rows.len(), 68);
    }

    #[test]
    fn bounds_lines() {
        let r = run(Command::Bounds, &quick()).unwrap();
        let get = |k: &str| r.results[k].as_f64().unwrap();
        assert!((get("rmse_entangled") / 2.462 - 1.0).abs() < 0.01);
        assert!((get("rmse_two_level_separable") / 9.847 - 1.0).abs() < 0.01);
        assert!((get("rmse_six_level_separable") / 5.42 - 1.0).abs() < 0.01);
    }

    #[test]
    fn simulate_is_deterministic() {
        let c = quick();
        let a = run(Command::Simulate, &c).unwrap();
        let b = run(Command::Simulate, &c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.tables.len(), 3);
        let csv = a.tables[0].to_csv();
        assert!(csv.starts_with("protocol,signal,"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn sweep_matches_closed_form() {
        let c = ScenarioConfig {
            sweep_max_sensors: 5,
            ..quick()
        };
        let r = run_sweep(&c).unwrap();
        let rows: Vec<SweepRow> = serde_json::from_value(r.results["rows"].clone()).unwrap();
        for row in rows {
            assert!((row.separable_qfi / row.separable_limit - 1.0).abs() < 1e-9, "{row:?}");
            assert!((row.bound_ratio - 2f64.powf((row.sensors as f64 - 1.0) / 2.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn calibrate_and_tomography_run() {
        let mut c = quick();
        let r = run(Command::Calibrate, &c).unwrap();
        assert_eq!(r.tables[0].rows.len(), 6);
        c.tomography.bootstrap = 3;
        let r = run(Command::Tomography, &c).unwrap();
        assert!(r.results["fidelity"]["value"].as_f64().unwrap() > 0.95);
        let rho: DensityMatrix = serde_json::from_value(r.results["rho"].clone()).unwrap();
        assert_eq!(rho.dim(), 8);
    }

    #[test]
    fn separable_dephased_target_has_quarter_amplitude() {
        let mut c = quick();
        c.tomography.state = TomographyState::SeparableDephased;
        let (rho, pair) = tomography_target(&c).unwrap();
        assert!((coherence_amplitude(&rho, pair) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn written_files_reload() {
        let dir = tempfile::tempdir().unwrap();
        let c = quick();
        let r = run(Command::Bounds, &c).unwrap();
        let paths = write_report(&r, &c, dir.path(), None).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(&paths[0]).unwrap()).unwrap();
        assert_eq!(v["results"], r.results);
        let back: ScenarioConfig = serde_json::from_value(v["config"].clone()).unwrap();
        assert_eq!(back, c);
        assert!(v.get("generated_unix").is_none());
    }
}
