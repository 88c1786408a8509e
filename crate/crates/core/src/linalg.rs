//! Small dense linear-algebra helpers shared by the physics modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative cutoff below which singular values count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub(crate) const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub(crate) const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub(crate) const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Singular values of a real matrix, padded with zeros up to `max(rows, cols)`.
fn padded_square(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows().max(m.ncols());
    let mut sq = DMatrix::zeros(n, n);
    sq.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
    sq
}

/// Numerical rank: singular values below `RANK_TOLERANCE` times the largest are zero.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let largest = svd.singular_values.max();
    if largest == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_TOLERANCE * largest)
        .count()
}

/// Orthonormal basis of the right null space, one column per kernel direction.
pub fn null_space(m: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = m.ncols();
    let sq = padded_square(m);
    let svd = sq.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let largest = svd.singular_values.max();
    let kernel: Vec<DVector<f64>> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| largest == 0.0 || s <= RANK_TOLERANCE * largest)
        .map(|(i, _)| v_t.row(i).transpose().rows(0, cols).into_owned())
        .collect();
    if kernel.is_empty() {
        DMatrix::zeros(cols, 0)
    } else {
        DMatrix::from_columns(&kernel)
    }
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Eigendecomposition of a Hermitian matrix: ascending eigenvalues, eigenvectors as columns.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Kronecker product of complex matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMatrix::from_fn(ar * br, ac * bc, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    })
}

/// Applies a single-site operator pair `K ρ K†` summed over Kraus operators,
/// acting on site `site` of a tensor product with local dimensions `dims`.
pub fn apply_local_kraus(rho: &CMatrix, dims: &[usize], site: usize, kraus: &[CMatrix]) -> CMatrix {
    let d = dims[site];
    let stride: usize = dims[site + 1..].iter().product();
    let total = rho.nrows();
    let mut out = CMatrix::zeros(total, total);
    // index = high * d * stride + local * stride + low
    let split = |idx: usize| {
        let low = idx % stride;
        let local = (idx / stride) % d;
        let high = idx / (stride * d);
        (high, local, low)
    };
    let join = |high: usize, local: usize, low: usize| high * d * stride + local * stride + low;
    for k in kraus {
        for r in 0..total {
            let (rh, rl, rlow) = split(r);
            for c in 0..total {
                let (ch, cl, clow) = split(c);
                let mut acc = ZERO;
                for a in 0..d {
                    let kra = k[(rl, a)];
                    if kra == ZERO {
                        continue;
                    }
                    let row = join(rh, a, rlow);
                    for b in 0..d {
                        let kcb = k[(cl, b)];
                        if kcb == ZERO {
                            continue;
                        }
                        acc += kra * rho[(row, join(ch, b, clow))] * kcb.conj();
                    }
                }
                out[(r, c)] += acc;
            }
        }
    }
    out
}
