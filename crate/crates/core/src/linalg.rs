//! Complex dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
pub use nalgebra::Complex;

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Rotate `v` so its largest-magnitude entry is real and positive.
///
/// Ties go to the lowest index. A zero vector is left untouched.
pub fn fix_phase(v: &mut CVector) {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag {
            best = i;
            best_mag = mag;
        }
    }
    if best_mag <= 0.0 {
        return;
    }
    let rot = v[best].conj() / best_mag;
    for z in v.iter_mut() {
        *z *= rot;
    }
    v[best] = C64::new(v[best].re, 0.0);
}

/// Right null space of `a`, computed from a full SVD.
///
/// A wide matrix is padded with zero rows so the SVD yields the complete set
/// of right-singular vectors. Singular values below `rel_tol * sigma_max`
/// count as zero. The basis is returned ordered from the smallest singular
/// value upwards.
pub fn null_space(a: &CMatrix, rel_tol: f64) -> Vec<CVector> {
    let (rows, cols) = a.shape();
    let square = if rows < cols {
        let mut padded = CMatrix::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(a);
        padded
    } else {
        a.clone()
    };
    let svd = square.svd_unordered(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let sigma = svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let threshold = rel_tol * sigma_max;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&i, &j| sigma[i].total_cmp(&sigma[j]).then(i.cmp(&j)));
    order
        .into_iter()
        .filter(|&i| sigma[i] < threshold || sigma_max == 0.0)
        .map(|i| v_t.row(i).adjoint())
        .collect()
}

/// Ratio of extreme singular values; infinite for a singular matrix.
pub fn condition_number(a: &CMatrix) -> f64 {
    let sigma = a.clone().singular_values_unordered();
    let max = sigma.iter().cloned().fold(0.0_f64, f64::max);
    let min = sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(h.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn hermitian_min_eigenvalue(h: &CMatrix) -> f64 {
    hermitian_eigenvalues(h)[0]
}

/// Solve `z x = b` for Hermitian positive definite `z` via Cholesky.
pub fn solve_hpd(z: &CMatrix, b: &CVector) -> Option<CVector> {
    Cholesky::new(z.clone()).map(|chol| chol.solve(b))
}

/// `a * a^H`.
pub fn gram(a: &CMatrix) -> CMatrix {
    a * a.adjoint()
}

/// Hermitian inner product `x^H y`.
pub fn dot_h(x: &CVector, y: &CVector) -> C64 {
    x.dotc(y)
}
