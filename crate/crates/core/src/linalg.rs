//! Complex dense linear algebra helpers on top of nalgebra.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub use num_complex::Complex64 as C64;

pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `exp(j*angle)`.
#[inline]
pub fn cis(angle: f64) -> C64 {
    C64::new(angle.cos(), angle.sin())
}

pub fn fro_norm_sqr(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    CMat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-major vectorisation.
pub fn vec_of(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// Extreme eigenvalues of a Hermitian matrix, `(min, max)`.
pub fn hermitian_eig_range(x: &CMat) -> (f64, f64) {
    let ev = x.clone().symmetric_eigenvalues();
    let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// 2-norm condition number of a Hermitian positive semi-definite matrix.
pub fn hermitian_condition(x: &CMat) -> f64 {
    let (min, max) = hermitian_eig_range(x);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky(x: CMat) -> Option<Cholesky<C64, Dyn>> {
    Cholesky::new(x)
}

/// Adds `lambda` to the diagonal in place.
pub fn add_diag(x: &mut CMat, lambda: f64) {
    for i in 0..x.nrows().min(x.ncols()) {
        x[(i, i)] += lambda;
    }
}

pub fn to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `‖est - truth‖² / ‖truth‖²`.
pub fn nmse(est: &CMat, truth: &CMat) -> f64 {
    let err: f64 = est.iter().zip(truth.iter()).map(|(a, b)| (a - b).norm_sqr()).sum();
    err / fro_norm_sqr(truth)
}

/// Real diagonal matrix as complex.
pub fn real_diag(d: &[f64]) -> CMat {
    CMat::from_diagonal(&CVec::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_matches_vec_identity() {
        // vec(A X B^T) = (B ⊗ A) vec(X)
        let a = CMat::from_fn(3, 2, |i, j| C64::new(i as f64 + 0.5, j as f64 - 1.0));
        let x = CMat::from_fn(2, 4, |i, j| C64::new((i * j) as f64, 1.0 + i as f64));
        let b = CMat::from_fn(5, 4, |i, j| C64::new((i + 2 * j) as f64 * 0.1, -(j as f64)));
        let lhs = vec_of(&(&a * &x * b.transpose()));
        let rhs = kron(&b, &a) * vec_of(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn condition_of_diagonal() {
        let d = real_diag(&[4.0, 1.0, 2.0]);
        assert!((hermitian_condition(&d) - 4.0).abs() < 1e-12);
        assert!(hermitian_condition(&real_diag(&[1.0, 0.0])).is_infinite());
    }
}
