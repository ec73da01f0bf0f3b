//! Dense complex linear algebra helpers on top of `nalgebra`.
//!
//! Everything here works on Hermitian matrices: covariance square roots,
//! trace identities that avoid forming products, and a Cholesky-backed
//! solver that tracks the condition number of the factored matrix.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Condition number above which a factored matrix is reported as ill-conditioned.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Relative eigenvalue floor used when clamping PSD square roots.
pub const EIGEN_CLAMP: f64 = 1e-10;

#[inline]
pub fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn to_complex(a: &DMatrix<f64>) -> CMat {
    a.map(cplx)
}

/// `(A + A^H) / 2`; removes rounding asymmetry from products like `B X B^H`.
pub fn hermitize(a: &CMat) -> CMat {
    let mut out = a + a.adjoint();
    out.scale_mut(0.5);
    out
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `Re tr(A B)` without forming `A B`.
pub fn trace_of_product(a: &CMat, b: &CMat) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let x = a[(i, j)];
            let y = b[(j, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// `‖A − A^H‖_∞` as the largest entrywise modulus.
pub fn max_asymmetry(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hadamard product with the identity, `I ∘ A`.
pub fn diag_part(a: &CMat) -> CMat {
    CMat::from_diagonal(&a.diagonal())
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitize(a));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(a.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let mut values: Vec<f64> = SymmetricEigen::new(hermitize(a)).eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    values
}

/// Hermitian PSD square root, `A^{1/2} = U Λ^{1/2} U^H`.
///
/// Eigenvalues below `EIGEN_CLAMP · λ_max` (including small negative ones from
/// rounding) are set to zero; sinc correlation matrices with dense element
/// spacing are numerically rank-deficient.
pub fn psd_sqrt(a: &CMat) -> CMat {
    let (values, vectors) = hermitian_eigen(a);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = EIGEN_CLAMP * top;
    let mut scaled = vectors.clone();
    for (c, &v) in values.iter().enumerate() {
        let s = if v > floor { v.sqrt() } else { 0.0 };
        scaled.column_mut(c).scale_mut(s);
    }
    scaled * vectors.adjoint()
}

/// Real symmetric PSD square root, same clamping rule as [`psd_sqrt`].
pub fn psd_sqrt_real(a: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = EIGEN_CLAMP * top;
    let mut scaled = eig.eigenvectors.clone();
    for (c, &v) in eig.eigenvalues.iter().enumerate() {
        let s = if v > floor { v.sqrt() } else { 0.0 };
        scaled.column_mut(c).scale_mut(s);
    }
    scaled * eig.eigenvectors.transpose()
}

/// Cholesky factorization of a Hermitian positive definite matrix together
/// with its spectral condition number.
#[derive(Debug, Clone)]
pub struct HermitianSolver {
    chol: Cholesky<Complex64, Dyn>,
    condition: f64,
}

impl HermitianSolver {
    /// Fails with [`Error::IllConditioned`] when the matrix is not positive
    /// definite. A finite but large condition number is accepted and exposed
    /// through [`HermitianSolver::condition_number`].
    pub fn new(a: &CMat) -> Result<Self> {
        let values = hermitian_eigenvalues(a);
        let (lo, hi) = match (values.first(), values.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => return Err(Error::Dimension("cannot factor an empty matrix".into())),
        };
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if !condition.is_finite() {
            return Err(Error::IllConditioned { condition });
        }
        let chol = Cholesky::new(hermitize(a)).ok_or(Error::IllConditioned { condition })?;
        Ok(Self { chol, condition })
    }

    /// Factor without the eigenvalue pass; used for small per-block systems.
    pub fn new_unchecked(a: &CMat) -> Result<Self> {
        let chol = Cholesky::new(hermitize(a)).ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
        })?;
        Ok(Self {
            chol,
            condition: f64::NAN,
        })
    }

    pub fn condition_number(&self) -> f64 {
        self.condition
    }

    pub fn is_well_conditioned(&self) -> bool {
        self.condition.is_nan() || self.condition <= CONDITION_LIMIT
    }

    pub fn solve(&self, b: &CMat) -> CMat {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &CVec) -> CVec {
        self.chol.solve(b)
    }
}
