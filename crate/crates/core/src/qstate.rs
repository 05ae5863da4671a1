//! Dense state vectors and operators on a `q`-dimensional Hilbert space.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;

/// `exp(2 pi i num / den)` with `num` reduced mod `den` first.
pub fn root_of_unity(num: u64, den: u64) -> C64 {
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * (num % den) as f64 / den as f64)
}

/// Amplitudes in the computational basis `|0>, ..., |q-1>`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Self {
        Self { amplitudes }
    }

    /// Basis vector `|index>`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    /// Copy rescaled to unit norm. The zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            return self.clone();
        }
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a / n).collect(),
        }
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub(crate) fn to_dvector(&self) -> DVector<C64> {
        DVector::from_column_slice(&self.amplitudes)
    }
}

/// Dense complex `q x q` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: DMatrix<C64>,
}

impl OperatorMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            matrix: DMatrix::from_fn(dim, dim, f),
        }
    }

    pub fn from_matrix(matrix: DMatrix<C64>) -> Self {
        assert!(matrix.is_square(), "operator matrix must be square");
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Adds `weight |v><v|`.
    pub fn add_projector(&mut self, weight: f64, v: &StateVector) {
        let amps = v.amplitudes();
        for (i, ai) in amps.iter().enumerate() {
            for (j, aj) in amps.iter().enumerate() {
                self.matrix[(i, j)] += weight * ai * aj.conj();
            }
        }
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// `max |M_ij - conj(M_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues_hermitian(&self) -> Vec<f64> {
        let sym = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// Number of Hermitian eigenvalues with `|lambda| > tol`.
    pub fn rank_hermitian(&self, tol: f64) -> usize {
        self.eigenvalues_hermitian()
            .into_iter()
            .filter(|l| l.abs() > tol)
            .count()
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        let out = &self.matrix * v.to_dvector();
        StateVector::new(out.iter().copied().collect())
    }

    /// `<v|M|v>`.
    pub fn expectation(&self, v: &StateVector) -> C64 {
        v.inner(&self.apply(v))
    }

    pub fn compose(&self, rhs: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix {
            matrix: &self.matrix * &rhs.matrix,
        }
    }

    /// `max |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> f64 {
        self.matrix
            .iter()
            .zip(other.matrix.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|| A - B ||_F`.
    pub fn frobenius_distance(&self, other: &OperatorMatrix) -> f64 {
        (&self.matrix - &other.matrix).norm()
    }

    /// Whether `M^dagger M = I` within `tol` (entrywise).
    pub fn is_unitary(&self, tol: f64) -> bool {
        let prod = self.matrix.adjoint() * &self.matrix;
        let id = DMatrix::<C64>::identity(self.dim(), self.dim());
        prod.iter().zip(id.iter()).all(|(a, b)| (a - b).norm() <= tol)
    }
}
