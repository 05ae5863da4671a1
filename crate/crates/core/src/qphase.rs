//! Finite-dimensional quantum phase states, the phase-locking operator built
//! from coprime phase states, its Ramanujan-sum kernel, and the Bost–Connes
//! KMS phase values.

use std::f64::consts::PI;

use thiserror::Error;

use crate::arith::{self, gcd, ArithError};
use crate::qstate::{OperatorMatrix, StateVector, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QphaseError {
    #[error("dimension q must be at least 1")]
    ZeroDimension,
    #[error("index {index} out of range for dimension {q}")]
    IndexOutOfRange { index: u64, q: u64 },
    #[error("inverse temperature must exceed 1, got {0}")]
    InvalidBeta0(f64),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

fn check_dim(q: u64) -> Result<usize, QphaseError> {
    if q == 0 {
        return Err(QphaseError::ZeroDimension);
    }
    Ok(q as usize)
}

fn root_of_unity(num: f64, den: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * num / den)
}

/// `|theta_k>` together with its phase `theta_0 + 2 pi k / q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub k: u64,
    pub theta: f64,
    pub vector: StateVector,
}

/// `|theta_k> = q^{-1/2} sum_n exp(2 pi i k n / q) |n>`.
pub fn phase_state(q: u64, k: u64, theta0: f64) -> Result<PhaseState, QphaseError> {
    let dim = check_dim(q)?;
    if k >= q {
        return Err(QphaseError::IndexOutOfRange { index: k, q });
    }
    let norm = (q as f64).sqrt();
    let amplitudes = (0..dim)
        .map(|n| root_of_unity((k * n as u64 % q) as f64, q as f64) / norm)
        .collect();
    Ok(PhaseState {
        k,
        theta: theta0 + 2.0 * PI * k as f64 / q as f64,
        vector: StateVector::new(amplitudes),
    })
}

/// Hermitian phase operator `sum_k theta_k |theta_k><theta_k|`.
pub fn pegg_operator(q: u64, theta0: f64) -> Result<OperatorMatrix, QphaseError> {
    let mut op = OperatorMatrix::zeros(check_dim(q)?);
    for k in 0..q {
        let s = phase_state(q, k, theta0)?;
        op.add_projector(s.theta, &s.vector);
    }
    Ok(op)
}

/// Phase-locking operator: the phase operator restricted to `k` coprime to
/// `q`, with `theta_k = 2 pi k / q`, acting on the full `q`-dimensional space.
pub fn lock_operator(q: u64) -> Result<OperatorMatrix, QphaseError> {
    let mut op = OperatorMatrix::zeros(check_dim(q)?);
    for k in (0..q).filter(|&k| gcd(k, q) == 1) {
        let s = phase_state(q, k, 0.0)?;
        op.add_projector(s.theta, &s.vector);
    }
    Ok(op)
}

/// Index range `n, l` used by the Ramanujan kernel and the closed-form
/// expectation value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexRange {
    /// `0..phi(q)`: exactly `phi(q)` indices.
    #[default]
    Totient,
    /// `0..=phi(q)`.
    TotientInclusive,
    /// `0..q`.
    Full,
}

impl IndexRange {
    pub fn len(self, q: u64) -> Result<usize, QphaseError> {
        check_dim(q)?;
        let phi = arith::euler_phi(q)? as usize;
        Ok(match self {
            IndexRange::Totient => phi,
            IndexRange::TotientInclusive => phi + 1,
            IndexRange::Full => q as usize,
        })
    }
}

/// `(1/q) c_q(n - l)` over the index range.
pub fn ramanujan_kernel_matrix(q: u64, range: IndexRange) -> Result<OperatorMatrix, QphaseError> {
    let len = range.len(q)?;
    // c_q has period q; tabulate once.
    let table: Vec<i64> = (0..q as i64)
        .map(|n| arith::ramanujan_sum(q, n))
        .collect::<Result<_, _>>()?;
    let qf = q as f64;
    Ok(OperatorMatrix::from_fn(len, |n, l| {
        let d = (n as i64 - l as i64).rem_euclid(q as i64) as usize;
        C64::new(table[d] as f64 / qf, 0.0)
    }))
}

/// `|beta> = q^{-1/2} sum_n exp(i n beta) |n>`.
pub fn beta_state(q: u64, beta: f64) -> Result<StateVector, QphaseError> {
    let dim = check_dim(q)?;
    let norm = (q as f64).sqrt();
    Ok(StateVector::new(
        (0..dim)
            .map(|n| C64::from_polar(1.0 / norm, n as f64 * beta))
            .collect(),
    ))
}

/// `sum'_k theta_k |<theta_k|beta>|^2`, computed from the states.
pub fn lock_expectation_direct(q: u64, beta: f64) -> Result<f64, QphaseError> {
    let b = beta_state(q, beta)?;
    let mut total = 0.0;
    for k in (0..q).filter(|&k| gcd(k, q) == 1) {
        let s = phase_state(q, k, 0.0)?;
        total += s.theta * s.vector.inner(&b).norm_sqr();
    }
    Ok(total)
}

/// `(pi / q^2) sum_{n,l} c_q(l - n) exp(i beta (n - l))` as a complex number.
pub fn lock_expectation_closed_complex(
    q: u64,
    beta: f64,
    range: IndexRange,
) -> Result<C64, QphaseError> {
    let len = range.len(q)?;
    let mut total = C64::new(0.0, 0.0);
    for n in 0..len {
        for l in 0..len {
            let c = arith::ramanujan_sum(q, l as i64 - n as i64)?;
            if c != 0 {
                total += c as f64 * C64::from_polar(1.0, beta * (n as f64 - l as f64));
            }
        }
    }
    Ok(total * PI / (q as f64 * q as f64))
}

/// Real part of [`lock_expectation_closed_complex`]; the imaginary part
/// vanishes because the kernel is even.
pub fn lock_expectation_closed(q: u64, beta: f64, range: IndexRange) -> Result<f64, QphaseError> {
    Ok(lock_expectation_closed_complex(q, beta, range)?.re)
}

/// `pi Lambda(q) / ln q`, the normalised Mangoldt curve compared against the
/// locked-phase expectation.
pub fn mangoldt_norm(q: u64) -> Result<f64, QphaseError> {
    let lambda = arith::mangoldt(q)?;
    Ok(if lambda == 0.0 {
        0.0
    } else {
        PI * lambda / (q as f64).ln()
    })
}

/// How far the `c_q` kernel is from the locking operator restricted to the
/// same index block (Frobenius norm).
pub fn kernel_discrepancy(q: u64, range: IndexRange) -> Result<f64, QphaseError> {
    let kernel = ramanujan_kernel_matrix(q, range)?;
    let full = lock_operator(q)?;
    let len = kernel.dim();
    let block = OperatorMatrix::from_fn(len, |i, j| {
        if i < full.dim() && j < full.dim() {
            full.entry(i, j)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    Ok(kernel.frobenius_distance(&block))
}

/// Inverse temperature of the Bost–Connes system, above the pole at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsParams {
    beta0: f64,
}

impl KmsParams {
    pub fn new(beta0: f64) -> Result<Self, QphaseError> {
        if !(beta0 > 1.0 && beta0.is_finite()) {
            return Err(QphaseError::InvalidBeta0(beta0));
        }
        Ok(Self { beta0 })
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }
}

/// `q^{-beta0} prod_{p | q} (1 - p^{beta0 - 1}) / (1 - p^{-1})`.
pub fn kms_value(q: u64, params: &KmsParams) -> Result<f64, QphaseError> {
    check_dim(q)?;
    let b = params.beta0;
    let product: f64 = arith::factorize(q)?
        .iter()
        .map(|&(p, _)| {
            let p = p as f64;
            (1.0 - p.powf(b - 1.0)) / (1.0 - 1.0 / p)
        })
        .product();
    Ok((q as f64).powf(-b) * product)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KmsLimits {
    /// `mu(q) / phi(q)`, the `beta0 -> infinity` value.
    pub low_temp: f64,
    /// `-Lambda(q) / q`, the coefficient of `eps` at `beta0 = 1 + eps`.
    pub critical_coeff: f64,
}

pub fn kms_limits(q: u64) -> Result<KmsLimits, QphaseError> {
    check_dim(q)?;
    Ok(KmsLimits {
        low_temp: f64::from(arith::moebius(q)?) / arith::euler_phi(q)? as f64,
        critical_coeff: -arith::mangoldt(q)? / q as f64,
    })
}

/// Bost–Connes operators on `C^q`: `mu_a |n> = |a n mod q>` and
/// `e_k |n> = exp(2 pi i k n / q) |n>`.
pub fn bost_connes_ops(
    q: u64,
    a: u64,
    k: u64,
) -> Result<(OperatorMatrix, OperatorMatrix), QphaseError> {
    let dim = check_dim(q)?;
    for index in [a, k] {
        if index >= q {
            return Err(QphaseError::IndexOutOfRange { index, q });
        }
    }
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let shift = OperatorMatrix::from_fn(dim, |row, col| {
        if (a * col as u64) % q == row as u64 {
            one
        } else {
            zero
        }
    });
    let phase = OperatorMatrix::from_fn(dim, |row, col| {
        if row == col {
            root_of_unity((k * row as u64 % q) as f64, q as f64)
        } else {
            zero
        }
    });
    Ok((shift, phase))
}
