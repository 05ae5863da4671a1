//! Generalised Bell states over `Z_q` and over Galois fields.
//!
//! A bipartite amplitude for the pair `(n, n')` sits at index `n q + n'`,
//! with field elements taken in canonical index order.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::galois::{additive_canonical, FieldElement, GaloisField};
use crate::qstate::{root_of_unity, OperatorMatrix, C64};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EntangleError {
    #[error("local dimension must be at least 1")]
    ZeroDimension,
    #[error("label {label} out of range for q = {q}")]
    LabelOutOfRange { label: u64, q: u64 },
    #[error("amplitude count {0} is not a perfect square")]
    NotSquare(usize),
    #[error("the galois family needs a field, not a bare dimension")]
    NeedsField,
}

/// Pure state on `C^q (x) C^q`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    q: usize,
    amplitudes: Vec<C64>,
}

impl BipartiteState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self, EntangleError> {
        let q = (amplitudes.len() as f64).sqrt().round() as usize;
        if q == 0 {
            return Err(EntangleError::ZeroDimension);
        }
        if q * q != amplitudes.len() {
            return Err(EntangleError::NotSquare(amplitudes.len()));
        }
        Ok(Self { q, amplitudes })
    }

    pub fn product(left: &[C64], right: &[C64]) -> Result<Self, EntangleError> {
        if left.len() != right.len() {
            return Err(EntangleError::NotSquare(left.len() * right.len()));
        }
        Self::new(left.iter().flat_map(|a| right.iter().map(move |b| a * b)).collect())
    }

    pub fn local_dim(&self) -> usize {
        self.q
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize, n2: usize) -> C64 {
        self.amplitudes[n * self.q + n2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `<self|other>`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// `(1/sqrt q) sum_n omega_q^{k n} |n, n + u mod q>`.
pub fn bell_fourier(q: u64, u: u64, k: u64) -> Result<BipartiteState, EntangleError> {
    if q == 0 {
        return Err(EntangleError::ZeroDimension);
    }
    for label in [u, k] {
        if label >= q {
            return Err(EntangleError::LabelOutOfRange { label, q });
        }
    }
    let qs = q as usize;
    let norm = (q as f64).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); qs * qs];
    for n in 0..q {
        amps[n as usize * qs + ((n + u) % q) as usize] = root_of_unity(k * n, q) / norm;
    }
    BipartiteState::new(amps)
}

/// `(1/sqrt q) sum_n omega_p^{tr((a n + b) n)} |n, n + u>`, addition in the field.
pub fn bell_galois(
    field: &GaloisField,
    u: FieldElement,
    a: FieldElement,
    b: FieldElement,
) -> BipartiteState {
    let q = field.order() as usize;
    let norm = (q as f64).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); q * q];
    for n in field.elements() {
        let phase = field.mul(field.add(field.mul(a, n), b), n);
        amps[n.index() * q + field.add(n, u).index()] = additive_canonical(field, phase) / norm;
    }
    BipartiteState::new(amps).expect("q^2 amplitudes")
}

/// Reduced state of the first subsystem.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(OperatorMatrix);

impl DensityMatrix {
    pub fn operator(&self) -> &OperatorMatrix {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.0.compose(&self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.eigenvalues_hermitian()[0]
    }

    /// `max |rho_ij - delta_ij / q|`.
    pub fn deviation_from_mixed(&self) -> f64 {
        let q = self.0.dim();
        let mixed = OperatorMatrix::from_fn(q, |i, j| {
            C64::new(if i == j { 1.0 / q as f64 } else { 0.0 }, 0.0)
        });
        self.0.max_abs_diff(&mixed)
    }
}

/// `rho_{n m} = sum_{n'} psi(n, n') conj(psi(m, n'))`.
pub fn partial_trace_2(state: &BipartiteState) -> DensityMatrix {
    let q = state.q;
    DensityMatrix(OperatorMatrix::from_fn(q, |n, m| {
        (0..q)
            .map(|j| state.amplitude(n, j) * state.amplitude(m, j).conj())
            .sum()
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Fourier,
    Galois,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Fourier => "fourier",
            Family::Galois => "galois",
        }
    }
}

/// Per-state line of a verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateCheck {
    pub u: u64,
    /// `k` for the Fourier family, `a` for the Galois family.
    pub a_or_k: u64,
    /// Intra-basis label `b`; absent for the Fourier family.
    pub b: Option<u64>,
    /// Largest `| |<s|t>|^2 - delta_st |` against states of the same basis.
    pub max_gram_dev: f64,
    pub max_ptrace_dev: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntangledReport {
    pub family: Family,
    pub q: u64,
    pub bases: usize,
    pub states_per_basis: usize,
    pub max_gram_dev: f64,
    /// Largest `| |<s|t>|^2 - 1/q |` over states from different bases that
    /// share `u` (Galois family only).
    pub max_unbiased_dev: Option<f64>,
    /// Largest `|<s|t>|^2` over states with different `u`.
    pub max_cross_u_overlap: f64,
    pub max_ptrace_dev: f64,
    pub max_purity_dev: f64,
    pub min_eigenvalue: f64,
    pub states: Vec<StateCheck>,
}

struct Basis {
    u: u64,
    label: u64,
    states: Vec<(Option<u64>, BipartiteState)>,
}

fn fourier_bases(q: u64) -> Result<Vec<Basis>, EntangleError> {
    (0..q)
        .map(|u| {
            let states = (0..q)
                .map(|k| Ok((Some(k), bell_fourier(q, u, k)?)))
                .collect::<Result<Vec<_>, EntangleError>>()?;
            Ok(Basis { u, label: 0, states })
        })
        .collect()
}

fn galois_bases(field: &GaloisField) -> Vec<Basis> {
    let mut out = Vec::new();
    for u in field.elements() {
        for a in field.elements() {
            let states = field
                .elements()
                .map(|b| (Some(b.index() as u64), bell_galois(field, u, a, b)))
                .collect();
            out.push(Basis {
                u: u.index() as u64,
                label: a.index() as u64,
                states,
            });
        }
    }
    out
}

fn max_pairwise(xs: &[(Option<u64>, BipartiteState)], ys: &[(Option<u64>, BipartiteState)], f: impl Fn(f64) -> f64) -> f64 {
    xs.iter()
        .flat_map(|(_, s)| ys.iter().map(move |(_, t)| (s, t)))
        .map(|(s, t)| f(s.inner(t).norm_sqr()))
        .fold(0.0, f64::max)
}

/// Checks every basis of the family: orthonormality inside each basis,
/// orthogonality across different `u`, unbiasedness across Galois bases
/// with equal `u`, and maximal entanglement of every state.
pub fn verify_entangled_bases(family: Family, field_or_q: FamilyInput<'_>) -> Result<EntangledReport, EntangleError> {
    let (q, bases) = match (family, field_or_q) {
        (Family::Fourier, FamilyInput::Dimension(q)) => (q, fourier_bases(q)?),
        (Family::Galois, FamilyInput::Field(f)) => (f.order(), galois_bases(f)),
        (Family::Fourier, FamilyInput::Field(f)) => (f.order(), fourier_bases(f.order())?),
        (Family::Galois, FamilyInput::Dimension(_)) => return Err(EntangleError::NeedsField),
    };
    let inv_q = 1.0 / q as f64;

    let states: Vec<StateCheck> = bases
        .par_iter()
        .flat_map_iter(|basis| {
            basis.states.iter().enumerate().map(move |(i, (b, s))| {
                let gram = basis
                    .states
                    .iter()
                    .enumerate()
                    .map(|(j, (_, t))| {
                        let target = if i == j { 1.0 } else { 0.0 };
                        (s.inner(t).norm_sqr() - target).abs()
                    })
                    .fold(0.0, f64::max);
                let rho = partial_trace_2(s);
                let (a_or_k, b) = match family {
                    Family::Fourier => (b.unwrap_or(0), None),
                    Family::Galois => (basis.label, *b),
                };
                StateCheck {
                    u: basis.u,
                    a_or_k,
                    b,
                    max_gram_dev: gram,
                    max_ptrace_dev: rho.deviation_from_mixed(),
                    purity: rho.purity(),
                }
            })
        })
        .collect();

    let min_eigenvalue = bases
        .par_iter()
        .flat_map_iter(|b| b.states.iter().map(|(_, s)| partial_trace_2(s).min_eigenvalue()))
        .reduce(|| f64::INFINITY, f64::min);

    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|i| (i + 1..bases.len()).map(move |j| (i, j)))
        .collect();
    let (unbiased, cross_u) = pairs
        .par_iter()
        .map(|&(i, j)| {
            let (x, y) = (&bases[i], &bases[j]);
            if x.u == y.u {
                (max_pairwise(&x.states, &y.states, |o| (o - inv_q).abs()), 0.0)
            } else {
                (0.0, max_pairwise(&x.states, &y.states, |o| o))
            }
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));

    let fold = |f: fn(&StateCheck) -> f64| states.iter().map(f).fold(0.0, f64::max);
    Ok(EntangledReport {
        family,
        q,
        bases: bases.len(),
        states_per_basis: bases.first().map_or(0, |b| b.states.len()),
        max_gram_dev: fold(|s| s.max_gram_dev),
        max_unbiased_dev: (family == Family::Galois).then_some(unbiased),
        max_cross_u_overlap: cross_u,
        max_ptrace_dev: fold(|s| s.max_ptrace_dev),
        max_purity_dev: states
            .iter()
            .map(|s| (s.purity - inv_q).abs())
            .fold(0.0, f64::max),
        min_eigenvalue,
        states,
    })
}

/// Either a bare dimension (Fourier family) or a field (either family).
#[derive(Debug, Clone, Copy)]
pub enum FamilyInput<'a> {
    Dimension(u64),
    Field(&'a GaloisField),
}
