//! Odd-characteristic Galois fields, their characters, the Fourier-form
//! mutually unbiased bases, and phase statistics over prime fields built on
//! incomplete Gauss sums.
//!
//! Elements are stored as their canonical index `sum_i c_i p^i`, where `c_i`
//! is the coefficient of `x^i` in the polynomial representation. Iterating
//! indices `0..q` therefore walks coefficient vectors lexicographically with
//! the highest-degree coefficient most significant; prime-field elements have
//! index equal to their value.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::qphase;
use crate::qstate::{root_of_unity as omega, StateVector, C64};

/// Largest field order accepted by [`GaloisField::new`].
pub const FIELD_LIMIT: u64 = 10_000;

/// Empirical constant in the `C sqrt(p) ln p` bound for incomplete sums with a
/// nontrivial multiplicative character.
pub const WEIL_CONSTANT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaloisError {
    #[error("characteristic {0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{m} exceeds {FIELD_LIMIT}")]
    TooLarge { p: u64, m: u32 },
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
    #[error("modulus is reducible over F_p")]
    Reducible,
    #[error("generator does not have multiplicative order q - 1")]
    NotPrimitive,
    #[error("invalid field element: {0}")]
    InvalidElement(String),
    #[error("character index {index} out of range (limit {limit})")]
    InvalidCharacter { index: u32, limit: u32 },
    #[error("a multiplicative character is required here")]
    NotMultiplicative,
    #[error("operation needs a prime field, got degree {0}")]
    NotPrimeField(u32),
    #[error("offset k = {k} outside (-{p}, {p})")]
    OffsetOutOfRange { k: i64, p: u64 },
    #[error("malformed field metadata: {0}")]
    Metadata(String),
}

/// Canonical index of a field element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u32);

impl FieldElement {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Serialisable description of a field: modulus and generator coefficients
/// in ascending degree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldMeta {
    pub p: u64,
    pub m: u32,
    pub modulus_coeffs: Vec<u32>,
    pub generator_coeffs: Vec<u32>,
}

impl FieldMeta {
    pub fn from_json(s: &str) -> Result<Self, GaloisError> {
        serde_json::from_str(s).map_err(|e| GaloisError::Metadata(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field metadata serialises")
    }
}

/// `F_{p^m}` as `F_p[x] / (f)` with a primitive element.
#[derive(Debug, Clone)]
pub struct GaloisField {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    generator: FieldElement,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
}

// ---- polynomial helpers over F_p (ascending coefficients) ----

fn poly_trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn mod_inv(a: u32, p: u32) -> u32 {
    let mut result = 1u64;
    let (mut base, mut e) = (u64::from(a), p - 2);
    while e > 0 {
        if e & 1 == 1 {
            result = result * base % u64::from(p);
        }
        base = base * base % u64::from(p);
        e >>= 1;
    }
    result as u32
}

/// Remainder of `a` modulo `b` (`b` nonzero, trimmed).
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = poly_trim(a.to_vec());
    let db = b.len() - 1;
    let lead_inv = mod_inv(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let factor = r[dr] * lead_inv % p;
        let shift = dr - db;
        for (i, &bi) in b.iter().enumerate() {
            let sub = factor * bi % p;
            r[i + shift] = (r[i + shift] + p - sub) % p;
        }
        r = poly_trim(r);
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], modulus: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut prod = vec![0u32; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + ai * bj) % p;
        }
    }
    poly_rem(&prod, modulus, p)
}

fn poly_powmod(base: &[u32], mut e: u64, modulus: &[u32], p: u32) -> Vec<u32> {
    let mut result = vec![1u32];
    let mut b = base.to_vec();
    while e > 0 {
        if e & 1 == 1 {
            result = poly_mulmod(&result, &b, modulus, p);
        }
        b = poly_mulmod(&b, &b, modulus, p);
        e >>= 1;
    }
    result
}

/// Base-`p` digits of `index`, `len` of them.
fn digits(index: u32, p: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    let mut rest = index;
    for _ in 0..len {
        out.push(rest % p);
        rest /= p;
    }
    out
}

fn undigits(coeffs: &[u32], p: u32) -> u32 {
    coeffs.iter().rev().fold(0, |acc, &c| acc * p + c)
}

/// Brute-force irreducibility: no monic factor of degree `1..=deg/2`.
fn is_irreducible(f: &[u32], p: u32) -> bool {
    let deg = f.len() - 1;
    if deg <= 1 {
        return deg == 1;
    }
    for d in 1..=deg / 2 {
        for lower in 0..p.pow(d as u32) {
            let mut g = digits(lower, p, d);
            g.push(1);
            if poly_rem(f, &g, p).is_empty() {
                return false;
            }
        }
    }
    true
}

fn is_primitive(g: &[u32], modulus: &[u32], p: u32, q: u64) -> bool {
    let g = poly_trim(g.to_vec());
    if g.is_empty() {
        return false;
    }
    let order = q - 1;
    if order == 1 {
        return g == [1];
    }
    let Ok(factors) = arith::factorize(order) else {
        return false;
    };
    factors
        .iter()
        .all(|&(r, _)| poly_powmod(&g, order / r, modulus, p) != [1])
}

impl GaloisField {
    /// Field of order `p^m` with the smallest monic irreducible modulus and
    /// the smallest primitive element, both in canonical index order.
    pub fn new(p: u64, m: u32) -> Result<Self, GaloisError> {
        let q = check_order(p, m)?;
        let pp = p as u32;
        let modulus = (0..pp.pow(m))
            .map(|lower| {
                let mut f = digits(lower, pp, m as usize);
                f.push(1);
                f
            })
            .find(|f| is_irreducible(f, pp))
            .expect("an irreducible polynomial exists in every degree");
        let generator = (1..q as u32)
            .map(|idx| digits(idx, pp, m as usize))
            .find(|g| is_primitive(g, &modulus, pp, q))
            .expect("the multiplicative group is cyclic");
        Ok(Self::build(pp, m, modulus, &generator))
    }

    /// Rebuilds a field from metadata, validating every invariant.
    pub fn from_meta(meta: &FieldMeta) -> Result<Self, GaloisError> {
        let q = check_order(meta.p, meta.m)?;
        let p = meta.p as u32;
        let m = meta.m as usize;
        let f = &meta.modulus_coeffs;
        if f.len() != m + 1 {
            return Err(GaloisError::InvalidModulus(format!(
                "expected {} coefficients, got {}",
                m + 1,
                f.len()
            )));
        }
        if f[m] != 1 {
            return Err(GaloisError::InvalidModulus("not monic".into()));
        }
        if f.iter().any(|&c| c >= p) {
            return Err(GaloisError::InvalidModulus("coefficient not reduced mod p".into()));
        }
        if !is_irreducible(f, p) {
            return Err(GaloisError::Reducible);
        }
        let g = &meta.generator_coeffs;
        if g.len() != m || g.iter().any(|&c| c >= p) {
            return Err(GaloisError::InvalidElement(format!(
                "generator needs {m} coefficients in [0, {p})"
            )));
        }
        if !is_primitive(g, f, p, q) {
            return Err(GaloisError::NotPrimitive);
        }
        Ok(Self::build(p, meta.m, f.clone(), g))
    }

    fn build(p: u32, m: u32, modulus: Vec<u32>, generator: &[u32]) -> Self {
        let q = p.pow(m);
        let order = (q - 1) as usize;
        let mut exp = Vec::with_capacity(order);
        let mut log = vec![u32::MAX; q as usize];
        let g = poly_trim(generator.to_vec());
        let mut x = vec![1u32];
        for s in 0..order {
            let mut padded = x.clone();
            padded.resize(m as usize, 0);
            let idx = undigits(&padded, p);
            exp.push(idx);
            log[idx as usize] = s as u32;
            x = poly_mulmod(&x, &g, &modulus, p);
        }
        let mut field = Self {
            p,
            m,
            q,
            modulus,
            generator: FieldElement(undigits(generator, p)),
            exp,
            log,
            trace: Vec::new(),
        };
        field.trace = (0..q).map(|i| field.compute_trace(FieldElement(i))).collect();
        field
    }

    fn compute_trace(&self, x: FieldElement) -> u32 {
        let mut acc = FieldElement(0);
        let mut power = x;
        for _ in 0..self.m {
            acc = self.add(acc, power);
            power = self.pow(power, u64::from(self.p));
        }
        debug_assert!(acc.0 < self.p, "trace must land in the prime field");
        acc.0
    }

    pub fn characteristic(&self) -> u64 {
        u64::from(self.p)
    }

    pub fn degree(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u64 {
        u64::from(self.q)
    }

    pub fn modulus_coeffs(&self) -> &[u32] {
        &self.modulus
    }

    pub fn generator(&self) -> FieldElement {
        self.generator
    }

    pub fn meta(&self) -> FieldMeta {
        FieldMeta {
            p: u64::from(self.p),
            m: self.m,
            modulus_coeffs: self.modulus.clone(),
            generator_coeffs: self.coeffs(self.generator),
        }
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement(0)
    }

    pub fn one(&self) -> FieldElement {
        FieldElement(1)
    }

    /// Element by canonical index.
    pub fn element(&self, index: u64) -> Result<FieldElement, GaloisError> {
        if index >= u64::from(self.q) {
            return Err(GaloisError::InvalidElement(format!(
                "index {index} not below q = {}",
                self.q
            )));
        }
        Ok(FieldElement(index as u32))
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement, GaloisError> {
        if coeffs.len() > self.m as usize || coeffs.iter().any(|&c| c >= self.p) {
            return Err(GaloisError::InvalidElement(format!("{coeffs:?}")));
        }
        Ok(FieldElement(undigits(coeffs, self.p)))
    }

    pub fn coeffs(&self, x: FieldElement) -> Vec<u32> {
        digits(x.0, self.p, self.m as usize)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElement {
        FieldElement(n.rem_euclid(i64::from(self.p)) as u32)
    }

    /// All elements in canonical order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(FieldElement)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let (mut x, mut y) = (a.0, b.0);
        let (mut out, mut place) = (0u32, 1u32);
        for _ in 0..self.m {
            out += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        let mut x = a.0;
        let (mut out, mut place) = (0u32, 1u32);
        for _ in 0..self.m {
            out += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place *= self.p;
        }
        FieldElement(out)
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if a.0 == 0 || b.0 == 0 {
            return FieldElement(0);
        }
        let s = (self.log[a.index()] as u64 + self.log[b.index()] as u64) % (self.q as u64 - 1);
        FieldElement(self.exp[s as usize])
    }

    pub fn inv(&self, a: FieldElement) -> Option<FieldElement> {
        if a.0 == 0 {
            return None;
        }
        let order = self.q - 1;
        let s = (order - self.log[a.index()]) % order;
        Some(FieldElement(self.exp[s as usize]))
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> FieldElement {
        if e == 0 {
            return self.one();
        }
        if a.0 == 0 {
            return a;
        }
        let s = (self.log[a.index()] as u64 * (e % (self.q as u64 - 1))) % (self.q as u64 - 1);
        FieldElement(self.exp[s as usize])
    }

    /// Discrete logarithm to the generator; `None` at zero.
    pub fn discrete_log(&self, a: FieldElement) -> Option<u32> {
        (a.0 != 0).then(|| self.log[a.index()])
    }

    /// `x + x^p + ... + x^{p^{m-1}}` as a residue mod `p`.
    pub fn trace(&self, x: FieldElement) -> u32 {
        self.trace[x.index()]
    }

    fn require_prime_field(&self) -> Result<(), GaloisError> {
        if self.m != 1 {
            return Err(GaloisError::NotPrimeField(self.m));
        }
        Ok(())
    }
}

fn check_order(p: u64, m: u32) -> Result<u64, GaloisError> {
    if p % 2 == 0 || !arith::is_prime(p) {
        return Err(GaloisError::NotOddPrime(p));
    }
    if m == 0 {
        return Err(GaloisError::ZeroDegree);
    }
    match p.checked_pow(m) {
        Some(q) if q <= FIELD_LIMIT => Ok(q),
        _ => Err(GaloisError::TooLarge { p, m }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharacterKind {
    Additive,
    Multiplicative,
}

/// Additive characters `kappa_y(x) = omega_p^{tr(y x)}` are indexed by the
/// canonical index of `y`; multiplicative characters
/// `psi_k(g^s) = omega_{q-1}^{k s}` by `k mod (q - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharacterSpec {
    pub kind: CharacterKind,
    pub index: u32,
}

impl CharacterSpec {
    pub fn additive(index: u32) -> Self {
        Self {
            kind: CharacterKind::Additive,
            index,
        }
    }

    pub fn multiplicative(index: u32) -> Self {
        Self {
            kind: CharacterKind::Multiplicative,
            index,
        }
    }

    pub fn trivial() -> Self {
        Self::multiplicative(0)
    }

    pub fn is_trivial(&self) -> bool {
        self.index == 0
    }

    fn validate(&self, field: &GaloisField) -> Result<(), GaloisError> {
        let limit = match self.kind {
            CharacterKind::Additive => field.q,
            CharacterKind::Multiplicative => field.q - 1,
        };
        if self.index >= limit {
            return Err(GaloisError::InvalidCharacter {
                index: self.index,
                limit,
            });
        }
        Ok(())
    }

    /// The complex-conjugate character.
    pub fn conjugate(&self, field: &GaloisField) -> Self {
        match self.kind {
            CharacterKind::Additive => {
                Self::additive(field.neg(FieldElement(self.index)).0)
            }
            CharacterKind::Multiplicative => {
                let order = field.q - 1;
                Self::multiplicative((order - self.index % order) % order)
            }
        }
    }
}

/// `omega_p^{tr(x)}`.
pub fn additive_canonical(field: &GaloisField, x: FieldElement) -> C64 {
    omega(u64::from(field.trace(x)), u64::from(field.p))
}

/// Character value. Multiplicative characters vanish at zero except the
/// trivial one, which is 1 everywhere.
pub fn char_eval(
    field: &GaloisField,
    spec: &CharacterSpec,
    x: FieldElement,
) -> Result<C64, GaloisError> {
    spec.validate(field)?;
    Ok(match spec.kind {
        CharacterKind::Additive => additive_canonical(field, field.mul(FieldElement(spec.index), x)),
        CharacterKind::Multiplicative => mult_char(field, spec.index, x),
    })
}

fn mult_char(field: &GaloisField, k: u32, x: FieldElement) -> C64 {
    match field.discrete_log(x) {
        None if k == 0 => C64::new(1.0, 0.0),
        None => C64::new(0.0, 0.0),
        Some(s) => omega(u64::from(k) * u64::from(s), u64::from(field.q - 1)),
    }
}

fn require_multiplicative(field: &GaloisField, psi: &CharacterSpec) -> Result<(), GaloisError> {
    if psi.kind != CharacterKind::Multiplicative {
        return Err(GaloisError::NotMultiplicative);
    }
    psi.validate(field)
}

/// `q^{-1/2} sum_n psi(n) kappa(a n^2 + b n) |n>` over the canonical
/// enumeration. Nontrivial `psi` gives norm `sqrt((q-1)/q)`.
pub fn mub_state(
    field: &GaloisField,
    a: FieldElement,
    b: FieldElement,
    psi: &CharacterSpec,
) -> Result<StateVector, GaloisError> {
    require_multiplicative(field, psi)?;
    let norm = f64::from(field.q).sqrt();
    let amps = field
        .elements()
        .map(|n| {
            let y = field.add(field.mul(a, field.mul(n, n)), field.mul(b, n));
            mult_char(field, psi.index, n) * additive_canonical(field, y) / norm
        })
        .collect();
    Ok(StateVector::new(amps))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MubReport {
    pub q: u64,
    /// `q` Fourier bases plus the computational basis.
    pub bases: usize,
    /// Largest `| |<u|v>|^2 - delta_uv |` within a basis.
    pub max_orthonormal_dev: f64,
    /// Largest `| |<u|v>|^2 - 1/q |` across bases.
    pub max_unbiased_dev: f64,
}

impl MubReport {
    pub fn max_deviation(&self) -> f64 {
        self.max_orthonormal_dev.max(self.max_unbiased_dev)
    }
}

/// All bases from [`mub_state`] with trivial `psi`, plus the computational
/// basis, checked pairwise.
pub fn mub_bases(field: &GaloisField) -> Vec<Vec<StateVector>> {
    let q = field.q as usize;
    let psi = CharacterSpec::trivial();
    let mut bases: Vec<Vec<StateVector>> = vec![(0..q).map(|i| StateVector::basis(q, i)).collect()];
    for a in field.elements() {
        bases.push(
            field
                .elements()
                .map(|b| mub_state(field, a, b, &psi).expect("trivial character is valid"))
                .collect(),
        );
    }
    bases
}

pub fn mub_verify(field: &GaloisField) -> MubReport {
    let bases = mub_bases(field);
    let inv_q = 1.0 / f64::from(field.q);
    let pairs: Vec<(usize, usize)> = (0..bases.len())
        .flat_map(|i| (i..bases.len()).map(move |j| (i, j)))
        .collect();
    let (orth, unb) = pairs
        .par_iter()
        .map(|&(i, j)| {
            let mut worst = 0.0f64;
            for (x, u) in bases[i].iter().enumerate() {
                for (y, v) in bases[j].iter().enumerate() {
                    let overlap = u.inner(v).norm_sqr();
                    let target = if i != j {
                        inv_q
                    } else if x == y {
                        1.0
                    } else {
                        0.0
                    };
                    worst = worst.max((overlap - target).abs());
                }
            }
            if i == j {
                (worst, 0.0)
            } else {
                (0.0, worst)
            }
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    MubReport {
        q: field.order(),
        bases: bases.len(),
        max_orthonormal_dev: orth,
        max_unbiased_dev: unb,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussSumReport {
    pub k: i64,
    pub value: C64,
    /// `p - 1` at `k = 0`; `1/|sin(2 pi a k / p)|` for trivial `psi`;
    /// `WEIL_CONSTANT sqrt(p) ln p` otherwise.
    pub bound: f64,
}

impl GaussSumReport {
    pub fn within_bound(&self, slack: f64) -> bool {
        self.value.norm() <= self.bound + slack
    }
}

/// Which `n` enter an incomplete sum at offset `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SumRange {
    /// `n, n + k` in `[1, p - 1]`.
    Units,
    /// `n, n + k` in `[0, p - 1]`.
    Full,
}

/// Character values and `p`-th roots of unity for repeated incomplete sums.
struct SumTables {
    p: i64,
    psi: Vec<C64>,
    roots: Vec<C64>,
}

impl SumTables {
    fn new(field: &GaloisField, psi_index: u32) -> Self {
        let p = u64::from(field.p);
        Self {
            p: p as i64,
            psi: (0..p)
                .map(|n| mult_char(field, psi_index, FieldElement(n as u32)))
                .collect(),
            roots: (0..p).map(|j| omega(j, p)).collect(),
        }
    }

    /// `sum_n chi(n, n + k) omega_p^{a k (2n + k)}` over `n, n + k` in the
    /// range, with `chi = psi(n) conj(psi(n+k))` or its conjugate.
    fn sum(&self, a: i64, k: i64, conj_second: bool, range: SumRange) -> C64 {
        let p = self.p;
        let first = match range {
            SumRange::Units => 1,
            SumRange::Full => 0,
        };
        let lo = first.max(first - k);
        let hi = (p - 1).min(p - 1 - k);
        let ak = a.rem_euclid(p) * k.rem_euclid(p) % p;
        let mut total = C64::new(0.0, 0.0);
        for n in lo..=hi {
            let (x, y) = (self.psi[n as usize], self.psi[(n + k) as usize]);
            let chars = if conj_second { x * y.conj() } else { x.conj() * y };
            let phase = ak * (2 * n + k).rem_euclid(p) % p;
            total += chars * self.roots[phase as usize];
        }
        total
    }
}

/// `T(k) = sum_n psi(n) conj(psi(n + k)) exp(2 pi i a k (2n + k) / p)` over
/// `n, n + k` in `[1, p - 1]`, for a prime field.
pub fn gauss_t(
    field: &GaloisField,
    a: i64,
    psi: &CharacterSpec,
    k: i64,
) -> Result<GaussSumReport, GaloisError> {
    field.require_prime_field()?;
    require_multiplicative(field, psi)?;
    let p = i64::from(field.p);
    if k <= -p || k >= p {
        return Err(GaloisError::OffsetOutOfRange { k, p: p as u64 });
    }
    Ok(gauss_report(&SumTables::new(field, psi.index), a, psi, k))
}

/// [`gauss_t`] for every `k` in `(-p, p)`, ascending.
pub fn gauss_t_all(
    field: &GaloisField,
    a: i64,
    psi: &CharacterSpec,
) -> Result<Vec<GaussSumReport>, GaloisError> {
    field.require_prime_field()?;
    require_multiplicative(field, psi)?;
    let tables = SumTables::new(field, psi.index);
    let p = i64::from(field.p);
    Ok((1 - p..p).map(|k| gauss_report(&tables, a, psi, k)).collect())
}

fn gauss_report(tables: &SumTables, a: i64, psi: &CharacterSpec, k: i64) -> GaussSumReport {
    let p = tables.p;
    let value = tables.sum(a, k, true, SumRange::Units);
    let pf = p as f64;
    let bound = if k == 0 {
        pf - 1.0
    } else if psi.is_trivial() {
        // sin vanishes only when p | 2ak.
        if (2 * a * k).rem_euclid(p) == 0 {
            f64::INFINITY
        } else {
            1.0 / (2.0 * PI * (a as f64) * (k as f64) / pf).sin().abs()
        }
    } else {
        WEIL_CONSTANT * pf.sqrt() * pf.ln()
    };
    GaussSumReport { k, value, bound }
}

/// Phase distribution `S(b)`, `b = 0..p`, computed as a direct overlap and
/// through the incomplete-sum decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDistribution {
    pub direct: Vec<f64>,
    pub decomposed: Vec<f64>,
}

impl PhaseDistribution {
    pub fn total(&self) -> f64 {
        self.direct.iter().sum()
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.direct
            .iter()
            .zip(&self.decomposed)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }
}

/// `S(b) = |<theta_b^a|beta>|^2` over a prime field. With `renormalize`,
/// nontrivial-`psi` states are scaled to unit norm first, which makes
/// `sum_b S(b) = 1`.
pub fn phase_prob(
    field: &GaloisField,
    a: i64,
    psi: &CharacterSpec,
    beta: f64,
    renormalize: bool,
) -> Result<PhaseDistribution, GaloisError> {
    field.require_prime_field()?;
    require_multiplicative(field, psi)?;
    let p = i64::from(field.p);
    let pf = p as f64;
    let scale = if renormalize && !psi.is_trivial() {
        pf / (pf - 1.0)
    } else {
        1.0
    };
    let beta_vec = qphase::beta_state(p as u64, beta).expect("p >= 3");
    let a_el = field.from_int(a);
    let direct = (0..p)
        .map(|b| {
            let state = mub_state(field, a_el, field.from_int(b), psi)?;
            Ok(scale * state.inner(&beta_vec).norm_sqr())
        })
        .collect::<Result<Vec<f64>, GaloisError>>()?;

    // With <u|v> antilinear in u the kernel carries conj(psi(n)) psi(n + k),
    // i.e. T for the conjugate character, over the state's own n-range.
    let tables = SumTables::new(field, psi.index);
    let t: Vec<C64> = (-(p - 1)..p)
        .map(|k| tables.sum(a, k, false, SumRange::Full))
        .collect();
    let decomposed = (0..p)
        .map(|b| {
            let gamma = -beta / (2.0 * PI) + b as f64 / pf;
            let s: C64 = (-(p - 1)..p)
                .zip(&t)
                .map(|(k, tk)| C64::from_polar(1.0, 2.0 * PI * gamma * k as f64) * tk)
                .sum();
            scale * s.re / (pf * pf)
        })
        .collect();
    Ok(PhaseDistribution { direct, decomposed })
}

/// `sum_b theta_b S(b)` with `theta_b = 2 pi b / p`.
pub fn phase_expectation_gal(
    field: &GaloisField,
    a: i64,
    psi: &CharacterSpec,
    beta: f64,
    renormalize: bool,
) -> Result<f64, GaloisError> {
    let dist = phase_prob(field, a, psi, beta, renormalize)?;
    Ok(expectation_of(&dist.direct))
}

fn expectation_of(s: &[f64]) -> f64 {
    let p = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(b, sb)| 2.0 * PI * b as f64 / p * sb)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceReport {
    /// `sum_b (theta_b - <Theta>)^2 S(b)`
    pub direct: f64,
    /// `sum_b theta_b^2 S(b)`
    pub second_moment: f64,
    /// `-2 <Theta>^2`
    pub cross_term: f64,
    /// `<Theta>^2 sum_b S(b)`
    pub mean_term: f64,
}

impl VarianceReport {
    pub fn expansion(&self) -> f64 {
        self.second_moment + self.cross_term + self.mean_term
    }
}

pub fn phase_variance_gal(
    field: &GaloisField,
    a: i64,
    psi: &CharacterSpec,
    beta: f64,
    renormalize: bool,
) -> Result<VarianceReport, GaloisError> {
    let dist = phase_prob(field, a, psi, beta, renormalize)?;
    Ok(variance_of(&dist.direct))
}

fn variance_of(s: &[f64]) -> VarianceReport {
    let p = s.len() as f64;
    let theta = |b: usize| 2.0 * PI * b as f64 / p;
    let mean = expectation_of(s);
    let total: f64 = s.iter().sum();
    VarianceReport {
        direct: s.iter().enumerate().map(|(b, sb)| (theta(b) - mean).powi(2) * sb).sum(),
        second_moment: s.iter().enumerate().map(|(b, sb)| theta(b).powi(2) * sb).sum(),
        cross_term: -2.0 * mean * mean,
        mean_term: mean * mean * total,
    }
}

/// `U = sum_{b=1}^p b eps^b` and `V = sum_{b=1}^p b^2 eps^b`,
/// `eps = exp(2 pi i k / p)`, by direct summation next to closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialSums {
    pub u: C64,
    pub v: C64,
    /// `eps p / (eps - 1)`, or `p (p + 1) / 2` at `k = 0`.
    pub u_closed: C64,
    /// `p^2 eps / (eps - 1) - 2 p eps / (eps - 1)^2`, or `sum b^2` at `k = 0`.
    pub v_closed: C64,
    /// `p / (2 |sin(pi k / p)|)`, which `|U|` equals.
    pub abs_u_half_angle: f64,
    /// `p / (2 |sin(2 pi k / p)|)`, an alternative form that differs from the exact value.
    pub abs_u_full_angle: f64,
    /// `-p eps / (eps - 1)^2`, an alternative form that differs from the exact value.
    pub v_alt: C64,
}

pub fn partial_sums_uv(p: u64, k: i64) -> Result<PartialSums, GaloisError> {
    if p % 2 == 0 || !arith::is_prime(p) {
        return Err(GaloisError::NotOddPrime(p));
    }
    let pi = p as i64;
    if k <= -pi || k >= pi {
        return Err(GaloisError::OffsetOutOfRange { k, p });
    }
    let eps = omega(k.rem_euclid(pi) as u64, p);
    let mut u = C64::new(0.0, 0.0);
    let mut v = C64::new(0.0, 0.0);
    for b in 1..=p {
        let e = omega(k.rem_euclid(pi) as u64 * b, p);
        u += b as f64 * e;
        v += (b * b) as f64 * e;
    }
    let pf = p as f64;
    let one = C64::new(1.0, 0.0);
    if k == 0 {
        let u0 = C64::new(pf * (pf + 1.0) / 2.0, 0.0);
        let v0 = C64::new(pf * (pf + 1.0) * (2.0 * pf + 1.0) / 6.0, 0.0);
        return Ok(PartialSums {
            u,
            v,
            u_closed: u0,
            v_closed: v0,
            abs_u_half_angle: u0.re,
            abs_u_full_angle: u0.re,
            v_alt: v0,
        });
    }
    let d = eps - one;
    let kf = k as f64;
    Ok(PartialSums {
        u,
        v,
        u_closed: eps * pf / d,
        v_closed: eps * pf * pf / d - 2.0 * pf * eps / (d * d),
        abs_u_half_angle: pf / (2.0 * (PI * kf / pf).sin().abs()),
        abs_u_full_angle: pf / (2.0 * (2.0 * PI * kf / pf).sin().abs()),
        v_alt: -pf * eps / (d * d),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gf(p: u64, m: u32) -> GaloisField {
        GaloisField::new(p, m).unwrap()
    }

    #[test]
    fn prime_field_generator() {
        let f = gf(7, 1);
        assert_eq!(f.coeffs(f.generator()), vec![3]);
        assert_eq!(f.modulus_coeffs(), &[0, 1]);
    }

    #[test]
    fn f9_modulus_and_order() {
        let f = gf(3, 2);
        assert_eq!(f.modulus_coeffs(), &[1, 0, 1]); // x^2 + 1
        let g = f.generator();
        let order = (1..=8u64).find(|&e| f.pow(g, e) == f.one()).unwrap();
        assert_eq!(order, 8);
    }

    #[test]
    fn even_and_composite_characteristics_rejected() {
        assert_eq!(GaloisField::new(2, 3).unwrap_err(), GaloisError::NotOddPrime(2));
        assert_eq!(GaloisField::new(9, 1).unwrap_err(), GaloisError::NotOddPrime(9));
        assert_eq!(GaloisField::new(3, 0).unwrap_err(), GaloisError::ZeroDegree);
        assert!(matches!(GaloisField::new(3, 9), Err(GaloisError::TooLarge { .. })));
    }

    #[test]
    fn field_axioms_exhaustive() {
        for (p, m) in [(3u64, 2u32), (5, 2), (3, 3)] {
            let f = gf(p, m);
            let els: Vec<_> = f.elements().collect();
            for &x in &els {
                if !x.is_zero() {
                    assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
                }
                assert_eq!(f.add(x, f.neg(x)), f.zero());
                for &y in &els {
                    assert_eq!(f.add(x, y), f.add(y, x));
                    assert_eq!(f.mul(x, y), f.mul(y, x));
                    for &z in &els {
                        assert_eq!(f.add(f.add(x, y), z), f.add(x, f.add(y, z)));
                        assert_eq!(f.mul(f.mul(x, y), z), f.mul(x, f.mul(y, z)));
                        assert_eq!(f.mul(x, f.add(y, z)), f.add(f.mul(x, y), f.mul(x, z)));
                    }
                }
            }
        }
    }

    #[test]
    fn multiplication_matches_polynomial_reduction() {
        let f = gf(5, 2);
        for x in f.elements() {
            for y in f.elements() {
                let direct = poly_mulmod(
                    &poly_trim(f.coeffs(x)),
                    &poly_trim(f.coeffs(y)),
                    f.modulus_coeffs(),
                    5,
                );
                let mut padded = direct;
                padded.resize(2, 0);
                assert_eq!(f.from_coeffs(&padded).unwrap(), f.mul(x, y));
            }
        }
    }

    #[test]
    fn trace_examples() {
        let f = gf(3, 2);
        assert_eq!(f.trace(f.zero()), 0);
        assert_eq!(f.trace(f.one()), 2);
        let mut fibres = [0usize; 3];
        for x in f.elements() {
            fibres[f.trace(x) as usize] += 1;
        }
        assert_eq!(fibres, [3, 3, 3]);
    }

    #[test]
    fn trace_is_linear() {
        for (p, m) in [(3u64, 2u32), (5, 2), (3, 3), (7, 1)] {
            let f = gf(p, m);
            for x in f.elements() {
                for y in f.elements() {
                    assert_eq!(f.trace(f.add(x, y)), (f.trace(x) + f.trace(y)) % p as u32);
                }
                for c in 0..p as i64 {
                    assert_eq!(
                        f.trace(f.mul(f.from_int(c), x)),
                        (c as u32 * f.trace(x)) % p as u32
                    );
                }
            }
        }
    }

    #[test]
    fn characters_are_homomorphisms_and_orthogonal() {
        for (p, m) in [(3u64, 2u32), (5, 2), (3, 3), (7, 1), (11, 1)] {
            let f = gf(p, m);
            let q = f.order() as u32;
            let kappa = CharacterSpec::additive(1);
            assert_eq!(char_eval(&f, &kappa, f.zero()).unwrap(), C64::new(1.0, 0.0));
            let total: C64 = f.elements().map(|x| char_eval(&f, &kappa, x).unwrap()).sum();
            assert!(total.norm() < 1e-10);
            for x in f.elements() {
                for y in f.elements() {
                    let lhs = char_eval(&f, &kappa, f.add(x, y)).unwrap();
                    let rhs = char_eval(&f, &kappa, x).unwrap() * char_eval(&f, &kappa, y).unwrap();
                    assert!((lhs - rhs).norm() < 1e-12);
                }
            }
            for k in 0..q - 1 {
                let psi = CharacterSpec::multiplicative(k);
                let units: C64 = f
                    .elements()
                    .filter(|x| !x.is_zero())
                    .map(|x| char_eval(&f, &psi, x).unwrap())
                    .sum();
                if k != 0 {
                    assert!(units.norm() < 1e-10);
                    assert_eq!(char_eval(&f, &psi, f.zero()).unwrap(), C64::new(0.0, 0.0));
                }
                for x in f.elements().filter(|x| !x.is_zero()) {
                    for y in f.elements().filter(|x| !x.is_zero()) {
                        let lhs = char_eval(&f, &psi, f.mul(x, y)).unwrap();
                        let rhs = char_eval(&f, &psi, x).unwrap() * char_eval(&f, &psi, y).unwrap();
                        assert!((lhs - rhs).norm() < 1e-12);
                    }
                }
            }
            assert!(char_eval(&f, &CharacterSpec::multiplicative(q - 1), f.one()).is_err());
        }
    }

    #[test]
    fn mub_state_examples() {
        let f3 = gf(3, 1);
        let s = mub_state(&f3, f3.zero(), f3.zero(), &CharacterSpec::trivial()).unwrap();
        let third = 1.0 / 3f64.sqrt();
        assert!(s.amplitudes().iter().all(|a| (a - C64::new(third, 0.0)).norm() < 1e-12));
        let s = mub_state(&f3, f3.one(), f3.zero(), &CharacterSpec::trivial()).unwrap();
        let w = C64::from_polar(third, 2.0 * PI / 3.0);
        let want = [C64::new(third, 0.0), w, w];
        for (got, want) in s.amplitudes().iter().zip(want) {
            assert!((got - want).norm() < 1e-12);
        }
        let nontrivial = mub_state(&f3, f3.one(), f3.zero(), &CharacterSpec::multiplicative(1)).unwrap();
        assert_eq!(nontrivial.amplitudes()[0], C64::new(0.0, 0.0));
        assert!((nontrivial.norm_sqr() - 2.0 / 3.0).abs() < 1e-12);
        assert!(mub_state(&f3, f3.one(), f3.zero(), &CharacterSpec::additive(1)).is_err());
    }

    #[test]
    fn q5_bases_are_unbiased() {
        let f = gf(5, 1);
        let psi = CharacterSpec::trivial();
        for a in f.elements() {
            for a2 in f.elements().filter(|&x| x != a) {
                for b in f.elements() {
                    for b2 in f.elements() {
                        let u = mub_state(&f, a, b, &psi).unwrap();
                        let v = mub_state(&f, a2, b2, &psi).unwrap();
                        assert!((u.inner(&v).norm() - 1.0 / 5f64.sqrt()).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn mub_verify_small_fields() {
        for (p, m) in [(3u64, 1u32), (3, 2), (5, 1), (7, 1)] {
            let report = mub_verify(&gf(p, m));
            assert_eq!(report.bases as u64, report.q + 1);
            assert!(report.max_deviation() < 1e-10, "{report:?}");
        }
    }

    #[test]
    fn gauss_t_examples() {
        for p in [3u64, 5, 7, 11, 13] {
            let f = gf(p, 1);
            let t0 = gauss_t(&f, 1, &CharacterSpec::trivial(), 0).unwrap();
            assert!((t0.value - C64::new(p as f64 - 1.0, 0.0)).norm() < 1e-12);
            for a in 1..p as i64 {
                for k in 1 - p as i64..p as i64 {
                    if k == 0 {
                        continue;
                    }
                    let r = gauss_t(&f, a, &CharacterSpec::trivial(), k).unwrap();
                    assert!(r.within_bound(1e-9), "p={p} a={a} k={k}: {r:?}");
                }
            }
        }
        let f = gf(11, 1);
        let psi = CharacterSpec::multiplicative(3);
        let all = gauss_t_all(&f, 2, &psi).unwrap();
        assert_eq!(all.len(), 21);
        for r in &all {
            assert_eq!(*r, gauss_t(&f, 2, &psi, r.k).unwrap());
        }
        let f = gf(5, 1);
        assert!(gauss_t(&f, 1, &CharacterSpec::trivial(), 5).is_err());
        assert!(gauss_t(&gf(3, 2), 1, &CharacterSpec::trivial(), 1).is_err());
    }

    #[test]
    fn uniform_distribution_mean() {
        let s = vec![1.0 / 7.0; 7];
        assert!((expectation_of(&s) - PI * 6.0 / 7.0).abs() < 1e-12);
        let delta = [1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(expectation_of(&delta), 0.0);
        assert_eq!(variance_of(&delta).direct, 0.0);
    }

    #[test]
    fn delta_distribution_at_a_zero() {
        for p in [3u64, 5, 7] {
            let f = gf(p, 1);
            let d = phase_prob(&f, 0, &CharacterSpec::trivial(), 0.0, false).unwrap();
            for (b, s) in d.direct.iter().enumerate() {
                let want = if b == 0 { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12);
            }
            assert!(phase_expectation_gal(&f, 0, &CharacterSpec::trivial(), 0.0, false)
                .unwrap()
                .abs()
                < 1e-12);
            let v = phase_variance_gal(&f, 0, &CharacterSpec::trivial(), 0.0, false).unwrap();
            assert!(v.direct.abs() < 1e-12);
        }
    }

    #[test]
    fn decomposition_matches_direct_overlap() {
        for p in [3u64, 5, 7, 11] {
            let f = gf(p, 1);
            for a in 0..p as i64 {
                for k in 0..p as u32 - 1 {
                    let psi = CharacterSpec::multiplicative(k);
                    for beta in [0.0, 0.4, 1.0, 2.7, 5.5] {
                        for renorm in [false, true] {
                            let d = phase_prob(&f, a, &psi, beta, renorm).unwrap();
                            assert!(d.max_discrepancy() < 1e-10, "p={p} a={a} k={k} beta={beta}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn distribution_totals() {
        for p in [3u64, 5, 7, 11] {
            let f = gf(p, 1);
            for a in 0..p as i64 {
                for k in 0..p as u32 - 1 {
                    let psi = CharacterSpec::multiplicative(k);
                    let raw = phase_prob(&f, a, &psi, 0.9, false).unwrap().total();
                    let want = if k == 0 { 1.0 } else { 1.0 - 1.0 / p as f64 };
                    assert!((raw - want).abs() < 1e-10);
                    let norm = phase_prob(&f, a, &psi, 0.9, true).unwrap().total();
                    assert!((norm - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn variance_expansion_identity() {
        for p in [3u64, 5, 7, 11] {
            let f = gf(p, 1);
            for a in 0..p as i64 {
                for k in 0..p as u32 - 1 {
                    let psi = CharacterSpec::multiplicative(k);
                    for beta in [0.0, 1.0, 3.0] {
                        let v = phase_variance_gal(&f, a, &psi, beta, true).unwrap();
                        assert!((v.direct - v.expansion()).abs() < 1e-9);
                        assert!(v.direct >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn partial_sums() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let zero = partial_sums_uv(p, 0).unwrap();
            assert!((zero.u.re - (p * (p + 1) / 2) as f64).abs() < 1e-9);
            assert!((zero.v - zero.v_closed).norm() < 1e-9);
            for k in 1..p as i64 {
                for k in [k, -k] {
                    let s = partial_sums_uv(p, k).unwrap();
                    assert!((s.u - s.u_closed).norm() < 1e-9);
                    assert!((s.v - s.v_closed).norm() < 1e-7 * p as f64);
                    assert!((s.u.norm() - s.abs_u_half_angle).abs() < 1e-9);
                }
            }
        }
        assert!(partial_sums_uv(5, 5).is_err());
        assert!(partial_sums_uv(4, 1).is_err());
    }

    #[test]
    fn metadata_round_trip_and_validation() {
        let f = gf(3, 3);
        let meta = f.meta();
        let json = meta.to_json();
        let back = GaloisField::from_meta(&FieldMeta::from_json(&json).unwrap()).unwrap();
        assert_eq!(back.meta(), meta);
        assert_eq!(back.trace, f.trace);

        let mut reducible = meta.clone();
        reducible.modulus_coeffs = vec![0, 0, 0, 1]; // x^3
        assert_eq!(GaloisField::from_meta(&reducible).unwrap_err(), GaloisError::Reducible);
        let mut not_primitive = gf(7, 1).meta();
        not_primitive.generator_coeffs = vec![2]; // order 3
        assert_eq!(GaloisField::from_meta(&not_primitive).unwrap_err(), GaloisError::NotPrimitive);
        assert!(FieldMeta::from_json("{\"p\":3}").is_err());
        assert!(FieldMeta::from_json(
            "{\"p\":3,\"m\":1,\"modulus_coeffs\":[0,1],\"generator_coeffs\":[2],\"x\":1}"
        )
        .is_err());
    }
}
