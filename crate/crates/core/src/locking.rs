//! Continued fractions and mode-locking basins.
//!
//! A receiver with reference `f0` and low-pass cut-off `fc` resolves the
//! harmonic `p/q` only up to the partial quotient `floor(f0 / (fc q))`. Each
//! resolvable fraction then owns a basin whose two edges come from the two
//! continued-fraction spellings of `p/q` extended by that quotient.
//!
//! Everything here is exact: rationals are reduced `u64` pairs and
//! comparisons go through `u128` cross products.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::arith::gcd;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LockingError {
    #[error("denominator must be at least 1")]
    ZeroDenominator,
    #[error("cannot parse {0:?}")]
    Parse(String),
    #[error("continued fraction must have at least one quotient")]
    EmptyExpansion,
    #[error("partial quotient a_{index} = 0; only a_0 may be zero")]
    ZeroQuotient { index: usize },
    #[error("last partial quotient must be at least 2 in canonical form")]
    NonCanonical,
    #[error("value does not fit in 64-bit numerator/denominator")]
    Overflow,
    #[error("partial quotient after the centre must be at least 1")]
    ZeroNextQuotient,
    #[error("filter needs 0 < fc <= f0, got f0={f0}, fc={fc}")]
    InvalidFilter { f0: f64, fc: f64 },
    #[error("basin at denominator {q} is unresolvable: f0/(fc q) < 1")]
    Unresolvable { q: u64 },
    #[error("invalid scan range ({lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
}

/// Non-negative reduced fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rational {
    num: u64,
    den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Result<Self, LockingError> {
        if den == 0 {
            return Err(LockingError::ZeroDenominator);
        }
        let g = gcd(num, den);
        Ok(Self {
            num: num / g,
            den: den / g,
        })
    }

    pub fn integer(n: u64) -> Self {
        Self { num: n, den: 1 }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `|self - other|`, exact.
    pub fn abs_diff(&self, other: &Rational) -> Result<Rational, LockingError> {
        let a = u128::from(self.num) * u128::from(other.den);
        let b = u128::from(other.num) * u128::from(self.den);
        let num = a.abs_diff(b);
        let den = u128::from(self.den) * u128::from(other.den);
        let g = gcd128(num, den);
        let (num, den) = (num / g, den / g);
        Ok(Rational {
            num: u64::try_from(num).map_err(|_| LockingError::Overflow)?,
            den: u64::try_from(den).map_err(|_| LockingError::Overflow)?,
        })
    }
}

fn gcd128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `p/q` or a bare integer `p`, surrounding whitespace allowed.
impl FromStr for Rational {
    type Err = LockingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LockingError::Parse(s.to_string());
        let s_trim = s.trim();
        match s_trim.split_once('/') {
            Some((n, d)) => {
                let n = n.trim().parse::<u64>().map_err(|_| bad())?;
                let d = d.trim().parse::<u64>().map_err(|_| bad())?;
                Rational::new(n, d)
            }
            None => Ok(Rational::integer(s_trim.parse::<u64>().map_err(|_| bad())?)),
        }
    }
}

/// Simple continued fraction `[a0; a1, ..., an]` in canonical form: `a_i >= 1`
/// for `i >= 1` and a last quotient of at least 2 unless there is only one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ContinuedFraction {
    quotients: Vec<u64>,
}

impl ContinuedFraction {
    pub fn new(quotients: Vec<u64>) -> Result<Self, LockingError> {
        check_quotients(&quotients)?;
        if quotients.len() > 1 && *quotients.last().unwrap() < 2 {
            return Err(LockingError::NonCanonical);
        }
        Ok(Self { quotients })
    }

    pub fn quotients(&self) -> &[u64] {
        &self.quotients
    }

    pub fn value(&self) -> Result<Rational, LockingError> {
        evaluate(&self.quotients)
    }

    /// The other spelling of the same value, with the last quotient `a` split
    /// into `a - 1, 1`. `None` for the expansion of zero.
    pub fn alternate_quotients(&self) -> Option<Vec<u64>> {
        let (&last, head) = self.quotients.split_last()?;
        if last == 0 {
            return None;
        }
        let mut alt = head.to_vec();
        alt.push(last - 1);
        alt.push(1);
        Some(alt)
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.quotients[0])?;
        for (i, a) in self.quotients[1..].iter().enumerate() {
            f.write_str(if i == 0 { ";" } else { "," })?;
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

/// Parses `[a0;a1,a2,...]`, also without brackets and with `{}` braces.
impl FromStr for ContinuedFraction {
    type Err = LockingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || LockingError::Parse(s.to_string());
        let body = s.trim();
        let body = body
            .strip_prefix('[')
            .and_then(|b| b.strip_suffix(']'))
            .or_else(|| body.strip_prefix('{').and_then(|b| b.strip_suffix('}')))
            .unwrap_or(body);
        let (head, tail) = match body.split_once(';') {
            Some((h, t)) => (h, Some(t)),
            None => (body, None),
        };
        let mut quotients = vec![head.trim().parse::<u64>().map_err(|_| bad())?];
        if let Some(tail) = tail {
            for part in tail.split(',') {
                quotients.push(part.trim().parse::<u64>().map_err(|_| bad())?);
            }
        }
        ContinuedFraction::new(quotients)
    }
}

fn check_quotients(quotients: &[u64]) -> Result<(), LockingError> {
    if quotients.is_empty() {
        return Err(LockingError::EmptyExpansion);
    }
    if let Some(index) = quotients.iter().skip(1).position(|&a| a == 0) {
        return Err(LockingError::ZeroQuotient { index: index + 1 });
    }
    Ok(())
}

/// Convergents `p_i/q_i` of any (not necessarily canonical) quotient list.
fn convergents_of(quotients: &[u64]) -> Result<Vec<Rational>, LockingError> {
    check_quotients(quotients)?;
    let (mut p_prev, mut p) = (1u64, quotients[0]);
    let (mut q_prev, mut q) = (0u64, 1u64);
    let mut out = Vec::with_capacity(quotients.len());
    out.push(Rational { num: p, den: q });
    for &a in &quotients[1..] {
        let step = |x: u64, x_prev: u64| {
            a.checked_mul(x)
                .and_then(|ax| ax.checked_add(x_prev))
                .ok_or(LockingError::Overflow)
        };
        let p_next = step(p, p_prev)?;
        let q_next = step(q, q_prev)?;
        (p_prev, p) = (p, p_next);
        (q_prev, q) = (q, q_next);
        // Consecutive convergents satisfy p q' - p' q = ±1, so they are reduced.
        out.push(Rational { num: p, den: q });
    }
    Ok(out)
}

fn evaluate(quotients: &[u64]) -> Result<Rational, LockingError> {
    Ok(*convergents_of(quotients)?.last().unwrap())
}

/// Euclid's algorithm.
pub fn cf_expand(x: Rational) -> ContinuedFraction {
    let (mut n, mut d) = (x.num, x.den);
    let mut quotients = Vec::new();
    loop {
        quotients.push(n / d);
        let r = n % d;
        if r == 0 {
            break;
        }
        (n, d) = (d, r);
    }
    ContinuedFraction { quotients }
}

pub fn cf_convergents(cf: &ContinuedFraction) -> Result<Vec<Rational>, LockingError> {
    convergents_of(&cf.quotients)
}

/// Reference frequency and low-pass cut-off of the phase detector, in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    f0: f64,
    fc: f64,
}

impl FilterConfig {
    pub fn new(f0: f64, fc: f64) -> Result<Self, LockingError> {
        if !(f0 > 0.0 && fc > 0.0 && fc <= f0 && f0.is_finite()) {
            return Err(LockingError::InvalidFilter { f0, fc });
        }
        Ok(Self { f0, fc })
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn fc(&self) -> f64 {
        self.fc
    }
}

/// `floor(f0 / (fc q))`: the first partial quotient the filter truncates.
pub fn truncation_index(cfg: &FilterConfig, q: u64) -> Result<u64, LockingError> {
    if q == 0 {
        return Err(LockingError::ZeroDenominator);
    }
    let a = (cfg.f0 / (cfg.fc * q as f64)).floor();
    if a < 1.0 {
        return Err(LockingError::Unresolvable { q });
    }
    Ok(a as u64)
}

/// Edges `(nu1, nu2)` of the basin around `center` truncated at `a_next`.
///
/// `nu1` extends the canonical expansion by `a_next`; `nu2` extends the
/// alternate one. The basin at zero is one-sided and reports `nu2 = 0`.
pub fn basin_edges(center: Rational, a_next: u64) -> Result<(Rational, Rational), LockingError> {
    if a_next == 0 {
        return Err(LockingError::ZeroNextQuotient);
    }
    let cf = cf_expand(center);
    let mut first = cf.quotients.clone();
    first.push(a_next);
    let nu1 = evaluate(&first)?;
    let nu2 = match cf.alternate_quotients() {
        Some(mut alt) => {
            alt.push(a_next);
            evaluate(&alt)?
        }
        None => center,
    };
    Ok((nu1, nu2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockingBasin {
    pub center: Rational,
    pub nu1: Rational,
    pub nu2: Rational,
    pub width_hz: f64,
    /// Set when this basin's edge interval intersects another basin's.
    pub overlap: bool,
}

impl LockingBasin {
    pub fn new(cfg: &FilterConfig, center: Rational) -> Result<Self, LockingError> {
        let a_next = truncation_index(cfg, center.den)?;
        let (nu1, nu2) = basin_edges(center, a_next)?;
        let width_hz = nu1.abs_diff(&nu2)?.to_f64() * cfg.f0;
        Ok(Self {
            center,
            nu1,
            nu2,
            width_hz,
            overlap: false,
        })
    }

    pub fn lower(&self) -> Rational {
        self.nu1.min(self.nu2)
    }

    pub fn upper(&self) -> Rational {
        self.nu1.max(self.nu2)
    }
}

/// Reduced fractions `p/q` with `q <= q_max` strictly inside `(lo, hi)`,
/// sorted by value.
pub fn farey_points(q_max: u64, lo: f64, hi: f64) -> Vec<Rational> {
    let mut points = Vec::new();
    for q in 1..=q_max {
        let p_start = (lo * q as f64).floor().max(0.0) as u64;
        let p_end = (hi * q as f64).ceil() as u64;
        for p in p_start..=p_end {
            if gcd(p, q) != 1 {
                continue;
            }
            let v = p as f64 / q as f64;
            if v > lo && v < hi {
                points.push(Rational { num: p, den: q });
            }
        }
    }
    points.sort();
    points
}

/// Basins of every resolvable reduced fraction in `(lo, hi)` with denominator
/// up to `q_max`, sorted by centre, with overlap flags.
pub fn spectrum_scan(
    cfg: &FilterConfig,
    q_max: u64,
    lo: f64,
    hi: f64,
) -> Result<Vec<LockingBasin>, LockingError> {
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(LockingError::InvalidRange { lo, hi });
    }
    let mut basins = Vec::new();
    for center in farey_points(q_max, lo, hi) {
        match LockingBasin::new(cfg, center) {
            Ok(b) => basins.push(b),
            Err(LockingError::Unresolvable { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let bounds: Vec<(Rational, Rational)> = basins.iter().map(|b| (b.lower(), b.upper())).collect();
    for (i, basin) in basins.iter_mut().enumerate() {
        let (lo_i, hi_i) = bounds[i];
        basin.overlap = bounds
            .iter()
            .enumerate()
            .any(|(j, &(lo_j, hi_j))| j != i && hi_i > lo_j && hi_j > lo_i);
    }
    Ok(basins)
}
