//! Exact arithmetic functions: totient, Möbius, Mangoldt (plain and restricted
//! to a residue class), Ramanujan sums, Mertens sums and Dirichlet partial sums.
//!
//! Factorisation goes through a smallest-prime-factor table up to
//! [`SIEVE_LIMIT`], built once on first use and shared read-only afterwards.
//! Arguments above the table are trial-divided by the tabled primes, which
//! covers everything up to [`MAX_ARG`].

use std::sync::OnceLock;

use thiserror::Error;

/// Upper end of the shared smallest-prime-factor table.
pub const SIEVE_LIMIT: u64 = 10_000_000;

/// Largest argument that can be factorised with the tabled primes.
pub const MAX_ARG: u64 = SIEVE_LIMIT * SIEVE_LIMIT;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithError {
    #[error("argument must be at least 1")]
    Zero,
    #[error("argument {0} is outside the supported range 1..={MAX_ARG}")]
    OutOfRange(u64),
    #[error("argument {0} exceeds the sieve limit {SIEVE_LIMIT}")]
    BeyondSieve(u64),
    #[error("residue {residue} is not in [0, {modulus})")]
    InvalidResidue { modulus: u64, residue: u64 },
    #[error("residue {residue} is not coprime to modulus {modulus}")]
    NotCoprime { modulus: u64, residue: u64 },
    #[error("Dirichlet exponent must exceed 1, got {0}")]
    InvalidExponent(f64),
}

/// A positive integer argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NaturalArg(u64);

impl NaturalArg {
    pub fn new(n: u64) -> Result<Self, ArithError> {
        match n {
            0 => Err(ArithError::Zero),
            n if n > MAX_ARG => Err(ArithError::OutOfRange(n)),
            n => Ok(Self(n)),
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// The residue class `residue (mod modulus)`.
///
/// With `modulus == 1` the only admissible residue is 0, and the class places
/// no constraint on its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResidueClass {
    modulus: u64,
    residue: u64,
}

impl ResidueClass {
    pub fn new(modulus: u64, residue: u64) -> Result<Self, ArithError> {
        if modulus == 0 {
            return Err(ArithError::Zero);
        }
        if residue >= modulus {
            return Err(ArithError::InvalidResidue { modulus, residue });
        }
        Ok(Self { modulus, residue })
    }

    /// The unconstrained class (modulus 1).
    pub fn all() -> Self {
        Self {
            modulus: 1,
            residue: 0,
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn residue(&self) -> u64 {
        self.residue
    }

    pub fn contains(&self, n: u64) -> bool {
        self.modulus == 1 || n % self.modulus == self.residue
    }
}

struct Sieve {
    spf: Vec<u32>,
    primes: Vec<u32>,
}

fn sieve() -> &'static Sieve {
    static SIEVE: OnceLock<Sieve> = OnceLock::new();
    SIEVE.get_or_init(|| {
        let limit = SIEVE_LIMIT as usize;
        let mut spf = vec![0u32; limit + 1];
        let mut primes = Vec::with_capacity(700_000);
        for i in 2..=limit {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let ip = i * p as usize;
                if p > si || ip > limit {
                    break;
                }
                spf[ip] = p;
            }
        }
        Sieve { spf, primes }
    })
}

/// Primes `<= n`, for `n <= SIEVE_LIMIT`.
pub fn primes_up_to(n: u64) -> Result<&'static [u32], ArithError> {
    if n > SIEVE_LIMIT {
        return Err(ArithError::BeyondSieve(n));
    }
    let primes = &sieve().primes;
    let end = primes.partition_point(|&p| u64::from(p) <= n);
    Ok(&primes[..end])
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Prime factorisation as `(prime, exponent)` pairs in increasing order.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>, ArithError> {
    let n = NaturalArg::new(n)?.get();
    let table = sieve();
    let mut factors: Vec<(u64, u32)> = Vec::new();
    let mut push = |p: u64| match factors.last_mut() {
        Some((q, e)) if *q == p => *e += 1,
        _ => factors.push((p, 1)),
    };
    let mut rest = n;
    if rest <= SIEVE_LIMIT {
        while rest > 1 {
            let p = u64::from(table.spf[rest as usize]);
            push(p);
            rest /= p;
        }
    } else {
        for &p in &table.primes {
            let p = u64::from(p);
            if p * p > rest {
                break;
            }
            while rest % p == 0 {
                push(p);
                rest /= p;
            }
        }
        if rest > 1 {
            push(rest);
        }
    }
    Ok(factors)
}

pub fn is_prime(n: u64) -> bool {
    match factorize(n) {
        Ok(f) => f.len() == 1 && f[0].1 == 1,
        Err(_) => false,
    }
}

/// All positive divisors in increasing order.
pub fn divisors(n: u64) -> Result<Vec<u64>, ArithError> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n)? {
        let current = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..current {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    Ok(divs)
}

/// Euler's totient.
pub fn euler_phi(n: u64) -> Result<u64, ArithError> {
    Ok(factorize(n)?
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1)))
}

pub fn moebius(n: u64) -> Result<i8, ArithError> {
    let factors = factorize(n)?;
    if factors.iter().any(|&(_, e)| e > 1) {
        return Ok(0);
    }
    Ok(if factors.len() % 2 == 0 { 1 } else { -1 })
}

/// The prime `b` when `n = b^k` with `k >= 1`.
pub fn prime_power_base(n: u64) -> Result<Option<u64>, ArithError> {
    let factors = factorize(n)?;
    Ok(match factors.as_slice() {
        [(p, _)] => Some(*p),
        _ => None,
    })
}

/// von Mangoldt function.
pub fn mangoldt(n: u64) -> Result<f64, ArithError> {
    Ok(prime_power_base(n)?.map_or(0.0, |b| (b as f64).ln()))
}

/// Mangoldt function restricted to a residue class: `ln b` when `n = b^k` and
/// `n` lies in `class`, zero otherwise.
pub fn mangoldt_general(n: u64, class: &ResidueClass) -> Result<f64, ArithError> {
    let n = NaturalArg::new(n)?.get();
    if !class.contains(n) {
        return Ok(0.0);
    }
    mangoldt(n)
}

/// Ramanujan sum `c_q(n)` via `mu(q1) phi(q) / phi(q1)` with `q1 = q / gcd(q, n)`.
pub fn ramanujan_sum(q: u64, n: i64) -> Result<i64, ArithError> {
    let q = NaturalArg::new(q)?.get();
    let q1 = q / gcd(q, n.unsigned_abs());
    let mu = i64::from(moebius(q1)?);
    if mu == 0 {
        return Ok(0);
    }
    let ratio = euler_phi(q)? / euler_phi(q1)?;
    Ok(mu * ratio as i64)
}

/// `b(n) = phi(n)/n * Lambda(n)`.
pub fn mangoldt_dual_b(n: u64) -> Result<f64, ArithError> {
    let lambda = mangoldt(n)?;
    if lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(euler_phi(n)? as f64 / n as f64 * lambda)
}

/// Möbius values for `0..=t` by a linear sieve (index 0 holds 0).
pub fn moebius_table(t: u64) -> Vec<i8> {
    let t = t as usize;
    let mut mu = vec![0i8; t + 1];
    if t == 0 {
        return mu;
    }
    mu[1] = 1;
    let mut composite = vec![false; t + 1];
    let mut primes: Vec<usize> = Vec::new();
    for i in 2..=t {
        if !composite[i] {
            primes.push(i);
            mu[i] = -1;
        }
        for &p in &primes {
            let ip = i * p;
            if ip > t {
                break;
            }
            composite[ip] = true;
            if i % p == 0 {
                mu[ip] = 0;
                break;
            }
            mu[ip] = -mu[i];
        }
    }
    mu
}

/// Running Mertens sums `M(0..=t)` (index 0 holds 0).
pub fn mertens_series(t: u64) -> Vec<i64> {
    let mut acc = 0i64;
    moebius_table(t)
        .into_iter()
        .map(|m| {
            acc += i64::from(m);
            acc
        })
        .collect()
}

/// `M(t) = sum_{n <= t} mu(n)`.
pub fn mertens(t: u64) -> Result<i64, ArithError> {
    let t = NaturalArg::new(t)?.get();
    if t > SIEVE_LIMIT {
        return Err(ArithError::BeyondSieve(t));
    }
    Ok(moebius_table(t).iter().map(|&m| i64::from(m)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingAverage {
    /// `(1/t) sum_{n <= t} Lambda(n; q, p)`
    pub average: f64,
    /// `average - 1/phi(q)`
    pub epsilon: f64,
}

/// Average of the class-restricted Mangoldt function up to `t`.
pub fn coupling_average(t: u64, class: &ResidueClass) -> Result<CouplingAverage, ArithError> {
    let t = NaturalArg::new(t)?.get();
    let q = class.modulus();
    if q > 1 && gcd(q, class.residue()) != 1 {
        return Err(ArithError::NotCoprime {
            modulus: q,
            residue: class.residue(),
        });
    }
    let mut sum = 0.0;
    for &b in primes_up_to(t)? {
        let b = u64::from(b);
        let ln_b = (b as f64).ln();
        let mut power = b;
        loop {
            if class.contains(power) {
                sum += ln_b;
            }
            match power.checked_mul(b) {
                Some(next) if next <= t => power = next,
                _ => break,
            }
        }
    }
    let average = sum / t as f64;
    Ok(CouplingAverage {
        average,
        epsilon: average - 1.0 / euler_phi(q)? as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirichletKind {
    Moebius,
    Mangoldt,
}

/// Partial Dirichlet series `sum_{n <= n_max} f(n) / n^s`.
pub fn dirichlet_partial(kind: DirichletKind, s: f64, n_max: u64) -> Result<f64, ArithError> {
    if !(s > 1.0) {
        return Err(ArithError::InvalidExponent(s));
    }
    let n_max = NaturalArg::new(n_max)?.get();
    if n_max > SIEVE_LIMIT {
        return Err(ArithError::BeyondSieve(n_max));
    }
    let sum = match kind {
        DirichletKind::Moebius => moebius_table(n_max)
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, &m)| f64::from(m) / (n as f64).powf(s))
            .sum(),
        DirichletKind::Mangoldt => {
            let mut sum = 0.0;
            for n in 2..=n_max {
                let lambda = mangoldt(n)?;
                if lambda != 0.0 {
                    sum += lambda / (n as f64).powf(s);
                }
            }
            sum
        }
    };
    Ok(sum)
}
