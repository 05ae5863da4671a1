//! Oscillator models of locking and frequency-stability statistics.
//!
//! Both ODEs use fixed-step RK4. The circle-map winding number is taken on
//! the unwrapped lift. Allan deviations default to the non-overlapping
//! two-sample estimator.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("step too coarse: dt * omega = {0} (needs < 0.1)")]
    StepTooCoarse(f64),
    #[error("integration diverged at t = {t}: v = {value}")]
    Diverged { t: f64, value: f64 },
    #[error("time series needs dt > 0 and at least 2 samples")]
    InvalidSeries,
    #[error("tau = {0} is not a positive multiple of dt")]
    TauNotMultiple(f64),
    #[error("taus must be strictly increasing")]
    TausNotIncreasing,
    #[error("series too short for tau = {tau}: {pairs} pairs, need 10")]
    TooShort { tau: f64, pairs: usize },
    #[error("n = {0} is not a power of two >= 1024")]
    BadLength(usize),
    #[error("grid must be sorted ascending")]
    UnsortedGrid,
    #[error("beat frequency must be positive")]
    ZeroBeat,
    #[error("n_iter = {0} below 1000")]
    TooFewIterations(u64),
}

fn require(cond: bool, what: &str) -> Result<(), DynamicsError> {
    if cond {
        Ok(())
    } else {
        Err(DynamicsError::InvalidParam(what.to_string()))
    }
}

/// Uniformly sampled series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    dt: f64,
    samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(dt: f64, samples: Vec<f64>) -> Result<Self, DynamicsError> {
        if !(dt > 0.0 && dt.is_finite()) || samples.len() < 2 {
            return Err(DynamicsError::InvalidSeries);
        }
        Ok(Self { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(t, value)` pairs.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as f64 * self.dt, v))
    }

    /// Samples from index `from` on.
    pub fn tail(&self, from: usize) -> Result<Self, DynamicsError> {
        Self::new(self.dt, self.samples[from.min(self.len())..].to_vec())
    }
}

fn rk4_step<const N: usize>(
    t: f64,
    y: [f64; N],
    h: f64,
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
) -> [f64; N] {
    let shift = |y: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *y;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(t, &y);
    let k2 = f(t + h / 2.0, &shift(&y, &k1, h / 2.0));
    let k3 = f(t + h / 2.0, &shift(&y, &k2, h / 2.0));
    let k4 = f(t + h, &shift(&y, &k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn step_count(t_end: f64, dt: f64) -> Result<usize, DynamicsError> {
    require(dt > 0.0 && dt.is_finite(), "dt must be positive")?;
    require(t_end > 0.0 && t_end.is_finite(), "t_end must be positive")?;
    Ok((t_end / dt).round() as usize)
}

/// `v'' - d/dt (g v - beta' v^3) + omega^2 v = omega0^2 V0 sin(omega0 t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdpParams {
    pub g: f64,
    pub beta_prime: f64,
    pub omega: f64,
    pub omega0: f64,
    pub v0: f64,
    /// Initial displacement; velocity starts at zero.
    pub v_init: f64,
}

impl VdpParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        require(self.omega > 0.0, "omega must be positive")?;
        require(self.beta_prime >= 0.0, "beta_prime must be nonnegative")?;
        require(
            [self.g, self.beta_prime, self.omega, self.omega0, self.v0, self.v_init]
                .iter()
                .all(|x| x.is_finite()),
            "parameters must be finite",
        )
    }

    /// Free-running limit-cycle amplitude `2 sqrt(g / (3 beta'))`.
    pub fn limit_cycle_amplitude(&self) -> Option<f64> {
        (self.g > 0.0 && self.beta_prime > 0.0).then(|| 2.0 * (self.g / (3.0 * self.beta_prime)).sqrt())
    }
}

const DIVERGENCE_LIMIT: f64 = 1e12;

pub fn vanderpol_integrate(p: &VdpParams, t_end: f64, dt: f64) -> Result<TimeSeries, DynamicsError> {
    p.validate()?;
    let steps = step_count(t_end, dt)?;
    let omega_dt = dt * p.omega.max(p.omega0.abs());
    if omega_dt >= 0.1 {
        return Err(DynamicsError::StepTooCoarse(omega_dt));
    }
    let rhs = |t: f64, y: &[f64; 2]| {
        let (v, w) = (y[0], y[1]);
        let drive = p.omega0 * p.omega0 * p.v0 * (p.omega0 * t).sin();
        [w, (p.g - 3.0 * p.beta_prime * v * v) * w - p.omega * p.omega * v + drive]
    };
    let mut y = [p.v_init, 0.0];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y[0]);
    for i in 0..steps {
        let t = i as f64 * dt;
        y = rk4_step(t, y, dt, &rhs);
        if !y[0].is_finite() || y[0].abs() > DIVERGENCE_LIMIT {
            return Err(DynamicsError::Diverged {
                t: t + dt,
                value: y[0],
            });
        }
        out.push(y[0]);
    }
    TimeSeries::new(dt, out)
}

/// Angular frequency of the largest periodogram peak (Hann window,
/// zero-padded 4x, parabolic refinement).
pub fn dominant_frequency(ts: &TimeSeries) -> f64 {
    let n = ts.len();
    let padded = (4 * n).next_power_of_two();
    let mean = ts.samples.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = ts
        .samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            Complex64::new((x - mean) * w, 0.0)
        })
        .collect();
    buf.resize(padded, Complex64::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(padded).process(&mut buf);
    let power: Vec<f64> = buf[..padded / 2].iter().map(|c| c.norm_sqr()).collect();
    let k = (1..power.len())
        .max_by(|&a, &b| power[a].total_cmp(&power[b]))
        .unwrap_or(0);
    let mut offset = 0.0;
    if k >= 1 && k + 1 < power.len() {
        let (a, b, c) = (power[k - 1].ln(), power[k].ln(), power[k + 1].ln());
        let denom = a - 2.0 * b + c;
        if denom.abs() > 0.0 {
            offset = 0.5 * (a - c) / denom;
        }
    }
    2.0 * PI * (k as f64 + offset) / (padded as f64 * ts.dt)
}

/// `dPhi/dt = omega_LF - K sin Phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdlerParams {
    pub omega_lf: f64,
    pub k: f64,
    pub phi0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdlerRun {
    /// Unwrapped phase.
    pub series: TimeSeries,
    /// Mean `dPhi/dt` over the second half of the run.
    pub mean_rate: f64,
}

impl AdlerRun {
    /// Final phase reduced to `(-pi, pi]`.
    pub fn final_phase(&self) -> f64 {
        let last = *self.series.samples.last().expect("series is nonempty");
        let r = last.rem_euclid(2.0 * PI);
        if r > PI {
            r - 2.0 * PI
        } else {
            r
        }
    }
}

pub fn adler_integrate(p: &AdlerParams, t_end: f64, dt: f64) -> Result<AdlerRun, DynamicsError> {
    require(p.k >= 0.0, "K must be nonnegative")?;
    require(
        p.omega_lf.is_finite() && p.k.is_finite() && p.phi0.is_finite(),
        "parameters must be finite",
    )?;
    let steps = step_count(t_end, dt)?;
    require(steps >= 4, "need at least 4 steps")?;
    let rhs = |_t: f64, y: &[f64; 1]| [p.omega_lf - p.k * y[0].sin()];
    let mut y = [p.phi0];
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y[0]);
    for i in 0..steps {
        y = rk4_step(i as f64 * dt, y, dt, &rhs);
        out.push(y[0]);
    }
    let mean_rate = mean_slip_rate(&out, dt);
    Ok(AdlerRun {
        series: TimeSeries::new(dt, out)?,
        mean_rate,
    })
}

/// Rate from whole slips in the second half: `2 pi (N - 1) / (t_N - t_1)`
/// between the first and last crossings of `pi (mod 2 pi)`. Falls back to
/// the end-to-end difference when fewer than two slips occur.
fn mean_slip_rate(phi: &[f64], dt: f64) -> f64 {
    let mid = phi.len() / 2;
    let half = &phi[mid..];
    let level = |x: f64| ((x - PI) / (2.0 * PI)).floor();
    let mut crossings = Vec::new();
    for (i, w) in half.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let (la, lb) = (level(a), level(b));
        if la != lb {
            let target = PI + 2.0 * PI * la.max(lb);
            let frac = if b != a { (target - a) / (b - a) } else { 0.0 };
            crossings.push((i as f64 + frac) * dt);
        }
    }
    if crossings.len() >= 2 {
        let span = crossings[crossings.len() - 1] - crossings[0];
        let sign = (half[half.len() - 1] - half[0]).signum();
        return sign * 2.0 * PI * (crossings.len() as f64 - 1.0) / span;
    }
    (half[half.len() - 1] - half[0]) / ((half.len() - 1) as f64 * dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeatFrequency {
    pub value: f64,
    pub locked: bool,
}

/// `sqrt(omega_LF^2 - K^2)`; zero with `locked` set when `|omega_LF| <= K`.
pub fn beat_frequency(omega_lf: f64, k: f64) -> BeatFrequency {
    if omega_lf.abs() <= k {
        return BeatFrequency {
            value: 0.0,
            locked: true,
        };
    }
    BeatFrequency {
        value: (omega_lf * omega_lf - k * k).sqrt(),
        locked: false,
    }
}

/// `delta_omega (1 + K^2 / beat^2)^{1/2}`.
pub fn noise_magnification(delta_omega: f64, k: f64, beat: f64) -> Result<f64, DynamicsError> {
    if !(beat > 0.0) {
        return Err(DynamicsError::ZeroBeat);
    }
    Ok(delta_omega * (1.0 + (k / beat).powi(2)).sqrt())
}

/// `Phi_{n+1} = Phi_n + 2 pi Omega - c sin Phi_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldParams {
    pub omega: f64,
    pub c: f64,
    pub phi0: f64,
}

pub fn arnold_winding(p: &ArnoldParams, n_transient: u64, n_iter: u64) -> Result<f64, DynamicsError> {
    require(p.c >= 0.0, "c must be nonnegative")?;
    require(p.omega.is_finite() && p.c.is_finite() && p.phi0.is_finite(), "parameters must be finite")?;
    if n_iter < 1000 {
        return Err(DynamicsError::TooFewIterations(n_iter));
    }
    if p.c == 0.0 {
        return Ok(p.omega);
    }
    if p.c > 1.0 {
        log::warn!("c = {} > 1: locking zones overlap, winding may depend on the orbit", p.c);
    }
    let step = 2.0 * PI * p.omega;
    let mut phi = p.phi0;
    for _ in 0..n_transient {
        phi += step - p.c * phi.sin();
    }
    let start = phi;
    for _ in 0..n_iter {
        phi += step - p.c * phi.sin();
    }
    Ok((phi - start) / (2.0 * PI * n_iter as f64))
}

/// Iteration budget for staircase scans and plateau bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingBudget {
    pub n_transient: u64,
    pub n_iter: u64,
}

impl Default for WindingBudget {
    fn default() -> Self {
        Self {
            n_transient: 1_000,
            n_iter: 10_000,
        }
    }
}

/// Winding number per grid point, in grid order.
pub fn staircase_scan(
    c: f64,
    omega_grid: &[f64],
    budget: WindingBudget,
) -> Result<Vec<(f64, f64)>, DynamicsError> {
    if omega_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DynamicsError::UnsortedGrid);
    }
    omega_grid
        .par_iter()
        .map(|&omega| {
            let w = arnold_winding(&ArnoldParams { omega, c, phi0: 0.0 }, budget.n_transient, budget.n_iter)?;
            Ok((omega, w))
        })
        .collect()
}

/// Bisection tolerance in `Omega` for plateau edges.
pub const PLATEAU_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
}

impl Plateau {
    pub fn width(&self) -> f64 {
        (self.hi - self.lo).max(0.0)
    }

    pub fn contains(&self, omega: f64) -> bool {
        self.lo <= omega && omega <= self.hi
    }
}

/// Extent of the `Omega` interval in `[0, 1]` whose winding equals `p/q`,
/// by bisection on the monotone staircase. Windings within `1/n_iter` of
/// `p/q` count as locked.
pub fn plateau_extent(
    c: f64,
    p: u64,
    q: u64,
    budget: WindingBudget,
) -> Result<Plateau, DynamicsError> {
    require(q >= 1 && p <= q, "need 0 <= p/q <= 1")?;
    require((0.0..=1.0).contains(&c), "plateau bisection needs 0 <= c <= 1")?;
    let target = p as f64 / q as f64;
    let slack = 1.0 / budget.n_iter as f64;
    let wind = |omega: f64| arnold_winding(&ArnoldParams { omega, c, phi0: 0.0 }, budget.n_transient, budget.n_iter);
    // Largest Omega with winding below target - slack, and smallest above target + slack.
    let edge = |below: &dyn Fn(f64) -> bool| -> Result<f64, DynamicsError> {
        let (mut a, mut b) = (0.0f64, 1.0f64);
        if !below(wind(a)?) {
            return Ok(a);
        }
        if below(wind(b)?) {
            return Ok(b);
        }
        while b - a > PLATEAU_TOL {
            let mid = 0.5 * (a + b);
            if below(wind(mid)?) {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    };
    let lo = edge(&|w| w < target - slack)?;
    let hi = edge(&|w| w <= target + slack)?;
    Ok(Plateau { lo, hi })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AllanEstimator {
    #[default]
    Adjacent,
    Overlapping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AllanCurve {
    pub taus: Vec<f64>,
    pub sigmas: Vec<f64>,
}

impl AllanCurve {
    /// `max sigma / min sigma - 1`.
    pub fn spread(&self) -> f64 {
        let max = self.sigmas.iter().copied().fold(f64::MIN, f64::max);
        let min = self.sigmas.iter().copied().fold(f64::MAX, f64::min);
        max / min - 1.0
    }

    /// Least-squares slope of `log sigma` against `log tau`.
    pub fn loglog_slope(&self) -> f64 {
        let xs: Vec<f64> = self.taus.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = self.sigmas.iter().map(|s| s.ln()).collect();
        linear_slope(&xs, &ys)
    }
}

pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Two-sample deviation of block means at each `tau`.
pub fn allan_deviation(
    ts: &TimeSeries,
    taus: &[f64],
    estimator: AllanEstimator,
) -> Result<AllanCurve, DynamicsError> {
    if taus.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(DynamicsError::TausNotIncreasing);
    }
    let mut prefix = Vec::with_capacity(ts.len() + 1);
    prefix.push(0.0);
    for &y in &ts.samples {
        prefix.push(prefix.last().unwrap() + y);
    }
    let block = |start: usize, m: usize| (prefix[start + m] - prefix[start]) / m as f64;
    let mut sigmas = Vec::with_capacity(taus.len());
    for &tau in taus {
        let ratio = tau / ts.dt;
        let m = ratio.round();
        if !(m >= 1.0) || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
            return Err(DynamicsError::TauNotMultiple(tau));
        }
        let m = m as usize;
        let blocks = ts.len() / m;
        let pairs = blocks.saturating_sub(1);
        if pairs < 10 {
            return Err(DynamicsError::TooShort { tau, pairs });
        }
        let (sum, count) = match estimator {
            AllanEstimator::Adjacent => {
                let means: Vec<f64> = (0..blocks).map(|k| block(k * m, m)).collect();
                let sum: f64 = means.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
                (sum, pairs)
            }
            AllanEstimator::Overlapping => {
                let count = ts.len() - 2 * m + 1;
                let sum: f64 = (0..count).map(|i| (block(i + m, m) - block(i, m)).powi(2)).sum();
                (sum, count)
            }
        };
        sigmas.push((sum / (2.0 * count as f64)).sqrt());
    }
    Ok(AllanCurve {
        taus: taus.to_vec(),
        sigmas,
    })
}

/// Gaussian noise with one-sided PSD `2 f^{-exponent}` (unit sample period,
/// `f` in cycles per sample), shaped in the frequency domain. The mean is
/// removed. For `exponent = 1` the flicker level is `h_{-1} = 2`.
pub fn synth_one_over_f(n: usize, seed: u64, exponent: f64) -> Result<TimeSeries, DynamicsError> {
    if n < 1024 || !n.is_power_of_two() {
        return Err(DynamicsError::BadLength(n));
    }
    require(exponent.is_finite(), "exponent must be finite")?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut buf: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(StandardNormal.sample(&mut rng), 0.0))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf[0] = Complex64::new(0.0, 0.0);
    for (k, c) in buf.iter_mut().enumerate().skip(1) {
        let f = k.min(n - k) as f64 / n as f64;
        *c *= f.powf(-exponent / 2.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let samples = buf.iter().map(|c| c.re / n as f64).collect();
    TimeSeries::new(1.0, samples)
}

/// One-sided periodogram `(f, S(f))` for `f = k / (n dt)`, `k = 1 ..= n/2`.
pub fn periodogram(ts: &TimeSeries) -> Vec<(f64, f64)> {
    let n = ts.len();
    let mut buf: Vec<Complex64> = ts.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 2.0 * ts.dt / n as f64;
    (1..=n / 2)
        .map(|k| (k as f64 / (n as f64 * ts.dt), scale * buf[k].norm_sqr()))
        .collect()
}

/// Log-log periodogram slope fitted over `f_lo <= f <= f_hi`.
pub fn spectral_slope(ts: &TimeSeries, f_lo: f64, f_hi: f64) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = periodogram(ts)
        .into_iter()
        .filter(|&(f, s)| f >= f_lo && f <= f_hi && s > 0.0)
        .map(|(f, s)| (f.ln(), s.ln()))
        .unzip();
    linear_slope(&xs, &ys)
}

/// Logarithmically spaced integer multiples of `dt`, deduplicated.
pub fn log_taus(dt: f64, m_lo: usize, m_hi: usize, per_decade: usize) -> Vec<f64> {
    let decades = (m_hi as f64 / m_lo as f64).log10();
    let count = (decades * per_decade as f64).ceil() as usize + 1;
    let mut ms: Vec<usize> = (0..count)
        .map(|i| {
            let frac = i as f64 / (count - 1).max(1) as f64;
            (m_lo as f64 * (m_hi as f64 / m_lo as f64).powf(frac)).round() as usize
        })
        .collect();
    ms.dedup();
    ms.into_iter().map(|m| m as f64 * dt).collect()
}
