//! Scan-driving command line front end.
//!
//! Exit codes: 0 on success, 2 for usage or parameter errors, 1 for runtime
//! failures such as I/O errors or a diverging integration.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::arith::{self, ResidueClass};
use crate::dynamics::{self, AdlerParams, AllanEstimator, VdpParams, WindingBudget};
use crate::entangle::{self, Family, FamilyInput};
use crate::galois::{self, CharacterSpec, GaloisField};
use crate::locking::{self, FilterConfig, Rational};
use crate::qphase::{self, IndexRange, KmsParams};
use crate::report::{round_json, Cell, ScanResult};

#[derive(Debug, Parser)]
#[command(name = "phaselock", version, about = "Phase-locking scans: basins, dynamics, quantum phase, Galois MUBs")]
struct Cli {
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for noise synthesis.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format; inferred from a `.json` extension on --out otherwise.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locking basins of Farey fractions under the filter rule.
    Spectrum(SpectrumArgs),
    /// Integrate the Adler phase equation.
    Adler(AdlerArgs),
    /// Integrate the driven Van der Pol oscillator.
    Vdp(VdpArgs),
    /// Circle-map staircase and plateau extents.
    Arnold(ArnoldArgs),
    /// Allan deviation of synthetic power-law noise.
    Allan(AllanArgs),
    /// Table of arithmetic functions.
    ArithTable(ArithArgs),
    /// Locked-phase expectation values against q.
    Fig2(Fig2Args),
    /// KMS phase values and their limits.
    Kms(KmsArgs),
    /// Verify the Galois-field mutually unbiased bases.
    Mub(MubArgs),
    /// Incomplete Gauss sums or phase distributions over F_p.
    Gauss(GaussArgs),
    /// Verify generalised Bell bases.
    Bell(BellArgs),
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[arg(long, default_value_t = 10e6)]
    f0: f64,
    #[arg(long, default_value_t = 300e3)]
    fc: f64,
    #[arg(long, default_value_t = 10)]
    qmax: u64,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
}

#[derive(Debug, Args)]
struct AdlerArgs {
    #[arg(long, allow_hyphen_values = true)]
    omega_lf: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phi0: f64,
    #[arg(long, default_value_t = 200.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    /// Keep every N-th sample.
    #[arg(long, default_value_t = 10)]
    every: usize,
}

#[derive(Debug, Args)]
struct VdpArgs {
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    g: f64,
    #[arg(long, default_value_t = 0.1 / 3.0)]
    beta_prime: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    omega0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    v0: f64,
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    v_init: f64,
    #[arg(long, default_value_t = 1000.0)]
    t_end: f64,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 10)]
    every: usize,
}

#[derive(Debug, Args)]
struct ArnoldArgs {
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    #[arg(long, default_value_t = 0.0)]
    omega_min: f64,
    #[arg(long, default_value_t = 1.0)]
    omega_max: f64,
    #[arg(long, default_value_t = 401)]
    points: usize,
    #[arg(long, default_value_t = 1_000)]
    n_transient: u64,
    #[arg(long, default_value_t = 10_000)]
    n_iter: u64,
    /// Rational `p/q` whose plateau extent is reported (repeatable).
    #[arg(long)]
    plateau: Vec<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EstimatorArg {
    Adjacent,
    Overlapping,
}

#[derive(Debug, Args)]
struct AllanArgs {
    /// Spectral exponent of the synthetic frequency noise (1 = flicker).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    exponent: f64,
    /// log2 of the series length.
    #[arg(long, default_value_t = 17)]
    log2n: u32,
    #[arg(long, default_value_t = 1)]
    tau_min: usize,
    #[arg(long, default_value_t = 1000)]
    tau_max: usize,
    #[arg(long, default_value_t = 8)]
    per_decade: usize,
    #[arg(long, value_enum, default_value_t = EstimatorArg::Adjacent)]
    estimator: EstimatorArg,
}

#[derive(Debug, Args)]
struct ArithArgs {
    #[arg(long, default_value_t = 100)]
    n_max: u64,
    /// Modulus for the restricted Mangoldt column.
    #[arg(long, default_value_t = 1)]
    modulus: u64,
    #[arg(long, default_value_t = 0)]
    residue: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RangeArg {
    Totient,
    TotientInclusive,
    Full,
}

impl From<RangeArg> for IndexRange {
    fn from(r: RangeArg) -> Self {
        match r {
            RangeArg::Totient => IndexRange::Totient,
            RangeArg::TotientInclusive => IndexRange::TotientInclusive,
            RangeArg::Full => IndexRange::Full,
        }
    }
}

#[derive(Debug, Args)]
struct Fig2Args {
    #[arg(long, default_value_t = 50)]
    qmax: u64,
    /// Phase beta (repeatable).
    #[arg(long, default_values_t = vec![1.0], allow_hyphen_values = true)]
    beta: Vec<f64>,
    #[arg(long, value_enum, default_value_t = RangeArg::Totient)]
    range: RangeArg,
}

#[derive(Debug, Args)]
struct KmsArgs {
    #[arg(long, default_value_t = 50)]
    qmax: u64,
    /// Inverse temperature, must exceed 1 (repeatable).
    #[arg(long, default_values_t = vec![1.1, 20.0])]
    beta0: Vec<f64>,
}

#[derive(Debug, Args)]
struct MubArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GaussWhat {
    Sums,
    Prob,
}

#[derive(Debug, Args)]
struct GaussArgs {
    #[arg(long)]
    p: u64,
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    a: i64,
    /// Multiplicative character index (0 = trivial).
    #[arg(long, default_value_t = 0)]
    psi_k: u32,
    #[arg(long, value_enum, default_value_t = GaussWhat::Sums)]
    what: GaussWhat,
    /// Phase beta for `--what prob` (repeatable).
    #[arg(long, default_values_t = vec![0.0], allow_hyphen_values = true)]
    beta: Vec<f64>,
    /// Rescale nontrivial-character states to unit norm.
    #[arg(long)]
    renormalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Fourier,
    Galois,
}

#[derive(Debug, Args)]
struct BellArgs {
    #[arg(long, value_enum, default_value_t = FamilyArg::Fourier)]
    family: FamilyArg,
    /// Local dimension (fourier).
    #[arg(long, default_value_t = 3)]
    q: u64,
    /// Characteristic (galois).
    #[arg(long, default_value_t = 3)]
    p: u64,
    /// Extension degree (galois).
    #[arg(long, default_value_t = 1)]
    m: u32,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn dyn_err(e: dynamics::DynamicsError) -> CliError {
    match e {
        dynamics::DynamicsError::Diverged { .. } => runtime(e),
        other => invalid(other),
    }
}

enum Output {
    Table(ScanResult),
    /// Structured report plus the table used for CSV output.
    Report(Value, ScanResult),
}

/// Runs the CLI on `args` (program name first). Diagnostics go to `stderr`;
/// data goes to `--out` or `stdout`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    match execute(&cli, stderr).and_then(|out| emit(&cli, out, stdout)) {
        Ok(()) => 0,
        Err(e) => {
            let msg = match &e {
                CliError::Invalid(m) => format!("error: {m}"),
                CliError::Runtime(m) => format!("runtime error: {m}"),
            };
            let _ = writeln!(stderr, "{msg}");
            e.code()
        }
    }
}

fn format_for(cli: &Cli) -> Format {
    if let Some(f) = cli.format {
        return f;
    }
    let json_ext = cli
        .out
        .as_ref()
        .and_then(|p| p.extension())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if json_ext || matches!(cli.command, Command::Mub(_)) {
        Format::Json
    } else {
        Format::Csv
    }
}

fn emit(cli: &Cli, out: Output, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = format_for(cli);
    let mut bytes = Vec::new();
    match (format, &out) {
        (Format::Csv, Output::Table(t) | Output::Report(_, t)) => t.write_csv(&mut bytes).map_err(runtime)?,
        (Format::Json, Output::Table(t)) => write_json(&mut bytes, &t.to_json())?,
        (Format::Json, Output::Report(v, _)) => write_json(&mut bytes, &round_json(v.clone()))?,
    }
    match &cli.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            w.write_all(&bytes).and_then(|_| w.flush()).map_err(runtime)
        }
        None => stdout.write_all(&bytes).map_err(runtime),
    }
}

fn write_json(buf: &mut Vec<u8>, v: &Value) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *buf, v).map_err(runtime)?;
    buf.push(b'\n');
    Ok(())
}

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report serialises")
}

fn execute(cli: &Cli, stderr: &mut dyn Write) -> Result<Output, CliError> {
    match &cli.command {
        Command::Spectrum(a) => spectrum(a),
        Command::Adler(a) => adler(a),
        Command::Vdp(a) => vdp(a),
        Command::Arnold(a) => arnold(a, stderr),
        Command::Allan(a) => allan(a, cli.seed),
        Command::ArithTable(a) => arith_table(a),
        Command::Fig2(a) => fig2(a),
        Command::Kms(a) => kms(a),
        Command::Mub(a) => mub(a),
        Command::Gauss(a) => gauss(a),
        Command::Bell(a) => bell(a),
    }
}

fn spectrum(a: &SpectrumArgs) -> Result<Output, CliError> {
    let cfg = FilterConfig::new(a.f0, a.fc).map_err(invalid)?;
    let basins = locking::spectrum_scan(&cfg, a.qmax, a.lo, a.hi).map_err(invalid)?;
    let mut t = ScanResult::new(&["p", "q", "nu1_num", "nu1_den", "nu2_num", "nu2_den", "width_hz", "overlap"]);
    for b in basins {
        t.push(vec![
            b.center.num().into(),
            b.center.den().into(),
            b.nu1.num().into(),
            b.nu1.den().into(),
            b.nu2.num().into(),
            b.nu2.den().into(),
            b.width_hz.into(),
            b.overlap.into(),
        ]);
    }
    Ok(Output::Table(t))
}

fn series_table(ts: &dynamics::TimeSeries, every: usize) -> Result<ScanResult, CliError> {
    if every == 0 {
        return Err(invalid("--every must be at least 1"));
    }
    let mut t = ScanResult::new(&["t", "value"]);
    for (time, v) in ts.points().step_by(every) {
        t.push(vec![time.into(), v.into()]);
    }
    Ok(t)
}

fn adler(a: &AdlerArgs) -> Result<Output, CliError> {
    let p = AdlerParams {
        omega_lf: a.omega_lf,
        k: a.k,
        phi0: a.phi0,
    };
    let run = dynamics::adler_integrate(&p, a.t_end, a.dt).map_err(dyn_err)?;
    let beat = dynamics::beat_frequency(a.omega_lf, a.k);
    let summary = json!({
        "omega_lf": a.omega_lf,
        "k": a.k,
        "mean_rate": run.mean_rate,
        "final_phase": run.final_phase(),
        "beat_frequency": beat.value,
        "locked": beat.locked,
    });
    Ok(Output::Report(summary, series_table(&run.series, a.every)?))
}

fn vdp(a: &VdpArgs) -> Result<Output, CliError> {
    let p = VdpParams {
        g: a.g,
        beta_prime: a.beta_prime,
        omega: a.omega,
        omega0: a.omega0,
        v0: a.v0,
        v_init: a.v_init,
    };
    let ts = dynamics::vanderpol_integrate(&p, a.t_end, a.dt).map_err(dyn_err)?;
    let tail = ts.tail(ts.len() / 2).map_err(dyn_err)?;
    let amplitude = tail.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let summary = json!({
        "dominant_frequency": dynamics::dominant_frequency(&tail),
        "amplitude": amplitude,
        "limit_cycle_amplitude": p.limit_cycle_amplitude(),
    });
    Ok(Output::Report(summary, series_table(&ts, a.every)?))
}

fn arnold(a: &ArnoldArgs, stderr: &mut dyn Write) -> Result<Output, CliError> {
    if a.points < 2 || !(a.omega_min < a.omega_max) {
        return Err(invalid("need --points >= 2 and --omega-min < --omega-max"));
    }
    let budget = WindingBudget {
        n_transient: a.n_transient,
        n_iter: a.n_iter,
    };
    let grid: Vec<f64> = (0..a.points)
        .map(|i| a.omega_min + (a.omega_max - a.omega_min) * i as f64 / (a.points - 1) as f64)
        .collect();
    let stairs = dynamics::staircase_scan(a.c, &grid, budget).map_err(dyn_err)?;
    let mut t = ScanResult::new(&["Omega", "winding"]);
    for (o, w) in &stairs {
        t.push(vec![(*o).into(), (*w).into()]);
    }
    let mut plateaus = Vec::new();
    for r in &a.plateau {
        let pl = dynamics::plateau_extent(a.c, r.num(), r.den(), budget).map_err(dyn_err)?;
        let _ = writeln!(stderr, "plateau {r}: [{}, {}] width {}", pl.lo, pl.hi, pl.width());
        plateaus.push(json!({"ratio": r.to_string(), "lo": pl.lo, "hi": pl.hi, "width": pl.width()}));
    }
    let report = json!({
        "c": a.c,
        "staircase": t.to_json(),
        "plateaus": plateaus,
    });
    Ok(Output::Report(report, t))
}

fn allan(a: &AllanArgs, seed: u64) -> Result<Output, CliError> {
    if a.log2n > 24 {
        return Err(invalid("--log2n must be at most 24"));
    }
    if a.tau_min == 0 || a.tau_min >= a.tau_max || a.per_decade == 0 {
        return Err(invalid("need 1 <= --tau-min < --tau-max and --per-decade >= 1"));
    }
    let ts = dynamics::synth_one_over_f(1usize << a.log2n, seed, a.exponent).map_err(dyn_err)?;
    let taus = dynamics::log_taus(ts.dt(), a.tau_min, a.tau_max, a.per_decade);
    let estimator = match a.estimator {
        EstimatorArg::Adjacent => AllanEstimator::Adjacent,
        EstimatorArg::Overlapping => AllanEstimator::Overlapping,
    };
    let curve = dynamics::allan_deviation(&ts, &taus, estimator).map_err(dyn_err)?;
    let mut t = ScanResult::new(&["tau", "sigma"]);
    for (tau, s) in curve.taus.iter().zip(&curve.sigmas) {
        t.push(vec![(*tau).into(), (*s).into()]);
    }
    let report = json!({
        "exponent": a.exponent,
        "seed": seed,
        "loglog_slope": curve.loglog_slope(),
        "spread": curve.spread(),
        "curve": t.to_json(),
    });
    Ok(Output::Report(report, t))
}

fn arith_table(a: &ArithArgs) -> Result<Output, CliError> {
    if a.n_max == 0 || a.n_max > arith::SIEVE_LIMIT {
        return Err(invalid(format!("--n-max must be in 1..={}", arith::SIEVE_LIMIT)));
    }
    let class = ResidueClass::new(a.modulus, a.residue).map_err(invalid)?;
    let mertens = arith::mertens_series(a.n_max);
    let mut t = ScanResult::new(&["n", "phi", "mu", "mangoldt", "mangoldt_restricted", "dual_b", "mertens"]);
    for n in 1..=a.n_max {
        t.push(vec![
            n.into(),
            arith::euler_phi(n).map_err(invalid)?.into(),
            i64::from(arith::moebius(n).map_err(invalid)?).into(),
            arith::mangoldt(n).map_err(invalid)?.into(),
            arith::mangoldt_general(n, &class).map_err(invalid)?.into(),
            arith::mangoldt_dual_b(n).map_err(invalid)?.into(),
            mertens[n as usize - 1].into(),
        ]);
    }
    Ok(Output::Table(t))
}

fn fig2(a: &Fig2Args) -> Result<Output, CliError> {
    if a.qmax < 2 {
        return Err(invalid("--qmax must be at least 2"));
    }
    let mut t = ScanResult::new(&["q", "beta", "expec_direct", "expec_closed", "mangoldt_norm"]);
    for &beta in &a.beta {
        for q in 2..=a.qmax {
            t.push(vec![
                q.into(),
                beta.into(),
                qphase::lock_expectation_direct(q, beta).map_err(invalid)?.into(),
                qphase::lock_expectation_closed(q, beta, a.range.into()).map_err(invalid)?.into(),
                qphase::mangoldt_norm(q).map_err(invalid)?.into(),
            ]);
        }
    }
    Ok(Output::Table(t))
}

fn kms(a: &KmsArgs) -> Result<Output, CliError> {
    if a.qmax == 0 {
        return Err(invalid("--qmax must be at least 1"));
    }
    let mut t = ScanResult::new(&["q", "beta0", "kms", "mu_over_phi", "neg_lambda_eps_over_q"]);
    for &beta0 in &a.beta0 {
        let params = KmsParams::new(beta0).map_err(invalid)?;
        for q in 1..=a.qmax {
            let limits = qphase::kms_limits(q).map_err(invalid)?;
            t.push(vec![
                q.into(),
                beta0.into(),
                qphase::kms_value(q, &params).map_err(invalid)?.into(),
                limits.low_temp.into(),
                (limits.critical_coeff * (beta0 - 1.0)).into(),
            ]);
        }
    }
    Ok(Output::Table(t))
}

fn mub(a: &MubArgs) -> Result<Output, CliError> {
    let field = GaloisField::new(a.p, a.m).map_err(invalid)?;
    let report = galois::mub_verify(&field);
    let mut t = ScanResult::new(&["q", "bases", "max_orthonormal_dev", "max_unbiased_dev"]);
    t.push(vec![
        report.q.into(),
        (report.bases as u64).into(),
        report.max_orthonormal_dev.into(),
        report.max_unbiased_dev.into(),
    ]);
    let value = json!({
        "field": to_value(field.meta()),
        "enumeration": "index = sum_i c_i p^i over ascending-degree coefficients c_i",
        "report": to_value(&report),
        "max_deviation": report.max_deviation(),
    });
    Ok(Output::Report(value, t))
}

fn gauss(a: &GaussArgs) -> Result<Output, CliError> {
    let field = GaloisField::new(a.p, 1).map_err(invalid)?;
    let psi = CharacterSpec::multiplicative(a.psi_k);
    match a.what {
        GaussWhat::Sums => {
            let mut t = ScanResult::new(&["p", "k", "re_T", "im_T", "abs_T", "bound"]);
            for r in galois::gauss_t_all(&field, a.a, &psi).map_err(invalid)? {
                t.push(vec![
                    a.p.into(),
                    r.k.into(),
                    r.value.re.into(),
                    r.value.im.into(),
                    r.value.norm().into(),
                    r.bound.into(),
                ]);
            }
            Ok(Output::Table(t))
        }
        GaussWhat::Prob => {
            let mut t = ScanResult::new(&["p", "a", "b", "psi_k", "beta", "S_direct", "S_decomp"]);
            for &beta in &a.beta {
                let d = galois::phase_prob(&field, a.a, &psi, beta, a.renormalize).map_err(invalid)?;
                for (b, (s, s2)) in d.direct.iter().zip(&d.decomposed).enumerate() {
                    t.push(vec![
                        a.p.into(),
                        a.a.into(),
                        (b as u64).into(),
                        u64::from(a.psi_k).into(),
                        beta.into(),
                        (*s).into(),
                        (*s2).into(),
                    ]);
                }
            }
            Ok(Output::Table(t))
        }
    }
}

fn bell(a: &BellArgs) -> Result<Output, CliError> {
    let report = match a.family {
        FamilyArg::Fourier => {
            if a.q == 0 || a.q > 32 {
                return Err(invalid("--q must be in 1..=32"));
            }
            entangle::verify_entangled_bases(Family::Fourier, FamilyInput::Dimension(a.q))
        }
        FamilyArg::Galois => {
            let field = GaloisField::new(a.p, a.m).map_err(invalid)?;
            if field.order() > 27 {
                return Err(invalid("galois bell verification supports q <= 27"));
            }
            entangle::verify_entangled_bases(Family::Galois, FamilyInput::Field(&field))
        }
    }
    .map_err(invalid)?;
    let mut t = ScanResult::new(&["family", "q", "u", "a_or_k", "b", "max_gram_dev", "max_ptrace_dev", "purity"]);
    for s in &report.states {
        t.push(vec![
            report.family.name().into(),
            report.q.into(),
            s.u.into(),
            s.a_or_k.into(),
            Cell::from(s.b),
            s.max_gram_dev.into(),
            s.max_ptrace_dev.into(),
            s.purity.into(),
        ]);
    }
    Ok(Output::Report(to_value(&report), t))
}
