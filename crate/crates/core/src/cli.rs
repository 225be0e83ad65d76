//! Command-line front end.
//!
//! Instances and solutions travel as JSON so commands compose through pipes:
//! `sis-wagner gen --n 8 --m 20 --q 257 | sis-wagner solve`.

use std::collections::HashMap;
use std::fs;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::RngCore;
use serde_json::json;

use crate::dgauss::{
    empirical_similarity, gaussian_pmf, sample_z, sample_zn, GaussParam, QaryLattice, ScaledIntegers,
};
use crate::error::{Error, Result};
use crate::estimator::{self, CostQuery, Variant};
use crate::rng::{seeded, StreamSeed, SOLVE};
use crate::solvers::{solve_sis_inf, solve_sis_l2, verify, SolveOptions, Verdict};
use crate::wagner::{
    certify_smoothing, choose_naive_params, gaussian_wagner, naive_norm_bound, naive_wagner, Mode, Schedule,
    WagnerOptions,
};
use crate::zqlin::{linf, random_instance, systematic_form, NormKind, SisInstance, Solution};

#[derive(Parser, Debug)]
#[command(name = "sis-wagner", version, about = "Wagner-style Gaussian sampling and SIS solving")]
struct Cli {
    /// Root seed; every random choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for lifting. Output does not depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Write per-run statistics as JSON to this path.
    #[arg(long, global = true)]
    stats_out: Option<PathBuf>,
    /// Structured JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a uniformly random instance.
    Gen(GenArgs),
    /// Solve an instance read from a file or stdin.
    Solve(SolveArgs),
    /// Draw discrete Gaussian samples.
    Sample(SampleArgs),
    /// Estimate the heuristic attack cost.
    Estimate(EstimateArgs),
    /// Check a solution against an instance.
    Verify(VerifyArgs),
    /// Run the statistical self-tests.
    Selftest(SelftestArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum NormArg {
    Linf,
    L2,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Linf => NormKind::Linf,
            NormArg::L2 => NormKind::L2,
        }
    }
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    q: u64,
    #[arg(long)]
    beta: Option<u64>,
    #[arg(long, value_enum, default_value_t = NormArg::Linf)]
    norm: NormArg,
    /// Emit the systematic form `[A' | I]` instead.
    #[arg(long)]
    systematic: bool,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Provable,
    Heuristic,
    Naive,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON; stdin when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModeArg::Heuristic)]
    mode: ModeArg,
    /// Final width is q/f.
    #[arg(long, default_value_t = 4.0)]
    f: f64,
    #[arg(long, default_value_t = 1e-12)]
    epsilon: f64,
    #[arg(long, default_value_t = 1)]
    attempts: usize,
    #[arg(long, default_value_t = 20)]
    max_log2n: u32,
    /// Memory guard for the initial list, in bytes.
    #[arg(long, default_value_t = 8 << 30)]
    memory_budget: u64,
    /// Brute-force the smoothing conditions of every stage (tiny instances only).
    #[arg(long)]
    certify_smoothing: bool,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[arg(long, allow_hyphen_values = true)]
    s: f64,
    /// Comma-separated center; its length sets the dimension.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    center: Option<Vec<f64>>,
    /// Dimension for a zero center.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    count: usize,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum VariantArg {
    Rounding,
    Quantization,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum PresetArg {
    Dilithium2,
    Dilithium3,
    Dilithium5,
    Shine,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    beta: Option<u64>,
    #[arg(long, value_enum, default_value_t = VariantArg::Quantization)]
    variant: VariantArg,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Solution JSON; stdin when absent.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Draws per statistical check.
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
}

struct Io<'a> {
    stdin: &'a mut dyn Read,
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// Parse `argv` (including the program name) and run; returns the exit code.
///
/// 0 success, 1 solver or check failure, 2 usage error, 3 violated precondition.
pub fn run(argv: &[String], stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut io = Io { stdin, out: stdout, err: stderr };
    match dispatch(&cli, &mut io) {
        Ok(code) => code,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {e}");
            match e {
                _ if e.is_precondition() => 3,
                Error::Usage(_) | Error::Io(_) | Error::Json(_) => 2,
                _ => 1,
            }
        }
    }
}

fn dispatch(cli: &Cli, io: &mut Io) -> Result<i32> {
    match &cli.cmd {
        Command::Gen(a) => gen(cli, a, io),
        Command::Solve(a) => solve(cli, a, io),
        Command::Sample(a) => sample(cli, a, io),
        Command::Estimate(a) => estimate(cli, a, io),
        Command::Verify(a) => verify_cmd(cli, a, io),
        Command::Selftest(a) => selftest(cli, a, io),
    }
}

fn read_source(path: Option<&PathBuf>, stdin: &mut dyn Read) -> Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => Ok(fs::read_to_string(p)?),
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn write_stats(cli: &Cli, value: &serde_json::Value) -> Result<()> {
    if let Some(p) = &cli.stats_out {
        fs::write(p, serde_json::to_string_pretty(value)?)?;
    }
    Ok(())
}

fn gen(cli: &Cli, a: &GenArgs, io: &mut Io) -> Result<i32> {
    if a.q < 2 {
        return Err(Error::BadDimensions(format!("q >= 2 fails: q={}", a.q)));
    }
    let base = random_instance(a.n, a.m, a.q, cli.seed)?;
    let mut inst = SisInstance::new(base.a, a.beta, a.norm.into())?;
    if a.systematic {
        inst = systematic_form(&inst)?.0;
    }
    writeln!(io.out, "{}", inst.to_json())?;
    Ok(0)
}

fn solve(cli: &Cli, a: &SolveArgs, io: &mut Io) -> Result<i32> {
    let inst = SisInstance::from_json(&read_source(a.instance.as_ref(), io.stdin)?)?;
    let mode = match a.mode {
        ModeArg::Provable => Mode::ProvableGaussian,
        ModeArg::Heuristic => Mode::HeuristicGaussian,
        ModeArg::Naive => Mode::NaiveRounding,
    };
    let opts = SolveOptions {
        mode,
        f: a.f,
        epsilon: a.epsilon,
        attempts: a.attempts,
        max_log2n: a.max_log2n,
        wagner: WagnerOptions { threads: cli.threads.max(1), memory_budget: a.memory_budget, ..Default::default() },
        schedule: None,
        max_solutions: 16,
    };
    let mut rng = StreamSeed::new(cli.seed).stream(SOLVE, 0, 0);
    let report = match inst.norm {
        NormKind::Linf => solve_sis_inf(&inst, &opts, &mut rng)?,
        NormKind::L2 => solve_sis_l2(&inst, &opts, &mut rng)?,
    };
    for w in &report.warnings {
        writeln!(io.err, "warning: {w}")?;
    }
    let cert = if a.certify_smoothing {
        let sys = systematic_form(&inst)?.0;
        let c = certify_smoothing(&sys, &report.schedule)?;
        writeln!(io.err, "smoothing: stage eps {:?}, output delta {:e}", c.stage_epsilon, c.output_delta)?;
        Some(c)
    } else {
        None
    };
    write_stats(cli, &serde_json::to_value(&report.stats)?)?;
    if cli.json {
        let mut v = serde_json::to_value(&report)?;
        v.as_object_mut().expect("report is an object").remove("stats");
        if let Some(c) = cert {
            v["smoothing"] = serde_json::to_value(c)?;
        }
        writeln!(io.out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else if let Some(best) = report.solutions.first() {
        writeln!(io.out, "{}", serde_json::to_string(best)?)?;
    }
    if report.success {
        Ok(0)
    } else {
        writeln!(io.err, "no solution within beta={} after {} attempt(s)", report.norm_bound_used, report.attempts)?;
        Ok(1)
    }
}

fn sample(cli: &Cli, a: &SampleArgs, io: &mut Io) -> Result<i32> {
    let center = a.center.clone().unwrap_or_else(|| vec![0.0; a.dim]);
    let param = GaussParam::new(a.s, &center)?;
    let mut rng = seeded(cli.seed);
    let draws: Vec<Vec<i64>> =
        (0..a.count).map(|_| sample_zn(&param, center.len(), &mut rng)).collect::<Result<_>>()?;
    if cli.json {
        writeln!(io.out, "{}", json!({ "s": a.s, "center": center, "samples": draws }))?;
    } else {
        for d in &draws {
            let line: Vec<String> = d.iter().map(i64::to_string).collect();
            writeln!(io.out, "{}", line.join(" "))?;
        }
    }
    Ok(0)
}

fn estimate(cli: &Cli, a: &EstimateArgs, io: &mut Io) -> Result<i32> {
    let variant = match a.variant {
        VariantArg::Rounding => Variant::Rounding,
        VariantArg::Quantization => Variant::Quantization,
    };
    let base = a.preset.map(|p| {
        estimator::preset(match p {
            PresetArg::Dilithium2 => "dilithium2",
            PresetArg::Dilithium3 => "dilithium3",
            PresetArg::Dilithium5 => "dilithium5",
            PresetArg::Shine => "shine",
        })
        .expect("known preset")
    });
    let pick = |v: Option<u64>, d: Option<u64>, name: &str| {
        v.or(d).ok_or_else(|| Error::Usage(format!("--{name} or --preset required")))
    };
    let n = pick(a.n.map(|v| v as u64), base.as_ref().map(|b| b.n as u64), "n")? as usize;
    let m = pick(a.m.map(|v| v as u64), base.as_ref().map(|b| b.m as u64), "m")? as usize;
    let q = pick(a.q, base.as_ref().map(|b| b.q), "q")?;
    let beta = pick(a.beta, base.as_ref().map(|b| b.beta), "beta")?;
    let query = CostQuery::new(n, m, q, beta, variant);
    let report = estimator::estimate(&query)?;
    if let Some(p) = &a.csv_out {
        fs::write(p, estimator::to_csv(std::slice::from_ref(&report)))?;
    }
    if cli.json {
        let mut v = serde_json::to_value(&report)?;
        v["query"] = serde_json::to_value(&query)?;
        writeln!(io.out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        writeln!(io.out, "{}", estimator::CostReport::CSV_HEADER)?;
        writeln!(io.out, "{}", report.csv_row())?;
    }
    Ok(0)
}

fn verify_cmd(cli: &Cli, a: &VerifyArgs, io: &mut Io) -> Result<i32> {
    let inst = SisInstance::from_json(&fs::read_to_string(&a.instance)?)?;
    let sol: Solution = serde_json::from_str(&read_source(a.solution.as_ref(), io.stdin)?)?;
    if sol.x.len() != inst.m {
        return Err(Error::DimensionMismatch { expected: inst.m, got: sol.x.len() });
    }
    let verdict = verify(&inst, &sol.x);
    if cli.json {
        writeln!(io.out, "{}", json!({ "verdict": verdict, "norm": Solution::new(sol.x, inst.norm).norm_value }))?;
    } else {
        writeln!(io.out, "{verdict:?}")?;
    }
    Ok(if verdict == Verdict::Valid { 0 } else { 1 })
}

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_sampler(samples: usize, rng: &mut dyn RngCore) -> Result<Check> {
    let param = GaussParam::scalar(2.0, 0.3)?;
    let pmf = gaussian_pmf(&ScaledIntegers::new(1, 1.0), &param, None)?;
    let pmf: HashMap<i64, f64> = pmf.probs.into_iter().map(|(k, v)| (k[0], v)).collect();
    let draws: Vec<i64> = (0..samples).map(|_| sample_z(&param, rng)).collect::<Result<_>>()?;
    let rep = empirical_similarity(&draws, &pmf)?;
    Ok(Check {
        name: "sample_z matches D_{Z,2,0.3}",
        pass: rep.chi2_p >= 1e-3 && rep.max_abs_freq_dev < 5e-3,
        detail: format!("chi2 p = {:.4}, max dev = {:.2e}", rep.chi2_p, rep.max_abs_freq_dev),
    })
}

fn check_convolution(samples: usize, rng: &mut dyn RngCore) -> Result<Check> {
    let s = 3.0;
    let eps = crate::dgauss::eta_zn_bound_inverse(1, s / 2f64.sqrt());
    let x = GaussParam::scalar(s, 0.5)?;
    let y = GaussParam::scalar(s, 0.0)?;
    let draws: Vec<i64> = (0..samples).map(|_| Ok(sample_z(&x, rng)? - sample_z(&y, rng)?)).collect::<Result<_>>()?;
    let target = GaussParam::scalar(s * 2f64.sqrt(), 0.5)?;
    let pmf = gaussian_pmf(&ScaledIntegers::new(1, 1.0), &target, None)?;
    let pmf: HashMap<i64, f64> = pmf.probs.into_iter().map(|(k, v)| (k[0], v)).collect();
    let rep = empirical_similarity(&draws, &pmf)?;
    Ok(Check {
        name: "difference of shifted Gaussians is Gaussian",
        pass: rep.within(3.0 * eps, 4.0) && rep.chi2_p >= 1e-3,
        detail: format!("max |ln ratio| = {:.4}, chi2 p = {:.4}", rep.max_ratio_log, rep.chi2_p),
    })
}

fn check_tiny_sampler(samples: usize, rng: &mut dyn RngCore) -> Result<Check> {
    let base = random_instance(1, 3, 3, 11)?;
    let inst = systematic_form(&base)?.0;
    let s0 = 3.0;
    let batch = 3000u64;
    let schedule = Schedule::manual(Mode::ProvableGaussian, batch, s0, vec![3], vec![1]);
    let cert = certify_smoothing(&inst, &schedule)?;
    let mut out = Vec::with_capacity(samples);
    while out.len() < samples {
        out.extend(gaussian_wagner(&inst, &schedule, rng, &WagnerOptions::default())?.0);
    }
    let kernel = QaryLattice::kernel(&inst.a_prime(), 1);
    let pmf = gaussian_pmf(&kernel, &GaussParam::new(s0 * 2f64.sqrt(), &[])?, None)?;
    let rep = empirical_similarity(&out, &pmf.probs)?;
    let tol = 15.0 * cert.epsilon;
    Ok(Check {
        name: "one-stage sampler output matches D_{L,sqrt2 s0}",
        pass: rep.within_family(tol, 1e-3) && rep.chi2_p >= 1e-3,
        detail: format!("max |ln ratio| = {:.4}, chi2 p = {:.4}, eps = {:.2e}", rep.max_ratio_log, rep.chi2_p, cert.epsilon),
    })
}

fn check_naive_bound(rng: &mut dyn RngCore) -> Result<Check> {
    let mut worst = 0;
    let mut bound = 0.0;
    for _ in 0..10 {
        let base = random_instance(4, 12, 16, rng.next_u64())?;
        let Ok((inst, _)) = systematic_form(&base) else { continue };
        let mut schedule = choose_naive_params(inst.n, 16, 2.0)?;
        schedule.p = vec![8, 4];
        schedule.b = vec![2, 2];
        schedule.r = 2;
        schedule.n_list = 64;
        bound = naive_norm_bound(16, &schedule.p);
        for x in naive_wagner(&inst, &schedule, rng)? {
            worst = worst.max(linf(&x));
        }
    }
    Ok(Check {
        name: "naive outputs respect the rounding norm bound",
        pass: worst as f64 <= bound,
        detail: format!("max |x|_inf = {worst}, bound = {bound}"),
    })
}

fn selftest(cli: &Cli, a: &SelftestArgs, io: &mut Io) -> Result<i32> {
    let mut rng = seeded(cli.seed);
    let n = a.samples.max(crate::dgauss::MIN_SAMPLES);
    let checks = vec![
        check_sampler(n, &mut rng)?,
        check_convolution(n, &mut rng)?,
        check_tiny_sampler(n, &mut rng)?,
        check_naive_bound(&mut rng)?,
    ];
    let failed = checks.iter().filter(|c| !c.pass).count();
    if cli.json {
        let v: Vec<_> = checks.iter().map(|c| json!({ "check": c.name, "pass": c.pass, "detail": c.detail })).collect();
        writeln!(io.out, "{}", serde_json::to_string_pretty(&v)?)?;
    } else {
        for c in &checks {
            writeln!(io.out, "{} {}: {}", if c.pass { "ok  " } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    Ok(if failed == 0 { 0 } else { 1 })
}
