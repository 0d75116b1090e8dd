//! `langevin-bounce`: command-line front end for the simulation and verification toolkit.

mod manifest;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use langevin_bounce::analytic::{self, ModelParams};
use langevin_bounce::ladder::LadderTable;
use langevin_bounce::path::{self, PathConfig};
use langevin_bounce::skeleton::{self, ChainConfig};
use langevin_bounce::verify::{self, Suite, VerifySettings};
use langevin_bounce::{rng, Error};

use manifest::Manifest;

const EXIT_VERIFY: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_GUARD: u8 = 3;

#[derive(Parser)]
#[command(name = "langevin-bounce", version, about = "Sub-critical reflected Langevin process: exact skeletons, paths and checks")]
struct Cli {
    /// Worker threads (falls back to LANGEVIN_BOUNCE_THREADS, then all cores).
    #[arg(long, global = true, env = "LANGEVIN_BOUNCE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tail exponent k(c) at one elasticity, or the (c, k) curve.
    Kc(KcArgs),
    /// Simulate chains, conditioned chains, paths or the resurrected process.
    Simulate(SimulateArgs),
    /// Ladder-height table and stationary overshoot draws.
    Overshoot(OvershootArgs),
    /// Run the acceptance suite and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("mode").required(true).args(["c", "curve"])))]
struct KcArgs {
    #[arg(long)]
    c: Option<f64>,
    /// c_min c_max n
    #[arg(long, num_args = 3, value_names = ["C_MIN", "C_MAX", "N"])]
    curve: Option<Vec<String>>,
    /// Write the curve to DIR/kc_curve.csv instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Chain,
    Tilted,
    Path,
    Resurrect,
}

impl What {
    fn name(self) -> &'static str {
        match self {
            What::Chain => "chain",
            What::Tilted => "tilted",
            What::Path => "path",
            What::Resurrect => "resurrect",
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    what: What,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = ModelParams::reference().c)]
    c: f64,
    /// Initial (outgoing) speed.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u0: f64,
    /// Initial position (path only).
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    /// Number of chains.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
    /// Restart speed of the resurrected process.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    /// Time horizon for paths and conditioned chains.
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    /// Killed chains stop once (V_n/V_0)² falls below this.
    #[arg(long, default_value_t = 1e-12)]
    truncation: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct OvershootArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = ModelParams::reference().c)]
    c: f64,
    /// Ladder table size.
    #[arg(long, default_value_t = langevin_bounce::ladder::DEFAULT_TABLE_SIZE)]
    table: usize,
    /// Number of overshoot draws.
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = ModelParams::reference().c)]
    c: f64,
    #[arg(long, default_value = "quick")]
    suite: Suite,
    /// Override every Monte Carlo sample size.
    #[arg(long)]
    n: Option<usize>,
    /// Also write DIR/verify_report.json and its manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Negative control: replace k(c) by this value.
    #[arg(long, hide = true)]
    inject_k: Option<f64>,
}

/// Failure of a command, carrying its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RejectionGuard(_) | Error::StepCap(_) | Error::BounceGuard(_) => EXIT_GUARD,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(format!("io: {e}"))
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match cli.command {
        Command::Kc(a) => cmd_kc(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Overshoot(a) => cmd_overshoot(&a),
        Command::Verify(a) => cmd_verify(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn params_for(c: f64) -> Result<ModelParams, Failure> {
    let c_cr = analytic::critical_elasticity();
    if !(c > 0.0 && c < c_cr) {
        return Err(Failure::usage(format!(
            "c = {c} is outside the valid interval (0, {c_cr})"
        )));
    }
    Ok(ModelParams::new(c)?)
}

fn params_json(p: &ModelParams) -> serde_json::Value {
    json!({ "c": p.c, "k": p.k, "drift": p.drift, "mu_up": p.mu_up, "theta": p.theta })
}

fn cmd_kc(a: &KcArgs) -> CmdResult {
    if let Some(c) = a.c {
        let p = params_for(c)?;
        println!("c_cr = {}", analytic::critical_elasticity());
        println!("c = {}", p.c);
        println!("k = {}", p.k);
        println!("drift = {}", p.drift);
        println!("mu_up = {}", p.mu_up);
        println!("c_prime = {}", analytic::t1_tail_const_up(&p));
        return Ok(0);
    }
    let curve = a.curve.as_deref().unwrap_or_default();
    let parse = |s: &str| s.parse::<f64>().map_err(|_| Failure::usage(format!("not a number: {s}")));
    let (c_min, c_max) = (parse(&curve[0])?, parse(&curve[1])?);
    let n: usize = curve[2]
        .parse()
        .map_err(|_| Failure::usage(format!("not a point count: {}", curve[2])))?;
    let c_cr = analytic::critical_elasticity();
    if !(c_min > 0.0 && c_max < c_cr && c_min < c_max) {
        return Err(Failure::usage(format!(
            "curve range [{c_min}, {c_max}] must lie inside the valid interval (0, {c_cr})"
        )));
    }
    let started = manifest::now();
    let points = analytic::kc_curve(c_min, c_max, n)?;
    let mut csv = String::from("c,k\n");
    for (c, k) in &points {
        writeln!(csv, "{c},{k}").unwrap();
    }
    match &a.out {
        None => print!("{csv}"),
        Some(dir) => {
            let mut m = Manifest::new("kc", json!({ "c_min": c_min, "c_max": c_max, "n": n }), started);
            m.write(dir, "kc_curve.csv", csv.as_bytes())?;
            m.finish(dir, "kc", None)?;
        }
    }
    Ok(0)
}

fn cmd_simulate(a: &SimulateArgs) -> CmdResult {
    let p = params_for(a.c)?;
    let name = a.what.name();
    let started = manifest::now();
    let mut config = json!({
        "model": params_json(&p),
        "what": name,
        "seed": a.seed,
        "u0": a.u0,
        "n": a.n,
    });
    let extra = match a.what {
        What::Chain => json!({ "truncation": a.truncation }),
        What::Tilted => json!({ "horizon": a.horizon }),
        What::Path => json!({ "x0": a.x0, "dt": a.dt, "horizon": a.horizon }),
        What::Resurrect => json!({ "eps": a.eps, "dt": a.dt, "horizon": a.horizon }),
    };
    config.as_object_mut().unwrap().extend(extra.as_object().unwrap().clone());
    let mut m = Manifest::new(&format!("simulate {name}"), config, started);
    let run = match a.what {
        What::Chain => simulate_chain(a, &p, &mut m),
        What::Tilted => simulate_tilted(a, &p, &mut m),
        What::Path => simulate_path(a, &p, &mut m),
        What::Resurrect => simulate_resurrect(a, &p, &mut m),
    };
    finish(m, &a.out, name, run)
}

/// Writes the manifest whether or not the run succeeded.
fn finish(m: Manifest, dir: &Path, stem: &str, run: Result<(), Failure>) -> CmdResult {
    match run {
        Ok(()) => {
            m.finish(dir, stem, None)?;
            Ok(0)
        }
        Err(f) => {
            std::fs::create_dir_all(dir)?;
            m.finish(dir, stem, Some(&f.message))?;
            Err(f)
        }
    }
}

fn simulate_chain(a: &SimulateArgs, p: &ModelParams, m: &mut Manifest) -> Result<(), Failure> {
    let cfg = ChainConfig {
        truncation_epsilon: a.truncation,
        seed: a.seed,
        ..ChainConfig::default()
    };
    let chains: Vec<skeleton::BounceChain> = (0..a.n)
        .into_par_iter()
        .map(|i| skeleton::simulate_chain(&mut rng::stream(a.seed, i as u64), p.c, a.u0, &cfg))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("chain,zeta,t1,v1,n_bounces,truncated_weight,cap_reached\n");
    for (i, ch) in chains.iter().enumerate() {
        writeln!(
            csv,
            "{i},{},{},{},{},{},{}",
            ch.zeta,
            ch.times[1],
            ch.speeds[1],
            ch.n_bounces(),
            ch.truncated_weight,
            ch.cap_reached
        )
        .unwrap();
    }
    m.write(&a.out, "chain.csv", csv.as_bytes())?;
    Ok(())
}

fn simulate_tilted(a: &SimulateArgs, p: &ModelParams, m: &mut Manifest) -> Result<(), Failure> {
    let cfg = ChainConfig {
        seed: a.seed,
        horizon: Some(a.horizon),
        ..ChainConfig::default()
    };
    let chains: Vec<skeleton::BounceChain> = (0..a.n)
        .into_par_iter()
        .map(|i| skeleton::simulate_tilted_chain(&mut rng::stream(a.seed, i as u64), p, a.u0, &cfg))
        .collect::<Result<_, _>>()?;
    let mut csv = String::from("chain,n,t,v\n");
    for (i, ch) in chains.iter().enumerate() {
        for (j, (t, v)) in ch.times.iter().zip(&ch.speeds).enumerate() {
            writeln!(csv, "{i},{j},{t},{v}").unwrap();
        }
    }
    m.write(&a.out, "tilted.csv", csv.as_bytes())?;
    Ok(())
}

fn path_config(a: &SimulateArgs, absorb_speed: f64) -> PathConfig {
    PathConfig {
        dt: a.dt,
        absorb_speed,
        horizon: a.horizon,
        seed: a.seed,
        ..PathConfig::default()
    }
}

fn path_csv(p: &path::PathSample) -> String {
    let mut csv = String::from("t,x,v,w\n");
    for i in 0..p.grid.len() {
        writeln!(csv, "{},{},{},{}", p.grid[i], p.x[i], p.v[i], p.w[i]).unwrap();
    }
    csv
}

fn bounces_csv(p: &path::PathSample) -> String {
    let mut csv = String::from("time,v_in,v_out\n");
    for b in &p.bounces {
        writeln!(csv, "{},{},{}", b.time, b.v_in, b.v_out).unwrap();
    }
    csv
}

fn simulate_path(a: &SimulateArgs, p: &ModelParams, m: &mut Manifest) -> Result<(), Failure> {
    let scale = a.x0.cbrt().max(a.u0.abs());
    let cfg = path_config(a, path::ABSORB_RATIO * scale);
    let sample = path::integrate_sor(&mut rng::stream(a.seed, 0), p.c, a.x0, a.u0, &cfg)?;
    m.write(&a.out, "path.csv", path_csv(&sample).as_bytes())?;
    m.write(&a.out, "path_bounces.csv", bounces_csv(&sample).as_bytes())?;
    Ok(())
}

fn simulate_resurrect(a: &SimulateArgs, p: &ModelParams, m: &mut Manifest) -> Result<(), Failure> {
    let cfg = path_config(a, path::ABSORB_RATIO * a.eps);
    let r = path::resurrect(&mut rng::stream(a.seed, 0), p.c, a.eps, &cfg)?;
    let mut csv = String::from("start,length,first_bounce_time,max_speed\n");
    for e in &r.excursions {
        writeln!(csv, "{},{},{},{}", e.start, e.length, e.first_bounce_time, e.max_speed).unwrap();
    }
    m.write(&a.out, "resurrect_path.csv", path_csv(&r.path).as_bytes())?;
    m.write(&a.out, "excursions.csv", csv.as_bytes())?;
    Ok(())
}

fn cmd_overshoot(a: &OvershootArgs) -> CmdResult {
    let p = params_for(a.c)?;
    let started = manifest::now();
    let config = json!({ "model": params_json(&p), "seed": a.seed, "table": a.table, "n": a.n });
    let mut m = Manifest::new("overshoot", config, started);
    let run = (|| -> Result<(), Failure> {
        let table = LadderTable::build(&p, a.table, rng::derive_seed(a.seed, 1))?;
        let mut r = rng::stream(rng::derive_seed(a.seed, 2), 0);
        let mut csv = String::from("size_biased_height,overshoot\n");
        for _ in 0..a.n {
            let h = table.sample_size_biased(&mut r);
            let o = table.sample_overshoot(&mut r);
            writeln!(csv, "{h},{o}").unwrap();
        }
        m.write(&a.out, "overshoot.csv", csv.as_bytes())?;
        Ok(())
    })();
    finish(m, &a.out, "overshoot", run)
}

fn cmd_verify(a: &VerifyArgs) -> CmdResult {
    params_for(a.c)?;
    let settings = VerifySettings {
        c: a.c,
        seed: a.seed,
        suite: a.suite,
        n: a.n,
        k_override: a.inject_k,
    };
    let started = manifest::now();
    let report = verify::run_suite(&settings, |r| eprintln!("{}", r.line()))?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{text}");
    if let Some(dir) = &a.out {
        let params = ModelParams::new(a.c)?;
        let config = json!({
            "model": params_json(&params),
            "seed": a.seed,
            "suite": a.suite,
            "n": a.n,
            "injected_k": a.inject_k,
            "tolerances": report.results.iter().map(|r| &r.tolerance).collect::<Vec<_>>(),
        });
        let mut m = Manifest::new("verify", config, started);
        m.write(dir, "verify_report.json", text.as_bytes())?;
        m.finish(dir, "verify", None)?;
    }
    Ok(if report.all_passed { 0 } else { EXIT_VERIFY })
}
