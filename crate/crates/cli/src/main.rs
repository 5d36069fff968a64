//! `ksblow`: constants, profile tables, spectrum checks, simulation,
//! decomposition, shooting and the acceptance suite.

mod manifest;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use ks_blowup::diagnostics::{discrete_spectrum, BoundParams, Diagnostics};
use ks_blowup::eigenbasis::ConstantsReport;
use ks_blowup::profile::ProfileParams;
use ks_blowup::shooting::{shoot, SearchStatus, ShootConfig};
use ks_blowup::sim::io::read_snapshot;
use ks_blowup::sim::run::write_time_series;
use ks_blowup::sim::{run, run_verdict, Frame, SimConfig};
use ks_blowup::verify::{run_suite, Fault, Suite, VerifyOptions};
use ks_blowup::{Dim, Error};

const EXIT_VERDICT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "ksblow", version, about = "Log-corrected Keller-Segel blowup toolkit (d = 3, 4)")]
struct Cli {
    /// Directory for every file the command writes, including the run manifest.
    #[arg(long, global = true, default_value = "ksblow-out")]
    output_dir: PathBuf,
    /// TOML configuration (simulate: a sim config; shoot: a search config).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact constants B, c and the eigenpolynomials as JSON.
    Constants(ConstantsArgs),
    /// Tabulate Q, Q' and F on a xi grid as CSV.
    Profile(ProfileArgs),
    /// Low eigenvalues of the discretized linearized operator as CSV.
    Spectrum(SpectrumArgs),
    /// Run the radial solver.
    Simulate(SimulateArgs),
    /// Mode decomposition and shrinking-set report of a snapshot.
    Decompose(DecomposeArgs),
    /// Search for a trapped initial datum.
    Shoot(ShootArgs),
    /// Run the acceptance criteria.
    Verify(VerifyArgs),
}

fn parse_dim(s: &str) -> Result<Dim, String> {
    let d: u32 = s.parse().map_err(|_| format!("not an integer: {s}"))?;
    Dim::new(d).map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct ConstantsArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Dim,
    /// Number of eigenpolynomials listed.
    #[arg(long, default_value_t = 7)]
    count: usize,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Dim,
    #[arg(long, default_value_t = 1e-3)]
    xi_min: f64,
    #[arg(long, default_value_t = 1e3)]
    xi_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long)]
    log_spacing: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Dim,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 30.0)]
    ymax: f64,
    #[arg(long, default_value_t = 6)]
    count: usize,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Option<Dim>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long)]
    cadence: Option<f64>,
    #[arg(long)]
    dy: Option<f64>,
    /// Perturbation amplitudes, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    dvec: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct DecomposeArgs {
    /// Snapshot CSV (`y,v`); its `.meta.json` sidecar supplies d and s.
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_parser = parse_dim)]
    d: Option<Dim>,
    #[arg(long = "A", default_value_t = 20.0)]
    a: f64,
    #[arg(long = "K", default_value_t = 10.0)]
    k: f64,
}

#[derive(Args, Debug)]
struct ShootArgs {
    #[arg(long, value_parser = parse_dim)]
    d: Option<Dim>,
    #[arg(long)]
    s0: Option<f64>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    budget: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    #[arg(long)]
    dy: Option<f64>,
    #[arg(long)]
    ansatz_k: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    workers: u64,
    #[arg(long, default_value_t = 0.05)]
    dy: f64,
    /// Skip the non-gating variant lines.
    #[arg(long)]
    no_variants: bool,
    /// Corrupt one computation on purpose (`compute_B`).
    #[arg(long, value_parser = parse_fault)]
    inject_fault: Option<Fault>,
}

fn parse_fault(s: &str) -> Result<Fault, String> {
    match s {
        "compute_B" | "compute_b" => Ok(Fault::ComputeB),
        other => Err(format!("unknown fault {other:?}; known: compute_B")),
    }
}

enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let usage = match &e {
            Error::Argument(_) | Error::UnsupportedDimension(_) | Error::Config(_) | Error::Parse(_) => true,
            Error::Io(io) => io.kind() == std::io::ErrorKind::NotFound,
            Error::Json(_) => true,
            _ => false,
        };
        if usage {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numerical(e.to_string())
    }
}

/// What a finished command reports to the manifest.
struct Done {
    config: Value,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    verdict: String,
    exit: u8,
}

impl Done {
    fn ok(config: Value, outputs: Vec<PathBuf>) -> Self {
        Self {
            config,
            inputs: Vec::new(),
            outputs,
            verdict: "ok".into(),
            exit: 0,
        }
    }
}

struct Ctx {
    dir: PathBuf,
    config: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn say(&self, text: &str) {
        if !self.quiet {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{text}");
        }
    }

    fn write(&self, name: &str, text: &str) -> Result<PathBuf, Failure> {
        let p = self.dir.join(name);
        fs::write(&p, text)?;
        Ok(p)
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<PathBuf, Failure> {
        self.write(name, &serde_json::to_string_pretty(v)?)
    }

    fn config_text(&self) -> Result<Option<String>, Failure> {
        match &self.config {
            Some(p) => fs::read_to_string(p)
                .map(Some)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display()))),
            None => Ok(None),
        }
    }

    fn no_config(&self, cmd: &str) -> Result<(), Failure> {
        match &self.config {
            Some(_) => Err(Failure::Usage(format!("{cmd} takes flags only, not --config"))),
            None => Ok(()),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let ctx = Ctx {
        dir: cli.output_dir.clone(),
        config: cli.config.clone(),
        quiet: cli.quiet,
    };
    if let Err(e) = fs::create_dir_all(&ctx.dir) {
        eprintln!("error: cannot create {}: {e}", ctx.dir.display());
        return ExitCode::from(EXIT_USAGE);
    }
    let started = manifest::now();
    let (name, res) = match &cli.cmd {
        Cmd::Constants(a) => ("constants", cmd_constants(&ctx, a)),
        Cmd::Profile(a) => ("profile", cmd_profile(&ctx, a)),
        Cmd::Spectrum(a) => ("spectrum", cmd_spectrum(&ctx, a)),
        Cmd::Simulate(a) => ("simulate", cmd_simulate(&ctx, a)),
        Cmd::Decompose(a) => ("decompose", cmd_decompose(&ctx, a)),
        Cmd::Shoot(a) => ("shoot", cmd_shoot(&ctx, a)),
        Cmd::Verify(a) => ("verify", cmd_verify(&ctx, a)),
    };
    let done = match res {
        Ok(d) => d,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(EXIT_USAGE);
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("numerical failure: {m}");
            Done {
                config: Value::Null,
                inputs: Vec::new(),
                outputs: Vec::new(),
                verdict: format!("error: {m}"),
                exit: EXIT_NUMERICAL,
            }
        }
    };
    let (inputs, outputs) = match (manifest::digests(&done.inputs), manifest::digests(&done.outputs)) {
        (Ok(i), Ok(o)) => (i, o),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: cannot digest outputs: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
    };
    let entry = manifest::RunEntry {
        command: name.to_string(),
        argv,
        config: done.config,
        inputs,
        outputs,
        started,
        finished: manifest::now(),
        verdict: done.verdict,
        exit_code: done.exit as i32,
    };
    if let Err(e) = manifest::append(&ctx.dir, entry) {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(done.exit)
}

/// Shortest round-trip decimals, comma separated, newline terminated.
fn csv_row(xs: &[f64]) -> String {
    let cells: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    cells.join(",") + "\n"
}

fn cmd_constants(ctx: &Ctx, a: &ConstantsArgs) -> Result<Done, Failure> {
    ctx.no_config("constants")?;
    let report = ConstantsReport::build(a.d, a.count)?;
    let text = serde_json::to_string_pretty(&report)?;
    ctx.say(&text);
    let out = ctx.write(&format!("constants_d{}.json", a.d), &text)?;
    Ok(Done::ok(json!({"d": a.d, "count": a.count}), vec![out]))
}

fn cmd_profile(ctx: &Ctx, a: &ProfileArgs) -> Result<Done, Failure> {
    ctx.no_config("profile")?;
    if !(a.xi_min >= 0.0 && a.xi_max > a.xi_min && a.xi_max.is_finite()) {
        return Err(Failure::Usage(format!("need 0 <= xi-min < xi-max, got {} and {}", a.xi_min, a.xi_max)));
    }
    if a.points < 2 {
        return Err(Failure::Usage("need at least 2 points".into()));
    }
    if a.log_spacing && a.xi_min <= 0.0 {
        return Err(Failure::Usage("log spacing needs xi-min > 0".into()));
    }
    let p = ProfileParams::new(a.d)?;
    let mut text = String::from("xi,Q,Qprime,F\n");
    let last = (a.points - 1) as f64;
    for i in 0..a.points {
        let t = i as f64 / last;
        let xi = if i + 1 == a.points {
            a.xi_max
        } else if a.log_spacing {
            a.xi_min * (a.xi_max / a.xi_min).powf(t)
        } else {
            a.xi_min + (a.xi_max - a.xi_min) * t
        };
        let row = [xi, p.q_of_xi(xi)?, p.q_prime(xi)?, p.f_of_xi(xi)?];
        text.push_str(&csv_row(&row));
    }
    ctx.say(text.trim_end());
    let out = ctx.write(&format!("profile_d{}.csv", a.d), &text)?;
    let cfg = json!({"d": a.d, "xi_min": a.xi_min, "xi_max": a.xi_max, "points": a.points, "log_spacing": a.log_spacing});
    Ok(Done::ok(cfg, vec![out]))
}

fn cmd_spectrum(ctx: &Ctx, a: &SpectrumArgs) -> Result<Done, Failure> {
    ctx.no_config("spectrum")?;
    let values = discrete_spectrum(a.d, a.n, a.ymax, a.count)?;
    let l = a.d.ell_f64();
    let mut text = String::from("k,eigenvalue,target,error\n");
    for (k, v) in values.iter().enumerate() {
        let target = if k == 0 { 0.0 } else { -(k as f64) / l };
        text.push_str(&format!("{k},{}", csv_row(&[*v, target, (v - target).abs()])));
    }
    ctx.say(text.trim_end());
    let out = ctx.write(&format!("spectrum_d{}.csv", a.d), &text)?;
    let cfg = json!({"d": a.d, "n": a.n, "ymax": a.ymax, "count": a.count});
    Ok(Done::ok(cfg, vec![out]))
}

fn sim_config(ctx: &Ctx) -> Result<SimConfig, Failure> {
    Ok(match ctx.config_text()? {
        Some(t) => SimConfig::from_toml_str(&t)?,
        None => SimConfig::default(),
    })
}

fn cmd_simulate(ctx: &Ctx, a: &SimulateArgs) -> Result<Done, Failure> {
    let mut cfg = sim_config(ctx)?;
    if let Some(d) = a.d {
        cfg.d = d;
    }
    if let Some(x) = a.s0 {
        cfg.s0 = x;
    }
    if let Some(x) = a.a {
        cfg.a = x;
    }
    if let Some(x) = a.horizon {
        cfg.horizon = x;
    }
    if let Some(x) = a.cadence {
        cfg.cadence = x;
    }
    if let Some(x) = a.dy {
        cfg.dy = x;
    }
    if let Some(x) = &a.dvec {
        cfg.dvec = x.clone();
    }
    cfg.output_dir = Some(ctx.dir.clone());
    cfg.validate()?;
    let traj = run(&cfg)?;
    let verdict = run_verdict(&traj);
    let summary = json!({
        "stop": traj.stop,
        "verdict": verdict,
        "steps": traj.steps,
        "slices": traj.records.len(),
        "end_time": traj.final_state.time,
        "profile_distance": traj.profile_distance,
    });
    let mut outputs = traj.files.clone();
    outputs.push(ctx.write_json("summary.json", &summary)?);
    ctx.say(&format!(
        "{} slices, {} steps, stopped at {:.6}: {verdict}",
        traj.records.len(),
        traj.steps,
        traj.final_state.time
    ));
    let mut inputs = Vec::new();
    if let Some(p) = &ctx.config {
        inputs.push(p.clone());
    }
    Ok(Done {
        config: serde_json::to_value(&cfg)?,
        inputs,
        outputs,
        verdict,
        exit: 0,
    })
}

fn cmd_decompose(ctx: &Ctx, a: &DecomposeArgs) -> Result<Done, Failure> {
    ctx.no_config("decompose")?;
    let (state, meta) = read_snapshot(&a.snapshot, None, a.s)?;
    if state.frame != Frame::SelfSimilar {
        return Err(Failure::Usage("decompose needs a self-similar snapshot".into()));
    }
    let d = match (a.d, meta) {
        (Some(d), _) => d,
        (None, Some(m)) => m.d,
        (None, None) => return Err(Failure::Usage("dimension unknown: pass --d or keep the sidecar".into())),
    };
    let diag = Diagnostics::new(d, state.grid.clone(), BoundParams::new(a.a, a.k))?;
    let (dec, report) = diag.decompose_state(&state)?;
    let doc = json!({"d": d, "s": state.time, "A": a.a, "K": a.k, "decomposition": dec, "report": report});
    let verdict = report.verdict.to_string();
    let out = ctx.write_json("decomposition.json", &doc)?;
    ctx.say(&format!("s = {}: {verdict}, max ratio {:.4}", state.time, report.max_ratio()));
    let mut inputs = vec![a.snapshot.clone()];
    let side = ks_blowup::sim::io::meta_path(&a.snapshot);
    if side.exists() {
        inputs.push(side);
    }
    Ok(Done {
        config: json!({"snapshot": a.snapshot, "d": d, "s": state.time, "A": a.a, "K": a.k}),
        inputs,
        outputs: vec![out],
        verdict,
        exit: 0,
    })
}

fn cmd_shoot(ctx: &Ctx, a: &ShootArgs) -> Result<Done, Failure> {
    let mut cfg = match ctx.config_text()? {
        Some(t) => ShootConfig::from_toml_str(&t)?,
        None => ShootConfig::default(),
    };
    if let Some(d) = a.d {
        cfg.sim.d = d;
    }
    if let Some(x) = a.s0 {
        cfg.sim.s0 = x;
    }
    if let Some(x) = a.a {
        cfg.sim.a = x;
    }
    if let Some(x) = a.horizon {
        cfg.sim.horizon = x;
    }
    if let Some(x) = a.dy {
        cfg.sim.dy = x;
    }
    if let Some(x) = a.ansatz_k {
        cfg.sim.ansatz_k = x;
    }
    if let Some(x) = a.budget {
        cfg.budget = x as usize;
    }
    if let Some(x) = a.workers {
        cfg.workers = x as usize;
    }
    cfg.validate()?;
    let result = shoot(&cfg)?;
    let mut outputs = vec![ctx.write_json("search.json", &result)?];
    if let Some(traj) = &result.extra {
        let p = ctx.dir.join("best_timeseries.csv");
        write_time_series(&p, &cfg.sim, &traj.records)?;
        outputs.push(p);
    }
    let status = serde_json::to_value(result.status)?;
    let verdict = status.as_str().unwrap_or("unknown").to_string();
    ctx.say(&format!(
        "{verdict}: best d = {:?}, s_exit = {}, {} probes in {} rounds",
        result.dvec,
        result.s_exit,
        result.history.len(),
        result.rounds
    ));
    let mut inputs = Vec::new();
    if let Some(p) = &ctx.config {
        inputs.push(p.clone());
    }
    Ok(Done {
        config: serde_json::to_value(&cfg)?,
        inputs,
        outputs,
        verdict,
        exit: if result.status == SearchStatus::Trapped { 0 } else { EXIT_VERDICT },
    })
}

fn cmd_verify(ctx: &Ctx, a: &VerifyArgs) -> Result<Done, Failure> {
    ctx.no_config("verify")?;
    let opts = VerifyOptions {
        workers: a.workers as usize,
        variants: !a.no_variants,
        fault: a.inject_fault,
        dy: a.dy,
    };
    let report = run_suite(a.suite, &opts)?;
    for o in &report.outcomes {
        ctx.say(&o.line());
    }
    let out = ctx.write_json("verify_report.json", &report)?;
    let failures = report.failures().len();
    let (verdict, exit) = if report.errored() {
        ("error".to_string(), EXIT_NUMERICAL)
    } else if failures > 0 {
        (format!("{failures} failing"), EXIT_VERDICT)
    } else {
        ("pass".to_string(), 0)
    };
    ctx.say(&format!("suite {}: {verdict}", a.suite));
    Ok(Done {
        config: serde_json::to_value(&opts)?,
        inputs: Vec::new(),
        outputs: vec![out],
        verdict,
        exit,
    })
}

