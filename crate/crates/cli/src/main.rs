//! `ccdarp` command-line driver.
//!
//! Exit codes: 0 when the run finished (optimal or proven infeasible),
//! 2 when a limit stopped the solve, 1 on any error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ccdarp::generator;
use ccdarp::instance::parse_uncertainty;
use ccdarp::oracle::solve_exact;
use ccdarp::search::{RouteReport, SolveStatus};
use ccdarp::simulator::{hoeffding_audit, simulate, write_csv, SimConfig};
use ccdarp::{apply_mode, parse_instance, solve_bcp, Dominance, Instance, Mode, ModeConfig, SolveConfig, SolveReport};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(name = "ccdarp", version, about = "Exact dial-a-ride solver with chance-constrained capacity and soft time windows")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance with branch-and-cut-and-price.
    Solve(SolveArgs),
    /// Run a suite under both dominance rules and tabulate bounds and label counts.
    Bench(BenchArgs),
    /// Replay a plan under random passenger counts.
    Simulate(SimArgs),
    /// Brute-force a tiny instance.
    Oracle(OracleArgs),
    /// Write a random instance in the Cordeau layout.
    Generate(GenArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    vehicles: usize,
    #[arg(long)]
    requests: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Small grid, short horizon (suited to the oracle).
    #[arg(long)]
    tiny: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// Instance file in the Cordeau layout.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "c", value_parser = parse_mode)]
    mode: Mode,
    /// Share of pickup and drop-off nodes with soft windows.
    #[arg(long, default_value_t = 0.0)]
    flex_ratio: f64,
    /// Tolerated overflow probability per trip.
    #[arg(long, default_value_t = 0.01)]
    psi: f64,
    /// Vehicle capacity (overrides the file).
    #[arg(long)]
    capacity: Option<f64>,
    /// Seed for choosing soft-window nodes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Optional `id mean lo hi` uncertainty file (robust modes).
    #[arg(long)]
    uncertainty: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<Mode, String> {
    s.parse().map_err(|e: ccdarp::Error| e.to_string())
}

fn parse_dominance(s: &str) -> std::result::Result<Dominance, String> {
    s.parse().map_err(|e: ccdarp::Error| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, default_value = "standard", value_parser = parse_dominance)]
    dominance: Dominance,
    /// Wall-clock limit in seconds.
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 1_000_000)]
    node_limit: usize,
    /// Disable cut separation.
    #[arg(long)]
    no_cuts: bool,
    /// Report wall_seconds as 0 so repeated runs are byte-identical.
    #[arg(long)]
    no_timing: bool,
}

impl SolverArgs {
    fn config(&self) -> SolveConfig {
        SolveConfig {
            dominance: self.dominance,
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            cuts: !self.no_cuts,
            timing: !self.no_timing,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite file: one `instance mode [flex_ratio] [psi] [capacity]` per line.
    #[arg(long)]
    suite: PathBuf,
    #[arg(long, default_value_t = 600.0)]
    time_limit: f64,
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Plan to replay (a `solve` JSON report); solved on the fly if absent.
    #[arg(long)]
    plan: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    scenarios: usize,
    /// Seed of the scenario stream.
    #[arg(long, default_value_t = 0)]
    sim_seed: u64,
    /// Samples per trip for the chance-constraint audit (0 skips it).
    #[arg(long, default_value_t = 0)]
    samples: usize,
    /// Per-scenario CSV (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate JSON (stderr if absent).
    #[arg(long)]
    summary: Option<PathBuf>,
    #[arg(long, default_value_t = 3600.0)]
    time_limit: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_instance(a: &InstanceArgs) -> Result<Instance> {
    let text = fs::read_to_string(&a.instance).with_context(|| format!("cannot read {}", a.instance.display()))?;
    let name = a.instance.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let mut inst = parse_instance(&text).with_context(|| format!("{}", a.instance.display()))?.with_name(name);
    if let Some(u) = &a.uncertainty {
        let t = fs::read_to_string(u).with_context(|| format!("cannot read {}", u.display()))?;
        let loads = parse_uncertainty(&t, &inst).with_context(|| format!("{}", u.display()))?;
        inst = inst.with_uncertainty(loads)?;
    }
    let mut cfg = ModeConfig::new(a.mode).flex(a.flex_ratio).psi(a.psi).seed(a.seed);
    cfg.capacity_override = a.capacity;
    Ok(apply_mode(&inst, &cfg)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

fn report_csv(r: &SolveReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance",
        "mode",
        "psi",
        "flex_ratio",
        "objective",
        "optimal",
        "status",
        "gap",
        "vehicles_used",
        "labels_explored",
        "cuts_added",
        "nodes_explored",
        "wall_seconds",
    ])?;
    w.write_record([
        r.instance.clone(),
        r.mode.clone(),
        r.psi.to_string(),
        r.flex_ratio.to_string(),
        fmt_opt(r.objective),
        r.optimal.to_string(),
        status_str(r.status).to_string(),
        fmt_opt(r.gap),
        r.vehicles_used.to_string(),
        r.labels_explored.to_string(),
        r.cuts_added.to_string(),
        r.nodes_explored.to_string(),
        format!("{:.3}", r.wall_seconds),
    ])?;
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn status_str(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Limit => "limit",
        SolveStatus::Feasible => "feasible",
    }
}

fn exit_for(status: SolveStatus) -> u8 {
    match status {
        SolveStatus::Limit => 2,
        _ => 0,
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let inst = load_instance(&a.inst)?;
    let rep = solve_bcp(&inst, &a.solver.config())?;
    let text = match a.format {
        Format::Json => rep.to_json()? + "\n",
        Format::Csv => report_csv(&rep)?,
    };
    emit(a.out.as_deref(), &text)?;
    Ok(exit_for(rep.status))
}

struct SuiteRow {
    instance: PathBuf,
    mode: Mode,
    flex: f64,
    psi: f64,
    capacity: Option<f64>,
}

fn parse_suite(text: &str, base: &Path) -> Result<Vec<SuiteRow>> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 2 || f.len() > 5 {
            bail!("suite line {}: expected 'instance mode [flex_ratio] [psi] [capacity]'", i + 1);
        }
        let num = |k: usize, d: f64| -> Result<f64> {
            f.get(k).map(|s| s.parse::<f64>().with_context(|| format!("suite line {}: bad number '{s}'", i + 1))).unwrap_or(Ok(d))
        };
        let path = PathBuf::from(f[0]);
        rows.push(SuiteRow {
            instance: if path.is_relative() { base.join(path) } else { path },
            mode: f[1].parse().with_context(|| format!("suite line {}", i + 1))?,
            flex: num(2, 0.0)?,
            psi: num(3, 0.01)?,
            capacity: if f.len() > 4 { Some(num(4, 0.0)?) } else { None },
        });
    }
    Ok(rows)
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.suite).with_context(|| format!("cannot read {}", a.suite.display()))?;
    let base = a.suite.parent().unwrap_or(Path::new(".")).to_path_buf();
    let rows = parse_suite(&text, &base)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "instance",
        "mode",
        "flex_ratio",
        "psi",
        "capacity",
        "dominance",
        "bound",
        "status",
        "cpu_seconds",
        "labels_explored",
        "lr_percent",
        "error",
    ])?;
    let mut code = 0;
    for row in &rows {
        let args = InstanceArgs {
            instance: row.instance.clone(),
            mode: row.mode,
            flex_ratio: row.flex,
            psi: row.psi,
            capacity: row.capacity,
            seed: 0,
            uncertainty: None,
        };
        let inst = load_instance(&args);
        let mut sdr_labels = None;
        for rule in [Dominance::Standard, Dominance::Probabilistic] {
            let mut rec = vec![
                row.instance.display().to_string(),
                row.mode.to_string(),
                row.flex.to_string(),
                row.psi.to_string(),
                row.capacity.map(|c| c.to_string()).unwrap_or_default(),
                rule.as_str().to_string(),
            ];
            let res = inst.as_ref().map_err(|e| anyhow::anyhow!("{e:#}")).and_then(|inst| {
                let cfg = SolveConfig { dominance: rule, time_limit: a.time_limit, timing: !a.no_timing, ..Default::default() };
                let t = Instant::now();
                let rep = solve_bcp(inst, &cfg)?;
                Ok((rep, t.elapsed().as_secs_f64()))
            });
            match res {
                Ok((rep, secs)) => {
                    if rep.status == SolveStatus::Limit {
                        code = 2;
                    }
                    let lr = match (rule, sdr_labels) {
                        (Dominance::Standard, _) => {
                            sdr_labels = Some(rep.labels_explored);
                            String::new()
                        }
                        (Dominance::Probabilistic, Some(s)) if s > 0 => {
                            format!("{:.4}", 100.0 * (s as f64 - rep.labels_explored as f64) / s as f64)
                        }
                        _ => String::new(),
                    };
                    let bound = rep.objective.unwrap_or(rep.lower_bound);
                    rec.extend([
                        format!("{bound:.6}"),
                        status_str(rep.status).to_string(),
                        format!("{:.3}", if a.no_timing { 0.0 } else { secs }),
                        rep.labels_explored.to_string(),
                        lr,
                        String::new(),
                    ]);
                }
                Err(e) => {
                    rec.extend([String::new(), String::new(), String::new(), String::new(), String::new(), format!("{e:#}")]);
                }
            }
            w.write_record(&rec)?;
        }
    }
    let out = String::from_utf8(w.into_inner()?)?;
    emit(a.out.as_deref(), &out)?;
    Ok(code)
}

fn cmd_simulate(a: &SimArgs) -> Result<u8> {
    let inst = load_instance(&a.inst)?;
    let routes: Vec<RouteReport> = match &a.plan {
        Some(p) => {
            let t = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            let rep: SolveReport = serde_json::from_str(&t).with_context(|| format!("{} is not a solve report", p.display()))?;
            rep.routes
        }
        None => {
            let cfg = SolveConfig { time_limit: a.time_limit, timing: false, ..Default::default() };
            solve_bcp(&inst, &cfg)?.routes
        }
    };
    if routes.is_empty() {
        bail!("the plan has no routes");
    }
    let (results, summary) = simulate(&inst, &routes, &SimConfig::new(a.scenarios, a.sim_seed))?;
    let mut csv_out = Vec::new();
    write_csv(&results, &mut csv_out)?;
    emit(a.out.as_deref(), &String::from_utf8(csv_out)?)?;
    let mut value = serde_json::to_value(&summary)?;
    if a.samples > 0 {
        let trips: Vec<Vec<usize>> = routes.iter().map(|r| r.sequence.clone()).collect();
        value["audit"] = serde_json::to_value(hoeffding_audit(&inst, &trips, a.samples, a.sim_seed)?)?;
    }
    let text = serde_json::to_string_pretty(&value)? + "\n";
    match &a.summary {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => eprint!("{text}"),
    }
    Ok(0)
}

fn cmd_oracle(a: &OracleArgs) -> Result<u8> {
    let inst = load_instance(&a.inst)?;
    let sol = solve_exact(&inst)?;
    let routes: Vec<RouteReport> = sol
        .routes
        .iter()
        .map(|t| RouteReport { sequence: t.sequence.clone(), times: t.times.clone(), delays: t.delays.clone() })
        .collect();
    let v = json!({
        "instance": inst.name,
        "mode": inst.mode.as_str(),
        "psi": inst.psi,
        "flex_ratio": inst.flex_ratio,
        "feasible": sol.feasible,
        "objective": sol.objective,
        "routes": routes,
        "trips_enumerated": sol.trips_enumerated,
    });
    emit(a.out.as_deref(), &(serde_json::to_string_pretty(&v)? + "\n"))?;
    Ok(0)
}

fn cmd_generate(a: &GenArgs) -> Result<u8> {
    let inst = if a.tiny {
        generator::random_tiny(a.requests, a.vehicles, a.seed)?
    } else {
        generator::cordeau_like(&generator::GeneratorConfig::new(a.vehicles, a.requests, a.seed))?
    };
    emit(a.out.as_deref(), &inst.to_cordeau_text())?;
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CCDARP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let res = match &cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Oracle(a) => cmd_oracle(a),
        Cmd::Generate(a) => cmd_generate(a),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
