//! `salvo`: run, predict, validate and sweep guidance scenarios.
//!
//! Exit codes: 0 success, 1 error (including usage errors), 2 a monitor or
//! static check failed under `--strict`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use salvo_core::analysis::{audit, predict};
use salvo_core::monitor::MonitorStatus;
use salvo_core::scenario::{fmt_sig, load_scenario, write_results};
use salvo_core::sim::{run, SimulationConfig, SimulationResult};
use salvo_core::Scenario;

#[derive(Debug, Parser)]
#[command(name = "salvo", version, about = "Simultaneous-interception guidance simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory.csv, events.csv and summary.json.
    Run {
        scenario: PathBuf,
        /// Output directory (default: $SALVO_OUT_DIR, else ./salvo-out).
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
        /// Exit 2 if any monitor fails.
        #[arg(long)]
        strict: bool,
    },
    /// Closed-form predictions on the initial graph, without simulating.
    Predict { scenario: PathBuf },
    /// Static checks on the schedule and node events.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        delta_factor: Option<f64>,
        /// Exit 2 if any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Simulate and print every monitor verdict.
    Invariants {
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long)]
        strict: bool,
    },
    /// One run per parameter value; prints CSV.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        range: Vec<f64>,
        /// Write the CSV here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepParam {
    Dt,
    DeltaFactor,
    CaptureRadius,
}

#[derive(Debug, Clone, Args)]
struct Overrides {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    capture_radius: Option<f64>,
    #[arg(long)]
    delta_factor: Option<f64>,
    /// Disable the consensus lock.
    #[arg(long)]
    no_lock: bool,
    #[arg(long)]
    max_time: Option<f64>,
}

impl Overrides {
    fn config(&self, scenario: &Scenario) -> SimulationConfig {
        let mut c = scenario.simulation_config();
        if let Some(v) = self.dt {
            c.dt = v;
        }
        if let Some(v) = self.capture_radius {
            c.capture_radius = v;
        }
        if let Some(v) = self.delta_factor {
            c.delta_factor = v;
        }
        if self.no_lock {
            c.lock_enabled = false;
        }
        if let Some(v) = self.max_time {
            c.max_time = Some(v);
        }
        c
    }
}

#[derive(Debug)]
enum Failure {
    Error(String),
    Strict(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Error(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Strict(m)) => {
            eprintln!("{m}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let s = load_scenario(path)?;
    for w in &s.warnings {
        eprintln!("warning: {w}");
    }
    Ok(s)
}

fn label(s: &Scenario, path: &Path) -> String {
    s.name
        .clone()
        .unwrap_or_else(|| path.file_stem().map_or_else(String::new, |f| f.to_string_lossy().into()))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_sig)
}

fn counts(r: &SimulationResult) -> (usize, usize, usize) {
    let n = |s| r.monitors.iter().filter(|m| m.status == s).count();
    (
        n(MonitorStatus::Pass),
        n(MonitorStatus::Fail),
        n(MonitorStatus::NotApplicable),
    )
}

fn strict_check(r: &SimulationResult) -> Result<(), Failure> {
    let failed: Vec<String> = r
        .monitors
        .iter()
        .filter(|m| m.failed())
        .map(|m| format!("{} (worst={})", m.name, opt(m.worst)))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Strict(format!(
            "monitor failed: {}",
            failed.join(", ")
        )))
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            scenario,
            out,
            overrides,
            strict,
        } => {
            let s = load(&scenario)?;
            let config = overrides.config(&s);
            let result = run(&s, &config)?;
            let dir = out
                .or_else(|| std::env::var_os("SALVO_OUT_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("salvo-out"));
            write_results(&result, Some(&label(&s, &scenario)), &dir)?;
            let (pass, fail, na) = counts(&result);
            println!(
                "status={} t_f={} spread={} monitors_passed={pass} monitors_failed={fail} monitors_na={na} out={}",
                status(&result),
                opt(result.t_f()),
                opt(result.spread()),
                dir.display()
            );
            if strict {
                strict_check(&result)?;
            }
            Ok(())
        }
        Command::Predict { scenario } => {
            let s = load(&scenario)?;
            let p = predict(&s)?;
            println!("leader={}", p.leader);
            println!("leader_t_tilde={}", fmt_sig(p.leader_t_tilde));
            println!("leader_reachable={}", p.leader_reachable);
            println!("t_f={}", opt(p.t_f));
            println!("first_interceptor={}", p.first_interceptor);
            println!("first_t_tilde={}", fmt_sig(p.first_t_tilde));
            let ids = |v: &[salvo_core::PursuerId]| {
                v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
            };
            println!("local_leaders={}", ids(&p.local_leaders));
            println!(
                "sink_components={}",
                p.sink_components
                    .iter()
                    .map(|c| format!("{{{}}}", ids(c)))
                    .collect::<Vec<_>>()
                    .join(";")
            );
            println!("delta_bound_min={}", fmt_sig(p.delta_bound_min));
            println!("delta_bound_sink={}", fmt_sig(p.delta_bound_sink));
            Ok(())
        }
        Command::Validate {
            scenario,
            delta_factor,
            strict,
        } => {
            let s = load(&scenario)?;
            let factor = delta_factor.unwrap_or(s.simulation_config().delta_factor);
            let findings = audit(&s, factor)?;
            let mut bad = Vec::new();
            for f in &findings {
                println!(
                    "check={} ok={} t={} detail=\"{}\"",
                    f.check,
                    f.ok,
                    opt(f.time),
                    f.detail
                );
                if !f.ok {
                    bad.push(f.check.clone());
                }
            }
            println!("violations={}", bad.len());
            if strict && !bad.is_empty() {
                return Err(Failure::Strict(format!("violation: {}", bad.join(", "))));
            }
            Ok(())
        }
        Command::Invariants {
            scenario,
            overrides,
            strict,
        } => {
            let s = load(&scenario)?;
            let result = run(&s, &overrides.config(&s))?;
            for m in &result.monitors {
                let st = match m.status {
                    MonitorStatus::Pass => "pass",
                    MonitorStatus::Fail => "fail",
                    MonitorStatus::NotApplicable => "not_applicable",
                };
                println!(
                    "monitor={} status={st} worst={} tol={} t={} detail=\"{}\"",
                    m.name,
                    opt(m.worst),
                    fmt_sig(m.tolerance),
                    opt(m.time),
                    m.detail
                );
            }
            let (pass, fail, na) = counts(&result);
            println!("monitors_passed={pass} monitors_failed={fail} monitors_na={na}");
            if strict {
                strict_check(&result)?;
            }
            Ok(())
        }
        Command::Sweep {
            scenario,
            param,
            range,
            out,
            overrides,
        } => {
            if range.is_empty() {
                return Err(Failure::Error("--range needs at least one value".into()));
            }
            let s = load(&scenario)?;
            let base = overrides.config(&s);
            let configs: Vec<SimulationConfig> = range
                .iter()
                .map(|&v| {
                    let mut c = base.clone();
                    match param {
                        SweepParam::Dt => c.dt = v,
                        SweepParam::DeltaFactor => c.delta_factor = v,
                        SweepParam::CaptureRadius => c.capture_radius = v,
                    }
                    c
                })
                .collect();
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = configs
                    .iter()
                    .map(|c| scope.spawn(|| run(&s, c)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("sweep worker panicked"))
                    .collect()
            });
            let name = match param {
                SweepParam::Dt => "dt",
                SweepParam::DeltaFactor => "delta-factor",
                SweepParam::CaptureRadius => "capture-radius",
            };
            let mut csv = String::from("param,value,status,t_f,spread,monitors_passed,monitors_failed\n");
            for (v, r) in range.iter().zip(results) {
                let r = r?;
                let (pass, fail, _) = counts(&r);
                csv.push_str(&format!(
                    "{name},{},{},{},{},{pass},{fail}\n",
                    fmt_sig(*v),
                    status(&r),
                    opt(r.t_f()),
                    opt(r.spread())
                ));
            }
            match out {
                Some(p) => std::fs::write(&p, csv)
                    .map_err(|e| Failure::Error(format!("{}: {e}", p.display())))?,
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn status(r: &SimulationResult) -> &'static str {
    match r.status {
        salvo_core::sim::RunStatus::Complete => "complete",
        salvo_core::sim::RunStatus::Partial => "partial",
        salvo_core::sim::RunStatus::Empty => "empty",
    }
}
