use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use stepwise_core::bayes::StepwiseBayes;
use stepwise_core::config::Config;
use stepwise_core::report::{fmt_float, point_report, scaling_csv, scan_csv, trace_csv};
use stepwise_core::scan::{run_scaling, run_scan};

#[derive(Parser)]
#[command(
    name = "stepwise",
    version,
    about = "Joint vs stepwise two-parameter estimation bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output file; relative paths resolve against OUT_DIR when it is set.
    /// Without it, output goes to OUT_DIR/<command>.csv or to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: WORKER_THREADS, else all logical cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Bounds over a two-axis parameter grid.
    Scan(Common),
    /// Ising bounds against chain length at a fixed point.
    Scaling(Common),
    /// Two-phase Bayesian run; writes the trace.
    Bayes {
        #[command(flatten)]
        common: Common,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// All bounds at the configured point, as key=value lines.
    Point {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        lambda1: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        lambda2: Option<f64>,
    },
}

fn threads(requested: Option<usize>) -> Result<usize> {
    if let Some(n) = requested {
        return Ok(n.max(1));
    }
    match std::env::var("WORKER_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(|n| n.max(1))
            .with_context(|| format!("WORKER_THREADS={v:?} is not a thread count")),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn output_path(out: Option<&Path>, default_name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os("OUT_DIR").map(PathBuf::from);
    match (out, dir) {
        (Some(p), Some(d)) if p.is_relative() => Some(d.join(p)),
        (Some(p), _) => Some(p.to_path_buf()),
        (None, Some(d)) => Some(d.join(default_name)),
        (None, None) => None,
    }
}

fn emit(path: Option<PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn metadata(command: &str, config_text: &str) -> String {
    let mut s = format!(
        "# stepwise {} git {}\n# command: {command}\n",
        env!("CARGO_PKG_VERSION"),
        env!("STEPWISE_GIT_HASH")
    );
    for line in config_text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        s.push_str("# config: ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

fn load(common: &Common) -> Result<(String, Config)> {
    let text = fs::read_to_string(&common.config)
        .with_context(|| format!("reading {}", common.config.display()))?;
    let cfg =
        Config::parse(&text).with_context(|| format!("parsing {}", common.config.display()))?;
    Ok((text, cfg))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Scan(common) => {
            let (text, cfg) = load(&common)?;
            let spec = cfg.scan_spec()?;
            let rows = run_scan(&spec, threads(common.threads)?)?;
            let body = metadata("scan", &text) + &scan_csv(&rows);
            emit(output_path(common.out.as_deref(), "scan.csv"), &body)
        }
        Command::Scaling(common) => {
            let (text, cfg) = load(&common)?;
            let (lengths, point) = cfg.scaling()?;
            let rows = run_scaling(&lengths, point, threads(common.threads)?)?;
            let body = metadata("scaling", &text) + &scaling_csv(&rows);
            emit(output_path(common.out.as_deref(), "scaling.csv"), &body)
        }
        Command::Bayes { common, seed } => {
            let (text, cfg) = load(&common)?;
            let (setup, mut bayes) = cfg.bayes_config()?;
            if let Some(seed) = seed {
                bayes.seed = seed;
            }
            let model = setup
                .state_model()?
                .context("model has no state representation")?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads(common.threads)?)
                .build_global()
                .ok();
            let prepared = StepwiseBayes::new(model.as_ref(), &bayes)?;
            let (m1, m2) = prepared.phase_shots();
            let header = metadata("bayes", &text)
                + &format!(
                    "# seed={} gamma={} m1={m1} m2={m2}\n# mu={} mu_tilde={}\n",
                    bayes.seed,
                    fmt_float(bayes.gamma),
                    fmt_float(prepared.mu()),
                    fmt_float(prepared.mu_tilde())
                );
            let path = output_path(common.out.as_deref(), "bayes.csv");
            match prepared.run(bayes.seed) {
                Ok(trace) => emit(path, &(header + &trace_csv(&trace))),
                Err(abort) => {
                    let partial = header
                        + &format!("# aborted: {}\n", abort.error)
                        + &trace_csv(&abort.trace);
                    emit(path, &partial)?;
                    bail!(abort)
                }
            }
        }
        Command::Point {
            common,
            lambda1,
            lambda2,
        } => {
            let (_, cfg) = load(&common)?;
            let mut setup = cfg.setup()?;
            if let Some(v) = lambda1 {
                setup.point.lambda1 = v;
            }
            if let Some(v) = lambda2 {
                setup.point.lambda2 = v;
            }
            let eval = setup.evaluate()?;
            let body = format!(
                "model={}\nlambda1={}\nlambda2={}\n",
                setup.kind.as_str(),
                fmt_float(setup.point.lambda1),
                fmt_float(setup.point.lambda2)
            ) + &point_report(&eval);
            emit(
                common.out.as_deref().and_then(|p| output_path(Some(p), "")),
                &body,
            )
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
