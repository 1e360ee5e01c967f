use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bifrb::harness::certify::{certify, CertifyOptions};
use bifrb::harness::config::{ProviderKind, RunConfig, StartPoints};
use bifrb::harness::rates::analyze_merits;
use bifrb::harness::trace::read_trace_file;
use bifrb::harness::{solve_to_disk, VERSION};
use bifrb::planner::{plan, PlanMode};
use bifrb::problem::instances::catalog;
use bifrb::Error;

#[derive(Parser)]
#[command(name = "bifrb", version = VERSION, about = "Bregman inertial forward-reflected-backward splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the method and write `<name>.csv` plus `<name>.manifest.json`.
    Solve(RunArgs),
    /// Check the invariant suite for one instance and print a JSON report.
    Certify {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 10)]
        starts: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Also write the report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Classify the convergence rate of a trace's merit column.
    Rates {
        trace: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        phi_star: Option<f64>,
    },
    /// The two-point alternation with manual parameters.
    Counterexample {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        beta: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value = ".")]
        output_dir: PathBuf,
    },
    /// Print the instance catalog with default parameters.
    ListInstances,
}

/// Flags shared by `solve` and `certify`; each overrides its config key.
#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instance: Option<String>,
    /// Instance parameter as `key=value`; values parse as JSON when they can.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    #[arg(long)]
    kernel: Option<String>,
    /// auto, thmSD-A, thmSD-B, manual or a corollary tag such as WC_A.
    #[arg(long)]
    plan: Option<PlanMode>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Use the given parameters unchecked; the run is not certified.
    #[arg(long)]
    manual: bool,
    /// Comma-separated starting point.
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    x0: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    x_minus1: Option<Vec<f64>>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Enable the linesearch with this direction provider (broyden or zero).
    #[arg(long)]
    linesearch: Option<ProviderKind>,
    #[arg(long)]
    memory: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn config(self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.instance {
            cfg.instance = v;
        }
        if !self.params.is_empty() {
            let mut map = match cfg.instance_params.take() {
                serde_json::Value::Object(m) => m,
                serde_json::Value::Null => Default::default(),
                _ => return Err(Error::Config("instance_params must be an object".into())),
            };
            for kv in &self.params {
                let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--param expects KEY=VALUE, got '{kv}'")))?;
                let value = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
                map.insert(k.to_string(), value);
            }
            cfg.instance_params = serde_json::Value::Object(map);
        }
        if self.kernel.is_some() {
            cfg.kernel = self.kernel;
        }
        if let Some(m) = self.plan {
            cfg.plan.mode = m;
        }
        if self.manual {
            cfg.plan.mode = PlanMode::Manual;
        }
        cfg.plan.alpha = self.alpha.or(cfg.plan.alpha);
        cfg.plan.beta = self.beta.or(cfg.plan.beta);
        cfg.plan.c = self.c.or(cfg.plan.c);
        cfg.plan.gamma = self.gamma.or(cfg.plan.gamma);
        if self.x0.is_some() || self.x_minus1.is_some() {
            cfg.start = StartPoints { x0: self.x0.or(cfg.start.x0), x_minus1: self.x_minus1.or(cfg.start.x_minus1) };
        }
        if let Some(v) = self.eps {
            cfg.stop.eps_residual = v;
        }
        if let Some(v) = self.max_iters {
            cfg.stop.max_iters = v;
        }
        if let Some(kind) = self.linesearch {
            cfg.linesearch.enabled = true;
            cfg.linesearch.provider = kind;
        }
        if let Some(v) = self.memory {
            cfg.linesearch.memory = v;
        }
        if let Some(v) = self.delta {
            cfg.linesearch.delta = v;
        }
        if let Some(dir) = self.output_dir {
            cfg.output_dir = dir;
        }
        if self.name.is_some() {
            cfg.name = self.name;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        Ok(cfg)
    }
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable report")
}

fn solve_cmd(cfg: RunConfig) -> Result<u8, Error> {
    let (res, trace, manifest) = solve_to_disk(&cfg)?;
    let o = &res.outcome;
    eprintln!(
        "{}: {:?} after {} iterations, final merit {:.6e}",
        res.manifest.instance,
        o.status,
        o.iterations(),
        o.final_merit
    );
    if let Some(f) = &o.failure {
        eprintln!("certification failure: {f}");
    }
    eprintln!("wrote {} and {}", trace.display(), manifest.display());
    Ok(o.status.exit_code() as u8)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(args) => solve_cmd(args.config()?),
        Command::Certify { run, starts, iters, samples, report } => {
            let cfg = run.config()?;
            let p = cfg.build_instance()?;
            let params = plan(&p, &cfg.plan)?;
            let r = certify(&p, &params, &CertifyOptions { starts, iterations: iters, samples, seed: cfg.seed })?;
            let text = json(&r);
            if let Some(path) = report {
                std::fs::write(path, format!("{text}\n"))?;
            }
            println!("{text}");
            Ok(if r.passed { 0 } else { 3 })
        }
        Command::Rates { trace, phi_star } => {
            let rows = read_trace_file(&trace)?;
            let merits: Vec<f64> = rows.iter().map(|r| r.merit).collect();
            println!("{}", json(&analyze_merits(&merits, phi_star)?));
            Ok(0)
        }
        Command::Counterexample { alpha, beta, iters, output_dir } => {
            let mut cfg = RunConfig::for_instance("counterexample");
            cfg.plan.mode = PlanMode::Manual;
            cfg.plan.alpha = Some(alpha);
            cfg.plan.beta = Some(beta);
            cfg.start = StartPoints { x0: Some(vec![1.0]), x_minus1: Some(vec![-1.0]) };
            cfg.stop.max_iters = iters;
            cfg.output_dir = output_dir;
            solve_cmd(cfg)
        }
        Command::ListInstances => {
            let mut out = std::io::stdout().lock();
            for info in catalog() {
                // a closed pipe just ends the listing
                if writeln!(out, "{:<18} {}\n{:<18} defaults: {}", info.name, info.summary, "", info.defaults).is_err() {
                    break;
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
