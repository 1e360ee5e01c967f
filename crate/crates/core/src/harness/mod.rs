//! Experiment plumbing: configs, traces, manifests, rate fits and the
//! invariant suite behind the command-line tool.

pub mod certify;
pub mod config;
pub mod rates;
pub mod trace;

use std::path::PathBuf;

use crate::error::Result;
use crate::harness::config::RunConfig;
use crate::harness::trace::{output_paths, write_trace_file, RunManifest};
use crate::linesearch::run_ls;
use crate::planner::{plan, PlannedParams};
use crate::problem::ProblemInstance;
use crate::solver::{run, RunOutcome, SolverOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A finished run and its manifest.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub outcome: RunOutcome,
    pub manifest: RunManifest,
}

/// Build, plan and run a configuration without touching the filesystem.
pub fn solve(cfg: &RunConfig) -> Result<SolveResult> {
    let p = cfg.build_instance()?;
    let params = plan(&p, &cfg.plan)?;
    solve_with(cfg, &p, &params)
}

/// Run `cfg` on an already built instance with fixed parameters.
pub fn solve_with(cfg: &RunConfig, p: &ProblemInstance, params: &PlannedParams) -> Result<SolveResult> {
    if params.envelope_threshold_warning {
        log::warn!("gamma = {} is at or above the envelope continuity threshold", params.gamma);
    }
    let (xm, x0) = cfg.start_points(p)?;
    let opts = SolverOptions { stop: cfg.stop, tie_break: cfg.tie_break, ..Default::default() };
    let outcome = if cfg.linesearch.enabled {
        let mut provider = cfg.linesearch.provider();
        run_ls(p, params, &cfg.linesearch.config(), provider.as_mut(), &xm, &x0, &opts)?.run
    } else {
        run(p, params, &xm, &x0, &opts)?
    };
    let manifest = RunManifest {
        instance: p.name.clone(),
        instance_params: p.params.clone(),
        kernel: p.kernel.name().to_string(),
        plan_request: cfg.plan.clone(),
        planned: params.clone(),
        x_minus1: xm.iter().copied().collect(),
        x0: x0.iter().copied().collect(),
        stop: cfg.stop,
        linesearch: cfg.linesearch.enabled.then_some(cfg.linesearch),
        tie_break: cfg.tie_break,
        seed: cfg.seed,
        version: VERSION.to_string(),
        status: outcome.status,
        iterations: outcome.iterations(),
        failure: outcome.failure.clone(),
        trace_file: format!("{}.csv", cfg.basename()),
    };
    Ok(SolveResult { outcome, manifest })
}

/// `solve` and write the trace and manifest under `cfg.output_dir`.
pub fn solve_to_disk(cfg: &RunConfig) -> Result<(SolveResult, PathBuf, PathBuf)> {
    let res = solve(cfg)?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let (trace_path, manifest_path) = output_paths(&cfg.output_dir, &cfg.basename());
    write_trace_file(&trace_path, &res.outcome.trace)?;
    res.manifest.write(&manifest_path)?;
    Ok((res, trace_path, manifest_path))
}

/// Rerun a manifest; the trace matches the original up to `wall_ns`.
pub fn replay(m: &RunManifest) -> Result<SolveResult> {
    let cfg = m.to_config();
    let p = cfg.build_instance()?;
    solve_with(&cfg, &p, &m.planned)
}
