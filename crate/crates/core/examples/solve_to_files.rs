//! Drive a run from a JSON config, write the trace and manifest, and replay
//! the manifest.

use bifrb::harness::config::RunConfig;
use bifrb::harness::trace::RunManifest;
use bifrb::harness::{replay, solve_to_disk};

fn main() -> bifrb::Result<()> {
    let dir = std::env::temp_dir().join("bifrb-example");
    let mut cfg = RunConfig::from_json(
        r#"{
            "instance": "convex-lasso",
            "instance_params": {"dim": 2, "lambda": 0.2},
            "plan": {"mode": "CVX_A"},
            "start": {"x0": [1.0, -1.0]},
            "stop": {"eps_residual": 1e-10, "max_iters": 10000}
        }"#,
    )?;
    cfg.output_dir = dir;
    let (res, trace, manifest) = solve_to_disk(&cfg)?;
    println!("{:?} after {} steps", res.outcome.status, res.outcome.iterations());
    println!("trace    {}", trace.display());
    println!("manifest {}", manifest.display());

    let again = replay(&RunManifest::read(&manifest)?)?;
    let same = again.outcome.trace.iter().zip(&res.outcome.trace).all(|(a, b)| a.x == b.x && a.merit == b.merit);
    println!("replay identical: {same}");
    Ok(())
}
