//! Classify merit decay: a linear run, a finitely terminating one, and a
//! synthetic sublinear sequence with a known exponent.

use bifrb::harness::rates::{analyze_merits, exponent_from_theta};
use bifrb::planner::{plan, PlanRequest};
use bifrb::problem::instances;
use bifrb::solver::{run, SolverOptions, StopCriteria};
use bifrb::Vector;

fn main() -> bifrb::Result<()> {
    // the concave box run goes to the iteration cap so that the zeros after
    // finite termination show up in the trace
    for (name, eps) in [("convex-quadratic", 1e-13), ("concave-box", -1.0)] {
        let opts = SolverOptions::with_stop(StopCriteria { eps_residual: eps, max_iters: 200 });
        let p = instances::build(name, &serde_json::json!({}))?;
        let params = plan(&p, &PlanRequest::default())?;
        let x0 = Vector::from_element(p.dimension, 0.3);
        let out = run(&p, &params, &x0, &x0, &opts)?;
        // phi* is estimated from the trace: concave-box stops at a local corner
        let merits: Vec<f64> = out.trace.iter().map(|r| r.merit).collect();
        match analyze_merits(&merits, None) {
            Ok(r) => println!("{name}: {:?}, q = {:?}, R^2 = {:.5}, finite at {:?}", r.regime, r.q, r.r_squared, r.finite_at),
            Err(e) => println!("{name}: {e}"),
        }
    }

    let theta = 0.8;
    let p = exponent_from_theta(theta);
    let merits: Vec<f64> = (0..300).map(|k| 1.0 + (k.max(1) as f64).powf(p)).collect();
    let r = analyze_merits(&merits, Some(1.0))?;
    println!("synthetic k^{p:.3}: {:?}, theta = {:?}", r.regime, r.theta);
    Ok(())
}
