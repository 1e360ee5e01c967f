//! The two-point example: `f = x^2/2` on `{-1, 1}`. With `alpha = 1/2`
//! outside the certified range the iterates alternate forever; at
//! `alpha = 0.3` the fixed point `1` is kept.

use bifrb::planner::{plan, PlanMode, PlanRequest};
use bifrb::problem::instances::counterexample;
use bifrb::solver::{run, SolverOptions, StopCriteria};
use bifrb::Vector;

fn main() -> bifrb::Result<()> {
    let p = counterexample(1.0)?;
    let opts = SolverOptions::with_stop(StopCriteria { eps_residual: 1e-10, max_iters: 8 });
    for (alpha, xm, x0) in [(0.5, -1.0, 1.0), (0.3, 1.0, 1.0)] {
        let req = PlanRequest { mode: PlanMode::Manual, alpha: Some(alpha), beta: Some(0.0), ..Default::default() };
        let params = plan(&p, &req)?;
        let out = run(&p, &params, &Vector::from_element(1, xm), &Vector::from_element(1, x0), &opts)?;
        let xs: Vec<String> = out.trace.iter().map(|r| format!("{:+}", r.x[0])).collect();
        println!("alpha = {alpha}: {:?} after {} steps", out.status, out.iterations());
        println!("  iterates  {}", xs.join(" "));
        println!("  D steps   {:?}", out.trace.iter().map(|r| r.d_step).collect::<Vec<_>>());
    }

    // the certified plan for the same problem converges
    let params = plan(&p, &PlanRequest::default())?;
    let out = run(&p, &params, &Vector::from_element(1, -1.0), &Vector::from_element(1, 1.0), &SolverOptions::default())?;
    println!("planned alpha = {:.3}: {:?} at x = {}", params.alpha, out.status, out.last_x().unwrap()[0]);
    Ok(())
}
