//! Plain iteration against the Broyden linesearch on a strongly convex toy.

use bifrb::linesearch::{run_ls, BroydenProvider, LinesearchConfig};
use bifrb::planner::{plan, PlanRequest};
use bifrb::problem::instances::{logcosh_toy, LogCoshParams};
use bifrb::solver::{run, SolverOptions, StopCriteria};
use bifrb::Vector;

fn main() -> bifrb::Result<()> {
    let p = logcosh_toy(LogCoshParams::default())?;
    let params = plan(&p, &PlanRequest::default())?;
    let opts = SolverOptions::with_stop(StopCriteria { eps_residual: 1e-12, max_iters: 10_000 });
    let x0 = Vector::from_row_slice(&[3.0, 3.0]);
    let xstar = p.known_minimizer.clone().unwrap();

    let plain = run(&p, &params, &x0, &x0, &opts)?;
    println!("plain: {:?} in {} steps", plain.status, plain.iterations());

    for memory in [0, 3, 20] {
        let mut provider = BroydenProvider::new(memory);
        let ls = run_ls(&p, &params, &LinesearchConfig::default(), &mut provider, &x0, &x0, &opts)?;
        println!("broyden memory {memory:>2}: {:?} in {} steps, {} restarts", ls.run.status, ls.run.iterations(), provider.restarts);
        if memory == 20 {
            for s in &ls.steps {
                println!("  |x - x*| = {:.3e}  tau = {}  backtracks = {}", (&s.x - &xstar).norm(), s.tau, s.backtracks);
            }
        }
    }
    Ok(())
}
