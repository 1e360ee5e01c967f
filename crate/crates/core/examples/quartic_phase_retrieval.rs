//! Phase retrieval under the quartic kernel `|x|^4/4 + |x|^2/2`, where `f`
//! has no Lipschitz gradient but is smooth relative to `h`.

use bifrb::planner::{plan, PlanRequest};
use bifrb::problem::instances::{phase_retrieval, PhaseRetrievalG, PhaseRetrievalParams};
use bifrb::solver::{run, SolverOptions};
use bifrb::Vector;

fn main() -> bifrb::Result<()> {
    for g in [PhaseRetrievalG::Zero, PhaseRetrievalG::L1] {
        let p = phase_retrieval(PhaseRetrievalParams { g, ..Default::default() })?;
        let params = plan(&p, &PlanRequest::default())?;
        println!("{} with g = {}: gamma {:.4}, beta {:.4} ({})", p.name, p.g.name(), params.gamma, params.beta, params.corollary_tag);
        for start in [[0.5, 0.5], [-1.0, 0.2], [1.2, -1.4]] {
            let x0 = Vector::from_row_slice(&start);
            let out = run(&p, &params, &x0, &x0, &SolverOptions::default())?;
            let x = out.last_x().unwrap();
            println!(
                "  from {start:?}: {:?} in {} steps, x = ({:.6}, {:.6}), phi = {:.3e}",
                out.status,
                out.iterations(),
                x[0],
                x[1],
                out.trace.last().unwrap().phi
            );
        }
    }
    Ok(())
}
