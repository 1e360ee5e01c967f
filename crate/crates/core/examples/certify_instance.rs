//! Run the invariant suite on an instance named on the command line
//! (default `nonconvex-qp-l1`).

use bifrb::harness::certify::{certify, CertifyOptions};
use bifrb::planner::{plan, PlanRequest};
use bifrb::problem::instances;

fn main() -> bifrb::Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "nonconvex-qp-l1".into());
    let p = instances::build(&name, &serde_json::Value::Null)?;
    let params = plan(&p, &PlanRequest::default())?;
    let report = certify(&p, &params, &CertifyOptions { starts: 4, ..Default::default() })?;
    println!("{} ({} kernel), plan {}", report.instance, report.kernel, params.corollary_tag);
    for r in &report.invariants {
        println!("  {:<20} {:?}: {}", r.name, r.status, r.detail);
    }
    println!("passed: {}", report.passed);
    Ok(())
}
