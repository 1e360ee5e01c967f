//! The envelope `E(x, x)` against `phi` on the quartic double well: it sits
//! below `phi`, touches it at the stationary points, and is continuous.

use bifrb::envelope::envelope_value;
use bifrb::planner::{plan, PlanRequest};
use bifrb::problem::instances::quartic1d;
use bifrb::Vector;

fn main() -> bifrb::Result<()> {
    let p = quartic1d()?;
    let params = plan(&p, &PlanRequest::default())?;
    println!("{:>6} {:>12} {:>12} {:>12}", "x", "phi", "E(x, x)", "gap");
    for i in -8..=8 {
        let x = Vector::from_element(1, 0.2 * i as f64);
        let phi = p.phi(&x).to_f64();
        let e = envelope_value(&p, &params, &x, &x)?;
        println!("{:>6.2} {:>12.6} {:>12.6} {:>12.3e}", x[0], phi, e, phi - e);
    }
    Ok(())
}
