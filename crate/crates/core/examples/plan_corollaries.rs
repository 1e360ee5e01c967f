//! Stepsize bounds from each corollary, for a weakly convex, a convex and a
//! concave `f` under the Euclidean kernel.

use bifrb::planner::{normalize_moduli, plan_corollary, plan_thm_sd_a_auto, CorollaryTag, KernelModuli};

fn main() {
    let kernel = KernelModuli { sigma_h: Some(1.0), l_h: Some(1.0) };
    let cases = [("weakly convex", -2.0, -2.0), ("convex", 0.5, -2.0), ("concave", -2.0, 1.0)];
    for (what, sigma_f, sigma_minus_f) in cases {
        let m = normalize_moduli(sigma_f, sigma_minus_f).expect("valid moduli");
        println!("{what}: L = {}, p = ({}, {})", m.l_fh, m.p_f, m.p_minus_f);
        for tag in CorollaryTag::COROLLARIES {
            let beta = match tag {
                CorollaryTag::WcA => -0.125,
                CorollaryTag::CcvA => -0.25,
                _ => 0.0,
            };
            match plan_corollary(tag, &m, None, beta, kernel, Some(m.l_fh), None) {
                Ok(p) => println!("  {tag:<10} beta {beta:>6}  c {:.4}  gamma {:.5}", p.c, p.gamma),
                Err(e) => println!("  {tag:<10} not applicable: {e}"),
            }
        }
        match plan_thm_sd_a_auto(&m, None, None) {
            Ok(p) => println!("  {:<10} beta {:>6.3}  c {:.4}  gamma {:.5}", "ThmSD_A", p.beta, p.c, p.gamma),
            Err(e) => println!("  ThmSD_A    {e}"),
        }
    }
}
