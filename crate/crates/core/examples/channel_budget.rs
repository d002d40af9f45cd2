//! Survival probability over fiber and through the star's switch, and what
//! parallel Bell measurements buy at a repeater.

use qkdsim::channel::{path_transmission, redundant_bsm_success, transmission_probability};
use qkdsim::topology::{NodeKind, RoutePath, ALPHA_FIBER, ALPHA_SWITCH};

fn main() -> qkdsim::Result<()> {
    println!("{:>6} {:>10} {:>10} {:>12}", "L km", "fiber", "switch", "3 passes");
    for l in [1.0, 5.0, 10.0, 20.0, 40.0, 60.0] {
        let once = RoutePath::fiber(&[l], ALPHA_FIBER, NodeKind::Trusted)?;
        println!(
            "{:>6} {:>10.5} {:>10.5} {:>12.5}",
            l,
            transmission_probability(l, ALPHA_FIBER)?,
            transmission_probability(l, ALPHA_SWITCH)?,
            path_transmission(&once, 3)?
        );
    }

    println!("\nBell measurement with B = 0.85");
    for r in 1..=5 {
        println!("  r = {r}: {:.7}", redundant_bsm_success(0.85, r)?);
    }
    Ok(())
}
