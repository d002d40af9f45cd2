//! Larger 3-stage bursts push the plateau out; the stable distance of each
//! curve follows a cubic in log10(b).

use qkdsim::analysis::{fit_log_cubic, stable_distance, LogBase, StableDistanceOptions};
use qkdsim::experiments::{run_burst_sweep, SweepConfig};
use qkdsim::protocols::ProtocolSpec;
use qkdsim::topology::{ShapeParams, TopologyKind};

fn main() -> qkdsim::Result<()> {
    let distances = (1..=80).map(|i| 5.0 * i as f64).collect();
    let cfg = SweepConfig::distances(TopologyKind::Line, ShapeParams::default(), ProtocolSpec::three_stage(10), distances)
        .with_rounds(20_000)
        .with_seed(3)
        .with_bursts(vec![10, 100, 1_000, 10_000, 100_000, 1_000_000]);
    let sweep = run_burst_sweep(&cfg)?;

    let opts = StableDistanceOptions::default();
    let mut bursts = Vec::new();
    let mut ds = Vec::new();
    for c in &sweep.curves {
        let d = stable_distance(&c.result.xs(), &c.result.key_rates(), &opts)?;
        println!("b = {:>8}  stable distance {d:>5.0} km", c.burst);
        bursts.push(c.burst as f64);
        ds.push(d);
    }
    let fit = fit_log_cubic(&bursts, &ds, LogBase::Ten)?;
    let [a, b, c, d] = fit.coefficients();
    println!("D_s = {a:.4} x^3 + {b:.4} x^2 + {c:.4} x + {d:.4},  x = log10 b");
    println!("R2 = {:.4}", fit.fit.diagnostics.r_squared);
    Ok(())
}
