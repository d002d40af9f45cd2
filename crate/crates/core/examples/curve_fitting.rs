//! Smooth a simulated key-rate curve, fit a sigmoid, and locate its turning point.

use qkdsim::analysis::{
    fit_polynomial, fit_sigmoid, savgol_smooth, turning_point, FitReport, DEFAULT_EPSILON_FRACTION,
};
use qkdsim::experiments::{run_distance_sweep, SweepConfig};
use qkdsim::protocols::ProtocolSpec;
use qkdsim::topology::{ShapeParams, TopologyKind};

fn main() -> qkdsim::Result<()> {
    let cfg = SweepConfig::distances(
        TopologyKind::Line,
        ShapeParams::default(),
        ProtocolSpec::three_stage(10),
        (1..=60).map(f64::from).collect(),
    )
    .with_rounds(100_000)
    .with_seed(5);
    let result = run_distance_sweep(&cfg)?;
    let (xs, ys) = (result.xs(), result.key_rates());

    let smooth = savgol_smooth(&ys, 11, 3)?;
    let plateau = smooth.iter().copied().fold(0.0, f64::max);
    let tp = turning_point(&xs, &smooth, DEFAULT_EPSILON_FRACTION * plateau)?;

    let fit = fit_sigmoid(&xs, &ys)?;
    print!("{}", FitReport::sigmoid(&fit, &xs, &ys).to_text());
    println!("turning point {tp} km, plateau end {:.1} km", fit.plateau_end(0.95));

    let cubic = fit_polynomial(&xs, &ys, 3)?;
    println!("cubic R2 {:.4} vs sigmoid R2 {:.4}", cubic.diagnostics.r_squared, fit.diagnostics.r_squared);
    Ok(())
}
