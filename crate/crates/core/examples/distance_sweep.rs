//! Key rate against distance for one protocol and topology, written as CSV.
//!
//! `cargo run --release --example distance_sweep -- grid e91`

use qkdsim::experiments::{run_distance_sweep, SweepConfig};
use qkdsim::protocols::{Protocol, ProtocolSpec};
use qkdsim::topology::{ShapeParams, TopologyKind};

fn main() -> qkdsim::Result<()> {
    let mut args = std::env::args().skip(1);
    let kind: TopologyKind = args.next().as_deref().unwrap_or("line").parse()?;
    let protocol: Protocol = args.next().as_deref().unwrap_or("3-stage").parse()?;

    let distances = (1..=12).map(|i| 5.0 * i as f64).collect();
    let cfg = SweepConfig::distances(kind, ShapeParams::default(), ProtocolSpec::for_protocol(protocol), distances)
        .with_rounds(20_000)
        .with_seed(1);
    let result = run_distance_sweep(&cfg)?;
    eprintln!("{protocol} over {kind}, {} paths", result.points[0].paths);
    print!("{}", result.to_csv_string()?);
    Ok(())
}
