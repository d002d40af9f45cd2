//! Single rounds of the three protocols: closed-form delivery probability
//! against an empirical count over a fixed random stream.

use qkdsim::channel::ChannelParams;
use qkdsim::experiments::derive_stream;
use qkdsim::protocols::{ProtocolSpec, RoundEngine};
use qkdsim::topology::{NodeKind, RoutePath};

const ROUNDS: u64 = 50_000;

fn main() -> qkdsim::Result<()> {
    let ch = ChannelParams::default();
    let direct = RoutePath::fiber(&[10.0], ch.alpha, NodeKind::Trusted)?;
    let chain = RoutePath::fiber(&[10.0, 10.0, 10.0], ch.alpha, NodeKind::Repeater)?;

    let runs = [
        ("decoy, 10 km", RoundEngine::new(&direct, &ProtocolSpec::decoy(), &ch)?),
        ("3-stage b=10, 10 km", RoundEngine::new(&direct, &ProtocolSpec::three_stage(10), &ch)?),
        ("3-stage b=1, 10 km", RoundEngine::new(&direct, &ProtocolSpec::three_stage(1), &ch)?),
        ("E91 r=5, 10 km", RoundEngine::new(&direct, &ProtocolSpec::e91(), &ch)?),
        ("E91 r=5, 3x10 km repeaters", RoundEngine::new(&chain, &ProtocolSpec::e91(), &ch)?),
    ];

    println!("{:<28} {:>10} {:>10} {:>8}", "engine", "expected", "observed", "errors");
    for (lane, (name, engine)) in runs.iter().enumerate() {
        let (mut hits, mut flips) = (0u64, 0u64);
        for r in 0..ROUNDS {
            let out = engine.run(&mut derive_stream(7, lane as u64, 0, r));
            if out.delivered {
                hits += 1;
                flips += u64::from(out.alice_bit != out.bob_bit);
            }
        }
        println!(
            "{:<28} {:>10.5} {:>10.5} {:>8.4}",
            name,
            engine.delivery_probability(),
            hits as f64 / ROUNDS as f64,
            flips as f64 / hits.max(1) as f64
        );
    }
    Ok(())
}
