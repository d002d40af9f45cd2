//! Estimate QBER on a noisy pool, apply the error-correction penalty, and
//! relay a key across trusted nodes by public XOR announcements.

use qkdsim::keymgmt::{corrected_key_rate, estimate_qber, relay_announcements, xor_relay, KeyPool};
use qkdsim::topology::NodeId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn show(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn main() -> qkdsim::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let mut pool = KeyPool::new((NodeId(0), NodeId(1)));
    for _ in 0..20_000 {
        let a: bool = rng.random();
        pool.push(a, a ^ (rng.random::<f64>() < 0.02));
    }
    let raw = pool.len() as f64;
    let q = estimate_qber(&mut pool, 0.1)?;
    println!("QBER {:.4} from {} sampled bits", q.q, q.sample_size);
    println!("raw {raw} bits -> {:.0} after correction", corrected_key_rate(raw, q.q));

    let keys: Vec<Vec<bool>> = (0..4).map(|_| (0..24).map(|_| rng.random()).collect()).collect();
    println!("\nsegment keys");
    for (i, k) in keys.iter().enumerate() {
        println!("  K{}{} {}", i + 1, i + 2, show(k));
    }
    println!("announcements");
    for a in relay_announcements(&keys)? {
        println!("        {}", show(&a));
    }
    let bob = xor_relay(&keys)?;
    println!("Bob     {}  matches Alice: {}", show(&bob), bob == keys[0]);
    Ok(())
}
