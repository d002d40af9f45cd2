//! Photon-number statistics of a weak coherent pulse and the information a
//! beamsplitting eavesdropper gains.

use qkdsim::photonstats::{
    multi_photon_prob, multi_photon_prob_exact, pns_mutual_information, poisson_pmf, poisson_second_order,
};

fn main() -> qkdsim::Result<()> {
    println!("{:>5} {:>9} {:>9} {:>9} {:>11} {:>11}", "mu", "P(0)", "P(1)", "P(1)~", "multi", "multi exact");
    for mu in [0.05, 0.1, 0.2, 0.5, 0.65, 1.0] {
        println!(
            "{:>5} {:>9.5} {:>9.5} {:>9.5} {:>11.5} {:>11.5}",
            mu,
            poisson_pmf(0, mu),
            poisson_pmf(1, mu),
            poisson_second_order(1, mu)?,
            multi_photon_prob(mu),
            multi_photon_prob_exact(mu)
        );
    }

    let mu = 0.65;
    println!("\nEve's information at mu = {mu}");
    for i in 0..=10 {
        let lambda = i as f64 / 10.0;
        let bar = "#".repeat((pns_mutual_information(mu, lambda)? * 400.0) as usize);
        println!("  lambda {lambda:.1} {bar}");
    }
    Ok(())
}
