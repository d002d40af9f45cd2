//! Run a built-in multi-curve recipe at reduced scale and print the curves side by side.
//!
//! `cargo run --release --example recipes -- fig-torus`

use qkdsim::cli::recipes::{run_recipe, Recipe, RecipeSettings};

fn main() -> qkdsim::Result<()> {
    let recipe: Recipe = std::env::args().nth(1).as_deref().unwrap_or("fig-direct").parse()?;
    let settings = RecipeSettings {
        rounds: 10_000,
        seed: 2,
        distances_km: Some((1..=12).map(|i| 5.0 * i as f64).collect()),
        ..RecipeSettings::default()
    };
    let out = run_recipe(recipe, &settings)?;

    print!("{:>6}", "L km");
    for c in &out.curves {
        print!(" {:>14}", c.name);
    }
    println!();
    for (i, p) in out.curves[0].result.points.iter().enumerate() {
        print!("{:>6}", p.x);
        for c in &out.curves {
            print!(" {:>14.5}", c.result.points[i].key_rate);
        }
        println!();
    }
    for (name, text) in &out.extras {
        println!("\n{name}\n{text}");
    }
    Ok(())
}
