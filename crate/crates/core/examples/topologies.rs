//! Build each topology family, print its size and the disjoint paths between
//! Alice and Bob, and dump one in adjacency text format.

use qkdsim::topology::{build_topology, disjoint_paths, ShapeParams, TopologyKind};

fn main() -> qkdsim::Result<()> {
    let shape = ShapeParams::default();
    println!("{:<8} {:>5} {:>5} {:>6}  first path", "kind", "nodes", "links", "paths");
    for kind in TopologyKind::ALL {
        let t = build_topology(kind, 40.0, &shape)?;
        let paths = disjoint_paths(&t, t.alice(), t.bob(), 4)?;
        let first: Vec<String> = paths[0].nodes.iter().map(|n| n.to_string()).collect();
        println!(
            "{:<8} {:>5} {:>5} {:>6}  {} ({:.1} km)",
            kind.to_string(),
            t.node_count(),
            t.links.len(),
            paths.len(),
            first.join("-"),
            paths[0].total_length_km()
        );
    }

    let torus = build_topology(TopologyKind::Torus, 30.0, &shape)?;
    print!("\n{}", torus.to_adjacency_text());
    Ok(())
}
