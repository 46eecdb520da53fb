//! Exact trio hole test against the grid flood-fill oracle while one
//! footprint shrinks.

use holeguard::barrier::ncbf_value;
use holeguard::geometry::{build_graph, detect_holes_grid, hole_exists_exact, AgentState, Rect};

fn main() {
    let r = 1.0;
    let mission = Rect::new(-10.0, -10.0, 10.0, 10.0);
    for z in [2.6, 2.4, 2.32, 2.28, 2.2, 2.0] {
        let team = [AgentState::new(0.0, 0.0, z, 1.0), AgentState::new(4.0, 0.0, z, 1.0), AgentState::new(2.0, 3.4, z, 1.0)];
        let graph = build_graph(&team, r);
        let Some(trio) = graph.trios.first() else {
            println!("R = {z:.2}: no trio");
            continue;
        };
        let h = ncbf_value(trio, 0, 0.2).unwrap().value;
        let exact = hole_exists_exact(trio).unwrap();
        let witnesses = detect_holes_grid(&team, r, &mission, 0.02, &graph.trios).len();
        println!("R = {z:.2}: h = {h:+.4}, exact hole {exact}, grid witnesses {witnesses}");
    }
}
