//! Power-Delaunay triangulation, overlap graph and trios for a small team.

use holeguard::geometry::{build_graph, power_distance, power_triangles, AgentState};

fn main() {
    let r = 1.0;
    let team = [
        AgentState::new(0.0, 0.0, 3.0, 1.0),
        AgentState::new(4.0, 0.5, 2.5, 1.0),
        AgentState::new(1.5, 3.5, 2.8, 1.0),
        AgentState::new(5.5, 4.0, 3.2, 1.0),
        AgentState::new(9.0, 1.0, 1.0, 1.0),
    ];
    let fovs: Vec<_> = team.iter().map(|s| s.fov(r)).collect();
    println!("power triangles: {:?}", power_triangles(&fovs));

    let graph = build_graph(&team, r);
    println!("edges (overlapping footprints): {:?}", graph.edges);
    for trio in &graph.trios {
        let v = trio.radical_center;
        let powers: Vec<String> = trio.fovs.iter().map(|f| format!("{:.6}", power_distance(f, &v))).collect();
        println!("trio {:?}: radical center ({:.3}, {:.3}), powers [{}]", trio.ids, v.x, v.y, powers.join(", "));
    }
    for i in 0..team.len() {
        println!("agent {i}: neighbors {:?}, trios {}", graph.neighbors(i), graph.agent_trios[i].len());
    }
}
