//! Sensing quality, coverage objective and gradient-ascent inputs for two
//! cameras over a Gaussian density.

use holeguard::coverage::{coverage_eval, partition, sensing_quality, CoverageGrid, DensityField, GaussianBump, SensingParams};
use holeguard::geometry::{AgentState, Rect, Vec2};

fn main() {
    let params = SensingParams { r: 1.0, kappa: 4.0, sigma: 3.0, m: 11.0, w: 0.4 };
    let density = DensityField::new(
        Rect::new(0.0, 0.0, 40.0, 40.0),
        vec![GaussianBump { weight: 1.0, mean: Vec2::new(22.0, 20.0), scale: 6.0 }],
    );
    let cov = CoverageGrid::new(&density, 0.2);
    let team = [AgentState::new(15.0, 18.0, 8.0, 1.0), AgentState::new(25.0, 22.0, 9.0, 1.2)];

    for d in [0.0, 2.0, 4.0, 6.0, 7.9] {
        let q = Vec2::new(15.0 + d, 18.0);
        println!("f(agent 0, {d:.1} m from nadir) = {:.5}", sensing_quality(&team[0], &q, &params));
    }

    let part = partition(&team, &params, &cov.grid);
    for i in 0..team.len() {
        println!("agent {i}: owns {} cells, {} overlap cells", part.owned_by(i).count(), part.overlap[i].len());
    }

    let eval = coverage_eval(&team, &params, &cov);
    let rep = &eval.report;
    println!("H_M = {:.5}, H_O = {:.5}, H = {:.5}", rep.h_m, rep.h_o, rep.h);
    for (i, u) in eval.nominal.iter().enumerate() {
        println!("agent {i}: u_nom = {:?}", u.as_slice());
    }
}
