//! Nine cameras climbing a three-peak density, with and without the hole
//! filter. Prints the hole statistics and coverage values of both runs.
//!
//! `cargo run --release --example nine_agents -- [steps] [scenario.cfg]`

use std::time::Instant;

use holeguard::config::{parse_config, NINE_AGENTS};
use holeguard::sim::{run, Mode};

fn main() {
    let text = match std::env::args().nth(2) {
        Some(path) => std::fs::read_to_string(path).expect("readable scenario file"),
        None => NINE_AGENTS.to_string(),
    };
    let mut sc = parse_config(&text).expect("scenario parses");
    if let Some(steps) = std::env::args().nth(1) {
        sc.steps = steps.parse().expect("steps must be an integer");
    }
    for mode in [Mode::Ncbf, Mode::NominalOnly] {
        sc.mode = mode;
        let t0 = Instant::now();
        let (trace, s) = run(&sc);
        println!("mode {mode} ({} steps, {:.1} s)", s.steps, t0.elapsed().as_secs_f64());
        println!(
            "  oracle witnesses at {}/{} sampled steps ({:.2}%)",
            s.hole_witness_steps,
            s.sampled_steps,
            100.0 * s.witness_fraction()
        );
        println!(
            "  exact-hole steps {}, switch-induced episodes {}, other episodes {}, longest {} steps",
            s.exact_hole_steps, s.switch_induced_holes, s.other_holes, s.longest_hole
        );
        println!("  switches {}, clamp events {}, QP fallbacks {}", s.switch_count, s.clamp_events, s.qp_fallbacks);
        println!("  H {:.4} (H_M {:.4}, H_O {:.4}), min NCBF {:.4}", s.final_h, s.final_h_m, s.final_h_o, s.min_ncbf.unwrap_or(f64::NAN));
        for k in [0, trace.len() / 4, trace.len() / 2, trace.len() - 1] {
            let r = &trace[k];
            let xs: Vec<String> = r.agents.iter().map(|a| format!("({:.1},{:.1},{:.1})", a.state.x, a.state.y, a.radius)).collect();
            println!("  step {k}: H {:.4} {}", r.h, xs.join(" "));
        }
    }
}
