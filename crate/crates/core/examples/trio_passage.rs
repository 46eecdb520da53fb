//! One camera flies between two hovering cameras, with the full composed
//! barrier filter and with the footprint-only filter.

use holeguard::barrier::Component;
use holeguard::config::{parse_config, TRIO};
use holeguard::sim::{run, Mode};

fn main() {
    let base = parse_config(TRIO).expect("bundled scenario parses");
    for mode in [Mode::Ncbf, Mode::HfOnly] {
        let mut sc = base.clone();
        sc.mode = mode;
        let (trace, summary) = run(&sc);
        let mover: Vec<_> = trace.iter().map(|r| &r.agents[0]).collect();
        let mut switches = Vec::new();
        for w in mover.windows(2) {
            if w[0].argmax != w[1].argmax {
                switches.push((w[1].state.y, w[0].argmax.map(Component::number), w[1].argmax.map(Component::number)));
            }
        }
        let r0 = mover[0].radius;
        let r_min = mover.iter().map(|a| a.radius).fold(f64::INFINITY, f64::min);
        let last = mover.last().unwrap();
        println!("mode {mode}");
        println!("  final y {:.3}, final R {:.3}, min R {:.3} ({:.1}% shrink)", last.state.y, last.radius, r_min, 100.0 * (1.0 - r_min / r0));
        println!("  min NCBF {:.4}, exact-hole steps {}", summary.min_ncbf.unwrap_or(f64::NAN), summary.exact_hole_steps);
        for (y, from, to) in switches {
            println!("  argmax {:?} -> {:?} at y = {y:.3}", from, to);
        }
    }
}
