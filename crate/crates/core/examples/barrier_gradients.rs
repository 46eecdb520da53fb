//! Barrier components of one trio from each member's point of view, with the
//! analytic gradients checked against central differences.

use holeguard::barrier::{cbf_components, cbf_gradient, ncbf_value, Component};
use holeguard::geometry::{AgentState, TrioContext};

fn main() {
    let r = 1.0;
    let states = [
        AgentState::new(0.3, 2.1, 1.7, 0.9),
        AgentState::new(-1.2, -0.4, 1.4, 1.1),
        AgentState::new(2.2, -0.1, 1.9, 1.3),
    ];
    let trio = TrioContext::from_states([0, 1, 2], states, r).expect("non-degenerate trio");
    println!("radical center ({:.4}, {:.4})", trio.radical_center.x, trio.radical_center.y);

    for vp in 0..3 {
        let comps = cbf_components(&trio, vp).unwrap();
        let h = ncbf_value(&trio, vp, 0.2).unwrap();
        println!("agent {vp}: components {:?}, h = {:.4} (argmax {})", comps.vals, h.value, h.argmax.number());
        for comp in Component::ALL {
            let g = cbf_gradient(&trio, vp, comp).unwrap().to_vector();
            let mut worst: f64 = 0.0;
            for d in 0..4 {
                let eval = |delta: f64| {
                    let mut s = states;
                    let mut a = s[vp].as_array();
                    a[d] += delta;
                    s[vp] = AgentState::from_array(a);
                    cbf_components(&TrioContext::from_states([0, 1, 2], s, r).unwrap(), vp).unwrap().get(comp)
                };
                let fd = (eval(1e-6) - eval(-1e-6)) / 2e-6;
                worst = worst.max((g[d] - fd).abs() / fd.abs().max(1e-8));
            }
            println!("  component {}: grad {:?}, worst rel. error vs FD {:.2e}", comp.number(), g.as_slice(), worst);
        }
    }
}
