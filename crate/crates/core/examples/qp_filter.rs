//! The four-variable safety QP on a few hand-made constraint sets.

use holeguard::qp::{solve_qp, LinearConstraint, QpProblem};
use nalgebra::Vector4;

fn main() {
    let u_nom = Vector4::new(1.0, 2.0, 0.0, 0.5);
    let cases = [
        ("no constraints", vec![]),
        ("satisfied", vec![LinearConstraint::new(Vector4::new(1.0, 0.0, 0.0, 0.0), 0.0)]),
        ("one violated", vec![LinearConstraint::new(Vector4::new(-1.0, -1.0, 0.5, 1.0), 0.0)]),
        (
            "two violated",
            vec![
                LinearConstraint::new(Vector4::new(-1.0, 0.0, 0.0, 0.0), 0.0),
                LinearConstraint::new(Vector4::new(0.0, -1.0, 0.0, 1.0), -1.0),
            ],
        ),
        (
            "contradictory",
            vec![
                LinearConstraint::new(Vector4::new(1.0, 0.0, 0.0, 0.0), 1.0),
                LinearConstraint::new(Vector4::new(-1.0, 0.0, 0.0, 0.0), 1.0),
            ],
        ),
    ];
    for (name, constraints) in cases {
        let p = QpProblem::new(u_nom, 100.0, constraints);
        match solve_qp(&p) {
            Ok(sol) => println!(
                "{name}: u* = {:?}, active {:?}, min residual {:.2e}, KKT {:.2e}",
                sol.u.as_slice(),
                sol.active,
                p.min_residual(&sol.u),
                sol.kkt_residual
            ),
            Err(e) => println!("{name}: {e}"),
        }
    }
}
