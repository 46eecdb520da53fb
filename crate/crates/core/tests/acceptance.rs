//! Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Runs as a plain binary (`harness = false`) so the report reads top to bottom.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use holeguard::barrier::{cbf_components, cbf_gradient, ncbf_value, Component};
use holeguard::config::{parse_config, NINE_AGENTS, TRIO};
use holeguard::controller::ClassK;
use holeguard::coverage::{DensityField, GaussianBump, SensingParams};
use holeguard::geometry::{
    detect_holes_grid, hole_exists_exact, power_distance, radical_axis, sigma_d_frame,
    signed_area, AgentState, Rect, TrioContext, Vec2,
};
use holeguard::output::write_trace;
use holeguard::qp::{solve_qp, LinearConstraint, QpError, QpProblem};
use holeguard::sim::{run, Mode, RunSummary, Scenario, TraceRecord};
use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{central_difference, context, random_hole_prone_trio, random_overlapping_trio, random_trio, R};

struct Report {
    failures: usize,
}

impl Report {
    fn check(&mut self, id: usize, name: &str, started: Instant, result: Result<String, String>) {
        let secs = started.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {id} {name} ({secs:.1} s): {detail}"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL {id} {name} ({secs:.1} s): {detail}");
            }
        }
    }
}

fn component_value(trio: &TrioContext, viewpoint: usize, c: Component) -> f64 {
    cbf_components(trio, viewpoint).unwrap().get(c)
}

fn gradient_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let states = random_trio(&mut rng);
        let trio = context(states);
        for v in 0..3 {
            for c in Component::ALL {
                let g = cbf_gradient(&trio, v, c).map_err(|e| e.to_string())?.to_vector();
                let fd = Vector4::from_fn(|d, _| central_difference(states, v, d, |t| component_value(t, v, c)));
                let rel = (g - fd).amax() / fd.amax().max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    let detail = format!("1200 gradients, worst relative error {worst:.2e}");
    if worst < 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn power_diagram_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut power, mut perp, mut vx) = (0.0_f64, 0.0_f64, 0.0_f64);
    for _ in 0..1000 {
        let trio = context(random_trio(&mut rng));
        let v = trio.radical_center;
        let p = trio.fovs.map(|f| power_distance(&f, &v));
        let scale = p.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        power = power.max((p[0] - p[1]).abs().max((p[1] - p[2]).abs()) / scale);
        for k in 0..3 {
            let (a, b) = (trio.fovs[k], trio.fovs[(k + 1) % 3]);
            let axis = radical_axis(&a, &b).map_err(|e| e.to_string())?;
            let d = (b.center - a.center).normalize();
            perp = perp.max(axis.direction.dot(&d).abs());
            let frame = sigma_d_frame(&trio, k).map_err(|e| e.to_string())?;
            vx = vx.max(frame.to_frame(&v).x.abs());
        }
    }
    let detail = format!("power spread {power:.1e}, axis cosine {perp:.1e}, |v_x| {vx:.1e}");
    if power < 1e-9 && perp < 1e-12 && vx < 1e-9 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// A disagreement is a boundary case when the radical center is within one
/// grid cell of a footprint boundary or of a triangle edge, so that the hole
/// is thinner than the grid.
fn is_boundary_case(trio: &TrioContext, cell: f64) -> bool {
    let v = trio.radical_center;
    let gap = trio.fovs.iter().map(|f| ((v - f.center).norm() - f.radius).abs()).fold(f64::INFINITY, f64::min);
    let t = trio.triangle();
    let edge = (0..3)
        .map(|k| {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            signed_area(&a, &b, &v).abs() * 2.0 / (b - a).norm()
        })
        .fold(f64::INFINITY, f64::min);
    gap < cell || edge < cell
}

struct OracleStats {
    holes: usize,
    mismatches: usize,
    boundary: usize,
}

/// Compare the barrier sign, the exact test and the grid oracle on `count`
/// trios drawn by `sample`. The grid covers the footprints plus a 1 m margin
/// at a cell of 1% of the triangle diameter.
fn oracle_stats(count: usize, mut sample: impl FnMut() -> [AgentState; 3]) -> Result<OracleStats, String> {
    let mut st = OracleStats { holes: 0, mismatches: 0, boundary: 0 };
    for _ in 0..count {
        let states = sample();
        let trio = context(states);
        let ncbf = ncbf_value(&trio, 0, 0.2).unwrap().value;
        let exact = hole_exists_exact(&trio).map_err(|e| e.to_string())?;
        if (ncbf < 0.0) != exact {
            return Err(format!("barrier sign disagrees with the exact hole test at {states:?}"));
        }
        let (lo, hi) = trio.fovs.iter().fold(
            (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)),
            |(lo, hi), f| (lo.inf(&f.center.add_scalar(-f.radius)), hi.sup(&f.center.add_scalar(f.radius))),
        );
        let rect = Rect::new(lo.x - 1.0, lo.y - 1.0, hi.x + 1.0, hi.y + 1.0);
        let cell = 0.01 * trio.diameter();
        let witnesses = detect_holes_grid(&states, R, &rect, cell, std::slice::from_ref(&trio));
        st.holes += usize::from(exact);
        if exact == witnesses.is_empty() {
            st.mismatches += 1;
            st.boundary += usize::from(is_boundary_case(&trio, cell));
        }
    }
    Ok(st)
}

fn oracle_equivalence() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Degeneracy margin: every pairwise lens is at least two grid cells deep.
    let main = oracle_stats(1000, || random_overlapping_trio(&mut rng, 0.02))?;
    let stress = oracle_stats(1000, || random_hole_prone_trio(&mut rng))?;
    let detail = format!(
        "{} holes, {} mismatches ({} sub-cell); hole-prone set: {} holes, {} mismatches ({} sub-cell)",
        main.holes, main.mismatches, main.boundary, stress.holes, stress.mismatches, stress.boundary
    );
    if main.mismatches <= 10 && main.boundary == main.mismatches && stress.boundary == stress.mismatches {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn argmax_switches_4_2(trace: &[TraceRecord], agent: usize) -> usize {
    let seq: Vec<usize> = trace.iter().filter_map(|r| r.agents[agent].argmax.map(Component::number)).collect();
    seq.windows(2).filter(|w| matches!((w[0], w[1]), (4, 2) | (2, 4))).count()
}

fn trio_replication() -> Result<String, String> {
    let sc = parse_config(TRIO).map_err(|e| e.to_string())?;
    let (trace, _) = run(&sc);
    let last = &trace.last().unwrap().agents[0];
    let passed = last.state.y - sc.agents[1].y.max(sc.agents[2].y) >= last.radius;
    let min_ncbf = trace.iter().filter_map(TraceRecord::min_ncbf).fold(f64::INFINITY, f64::min);
    let switches = argmax_switches_4_2(&trace, 0);

    let mut hf = sc.clone();
    hf.mode = Mode::HfOnly;
    let (hf_trace, _) = run(&hf);
    let r0 = hf_trace[0].agents[0].radius;
    let r_min = hf_trace.iter().map(|r| r.agents[0].radius).fold(f64::INFINITY, f64::min);
    let shrink = 1.0 - r_min / r0;

    let detail = format!(
        "final y {:.2} vs R {:.2}, min ncbf {min_ncbf:.3}, {switches} switches 4<->2, hf_only shrink {:.1}%",
        last.state.y,
        last.radius,
        shrink * 100.0
    );
    if passed && min_ncbf >= 0.0 && switches >= 2 && shrink >= 0.2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn nine_agents(ncbf: &RunSummary, nominal: &RunSummary) -> Result<String, String> {
    let ratio = ncbf.final_h / nominal.final_h;
    let detail = format!(
        "ncbf witnesses {:.3}% (unrecovered {}), nominal witnesses {:.1}%, H {:.2} vs {:.2}",
        ncbf.witness_fraction() * 100.0,
        ncbf.unrecovered_holes,
        nominal.witness_fraction() * 100.0,
        ncbf.final_h,
        nominal.final_h
    );
    let ok = ncbf.witness_fraction() <= 0.001
        && ncbf.unrecovered_holes == 0
        && nominal.witness_fraction() >= 0.1
        && (0.8..=1.0).contains(&ratio);
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn qp_suite() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rand_vec = |rng: &mut ChaCha8Rng, s: f64| Vector4::from_fn(|_, _| rng.gen_range(-s..s));

    // Feasible nominal comes back untouched.
    let u_nom = Vector4::new(1.0, -2.0, 0.5, 0.1);
    let p = QpProblem::new(u_nom, 3e6, vec![LinearConstraint::new(Vector4::new(1.0, 0.0, 0.0, 0.0), 0.0)]);
    if solve_qp(&p).map_err(|e| e.to_string())?.u != u_nom {
        return Err("feasible nominal was modified".into());
    }

    // Single active constraint against the weighted projection formula.
    let mut proj_err = 0.0_f64;
    for _ in 0..1000 {
        let u_nom = rand_vec(&mut rng, 5.0);
        let a = rand_vec(&mut rng, 3.0);
        let b = a.dot(&u_nom) + rng.gen_range(0.1..4.0);
        let p = QpProblem::new(u_nom, rng.gen_range(1.0..1e4), vec![LinearConstraint::new(a, b)]);
        let winv = p.weights.map(|w| 1.0 / w);
        let expect = u_nom + winv.component_mul(&a) * ((b - a.dot(&u_nom)) / a.dot(&winv.component_mul(&a)));
        let got = solve_qp(&p).map_err(|e| e.to_string())?.u;
        proj_err = proj_err.max((got - expect).amax() / expect.amax().max(1.0));
    }

    // Contradictory halfspaces.
    let a = Vector4::new(0.3, -1.0, 2.0, 0.5);
    let p = QpProblem::new(Vector4::zeros(), 1.0, vec![LinearConstraint::new(a, 1.0), LinearConstraint::new(-a, 1.0)]);
    let infeasible = matches!(solve_qp(&p), Err(QpError::Infeasible));

    // Random feasible instances.
    let mut worst_residual = f64::INFINITY;
    for _ in 0..10_000 {
        let m = rng.gen_range(1..=8);
        let anchor = rand_vec(&mut rng, 2.0);
        let cons = (0..m)
            .map(|_| {
                let a = rand_vec(&mut rng, 5.0);
                LinearConstraint::new(a, a.dot(&anchor) - rng.gen_range(0.0..1.0))
            })
            .collect();
        let w = 10f64.powf(rng.gen_range(0.0..6.5));
        let p = QpProblem::new(rand_vec(&mut rng, 10.0), w, cons);
        let sol = solve_qp(&p).map_err(|e| format!("{e} on a feasible instance"))?;
        worst_residual = worst_residual.min(p.min_residual(&sol.u));
    }

    let detail = format!(
        "projection error {proj_err:.1e}, infeasibility detected {infeasible}, worst residual {worst_residual:.1e}"
    );
    if proj_err < 1e-10 && infeasible && worst_residual >= -1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ascent_scenario(agents: Vec<AgentState>) -> Scenario {
    let sensing = SensingParams { r: 1.0, kappa: 4.0, sigma: 1.5, m: 4.0, w: 0.4 };
    let density = DensityField::new(
        Rect::new(0.0, 0.0, 20.0, 20.0),
        vec![GaussianBump { weight: 1.0, mean: Vec2::new(12.0, 12.0), scale: 4.0 }],
    );
    let mut sc = Scenario::new(agents, sensing, density);
    sc.mode = Mode::NominalOnly;
    sc.dt = 0.02;
    sc.steps = 500;
    sc.resolution = 0.1;
    sc.oracle_every = 0;
    sc
}

fn coverage_ascent() -> Result<String, String> {
    let cases = [
        ("one agent", vec![AgentState::new(8.0, 9.0, 3.0, 1.0)]),
        (
            "three agents",
            vec![AgentState::new(4.0, 4.0, 2.0, 1.0), AgentState::new(16.0, 4.0, 2.0, 1.0), AgentState::new(10.0, 16.0, 2.0, 1.0)],
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, agents) in cases {
        let (trace, _) = run(&ascent_scenario(agents));
        let worst = trace.windows(2).map(|w| (w[1].h - w[0].h) / w[0].h.abs()).fold(f64::INFINITY, f64::min);
        let overlap = trace.iter().any(|r| r.h_o != 0.0);
        ok &= worst >= -1e-6 && !overlap;
        parts.push(format!(
            "{name}: H {:.3} -> {:.3}, worst step change {worst:.1e}{}",
            trace[0].h,
            trace.last().unwrap().h,
            if overlap { " (footprints overlapped)" } else { "" }
        ));
    }
    let detail = parts.join("; ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Component of viewpoint `v` that equals the component `c` of viewpoint 0 as
/// a function of the three states.
///
/// Triangle components are minus a barycentric coordinate: `NegJki` belongs to
/// the viewpoint itself, `NegKij` to the next slot and `NegIjk` to the one
/// after. The footprint component is shared because the radical center has
/// equal power with respect to every footprint.
fn same_function(c: Component, v: usize) -> Component {
    let slot = match c {
        Component::Fov => return Component::Fov,
        Component::NegJki => 0,
        Component::NegKij => 1,
        Component::NegIjk => 2,
    };
    match (slot + 3 - v) % 3 {
        0 => Component::NegJki,
        1 => Component::NegKij,
        _ => Component::NegIjk,
    }
}

fn distributed_implies_central() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut checked, mut violations, mut worst_fd) = (0, 0, 0.0_f64);
    for _ in 0..500 {
        let states = random_trio(&mut rng);
        let trio = context(states);
        let h = ncbf_value(&trio, 0, 0.2).unwrap();
        let alpha = ClassK::new(rng.gen_range(0.1..20.0), 3).unwrap();
        let b = -alpha.eval(h.value) / 3.0;
        let global: Vec<Component> = (0..3).map(|v| same_function(h.argmax, v)).collect();
        let mut u = [Vector4::zeros(); 3];
        let mut total = 0.0;
        for v in 0..3 {
            let a = cbf_gradient(&trio, v, global[v]).unwrap().to_vector();
            let u_nom = Vector4::from_fn(|_, _| rng.gen_range(-3.0..3.0));
            let sol = solve_qp(&QpProblem::new(u_nom, rng.gen_range(1.0..1e3), vec![LinearConstraint::new(a, b)]))
                .map_err(|e| e.to_string())?;
            u[v] = sol.u;
            total += a.dot(&sol.u);
        }
        let all_local = (0..3).all(|v| cbf_gradient(&trio, v, global[v]).unwrap().to_vector().dot(&u[v]) >= b - 1e-9);
        if all_local {
            checked += 1;
            if total < 3.0 * b - 1e-9 {
                violations += 1;
            }
        }
        // The per-agent partials add up to the joint directional derivative.
        let eps = 1e-6;
        let shifted = |s: f64| {
            let st: [AgentState; 3] =
                std::array::from_fn(|k| AgentState::from_array((Vector4::from(states[k].as_array()) + u[k] * s).into()));
            component_value(&context(st), 0, global[0])
        };
        let fd = (shifted(eps) - shifted(-eps)) / (2.0 * eps);
        worst_fd = worst_fd.max((fd - total).abs() / total.abs().max(1.0));
    }
    let detail = format!("{checked} trios with all local inequalities, {violations} central violations, sum-vs-joint error {worst_fd:.1e}");
    if checked == 500 && violations == 0 && worst_fd < 1e-5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn trace_bytes(trace: &[TraceRecord]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_trace(&mut buf, trace).expect("writing to memory cannot fail");
    buf
}

fn main() -> ExitCode {
    let mut report = Report { failures: 0 };

    let t = Instant::now();
    report.check(1, "gradient suite", t, gradient_suite());
    let t = Instant::now();
    report.check(2, "power diagram suite", t, power_diagram_suite());
    let t = Instant::now();
    report.check(3, "oracle equivalence", t, oracle_equivalence());
    let t = Instant::now();
    report.check(4, "trio replication", t, trio_replication());

    let t = Instant::now();
    let sc = parse_config(NINE_AGENTS).expect("bundled scenario parses");
    let (ncbf_trace, ncbf) = run(&sc);
    let mut nominal_sc = sc.clone();
    nominal_sc.mode = Mode::NominalOnly;
    let (_, nominal) = run(&nominal_sc);
    report.check(5, "nine-agent replication", t, nine_agents(&ncbf, &nominal));

    let t = Instant::now();
    report.check(6, "QP suite", t, qp_suite());
    let t = Instant::now();
    report.check(7, "coverage ascent", t, coverage_ascent());
    let t = Instant::now();
    report.check(8, "distributed implies central", t, distributed_implies_central());

    let t = Instant::now();
    let (again, _) = run(&sc);
    let (a, b) = (trace_bytes(&ncbf_trace), trace_bytes(&again));
    let det = if a == b {
        Ok(format!("{} trace bytes identical", a.len()))
    } else {
        Err("traces differ".to_string())
    };
    report.check(9, "determinism", t, det);

    if report.failures == 0 {
        println!("all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("{} criteria failed", report.failures);
        ExitCode::FAILURE
    }
}
