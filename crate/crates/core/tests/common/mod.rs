//! Shared random-instance generators for the integration tests.
#![allow(dead_code)]

use holeguard::geometry::{radical_center, signed_area, AgentState, Fov, TrioContext, Vec2};
use rand::Rng;

pub const R: f64 = 1.0;

/// Smallest interior angle of a triangle, in degrees.
pub fn min_angle_deg(p: &[Vec2; 3]) -> f64 {
    (0..3)
        .map(|k| {
            let a = p[(k + 1) % 3] - p[k];
            let b = p[(k + 2) % 3] - p[k];
            (a.dot(&b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
        })
        .fold(f64::INFINITY, f64::min)
}

pub fn state_with_radius(c: Vec2, radius: f64, lambda: f64) -> AgentState {
    AgentState::new(c.x, c.y, radius * lambda / R, lambda)
}

/// Three well-shaped centers: area at least 1, every angle at least 15 degrees.
pub fn random_centers<G: Rng>(rng: &mut G) -> [Vec2; 3] {
    loop {
        let p = [0; 3].map(|_| Vec2::new(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)));
        if signed_area(&p[0], &p[1], &p[2]).abs() >= 1.0 && min_angle_deg(&p) >= 15.0 {
            return p;
        }
    }
}

fn circumradius(p: &[Vec2; 3]) -> f64 {
    let (a, b, c) = ((p[1] - p[2]).norm(), (p[0] - p[2]).norm(), (p[0] - p[1]).norm());
    a * b * c / (4.0 * signed_area(&p[0], &p[1], &p[2]).abs())
}

/// Non-degenerate trio with arbitrary radii and a radical center within 30 m.
pub fn random_trio<G: Rng>(rng: &mut G) -> [AgentState; 3] {
    loop {
        let p = random_centers(rng);
        let s = p.map(|c| state_with_radius(c, rng.gen_range(1.0..4.0), rng.gen_range(0.6..1.6)));
        let fovs = s.map(|st| st.fov(R));
        if let Ok(v) = radical_center(&fovs[0], &fovs[1], &fovs[2]) {
            if v.norm() < 30.0 {
                return s;
            }
        }
    }
}

/// Smallest pairwise overlap depth `R_a + R_b - |c_a - c_b|`.
pub fn min_lens_depth(states: &[AgentState; 3]) -> f64 {
    let f = states.map(|s| s.fov(R));
    (0..3)
        .map(|k| f[k].radius + f[(k + 1) % 3].radius - (f[k].center - f[(k + 1) % 3].center).norm())
        .fold(f64::INFINITY, f64::min)
}

/// [`random_trio`] conditioned on every pair overlapping by at least
/// `margin` times the triangle diameter.
pub fn random_overlapping_trio<G: Rng>(rng: &mut G, margin: f64) -> [AgentState; 3] {
    loop {
        let s = random_trio(rng);
        if min_lens_depth(&s) >= margin * context(s).diameter() {
            return s;
        }
    }
}

/// Pairwise-overlapping trio with radii near the circumradius. Holes are
/// frequent and often thinner than a grid cell.
pub fn random_hole_prone_trio<G: Rng>(rng: &mut G) -> [AgentState; 3] {
    loop {
        let p = random_centers(rng);
        let rc = circumradius(&p);
        let s = p.map(|c| state_with_radius(c, rc * rng.gen_range(0.75..1.15), rng.gen_range(0.6..1.6)));
        let fovs: [Fov; 3] = s.map(|st| st.fov(R));
        let overlap = (0..3).all(|k| fovs[k].overlaps(&fovs[(k + 1) % 3]));
        if overlap && radical_center(&fovs[0], &fovs[1], &fovs[2]).is_ok() {
            return s;
        }
    }
}

pub fn context(states: [AgentState; 3]) -> TrioContext {
    TrioContext::from_states([0, 1, 2], states, R).expect("generated trios are non-degenerate")
}

/// Central difference of `f` along coordinate `d` of agent `who`, step 1e-6.
pub fn central_difference(states: [AgentState; 3], who: usize, d: usize, f: impl Fn(&TrioContext) -> f64) -> f64 {
    let h = 1e-6;
    let eval = |sign: f64| {
        let mut s = states;
        let mut a = s[who].as_array();
        a[d] += sign * h;
        s[who] = AgentState::from_array(a);
        f(&context(s))
    };
    (eval(1.0) - eval(-1.0)) / (2.0 * h)
}
