//! Power-diagram primitives over camera footprints.
//!
//! Every agent projects a circular field of view onto the ground plane. The
//! power distance `|q - c|^2 - R^2` to those circles induces a weighted
//! Voronoi (power) diagram whose vertices, the radical centers, are where
//! coverage holes can open between three agents. This module builds that
//! diagram by direct enumeration, extracts the communication graph and its
//! triangular subgraphs, and provides the per-trio coordinate frame used by
//! the barrier gradients. Two hole detectors live here as well: the exact
//! per-trio test and an independent grid flood-fill oracle.

use std::collections::{BTreeSet, VecDeque};

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

/// Minimum |signed area| (m^2) of a trio triangle.
pub const DEGENERATE_AREA: f64 = 1e-9;
/// Minimum distance (m) between two circle centers.
pub const CONCENTRIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate trio: {0}")]
    DegenerateTrio(String),
    #[error("degenerate triangle: signed area {0:e}")]
    DegenerateTriangle(f64),
    #[error("agent {index} has invalid state: {reason}")]
    InvalidState { index: usize, reason: String },
}

/// State of one camera agent: position above the ground plane plus focal length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Altitude, strictly positive.
    pub z: f64,
    /// Focal length, strictly positive.
    pub lambda: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, z: f64, lambda: f64) -> Self {
        Self { x, y, z, lambda }
    }

    pub fn ground(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Radius of the ground footprint, `r z / lambda`.
    pub fn fov_radius(&self, r: f64) -> f64 {
        r * self.z / self.lambda
    }

    pub fn fov(&self, r: f64) -> Fov {
        Fov { center: self.ground(), radius: self.fov_radius(r) }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x, self.y, self.z, self.lambda]
    }

    pub fn from_array(p: [f64; 4]) -> Self {
        Self::new(p[0], p[1], p[2], p[3])
    }

    pub fn is_valid(&self) -> bool {
        self.z > 0.0 && self.lambda > 0.0 && self.as_array().iter().all(|v| v.is_finite())
    }
}

/// Closed ground disk seen by one camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fov {
    pub center: Vec2,
    pub radius: f64,
}

impl Fov {
    pub fn new(cx: f64, cy: f64, radius: f64) -> Self {
        Self { center: Vec2::new(cx, cy), radius }
    }

    pub fn contains(&self, q: &Vec2) -> bool {
        (q - self.center).norm_squared() <= self.radius * self.radius
    }

    pub fn overlaps(&self, other: &Fov) -> bool {
        (self.center - other.center).norm() <= self.radius + other.radius
    }
}

/// Power distance of `q` to the circle bounding `fov`.
pub fn power_distance(fov: &Fov, q: &Vec2) -> f64 {
    (q - fov.center).norm_squared() - fov.radius * fov.radius
}

/// A line through `point` along the unit vector `direction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line2 {
    pub point: Vec2,
    pub direction: Vec2,
}

impl Line2 {
    pub fn distance_to(&self, q: &Vec2) -> f64 {
        cross(&self.direction, &(q - self.point)).abs()
    }
}

pub(crate) fn cross(a: &Vec2, b: &Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn perp(a: &Vec2) -> Vec2 {
    Vec2::new(-a.y, a.x)
}

/// Signed area of triangle `abc` (positive when counter-clockwise).
pub fn signed_area(a: &Vec2, b: &Vec2, c: &Vec2) -> f64 {
    0.5 * cross(&(b - a), &(c - a))
}

/// Radical axis of two non-concentric circles.
pub fn radical_axis(fa: &Fov, fb: &Fov) -> Result<Line2, GeometryError> {
    let d = fb.center - fa.center;
    let len = d.norm();
    if len < CONCENTRIC_TOL {
        return Err(GeometryError::DegenerateTrio("concentric circles have no radical axis".into()));
    }
    let u = d / len;
    let t = (len * len + fa.radius * fa.radius - fb.radius * fb.radius) / (2.0 * len);
    Ok(Line2 { point: fa.center + u * t, direction: perp(&u) })
}

fn check_trio(fa: &Fov, fb: &Fov, fc: &Fov) -> Result<f64, GeometryError> {
    for (p, q) in [(fa, fb), (fb, fc), (fc, fa)] {
        if (p.center - q.center).norm() < CONCENTRIC_TOL {
            return Err(GeometryError::DegenerateTrio("concentric pair".into()));
        }
    }
    let area = signed_area(&fa.center, &fb.center, &fc.center);
    if area.abs() < DEGENERATE_AREA {
        return Err(GeometryError::DegenerateTrio(format!("collinear centers, area {area:e}")));
    }
    Ok(area)
}

/// Common point of the three pairwise radical axes.
pub fn radical_center(fa: &Fov, fb: &Fov, fc: &Fov) -> Result<Vec2, GeometryError> {
    check_trio(fa, fb, fc)?;
    // 2 (c_b - c_a) . v = (|c_b|^2 - R_b^2) - (|c_a|^2 - R_a^2), same for c.
    let lift = |f: &Fov| f.center.norm_squared() - f.radius * f.radius;
    let m = Matrix2::new(
        2.0 * (fb.center.x - fa.center.x),
        2.0 * (fb.center.y - fa.center.y),
        2.0 * (fc.center.x - fa.center.x),
        2.0 * (fc.center.y - fa.center.y),
    );
    let rhs = Vec2::new(lift(fb) - lift(fa), lift(fc) - lift(fa));
    m.lu()
        .solve(&rhs)
        .ok_or_else(|| GeometryError::DegenerateTrio("parallel radical axes".into()))
}

/// Signed-area ratios `(h_IJK, h_JKI, h_KIJ)` of `v` with respect to triangle
/// `IJK`, and whether `v` is strictly inside.
///
/// `h_IJK` is positive when `v` and `K` are on the same side of line `IJ`;
/// the other two follow by cyclic relabeling. The ratios are the barycentric
/// coordinates of `v` for `K`, `I` and `J` respectively and sum to one.
pub fn point_in_triangle(
    i: &Vec2,
    j: &Vec2,
    k: &Vec2,
    v: &Vec2,
) -> Result<(bool, [f64; 3]), GeometryError> {
    let area = signed_area(i, j, k);
    if area.abs() < DEGENERATE_AREA {
        return Err(GeometryError::DegenerateTriangle(area));
    }
    let ratios = [
        signed_area(i, j, v) / area,
        signed_area(j, k, v) / area,
        signed_area(k, i, v) / area,
    ];
    Ok((ratios.iter().all(|&h| h > 0.0), ratios))
}

/// Per-trio frame: `x_d` along segment `JK`, `y_d` along the radical axis `L_jk`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaDFrame {
    pub origin: Vec2,
    /// Rows are the `x_d` and `y_d` unit vectors expressed in world coordinates.
    pub rotation: Matrix2<f64>,
}

impl SigmaDFrame {
    pub fn to_frame(&self, q: &Vec2) -> Vec2 {
        self.rotation * (q - self.origin)
    }

    pub fn to_world(&self, q: &Vec2) -> Vec2 {
        self.rotation.transpose() * q + self.origin
    }

    /// Map a planar gradient expressed in this frame back to world axes.
    pub fn gradient_to_world(&self, g: &Vec2) -> Vec2 {
        self.rotation.transpose() * g
    }
}

/// Three agents forming one triangular subgraph, with their cached geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct TrioContext {
    /// Agent indices in ascending order.
    pub ids: [usize; 3],
    pub states: [AgentState; 3],
    pub fovs: [Fov; 3],
    /// Image-plane radius shared by all cameras.
    pub r: f64,
    pub radical_center: Vec2,
    /// Signed area of the triangle of ground positions, in `ids` order.
    pub area: f64,
}

impl TrioContext {
    /// Build the context for agents `ids` (any order) from the full state list.
    pub fn new(ids: [usize; 3], states: &[AgentState], r: f64) -> Result<Self, GeometryError> {
        let mut ids = ids;
        ids.sort_unstable();
        if ids[0] == ids[1] || ids[1] == ids[2] {
            return Err(GeometryError::DegenerateTrio(format!("repeated agent in {ids:?}")));
        }
        let st = [states[ids[0]], states[ids[1]], states[ids[2]]];
        Self::from_states(ids, st, r)
    }

    pub fn from_states(ids: [usize; 3], states: [AgentState; 3], r: f64) -> Result<Self, GeometryError> {
        let fovs = states.map(|s| s.fov(r));
        let area = check_trio(&fovs[0], &fovs[1], &fovs[2])?;
        let radical_center = radical_center(&fovs[0], &fovs[1], &fovs[2])?;
        Ok(Self { ids, states, fovs, r, radical_center, area })
    }

    /// Position (0, 1 or 2) of agent `agent` inside this trio.
    pub fn slot(&self, agent: usize) -> Option<usize> {
        self.ids.iter().position(|&a| a == agent)
    }

    /// Slots `(i, j, k)` relabeled cyclically so that `agent` plays the role of `I`.
    /// Cyclic relabeling keeps the triangle orientation.
    pub fn roles(&self, agent: usize) -> Result<[usize; 3], GeometryError> {
        let s = self
            .slot(agent)
            .ok_or_else(|| GeometryError::DegenerateTrio(format!("agent {agent} not in trio {:?}", self.ids)))?;
        Ok([s, (s + 1) % 3, (s + 2) % 3])
    }

    pub fn triangle(&self) -> [Vec2; 3] {
        self.fovs.map(|f| f.center)
    }

    pub fn pairwise_overlap(&self) -> bool {
        self.fovs[0].overlaps(&self.fovs[1])
            && self.fovs[1].overlaps(&self.fovs[2])
            && self.fovs[2].overlaps(&self.fovs[0])
    }

    /// Diameter of the triangle `IJK`.
    pub fn diameter(&self) -> f64 {
        let t = self.triangle();
        (t[0] - t[1]).norm().max((t[1] - t[2]).norm()).max((t[2] - t[0]).norm())
    }
}

/// Frame for viewpoint `distinguished`, built on the other two agents `J`, `K`
/// taken in cyclic order after it.
pub fn sigma_d_frame(trio: &TrioContext, distinguished: usize) -> Result<SigmaDFrame, GeometryError> {
    let [_, sj, sk] = trio.roles(distinguished)?;
    let (fj, fk) = (&trio.fovs[sj], &trio.fovs[sk]);
    let d = fk.center - fj.center;
    let len = d.norm();
    if len < CONCENTRIC_TOL {
        return Err(GeometryError::DegenerateTrio("J and K coincide".into()));
    }
    let mut ex = d / len;
    // Distance from J to the radical axis L_jk along JK.
    let t = (len * len + fj.radius * fj.radius - fk.radius * fk.radius) / (2.0 * len);
    let origin = fj.center + ex * t;
    if len - t < 0.0 {
        // K would sit on the negative x_d side; flip so it is positive.
        ex = -ex;
    }
    let ey = perp(&ex);
    let rotation = Matrix2::new(ex.x, ex.y, ey.x, ey.y);
    Ok(SigmaDFrame { origin, rotation })
}

/// True exactly when the radical center is strictly inside `IJK` and outside
/// every footprint (closed disks).
pub fn hole_exists_exact(trio: &TrioContext) -> Result<bool, GeometryError> {
    let [i, j, k] = trio.triangle();
    let (inside, _) = point_in_triangle(&i, &j, &k, &trio.radical_center)?;
    Ok(inside && power_distance(&trio.fovs[0], &trio.radical_center) > 0.0)
}

/// Communication graph: power-Delaunay adjacency restricted to overlapping footprints.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub n: usize,
    pub edges: BTreeSet<(usize, usize)>,
    pub trios: Vec<TrioContext>,
    /// For each agent, indices into `trios` of the triangles it belongs to.
    pub agent_trios: Vec<Vec<usize>>,
}

impl CommGraph {
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        self.edges
            .iter()
            .filter_map(|&(a, b)| if a == i { Some(b) } else if b == i { Some(a) } else { None })
            .collect()
    }

    pub fn trios_of(&self, i: usize) -> impl Iterator<Item = &TrioContext> {
        self.agent_trios[i].iter().map(move |&t| &self.trios[t])
    }

    /// Sorted id triples of all trios.
    pub fn trio_keys(&self) -> Vec<[usize; 3]> {
        self.trios.iter().map(|t| t.ids).collect()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }
}

fn power_tol(fovs: &[Fov], p: f64) -> f64 {
    let scale = fovs.iter().map(|f| f.radius * f.radius + f.center.norm_squared()).fold(1.0, f64::max);
    1e-9 * scale.max(p.abs())
}

/// Triangles of the power-Delaunay dual, found by direct enumeration.
///
/// A triple is kept when no other circle has strictly smaller power distance at
/// its radical center. Vertices shared by four or more circles are split into a
/// fan anchored at the lowest agent index.
pub fn power_triangles(fovs: &[Fov]) -> Vec<[usize; 3]> {
    let n = fovs.len();
    let mut simple = BTreeSet::new();
    let mut groups: BTreeSet<Vec<usize>> = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let Ok(v) = radical_center(&fovs[a], &fovs[b], &fovs[c]) else { continue };
                let p = power_distance(&fovs[a], &v);
                let tol = power_tol(fovs, p);
                let mut members = vec![a, b, c];
                let mut beaten = false;
                for (d, fd) in fovs.iter().enumerate() {
                    if d == a || d == b || d == c {
                        continue;
                    }
                    let pd = power_distance(fd, &v);
                    if pd < p - tol {
                        beaten = true;
                        break;
                    }
                    if pd <= p + tol {
                        members.push(d);
                    }
                }
                if beaten {
                    continue;
                }
                if members.len() == 3 {
                    simple.insert([a, b, c]);
                } else {
                    members.sort_unstable();
                    groups.insert(members);
                }
            }
        }
    }
    for g in groups {
        simple.extend(fan_split(&g, fovs));
    }
    simple.into_iter().collect()
}

fn fan_split(members: &[usize], fovs: &[Fov]) -> Vec<[usize; 3]> {
    let centroid = members.iter().map(|&m| fovs[m].center).sum::<Vec2>() / members.len() as f64;
    let mut ring: Vec<(f64, usize)> = members
        .iter()
        .map(|&m| {
            let d = fovs[m].center - centroid;
            (d.y.atan2(d.x), m)
        })
        .collect();
    ring.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut order: Vec<usize> = ring.into_iter().map(|(_, m)| m).collect();
    let lowest = order.iter().enumerate().min_by_key(|(_, &m)| m).map(|(p, _)| p).unwrap_or(0);
    order.rotate_left(lowest);
    (1..order.len() - 1)
        .filter_map(|s| {
            let mut t = [order[0], order[s], order[s + 1]];
            t.sort_unstable();
            let area = signed_area(&fovs[t[0]].center, &fovs[t[1]].center, &fovs[t[2]].center);
            (area.abs() >= DEGENERATE_AREA).then_some(t)
        })
        .collect()
}

/// Pairs whose power cells share a boundary segment of positive length.
pub fn power_edges(fovs: &[Fov]) -> BTreeSet<(usize, usize)> {
    let n = fovs.len();
    let mut edges = BTreeSet::new();
    for a in 0..n {
        for b in a + 1..n {
            let Ok(line) = radical_axis(&fovs[a], &fovs[b]) else { continue };
            let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
            let scale = fovs[a].radius.max(fovs[b].radius).max((fovs[a].center - fovs[b].center).norm());
            for (c, fc) in fovs.iter().enumerate() {
                if c == a || c == b {
                    continue;
                }
                // power_a(p(t)) - power_c(p(t)) = alpha + beta t <= 0
                let alpha = power_distance(&fovs[a], &line.point) - power_distance(fc, &line.point);
                let beta = 2.0 * (fc.center - fovs[a].center).dot(&line.direction);
                if beta.abs() < 1e-15 * scale.max(1.0) {
                    if alpha > 0.0 {
                        lo = f64::INFINITY;
                    }
                    continue;
                }
                let t = -alpha / beta;
                if beta > 0.0 {
                    hi = hi.min(t);
                } else {
                    lo = lo.max(t);
                }
            }
            if hi - lo > 1e-9 * scale.max(1.0) {
                edges.insert((a, b));
            }
        }
    }
    edges
}

/// Build the communication graph and its triangular subgraphs.
pub fn build_graph(states: &[AgentState], r: f64) -> CommGraph {
    let n = states.len();
    let fovs: Vec<Fov> = states.iter().map(|s| s.fov(r)).collect();
    let triangles = if n >= 3 { power_triangles(&fovs) } else { Vec::new() };
    let mut delaunay = power_edges(&fovs);
    for t in &triangles {
        delaunay.insert((t[0], t[1]));
        delaunay.insert((t[1], t[2]));
        delaunay.insert((t[0], t[2]));
    }
    let edges: BTreeSet<(usize, usize)> =
        delaunay.into_iter().filter(|&(a, b)| fovs[a].overlaps(&fovs[b])).collect();
    let mut trios = Vec::new();
    let mut agent_trios = vec![Vec::new(); n];
    for t in triangles {
        let closed = edges.contains(&(t[0], t[1])) && edges.contains(&(t[1], t[2])) && edges.contains(&(t[0], t[2]));
        if !closed {
            continue;
        }
        match TrioContext::new(t, states, r) {
            Ok(ctx) => {
                let idx = trios.len();
                for &a in &t {
                    agent_trios[a].push(idx);
                }
                trios.push(ctx);
            }
            Err(e) => log::warn!("dropping trio {t:?}: {e}"),
        }
    }
    CommGraph { n, edges, trios, agent_trios }
}

/// Axis-aligned mission rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Self { x_min, y_min, x_max, y_max }
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, q: &Vec2) -> bool {
        q.x >= self.x_min && q.x <= self.x_max && q.y >= self.y_min && q.y <= self.y_max
    }

    pub fn is_valid(&self) -> bool {
        self.x_max > self.x_min && self.y_max > self.y_min
    }
}

/// Uniform cell-midpoint grid over a rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub rect: Rect,
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
}

impl Grid {
    /// Grid whose cells are at most `resolution` wide in either direction.
    pub fn new(rect: Rect, resolution: f64) -> Self {
        let nx = ((rect.width() / resolution).ceil() as usize).max(1);
        let ny = ((rect.height() / resolution).ceil() as usize).max(1);
        Self { rect, nx, ny, dx: rect.width() / nx as f64, dy: rect.height() / ny as f64 }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn point(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.rect.x_min + (ix as f64 + 0.5) * self.dx, self.rect.y_min + (iy as f64 + 0.5) * self.dy)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }

    /// Inclusive index ranges of cells whose midpoints may fall inside `fov`.
    pub fn cells_near(&self, fov: &Fov) -> Option<(std::ops::RangeInclusive<usize>, std::ops::RangeInclusive<usize>)> {
        let span = |lo: f64, hi: f64, origin: f64, step: f64, n: usize| {
            let a = ((lo - origin) / step - 0.5).ceil().max(0.0);
            let b = ((hi - origin) / step - 0.5).floor().min(n as f64 - 1.0);
            (a <= b).then_some(a as usize..=b as usize)
        };
        let xs = span(fov.center.x - fov.radius, fov.center.x + fov.radius, self.rect.x_min, self.dx, self.nx)?;
        let ys = span(fov.center.y - fov.radius, fov.center.y + fov.radius, self.rect.y_min, self.dy, self.ny)?;
        Some((xs, ys))
    }
}

/// Grid flood-fill hole oracle.
///
/// A grid point is a witness when it is uncovered by every footprint, lies
/// strictly inside the triangle of some trio, and its 4-connected uncovered
/// component never reaches the outer ring of the grid.
pub fn detect_holes_grid(
    states: &[AgentState],
    r: f64,
    mission: &Rect,
    resolution: f64,
    trios: &[TrioContext],
) -> Vec<Vec2> {
    let grid = Grid::new(*mission, resolution);
    let mut covered = vec![false; grid.len()];
    for s in states {
        let fov = s.fov(r);
        let Some((xs, ys)) = grid.cells_near(&fov) else { continue };
        for iy in ys {
            for ix in xs.clone() {
                if fov.contains(&grid.point(ix, iy)) {
                    covered[grid.index(ix, iy)] = true;
                }
            }
        }
    }

    // Label uncovered components and record whether each touches the border.
    let mut label = vec![usize::MAX; grid.len()];
    let mut touches_border = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..grid.len() {
        if covered[start] || label[start] != usize::MAX {
            continue;
        }
        let id = touches_border.len();
        let mut border = false;
        label[start] = id;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            let (ix, iy) = (c % grid.nx, c / grid.nx);
            if ix == 0 || iy == 0 || ix + 1 == grid.nx || iy + 1 == grid.ny {
                border = true;
            }
            let mut visit = |nx: usize, ny: usize| {
                let nc = grid.index(nx, ny);
                if !covered[nc] && label[nc] == usize::MAX {
                    label[nc] = id;
                    queue.push_back(nc);
                }
            };
            if ix > 0 {
                visit(ix - 1, iy);
            }
            if ix + 1 < grid.nx {
                visit(ix + 1, iy);
            }
            if iy > 0 {
                visit(ix, iy - 1);
            }
            if iy + 1 < grid.ny {
                visit(ix, iy + 1);
            }
        }
        touches_border.push(border);
    }

    let mut witnesses = Vec::new();
    for (c, &l) in label.iter().enumerate() {
        if l == usize::MAX || touches_border[l] {
            continue;
        }
        let q = grid.point(c % grid.nx, c / grid.nx);
        let inside_some = trios.iter().any(|t| {
            let [i, j, k] = t.triangle();
            matches!(point_in_triangle(&i, &j, &k, &q), Ok((true, _)))
        });
        if inside_some {
            witnesses.push(q);
        }
    }
    witnesses
}

/// Default grid oracle resolution: 1/200 of the mission diagonal.
pub fn default_oracle_resolution(mission: &Rect) -> f64 {
    mission.diagonal() / 200.0
}
