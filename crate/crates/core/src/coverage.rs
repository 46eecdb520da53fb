//! Camera sensing quality, conic Voronoi partition and the coverage objective.
//!
//! All integrals are midpoint sums over a uniform [`Grid`] on the mission
//! rectangle. The density is sampled once per grid ([`CoverageGrid`]), so an
//! objective evaluation only touches the cells inside each footprint's
//! bounding box.

use nalgebra::Vector4;

use crate::geometry::{AgentState, Grid, Rect, Vec2};

/// Camera and objective parameters shared by the whole team.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingParams {
    /// Image-plane radius; footprint radius is `r * z / lambda`.
    pub r: f64,
    pub kappa: f64,
    pub sigma: f64,
    /// Desired capture distance.
    pub m: f64,
    /// Overlap penalty weight.
    pub w: f64,
}

impl SensingParams {
    pub fn validate(&self) -> Result<(), String> {
        let checks = [
            (self.r > 0.0, "r must be positive"),
            (self.kappa > 0.0, "kappa must be positive"),
            (self.sigma > 0.0, "sigma must be positive"),
            (self.m > 0.0, "M must be positive"),
            (self.w >= 0.0, "w must be nonnegative"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(msg.to_string()),
            None => Ok(()),
        }
    }
}

/// Isotropic Gaussian bump `weight * exp(-|q - mean|^2 / (2 scale^2))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub weight: f64,
    pub mean: Vec2,
    pub scale: f64,
}

/// Importance density: a Gaussian mixture clipped to the mission rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    pub components: Vec<GaussianBump>,
    pub mission: Rect,
}

impl DensityField {
    pub fn new(mission: Rect, components: Vec<GaussianBump>) -> Self {
        Self { components, mission }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.mission.is_valid() {
            return Err("mission rectangle must have positive area".into());
        }
        for c in &self.components {
            if c.weight.is_nan() || c.weight < 0.0 {
                return Err("density weights must be nonnegative".into());
            }
            if c.scale.is_nan() || c.scale <= 0.0 {
                return Err("density scales must be positive".into());
            }
        }
        Ok(())
    }

    pub fn value(&self, q: &Vec2) -> f64 {
        if !self.mission.contains(q) {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.weight * (-(q - c.mean).norm_squared() / (2.0 * c.scale * c.scale)).exp())
            .sum()
    }
}

/// Density sampled at the midpoints of a grid over the mission rectangle.
#[derive(Debug, Clone)]
pub struct CoverageGrid {
    pub grid: Grid,
    pub phi: Vec<f64>,
}

impl CoverageGrid {
    pub fn new(density: &DensityField, resolution: f64) -> Self {
        let grid = Grid::new(density.mission, resolution);
        let mut phi = vec![0.0; grid.len()];
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                phi[grid.index(ix, iy)] = density.value(&grid.point(ix, iy));
            }
        }
        Self { grid, phi }
    }
}

/// Shared per-state quantities of the sensing model.
struct Camera {
    p: [f64; 3],
    lambda: f64,
    radius: f64,
    s: f64,
    c: f64,
    a: f64,
}

impl Camera {
    fn new(state: &AgentState, params: &SensingParams) -> Self {
        let s = (state.lambda * state.lambda + params.r * params.r).sqrt();
        let c = state.lambda / s;
        Self {
            p: [state.x, state.y, state.z],
            lambda: state.lambda,
            radius: state.fov_radius(params.r),
            s,
            c,
            a: s / (s - state.lambda),
        }
    }

    fn horizontal_sq(&self, q: &Vec2) -> f64 {
        (q.x - self.p[0]).powi(2) + (q.y - self.p[1]).powi(2)
    }

    fn quality(&self, q: &Vec2, params: &SensingParams) -> f64 {
        if self.horizontal_sq(q) > self.radius * self.radius {
            return 0.0;
        }
        let d = (self.horizontal_sq(q) + self.p[2] * self.p[2]).sqrt();
        let pers = self.a * (self.p[2] / d - self.c);
        let res = self.c.powf(params.kappa) * (-(d - params.m).powi(2) / (2.0 * params.sigma.powi(2))).exp();
        (pers * res).max(0.0)
    }

    /// `(f, df/d(x, y, z, lambda))`; the gradient is `None` unless `q` is strictly inside.
    fn quality_and_gradient(&self, q: &Vec2, params: &SensingParams) -> (f64, Option<Vector4<f64>>) {
        let h2 = self.horizontal_sq(q);
        if h2 > self.radius * self.radius {
            return (0.0, None);
        }
        let z = self.p[2];
        let d = (h2 + z * z).sqrt();
        let pers = self.a * (z / d - self.c);
        let ck = self.c.powf(params.kappa);
        let gauss = (-(d - params.m).powi(2) / (2.0 * params.sigma.powi(2))).exp();
        let res = ck * gauss;
        let f = (pers * res).max(0.0);
        if h2 >= self.radius * self.radius {
            return (f, None);
        }

        let r2 = params.r * params.r;
        let dd = [(self.p[0] - q.x) / d, (self.p[1] - q.y) / d, z / d];
        // d(z/d)/d(x, y, z)
        let dzd = [-z / (d * d) * dd[0], -z / (d * d) * dd[1], 1.0 / d - z * z / (d * d * d)];
        let dres_dd = -(d - params.m) / params.sigma.powi(2) * res;
        let mut g = Vector4::zeros();
        for k in 0..3 {
            g[k] = self.a * dzd[k] * res + pers * dres_dd * dd[k];
        }
        let dc = r2 / self.s.powi(3);
        let da = (r2 / self.s) / (self.s - self.lambda).powi(2);
        let dpers = da * (z / d - self.c) - self.a * dc;
        let dres = params.kappa * self.c.powf(params.kappa - 1.0) * dc * gauss;
        g[3] = dpers * res + pers * dres;
        (f, Some(g))
    }
}

/// Sensing quality of ground point `q`; zero outside the footprint.
pub fn sensing_quality(state: &AgentState, q: &Vec2, params: &SensingParams) -> f64 {
    Camera::new(state, params).quality(q, params)
}

/// Analytic `df/d(x, y, z, lambda)` at a point strictly inside the footprint.
pub fn sensing_gradient(state: &AgentState, q: &Vec2, params: &SensingParams) -> Option<Vector4<f64>> {
    Camera::new(state, params).quality_and_gradient(q, params).1
}

/// Conic Voronoi assignment of grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    /// Owning agent per cell, `None` where no footprint covers the cell.
    pub owner: Vec<Option<usize>>,
    /// Per agent, the covered cells owned by someone else.
    pub overlap: Vec<Vec<usize>>,
}

impl Partition {
    pub fn owned_by(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.owner.iter().enumerate().filter(move |(_, o)| **o == Some(i)).map(|(c, _)| c)
    }
}

/// Per-agent samples `(cell, f, gradient)` over the cells its footprint covers.
type Samples = Vec<(usize, f64, Option<Vector4<f64>>)>;

fn sample_agents(states: &[AgentState], params: &SensingParams, grid: &Grid, with_gradient: bool) -> Vec<Samples> {
    states
        .iter()
        .map(|st| {
            let cam = Camera::new(st, params);
            let mut out = Vec::new();
            let Some((xs, ys)) = grid.cells_near(&st.fov(params.r)) else {
                return out;
            };
            for iy in ys {
                for ix in xs.clone() {
                    let q = grid.point(ix, iy);
                    if cam.horizontal_sq(&q) > cam.radius * cam.radius {
                        continue;
                    }
                    let (f, g) = if with_gradient {
                        cam.quality_and_gradient(&q, params)
                    } else {
                        (cam.quality(&q, params), None)
                    };
                    out.push((grid.index(ix, iy), f, g));
                }
            }
            out
        })
        .collect()
}

/// Owner per cell: highest quality among covering agents, ties to the lower index.
fn owners(samples: &[Samples], n_cells: usize) -> Vec<Option<usize>> {
    let mut best = vec![f64::NEG_INFINITY; n_cells];
    let mut owner = vec![None; n_cells];
    for (i, s) in samples.iter().enumerate() {
        for &(cell, f, _) in s {
            if f > best[cell] {
                best[cell] = f;
                owner[cell] = Some(i);
            }
        }
    }
    owner
}

pub fn partition(states: &[AgentState], params: &SensingParams, grid: &Grid) -> Partition {
    let samples = sample_agents(states, params, grid, false);
    let owner = owners(&samples, grid.len());
    let overlap = samples
        .iter()
        .enumerate()
        .map(|(i, s)| s.iter().filter(|(c, _, _)| owner[*c] != Some(i)).map(|(c, _, _)| *c).collect())
        .collect();
    Partition { owner, overlap }
}

/// Coverage objective and per-agent cell masses.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub h_m: f64,
    pub h_o: f64,
    pub h: f64,
    /// `integral of f * phi` over each agent's own cell.
    pub cell_mass: Vec<f64>,
    /// `integral of f * phi` over each agent's overlap set.
    pub overlap_mass: Vec<f64>,
}

/// Objective together with every agent's gradient-ascent input, in one pass.
#[derive(Debug, Clone)]
pub struct CoverageEval {
    pub report: CoverageReport,
    pub nominal: Vec<Vector4<f64>>,
}

fn evaluate(states: &[AgentState], params: &SensingParams, cov: &CoverageGrid, with_gradient: bool) -> CoverageEval {
    let n = states.len();
    let samples = sample_agents(states, params, &cov.grid, with_gradient);
    let owner = owners(&samples, cov.grid.len());
    let area = cov.grid.cell_area();
    let mut cell_mass = vec![0.0; n];
    let mut overlap_mass = vec![0.0; n];
    let mut nominal = vec![Vector4::zeros(); n];
    for (i, s) in samples.iter().enumerate() {
        let mut own_grad = Vector4::zeros();
        let mut over_grad = Vector4::zeros();
        for &(cell, f, g) in s {
            let phi = cov.phi[cell];
            let own = owner[cell] == Some(i);
            if own {
                cell_mass[i] += f * phi;
            } else {
                overlap_mass[i] += f * phi;
            }
            if let Some(g) = g {
                if own {
                    own_grad += g * phi;
                } else {
                    over_grad += g * phi;
                }
            }
        }
        cell_mass[i] *= area;
        overlap_mass[i] *= area;
        nominal[i] = (own_grad - params.w * over_grad) * area;
    }
    let h_m: f64 = cell_mass.iter().sum();
    let h_o: f64 = overlap_mass.iter().sum();
    CoverageEval {
        report: CoverageReport { h_m, h_o, h: h_m - params.w * h_o, cell_mass, overlap_mass },
        nominal,
    }
}

pub fn coverage_objective(states: &[AgentState], params: &SensingParams, cov: &CoverageGrid) -> CoverageReport {
    evaluate(states, params, cov, false).report
}

/// Objective and all nominal inputs from a single sampling pass.
pub fn coverage_eval(states: &[AgentState], params: &SensingParams, cov: &CoverageGrid) -> CoverageEval {
    evaluate(states, params, cov, true)
}

/// Gradient-ascent input of agent `i`: its own-cell gradient minus `w` times its overlap gradient.
pub fn nominal_input(i: usize, states: &[AgentState], params: &SensingParams, cov: &CoverageGrid) -> Vector4<f64> {
    coverage_eval(states, params, cov).nominal[i]
}

/// `integral over Q of max_i f_i * phi`, the pointwise-max form of `H_M`.
pub fn coverage_quality_max_form(states: &[AgentState], params: &SensingParams, cov: &CoverageGrid) -> f64 {
    let samples = sample_agents(states, params, &cov.grid, false);
    let mut best = vec![0.0f64; cov.grid.len()];
    for s in &samples {
        for &(cell, f, _) in s {
            best[cell] = best[cell].max(f);
        }
    }
    best.iter().zip(&cov.phi).map(|(f, phi)| f * phi).sum::<f64>() * cov.grid.cell_area()
}
