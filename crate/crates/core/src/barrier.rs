//! Component barrier functions of one trio and their max composition.
//!
//! From the point of view of agent `I` in trio `IJK` the hole-free condition
//! "radical center outside the triangle, or inside the footprint of `I`" is a
//! max over four smooth components:
//!
//! 1. `-h_IJK`, 2. `-h_JKI`, 3. `-h_KIJ` (negated signed-area ratios) and
//! 4. `h_F = R_i^2 - |v - I|^2` (minus the power distance of `v`).
//!
//! Gradients with respect to the viewpoint agent's state are computed in the
//! trio frame (x along `JK`, y along the radical axis `L_jk`), where the
//! radical center has a fixed zero x-coordinate, and rotated back to world axes.

use nalgebra::Vector4;

use crate::geometry::{point_in_triangle, power_distance, sigma_d_frame, GeometryError, TrioContext, Vec2};

/// Default almost-active window.
pub const DEFAULT_EPSILON: f64 = 0.2;
/// Default magnitude above which a triangle component is ignored by the QP.
pub const DEFAULT_GUARD_THRESHOLD: f64 = 1e4;

/// One of the four components, in the order used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    /// `-h_IJK`: radical center and `K` on opposite sides of line `IJ`.
    NegIjk,
    /// `-h_JKI`: radical center and `I` on opposite sides of line `JK`.
    NegJki,
    /// `-h_KIJ`: radical center and `J` on opposite sides of line `KI`.
    NegKij,
    /// `h_F`: radical center inside the viewpoint agent's footprint.
    Fov,
}

impl Component {
    pub const ALL: [Component; 4] = [Component::NegIjk, Component::NegJki, Component::NegKij, Component::Fov];

    /// 1-based index as used in traces.
    pub fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Self> {
        Self::ALL.get(n.checked_sub(1)?).copied()
    }

    pub fn is_triangle(self) -> bool {
        self != Component::Fov
    }
}

/// Which components take part in the composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentSet {
    All,
    /// Only `h_F`; the conservative single-CBF filter.
    FovOnly,
}

impl ComponentSet {
    pub fn includes(self, c: Component) -> bool {
        match self {
            ComponentSet::All => true,
            ComponentSet::FovOnly => c == Component::Fov,
        }
    }
}

/// Values of `(-h_IJK, -h_JKI, -h_KIJ, h_F)` for one viewpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfComponents {
    pub vals: [f64; 4],
}

impl CbfComponents {
    pub fn get(&self, c: Component) -> f64 {
        self.vals[c as usize]
    }
}

/// Max-composed value with its almost-active index set.
#[derive(Debug, Clone, PartialEq)]
pub struct NcbfValue {
    pub value: f64,
    pub argmax: Component,
    pub active_set: Vec<Component>,
}

impl NcbfValue {
    /// Compose the components in `set`; ties in the max go to the lowest index.
    pub fn from_components(c: &CbfComponents, epsilon: f64, set: ComponentSet) -> Self {
        let mut argmax = None;
        for comp in Component::ALL.into_iter().filter(|&k| set.includes(k)) {
            match argmax {
                Some(best) if c.get(comp) <= c.get(best) => {}
                _ => argmax = Some(comp),
            }
        }
        let argmax = argmax.unwrap_or(Component::Fov);
        let value = c.get(argmax);
        let active_set = Component::ALL
            .into_iter()
            .filter(|&k| set.includes(k) && (c.get(k) - value).abs() <= epsilon)
            .collect();
        Self { value, argmax, active_set }
    }
}

/// Gradient of one component with respect to `(x, y, z, lambda)` of the viewpoint agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfGradient {
    pub d_x: f64,
    pub d_y: f64,
    pub d_z: f64,
    pub d_lambda: f64,
}

impl CbfGradient {
    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(self.d_x, self.d_y, self.d_z, self.d_lambda)
    }

    pub fn norm(&self) -> f64 {
        self.to_vector().norm()
    }
}

/// Component values seen from agent `viewpoint`.
pub fn cbf_components(trio: &TrioContext, viewpoint: usize) -> Result<CbfComponents, GeometryError> {
    let [si, sj, sk] = trio.roles(viewpoint)?;
    let t = trio.triangle();
    let v = trio.radical_center;
    let (_, h) = point_in_triangle(&t[si], &t[sj], &t[sk], &v)?;
    let h_f = -power_distance(&trio.fovs[si], &v);
    Ok(CbfComponents { vals: [-h[0], -h[1], -h[2], h_f] })
}

pub fn ncbf_value(trio: &TrioContext, viewpoint: usize, epsilon: f64) -> Result<NcbfValue, GeometryError> {
    ncbf_value_with(trio, viewpoint, epsilon, ComponentSet::All)
}

pub fn ncbf_value_with(
    trio: &TrioContext,
    viewpoint: usize,
    epsilon: f64,
    set: ComponentSet,
) -> Result<NcbfValue, GeometryError> {
    Ok(NcbfValue::from_components(&cbf_components(trio, viewpoint)?, epsilon, set))
}

/// Geometry of the viewpoint agent expressed in its trio frame.
#[derive(Debug, Clone, Copy)]
struct FrameView {
    xi: f64,
    yi: f64,
    xj: f64,
    xk: f64,
    /// `x_j^2 - R_j^2`, equal to `x_k^2 - R_k^2` on the radical axis.
    c: f64,
    ri2: f64,
    z: f64,
    lambda: f64,
    r: f64,
}

impl FrameView {
    fn new(trio: &TrioContext, viewpoint: usize) -> Result<(Self, crate::geometry::SigmaDFrame), GeometryError> {
        let [si, sj, sk] = trio.roles(viewpoint)?;
        let frame = sigma_d_frame(trio, viewpoint)?;
        let pi = frame.to_frame(&trio.fovs[si].center);
        let pj = frame.to_frame(&trio.fovs[sj].center);
        let pk = frame.to_frame(&trio.fovs[sk].center);
        if pi.y.abs() < 1e-12 * (1.0 + pi.x.abs()) {
            return Err(GeometryError::DegenerateTrio("viewpoint agent lies on line JK".into()));
        }
        let rj = trio.fovs[sj].radius;
        let s = trio.states[si];
        Ok((
            Self {
                xi: pi.x,
                yi: pi.y,
                xj: pj.x,
                xk: pk.x,
                c: pj.x * pj.x - rj * rj,
                ri2: trio.fovs[si].radius.powi(2),
                z: s.z,
                lambda: s.lambda,
                r: trio.r,
            },
            frame,
        ))
    }

    /// y-intercept of `L_ij`, i.e. the radical center's y in the frame.
    fn vy(&self) -> f64 {
        (self.xi * self.xi + self.yi * self.yi - self.ri2 - self.c) / (2.0 * self.yi)
    }

    /// `dR_i^2/dz` and `dR_i^2/dlambda`.
    fn radius_sq_partials(&self) -> (f64, f64) {
        let r2 = self.r * self.r;
        (2.0 * r2 * self.z / self.lambda.powi(2), -2.0 * r2 * self.z.powi(2) / self.lambda.powi(3))
    }

    fn grad_h_fov(&self) -> [f64; 4] {
        let (x, y, vy) = (self.xi, self.yi, self.vy());
        let (dr_z, dr_l) = self.radius_sq_partials();
        let ratio = vy / y;
        [
            -2.0 * x * ratio,
            (x * x - y * y - self.ri2 - self.c) / (y * y) * vy,
            dr_z * ratio,
            dr_l * ratio,
        ]
    }

    /// Gradient of `h_JKI = v_y / y_i`.
    fn grad_h_jki(&self) -> [f64; 4] {
        let (x, y) = (self.xi, self.yi);
        let b = x * x - self.ri2 - self.c;
        let (dr_z, dr_l) = self.radius_sq_partials();
        let y2 = y * y;
        [x / y2, -b / (y2 * y), -dr_z / (2.0 * y2), -dr_l / (2.0 * y2)]
    }

    /// Gradient of `h_IJK` for a `J`, `K` pair on the x axis at `xj`, `xk`.
    fn grad_h_ijk_at(&self, xi: f64, xj: f64, xk: f64) -> [f64; 4] {
        let y = self.yi;
        let d = xk - xj;
        let b = xi * xi - self.ri2 - self.c;
        let (dr_z, dr_l) = self.radius_sq_partials();
        let y2 = y * y;
        [
            -(3.0 * xi * xi - 2.0 * xj * xi + y2 - self.ri2 - self.c) / (2.0 * d * y2),
            (xi - xj) * b / (d * y2 * y),
            (xi - xj) * dr_z / (2.0 * d * y2),
            (xi - xj) * dr_l / (2.0 * d * y2),
        ]
    }

    fn grad_h_ijk(&self) -> [f64; 4] {
        self.grad_h_ijk_at(self.xi, self.xj, self.xk)
    }

    /// `h_KIJ` is `h_IJK` of the trio mirrored about the y axis with the roles
    /// of `J` and `K` exchanged.
    fn grad_h_kij(&self) -> [f64; 4] {
        let g = self.grad_h_ijk_at(-self.xi, -self.xk, -self.xj);
        [-g[0], g[1], g[2], g[3]]
    }
}

/// Analytic gradient of `component` with respect to the viewpoint agent's state.
pub fn cbf_gradient(trio: &TrioContext, viewpoint: usize, component: Component) -> Result<CbfGradient, GeometryError> {
    let (view, frame) = FrameView::new(trio, viewpoint)?;
    let g = match component {
        Component::NegIjk => view.grad_h_ijk().map(|v| -v),
        Component::NegJki => view.grad_h_jki().map(|v| -v),
        Component::NegKij => view.grad_h_kij().map(|v| -v),
        Component::Fov => view.grad_h_fov(),
    };
    let planar = frame.gradient_to_world(&Vec2::new(g[0], g[1]));
    Ok(CbfGradient { d_x: planar.x, d_y: planar.y, d_z: g[2], d_lambda: g[3] })
}

/// Radical center's y coordinate in the viewpoint's frame, from the closed form.
pub fn frame_vy(trio: &TrioContext, viewpoint: usize) -> Result<f64, GeometryError> {
    Ok(FrameView::new(trio, viewpoint)?.0.vy())
}

/// Triangle components whose magnitude exceeds `threshold`.
pub fn degenerate_guard(components: &CbfComponents, threshold: f64) -> Vec<Component> {
    Component::ALL[..3]
        .iter()
        .copied()
        .filter(|&c| components.get(c).abs() > threshold)
        .collect()
}
