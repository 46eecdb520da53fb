//! Per-agent safety filter.
//!
//! Each agent evaluates its barrier components over every trio it belongs to,
//! turns the almost-active ones into linear constraints on its own input and
//! solves a four-variable QP. Only the trio contexts of the agent (its own
//! state and its neighbors') are read.

use nalgebra::Vector4;

use crate::barrier::{cbf_components, cbf_gradient, degenerate_guard, Component, ComponentSet, NcbfValue};
use crate::geometry::{CommGraph, TrioContext};
use crate::qp::{solve_qp_warm, LinearConstraint, QpError, QpProblem};

/// Extended class-K function `gain * h^power` with odd `power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassK {
    pub gain: f64,
    pub power: u32,
}

impl ClassK {
    pub fn new(gain: f64, power: u32) -> Result<Self, String> {
        let k = Self { gain, power };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.gain.is_nan() || self.gain <= 0.0 {
            return Err("alpha gain must be positive".into());
        }
        if self.power.is_multiple_of(2) {
            return Err("alpha power must be an odd positive integer".into());
        }
        Ok(())
    }

    pub fn eval(&self, h: f64) -> f64 {
        self.gain * h.powi(self.power as i32)
    }
}

impl Default for ClassK {
    fn default() -> Self {
        Self { gain: 1.0, power: 3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerParams {
    pub epsilon: f64,
    pub alpha: ClassK,
    pub w_lambda: f64,
    pub guard_threshold: f64,
    pub components: ComponentSet,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            epsilon: crate::barrier::DEFAULT_EPSILON,
            alpha: ClassK::default(),
            w_lambda: 3.0e6,
            guard_threshold: crate::barrier::DEFAULT_GUARD_THRESHOLD,
            components: ComponentSet::All,
        }
    }
}

/// Identifies a constraint across steps: trio ids and component.
pub type ConstraintKey = ([usize; 3], Component);

/// One constraint `a . u >= b` contributed by a trio component.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub key: ConstraintKey,
    /// Value of the composed barrier for the trio.
    pub h: f64,
    pub constraint: LinearConstraint,
}

/// Constraints of agent `i` over `trios`, plus its min composed barrier value.
pub fn build_constraints<'a>(
    i: usize,
    trios: impl IntoIterator<Item = &'a TrioContext>,
    params: &ControllerParams,
) -> (Vec<ConstraintRow>, Option<f64>) {
    let mut rows = Vec::new();
    let mut min_h: Option<f64> = None;
    for trio in trios {
        let comps = match cbf_components(trio, i) {
            Ok(c) => c,
            Err(e) => {
                log::warn!("agent {i}: skipping trio {:?}: {e}", trio.ids);
                continue;
            }
        };
        let ncbf = NcbfValue::from_components(&comps, params.epsilon, params.components);
        min_h = Some(min_h.map_or(ncbf.value, |m: f64| m.min(ncbf.value)));
        let guarded = degenerate_guard(&comps, params.guard_threshold);
        let b = -params.alpha.eval(ncbf.value) / 3.0;
        for comp in ncbf.active_set.iter().copied().filter(|c| !guarded.contains(c)) {
            let grad = match cbf_gradient(trio, i, comp) {
                Ok(g) => g.to_vector(),
                Err(e) => {
                    log::warn!("agent {i}: no gradient for trio {:?} component {}: {e}", trio.ids, comp.number());
                    continue;
                }
            };
            if grad.norm() < 1e-9 {
                log::warn!(
                    "agent {i}: dropping vanishing gradient, trio {:?} component {} (h = {:.3e})",
                    trio.ids,
                    comp.number(),
                    ncbf.value
                );
                continue;
            }
            rows.push(ConstraintRow { key: (trio.ids, comp), h: ncbf.value, constraint: LinearConstraint::new(grad, b) });
        }
    }
    (rows, min_h)
}

/// Result of one agent's filter.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentControl {
    pub u: Vector4<f64>,
    pub constraints: Vec<ConstraintRow>,
    /// Keys of the constraints active at the QP optimum.
    pub active: Vec<ConstraintKey>,
    /// Minimum composed barrier value over the agent's trios.
    pub min_ncbf: Option<f64>,
    /// Set when the QP failed and the input fell back to zero.
    pub fallback: Option<QpError>,
}

/// Filtered input of agent `i` for the snapshot captured in `graph`.
///
/// `warm` lists the constraint keys that were active at the previous step.
pub fn agent_control(
    i: usize,
    graph: &CommGraph,
    u_nom: Vector4<f64>,
    params: &ControllerParams,
    warm: &[ConstraintKey],
) -> AgentControl {
    let (rows, min_ncbf) = build_constraints(i, graph.trios_of(i), params);
    if rows.is_empty() {
        return AgentControl { u: u_nom, constraints: rows, active: Vec::new(), min_ncbf, fallback: None };
    }
    let hint: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| warm.contains(&r.key)).map(|(j, _)| j).collect();
    let problem = QpProblem::new(u_nom, params.w_lambda, rows.iter().map(|r| r.constraint).collect());
    match solve_qp_warm(&problem, &hint) {
        Ok(sol) => {
            let active = sol.active.iter().map(|&j| rows[j].key).collect();
            AgentControl { u: sol.u, constraints: rows, active, min_ncbf, fallback: None }
        }
        Err(e) => {
            log::warn!("agent {i}: QP failed ({e}); holding position");
            AgentControl { u: Vector4::zeros(), constraints: rows, active: Vec::new(), min_ncbf, fallback: Some(e) }
        }
    }
}
