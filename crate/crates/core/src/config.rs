//! Scenario files.
//!
//! ```text
//! # comment
//! [agents]
//! 0.0 -7.0 5.0 1.0            # x y z lambda
//! 0.0 -7.0 5.0 1.0 0 1 0 0    # optional constant input ux uy uz ulambda
//!
//! [sensing]
//! r = 1.0
//! kappa = 4
//! sigma = 3
//! M = 11
//! w = 0.4
//!
//! [density]
//! mission = 0 0 60 60         # x_min y_min x_max y_max
//! 1.0 30 30 8                 # weight mean_x mean_y scale
//!
//! [sim]
//! dt = 0.01
//! steps = 1000
//! mode = ncbf                 # ncbf | hf_only | nominal_only
//! nominal = coverage          # coverage | velocity
//! resolution = 0.3
//! oracle_resolution = 0.3
//! oracle_every = 10
//! min_z = 0.05
//! min_lambda = 1e-4
//! seed = 0
//! jitter = 0
//!
//! [controller]
//! epsilon = 0.2
//! alpha_gain = 1
//! alpha_power = 3
//! w_lambda = 3e6
//! guard_threshold = 1e4
//! ```
//!
//! `[agents]` and `mission` are required; everything else has a default.

use std::fmt::Write as _;

use nalgebra::Vector4;
use thiserror::Error;

use crate::coverage::{DensityField, GaussianBump, SensingParams};
use crate::geometry::{AgentState, Rect, Vec2};
use crate::sim::Scenario;

pub const TRIO: &str = include_str!("../scenarios/trio.cfg");
pub const NINE_AGENTS: &str = include_str!("../scenarios/nine_agents.cfg");
pub const FIVE_AGENTS: &str = include_str!("../scenarios/five_agents.cfg");

/// Names and sources of the bundled scenarios.
pub const BUNDLED: [(&str, &str); 3] = [("trio", TRIO), ("nine_agents", NINE_AGENTS), ("five_agents", FIVE_AGENTS)];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, column, message: message.into() }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Agents,
    Sensing,
    Density,
    Sim,
    Controller,
}

impl Section {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "agents" => Section::Agents,
            "sensing" => Section::Sensing,
            "density" => Section::Density,
            "sim" => Section::Sim,
            "controller" => Section::Controller,
            _ => return None,
        })
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s + 1, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &text[s..]));
    }
    out
}

fn number(line: usize, (col, tok): (usize, &str)) -> Result<f64, ConfigError> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(parse_err(line, col, format!("expected a number, found `{tok}`"))),
    }
}

fn integer(line: usize, (col, tok): (usize, &str)) -> Result<u64, ConfigError> {
    tok.parse::<u64>().map_err(|_| parse_err(line, col, format!("expected a nonnegative integer, found `{tok}`")))
}

fn numbers(line: usize, toks: &[(usize, &str)]) -> Result<Vec<f64>, ConfigError> {
    toks.iter().map(|t| number(line, *t)).collect()
}

#[derive(Default)]
struct Builder {
    agents: Vec<AgentState>,
    velocities: Vec<Vector4<f64>>,
    bumps: Vec<GaussianBump>,
    mission: Option<Rect>,
}

/// Parse a scenario document and validate it.
pub fn parse_config(text: &str) -> Result<Scenario, ConfigError> {
    let mut b = Builder::default();
    let placeholder = DensityField::new(Rect::new(0.0, 0.0, 1.0, 1.0), Vec::new());
    let mut sc = Scenario::new(Vec::new(), SensingParams { r: 1.0, kappa: 4.0, sigma: 3.0, m: 11.0, w: 0.4 }, placeholder);
    let mut section: Option<Section> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = body.len() - body.trim_start().len() + 1;
        if let Some(rest) = trimmed.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line, indent, "unterminated section header"))?
                .trim();
            section = Some(Section::parse(name).ok_or_else(|| parse_err(line, indent + 1, format!("unknown section `{name}`")))?);
            continue;
        }
        let sec = section.ok_or_else(|| parse_err(line, indent, "entry outside of any section"))?;

        if let Some(eq) = body.find('=') {
            let key = body[..eq].trim();
            let value_toks: Vec<(usize, &str)> =
                tokens(&body[eq + 1..]).into_iter().map(|(c, t)| (c + eq + 1, t)).collect();
            let value_col = value_toks.first().map_or(eq + 2, |t| t.0);
            let single = || -> Result<(usize, &str), ConfigError> {
                match value_toks.as_slice() {
                    [one] => Ok(*one),
                    [] => Err(parse_err(line, value_col, format!("missing value for `{key}`"))),
                    [_, extra, ..] => Err(parse_err(line, extra.0, format!("unexpected token after value of `{key}`"))),
                }
            };
            set_key(&mut sc, &mut b, sec, key, line, indent, value_col, &value_toks, single)?;
        } else {
            let toks = tokens(body);
            match sec {
                Section::Agents => {
                    if toks.len() != 4 && toks.len() != 8 {
                        return Err(parse_err(line, indent, format!("agent rows need 4 or 8 numbers, found {}", toks.len())));
                    }
                    let v = numbers(line, &toks)?;
                    b.agents.push(AgentState::new(v[0], v[1], v[2], v[3]));
                    b.velocities.push(if v.len() == 8 { Vector4::new(v[4], v[5], v[6], v[7]) } else { Vector4::zeros() });
                }
                Section::Density => {
                    if toks.len() != 4 {
                        return Err(parse_err(line, indent, format!("density rows need 4 numbers, found {}", toks.len())));
                    }
                    let v = numbers(line, &toks)?;
                    b.bumps.push(GaussianBump { weight: v[0], mean: Vec2::new(v[1], v[2]), scale: v[3] });
                }
                _ => return Err(parse_err(line, indent, "expected `key = value`")),
            }
        }
    }

    let mission = b.mission.ok_or_else(|| ConfigError::Validation("[density] mission is required".into()))?;
    sc.agents = b.agents;
    sc.velocities = b.velocities;
    sc.density = DensityField::new(mission, b.bumps);
    sc.validate().map_err(ConfigError::Validation)?;
    Ok(sc)
}

#[allow(clippy::too_many_arguments)]
fn set_key<'a>(
    sc: &mut Scenario,
    b: &mut Builder,
    sec: Section,
    key: &str,
    line: usize,
    key_col: usize,
    value_col: usize,
    value_toks: &[(usize, &'a str)],
    single: impl Fn() -> Result<(usize, &'a str), ConfigError>,
) -> Result<(), ConfigError> {
    let num = || single().and_then(|t| number(line, t));
    let int = || single().and_then(|t| integer(line, t));
    match (sec, key) {
        (Section::Sensing, "r") => sc.sensing.r = num()?,
        (Section::Sensing, "kappa") => sc.sensing.kappa = num()?,
        (Section::Sensing, "sigma") => sc.sensing.sigma = num()?,
        (Section::Sensing, "M") => sc.sensing.m = num()?,
        (Section::Sensing, "w") => sc.sensing.w = num()?,
        (Section::Density, "mission") => {
            if value_toks.len() != 4 {
                return Err(parse_err(line, value_col, "mission needs x_min y_min x_max y_max"));
            }
            let v = numbers(line, value_toks)?;
            b.mission = Some(Rect::new(v[0], v[1], v[2], v[3]));
        }
        (Section::Sim, "dt") => sc.dt = num()?,
        (Section::Sim, "steps") => sc.steps = int()? as usize,
        (Section::Sim, "mode") => {
            let t = single()?;
            sc.mode = t.1.parse().map_err(|e: String| parse_err(line, t.0, e))?;
        }
        (Section::Sim, "nominal") => {
            let t = single()?;
            sc.nominal = t.1.parse().map_err(|e: String| parse_err(line, t.0, e))?;
        }
        (Section::Sim, "resolution") => sc.resolution = num()?,
        (Section::Sim, "oracle_resolution") => sc.oracle_resolution = Some(num()?),
        (Section::Sim, "oracle_every") => sc.oracle_every = int()? as usize,
        (Section::Sim, "min_z") => sc.min_z = num()?,
        (Section::Sim, "min_lambda") => sc.min_lambda = num()?,
        (Section::Sim, "seed") => sc.seed = int()?,
        (Section::Sim, "jitter") => sc.jitter = num()?,
        (Section::Controller, "epsilon") => sc.epsilon = num()?,
        (Section::Controller, "alpha_gain") => sc.alpha.gain = num()?,
        (Section::Controller, "alpha_power") => {
            let t = single()?;
            let p = integer(line, t)?;
            sc.alpha.power = u32::try_from(p).map_err(|_| parse_err(line, t.0, "alpha_power out of range"))?;
        }
        (Section::Controller, "w_lambda") => sc.w_lambda = num()?,
        (Section::Controller, "guard_threshold") => sc.guard_threshold = num()?,
        _ => return Err(parse_err(line, key_col, format!("unknown key `{key}`"))),
    }
    Ok(())
}

/// Render a scenario in the format accepted by [`parse_config`].
pub fn serialize(sc: &Scenario) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[agents]");
    for (a, v) in sc.agents.iter().zip(&sc.velocities) {
        let _ = write!(s, "{} {} {} {}", a.x, a.y, a.z, a.lambda);
        if *v != Vector4::zeros() {
            let _ = write!(s, " {} {} {} {}", v[0], v[1], v[2], v[3]);
        }
        s.push('\n');
    }
    let p = &sc.sensing;
    let _ = writeln!(s, "\n[sensing]\nr = {}\nkappa = {}\nsigma = {}\nM = {}\nw = {}", p.r, p.kappa, p.sigma, p.m, p.w);
    let m = &sc.density.mission;
    let _ = writeln!(s, "\n[density]\nmission = {} {} {} {}", m.x_min, m.y_min, m.x_max, m.y_max);
    for c in &sc.density.components {
        let _ = writeln!(s, "{} {} {} {}", c.weight, c.mean.x, c.mean.y, c.scale);
    }
    let _ = writeln!(
        s,
        "\n[sim]\ndt = {}\nsteps = {}\nmode = {}\nnominal = {}\nresolution = {}",
        sc.dt,
        sc.steps,
        sc.mode,
        sc.nominal.as_str(),
        sc.resolution
    );
    if let Some(r) = sc.oracle_resolution {
        let _ = writeln!(s, "oracle_resolution = {r}");
    }
    let _ = writeln!(
        s,
        "oracle_every = {}\nmin_z = {}\nmin_lambda = {}\nseed = {}\njitter = {}",
        sc.oracle_every, sc.min_z, sc.min_lambda, sc.seed, sc.jitter
    );
    let _ = writeln!(
        s,
        "\n[controller]\nepsilon = {}\nalpha_gain = {}\nalpha_power = {}\nw_lambda = {}\nguard_threshold = {}",
        sc.epsilon, sc.alpha.gain, sc.alpha.power, sc.w_lambda, sc.guard_threshold
    );
    s
}
