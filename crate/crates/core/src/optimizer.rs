//! Soap-bubble gait optimization.
//!
//! The gait is a polygon of waypoints pushed outward by the height function
//! of the target displacement component ("pressure"), pulled inward by the
//! metric pathlength ("surface tension") in efficiency mode, and kept evenly
//! paced by a tangential strain term. Steps follow the flow direction with a
//! backtracking line search on
//!
//! ```text
//! Φ_κ(β) = ∬_β H − κ · s(β)
//! ```
//!
//! where `κ` is the current true efficiency (zero in displacement mode), so
//! Φ is the merit whose gradient the pressure and tension terms assemble.

use crate::body::Shape;
use crate::contour;
use crate::fields::{FieldSet, FluxPotential};
use crate::gait::{self, Gait, GaitEvaluation};
use crate::source::{Component, HeightSource, MetricSource};
use crate::{Error, Result};
use log::{debug, info, warn};
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

/// Which equilibrium to seek.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    MaxDisplacement,
    MaxEfficiency,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max_displacement" => Ok(Mode::MaxDisplacement),
            "max_efficiency" => Ok(Mode::MaxEfficiency),
            other => Err(format!(
                "unknown mode '{other}' (expected max_displacement or max_efficiency)"
            )),
        }
    }
}

/// Seed used when the configuration does not supply one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedSpec {
    pub radius: f64,
    pub waypoints: usize,
}

impl Default for SeedSpec {
    fn default() -> Self {
        Self {
            radius: 0.3,
            waypoints: gait::DEFAULT_WAYPOINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    /// Largest waypoint move per iteration, as a fraction of the widest
    /// shape-space axis.
    pub max_move_fraction: f64,
    pub growth: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            max_move_fraction: 0.01,
            growth: 2.0,
            shrink: 0.5,
            max_backtracks: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub mode: Mode,
    pub component: Component,
    /// Explicit seed gait; when absent see [`default_seed`].
    pub seed: Option<Gait>,
    pub default_seed: SeedSpec,
    pub strain_weight: f64,
    pub step: StepControl,
    /// Bound on the normalized flow residual, see [`Flow::residual`].
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::MaxEfficiency,
            component: Component::X,
            seed: None,
            default_seed: SeedSpec::default(),
            strain_weight: 1.0,
            step: StepControl::default(),
            tolerance: 1e-3,
            max_iterations: 50_000,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOptimizer(msg));
        if !(self.strain_weight > 0.0 && self.strain_weight.is_finite()) {
            return bad(format!("strain_weight must be positive, got {}", self.strain_weight));
        }
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance must be positive, got {}", self.tolerance));
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive".into());
        }
        let s = &self.step;
        if !(s.max_move_fraction > 0.0 && s.growth >= 1.0 && s.shrink > 0.0 && s.shrink < 1.0) {
            return bad(format!("invalid step control {s:?}"));
        }
        if !(self.default_seed.radius > 0.0) || self.default_seed.waypoints < gait::MIN_WAYPOINTS {
            return bad(format!("invalid default seed {:?}", self.default_seed));
        }
        Ok(())
    }
}

/// Local triangle geometry at one waypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointFrame {
    /// Unit vector from the previous to the next waypoint.
    pub t_hat: Vector2<f64>,
    /// Unit outward normal.
    pub n_hat: Vector2<f64>,
    /// Distance between the two neighbours.
    pub ell: f64,
}

impl WaypointFrame {
    pub fn at(gait: &Gait, i: usize) -> Self {
        let p = gait.waypoints();
        let chord = p[gait.next(i)] - p[gait.prev(i)];
        let ell = chord.norm();
        if ell == 0.0 {
            return Self {
                t_hat: Vector2::zeros(),
                n_hat: Vector2::zeros(),
                ell,
            };
        }
        let t_hat = chord / ell;
        // The right-hand normal points out of a counterclockwise loop.
        let n_hat = gait.orientation().sign() * Vector2::new(t_hat[1], -t_hat[0]);
        Self { t_hat, n_hat, ell }
    }

    pub fn all(gait: &Gait) -> Vec<Self> {
        (0..gait.len()).map(|i| Self::at(gait, i)).collect()
    }
}

/// Per-waypoint contributions to the flow.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTerms {
    pub pressure: Vec<Vector2<f64>>,
    pub tension: Vec<Vector2<f64>>,
    pub strain: Vec<Vector2<f64>>,
}

/// Gradient of the enclosed flux of `component` with respect to each
/// waypoint: moving the apex of the triangle it forms with its neighbours
/// sweeps area at rate `ℓ/2` along the normal.
pub fn pressure_gradient<H: HeightSource>(
    gait: &Gait,
    heights: &H,
    component: Component,
) -> Result<Vec<Vector2<f64>>> {
    (0..gait.len())
        .map(|i| {
            let f = WaypointFrame::at(gait, i);
            let h = heights.height_at(&gait.waypoints()[i], component)?;
            Ok(0.5 * f.ell * h * gait.orientation().sign() * f.n_hat)
        })
        .collect()
}

/// Exact gradient of [`gait::pathlength`] with respect to each waypoint.
pub fn tension_gradient<M: MetricSource>(gait: &Gait, metric: &M) -> Result<Vec<Vector2<f64>>> {
    let p = gait.waypoints();
    let n = gait.len();
    let mut out = vec![Vector2::zeros(); n];
    for k in 0..n {
        let (a, b) = (k, gait.next(k));
        let d = p[b] - p[a];
        let mid = 0.5 * (p[a] + p[b]);
        let m = metric.metric_at(&mid)?.0;
        let len = (d.transpose() * m * d)[0].max(0.0).sqrt();
        if len == 0.0 {
            continue;
        }
        let dm = metric.metric_gradient_at(&mid)?;
        // The midpoint moves half as far as either endpoint.
        let variation = 0.5 * Vector2::new((d.transpose() * dm[0] * d)[0], (d.transpose() * dm[1] * d)[0]);
        let stretch = 2.0 * m * d;
        out[b] += (stretch + variation) / (2.0 * len);
        out[a] += (variation - stretch) / (2.0 * len);
    }
    Ok(out)
}

/// Tangential restoring force toward even metric spacing: each waypoint is
/// pulled along its tangent by the sum of the tangential offsets to its
/// neighbours, each offset weighted by the metric speed of its edge.
pub fn strain_gradient<M: MetricSource>(
    gait: &Gait,
    metric: &M,
    scale: f64,
) -> Result<Vec<Vector2<f64>>> {
    let p = gait.waypoints();
    let n = gait.len();
    let speed = (0..n)
        .map(|k| {
            let d = p[gait.next(k)] - p[k];
            let norm = d.norm();
            if norm == 0.0 {
                return Ok(0.0);
            }
            let e = d / norm;
            let m = metric.metric_at(&(0.5 * (p[k] + p[gait.next(k)])))?;
            Ok(m.quadratic(&e).max(0.0).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((0..n)
        .map(|i| {
            let f = WaypointFrame::at(gait, i);
            let (before, after) = (gait.prev(i), i);
            let mean = 0.5 * (speed[before] + speed[after]);
            if mean == 0.0 {
                return Vector2::zeros();
            }
            let ahead = (p[gait.next(i)] - p[i]).dot(&f.t_hat) * speed[after];
            let behind = (p[gait.prev(i)] - p[i]).dot(&f.t_hat) * speed[before];
            scale * (ahead + behind) / mean * f.t_hat
        })
        .collect())
}

/// The flow for one configuration over one sampled field set.
pub struct Flow<'a> {
    pub fields: &'a FieldSet,
    pub mode: Mode,
    pub component: Component,
    pub strain_weight: f64,
    /// Largest magnitude of the target height function on the grid.
    pub height_scale: f64,
    flux: FluxPotential,
}

impl<'a> Flow<'a> {
    pub fn new(fields: &'a FieldSet, config: &OptimizerConfig) -> Result<Self> {
        let height_scale = fields.height(config.component).max_abs();
        if !(height_scale > 0.0) {
            return Err(Error::InvalidOptimizer(format!(
                "height function {} vanishes on the grid",
                config.component
            )));
        }
        Ok(Self {
            fields,
            mode: config.mode,
            component: config.component,
            strain_weight: config.strain_weight,
            height_scale,
            flux: fields.flux_potential(config.component),
        })
    }

    /// Strain prefactor, chosen so a one-spacing imbalance pushes about as
    /// hard as the strongest pressure.
    fn strain_scale(&self) -> f64 {
        0.5 * self.strain_weight * self.height_scale
    }

    /// Tension coefficient: the current true efficiency in efficiency mode.
    pub fn kappa(&self, gait: &Gait) -> Result<f64> {
        match self.mode {
            Mode::MaxDisplacement => Ok(0.0),
            Mode::MaxEfficiency => {
                let s = gait::pathlength(gait, self.fields)?;
                if s <= 0.0 {
                    return Err(Error::ZeroPathlength);
                }
                Ok(gait::displacement(gait, self.fields)?.component(self.component.index()) / s)
            }
        }
    }

    pub fn terms(&self, gait: &Gait) -> Result<GradientTerms> {
        let tension = match self.mode {
            Mode::MaxDisplacement => vec![Vector2::zeros(); gait.len()],
            Mode::MaxEfficiency => tension_gradient(gait, self.fields)?,
        };
        Ok(GradientTerms {
            pressure: pressure_gradient(gait, self.fields, self.component)?,
            tension,
            strain: strain_gradient(gait, self.fields, self.strain_scale())?,
        })
    }

    /// `pressure − κ·tension + strain`.
    pub fn rhs_with(&self, terms: &GradientTerms, kappa: f64) -> Vec<Vector2<f64>> {
        (0..terms.pressure.len())
            .map(|i| terms.pressure[i] - kappa * terms.tension[i] + terms.strain[i])
            .collect()
    }

    /// The full gradient flow, tangential tension included.
    pub fn rhs(&self, gait: &Gait) -> Result<Vec<Vector2<f64>>> {
        let kappa = self.kappa(gait)?;
        Ok(self.rhs_with(&self.terms(gait)?, kappa))
    }

    /// The flow the optimizer integrates: tension enters only through its
    /// normal part, see [`GradientTerms::with_normal_tension`]. Its zeros
    /// are the converged gaits.
    pub fn applied_rhs(&self, gait: &Gait) -> Result<Vec<Vector2<f64>>> {
        let kappa = self.kappa(gait)?;
        Ok(self.rhs_with(&self.terms(gait)?.with_normal_tension(gait), kappa))
    }

    /// The update actually applied: each waypoint's share of the flow
    /// divided by `ℓᵢ/2 · max|H|`, the push it would feel at the strongest
    /// height value. Normal speed then no longer grows with local spacing,
    /// which would otherwise let sparse stretches of the curve run away.
    ///
    /// Waypoints sitting on the shape bounds lose the components that push
    /// through them, so a gait pressed against the box can still settle.
    pub fn direction(&self, gait: &Gait, rhs: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
        let bounds = &self.fields.spec.bounds;
        rhs.iter()
            .enumerate()
            .map(|(i, v)| {
                let ell = WaypointFrame::at(gait, i).ell;
                let mut d = if ell == 0.0 {
                    *v
                } else {
                    v / (0.5 * ell * self.height_scale)
                };
                let p = gait.waypoints()[i];
                for a in 0..2 {
                    if (p[a] <= bounds.min[a] && d[a] < 0.0) || (p[a] >= bounds.max[a] && d[a] > 0.0) {
                        d[a] = 0.0;
                    }
                }
                d
            })
            .collect()
    }

    /// Largest well-damped explicit step for the preconditioned tension
    /// term. Its sawtooth mode relaxes at `4κ·c / ((ℓ/2)² max|H|)`, where
    /// `c = det M / (t̂ᵀM t̂)^{3/2}` is the transverse stiffness of a metric
    /// edge along the tangent.
    fn tension_cap(&self, gait: &Gait, kappa: f64) -> Result<f64> {
        if kappa <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let mut cap = f64::INFINITY;
        for (i, f) in WaypointFrame::all(gait).iter().enumerate() {
            if f.ell == 0.0 {
                continue;
            }
            let m = self.fields.metric_at(&gait.waypoints()[i])?;
            let stiffness = m.0.determinant() / m.quadratic(&f.t_hat).powf(1.5);
            let half = 0.5 * f.ell;
            cap = cap.min(half * half * self.height_scale / (4.0 * kappa * stiffness));
        }
        Ok(cap)
    }

    /// Largest per-waypoint update norm, see [`Flow::direction`].
    pub fn residual(&self, gait: &Gait, rhs: &[Vector2<f64>]) -> f64 {
        self.direction(gait, rhs)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn rms_residual(&self, gait: &Gait, rhs: &[Vector2<f64>]) -> f64 {
        let d = self.direction(gait, rhs);
        (d.iter().map(|v| v.norm_squared()).sum::<f64>() / d.len() as f64).sqrt()
    }

    /// The line-search merit `Φ_κ`.
    pub fn merit(&self, gait: &Gait, kappa: f64) -> Result<f64> {
        let mut phi = self.flux.polygon_flux(gait.waypoints())?;
        if kappa != 0.0 {
            phi -= kappa * gait::pathlength(gait, self.fields)?;
        }
        Ok(phi)
    }
}

impl GradientTerms {
    /// Keeps only the normal part of the tension. Sliding waypoints along
    /// the curve is reparametrization, which the strain alone governs; the
    /// tangential tension would otherwise trade spacing for a lower
    /// discrete pathlength.
    pub fn with_normal_tension(mut self, gait: &Gait) -> Self {
        for (t, f) in self.tension.iter_mut().zip(WaypointFrame::all(gait)) {
            *t = f.n_hat * f.n_hat.dot(t);
        }
        self
    }

    pub fn without_strain(&self) -> Self {
        Self {
            pressure: self.pressure.clone(),
            tension: self.tension.clone(),
            strain: vec![Vector2::zeros(); self.strain.len()],
        }
    }
}

/// `flow_rhs` for a one-off evaluation.
pub fn flow_rhs(gait: &Gait, fields: &FieldSet, config: &OptimizerConfig) -> Result<Vec<Vector2<f64>>> {
    Flow::new(fields, config)?.rhs(gait)
}

fn max_norm(v: &[Vector2<f64>]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn displaced(gait: &Gait, dir: &[Vector2<f64>], tau: f64, fields: &FieldSet) -> Gait {
    let points = gait
        .waypoints()
        .iter()
        .zip(dir)
        .map(|(p, v)| fields.spec.bounds.clamp(&(p + tau * v)))
        .collect();
    gait.with_waypoints(points)
}

fn on_boundary(p: &Shape, fields: &FieldSet) -> bool {
    let b = &fields.spec.bounds;
    (0..2).any(|a| p[a] <= b.min[a] || p[a] >= b.max[a])
}

/// Circle of the configured radius on the strongest interior peak of the
/// target height function's sign lobe around the middle of the shape box.
/// When the middle sits on a zero of the field, the strongest interior peak
/// anywhere is used instead.
/// The circle is moved inward if it would leave the grid.
pub fn default_seed(fields: &FieldSet, config: &OptimizerConfig) -> Result<Gait> {
    let h = fields.height(config.component);
    let n = fields.spec.n;
    let middle = (n / 2, n / 2);
    let extrema = h.interior_extrema();
    let central = contour::sign_lobes(h).into_iter().find(|l| l.contains_node(middle)).map(|l| {
        h.strongest_of(extrema.iter().copied().filter(|&node| l.contains_node(node)))
            .unwrap_or(middle)
    });
    let (i, j) = central
        .or_else(|| h.strongest_interior_extremum())
        .unwrap_or_else(|| h.extremum(1.0));
    let spec = &fields.spec;
    let r = config.default_seed.radius;
    let mut center = spec.node(i, j);
    for axis in 0..2 {
        let lo = spec.bounds.min[axis] + r;
        let hi = spec.bounds.max[axis] - r;
        if lo > hi {
            return Err(Error::InvalidOptimizer(format!(
                "seed radius {r} does not fit inside the grid"
            )));
        }
        center[axis] = center[axis].clamp(lo, hi);
    }
    Gait::circle(center, r, config.default_seed.waypoints)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search found no acceptable step.
    Stalled,
    /// Every trial step at the given iteration crossed itself.
    SelfIntersection { iteration: usize },
}

impl Termination {
    pub fn is_converged(&self) -> bool {
        matches!(self, Termination::Converged)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub displacement: f64,
    pub pathlength: f64,
    pub efficiency: f64,
    pub residual: f64,
    pub step: f64,
    pub merit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub config: OptimizerConfig,
    pub termination: Termination,
    pub iterations: usize,
    pub seed: Gait,
    pub seed_evaluation: GaitEvaluation,
    /// One record per accepted iterate, starting with the seed.
    pub history: Vec<IterationRecord>,
    pub gait: Gait,
    pub evaluation: GaitEvaluation,
}

impl OptimizationReport {
    pub fn converged(&self) -> bool {
        self.termination.is_converged()
    }

    pub fn final_residual(&self) -> f64 {
        self.history.last().map_or(f64::NAN, |r| r.residual)
    }
}

fn record(
    flow: &Flow,
    gait: &Gait,
    iteration: usize,
    residual: f64,
    step: f64,
    merit: f64,
) -> Result<IterationRecord> {
    let displacement = gait::displacement(gait, flow.fields)?.component(flow.component.index());
    let pathlength = gait::pathlength(gait, flow.fields)?;
    Ok(IterationRecord {
        iteration,
        displacement,
        pathlength,
        efficiency: displacement / pathlength,
        residual,
        step,
        merit,
    })
}

/// Evolve the seed to equilibrium. Termination other than convergence is
/// reported in the result rather than as an error; errors are reserved for
/// invalid input and dynamics failures.
pub fn optimize(fields: &FieldSet, config: &OptimizerConfig) -> Result<OptimizationReport> {
    config.validate()?;
    let flow = Flow::new(fields, config)?;
    let mut seed = match &config.seed {
        Some(g) => g.clone(),
        None => default_seed(fields, config)?,
    };
    seed.check_bounds(&fields.spec.bounds)?;
    seed.check_simple()?;
    let c = config.component.index();
    if gait::displacement(&seed, fields)?.component(c) < 0.0 {
        debug!("reversing seed so the {} displacement is positive", config.component);
        seed = seed.reversed();
    }
    let seed_evaluation = gait::evaluate(&seed, fields)?;

    let width = fields.spec.bounds.width(0).max(fields.spec.bounds.width(1));
    let max_move = config.step.max_move_fraction * width;

    let mut current = seed.clone();
    let mut history = Vec::new();
    let mut tau = f64::INFINITY;
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let mut warned = false;

    loop {
        let kappa = flow.kappa(&current)?;
        let terms = flow.terms(&current)?.with_normal_tension(&current);
        let direction = flow.direction(&current, &flow.rhs_with(&terms, kappa));
        let residual = max_norm(&direction);
        let merit = flow.merit(&current, kappa)?;
        history.push(record(&flow, &current, iterations, residual, tau.min(max_move), merit)?);
        if residual < config.tolerance {
            termination = Termination::Converged;
            break;
        }
        if iterations >= config.max_iterations {
            break;
        }
        iterations += 1;

        // Pressure and tension: line search on the merit they ascend.
        let ascent = flow.direction(&current, &flow.rhs_with(&terms.without_strain(), kappa));
        let ascent_residual = max_norm(&ascent);
        tau = tau.min(max_move / ascent_residual).min(flow.tension_cap(&current, kappa)?);
        let mut accepted = None;
        let mut all_crossed = true;
        for _ in 0..=config.step.max_backtracks {
            let trial = displaced(&current, &ascent, tau, fields);
            if trial.self_intersection().is_none() {
                all_crossed = false;
                if flow.merit(&trial, kappa)? >= merit - 1e-14 * merit.abs() {
                    accepted = Some(trial);
                    break;
                }
            }
            tau *= config.step.shrink;
        }
        let mut taken = 0.0;
        match accepted {
            Some(next) => {
                current = next;
                taken = tau;
                tau *= config.step.growth;
            }
            // The pressure is the exact flux gradient only to second order
            // in the waypoint spacing, so close to equilibrium there may be
            // no ascent step along it. That is fine once it is small.
            None if ascent_residual < config.tolerance => {
                tau = f64::INFINITY;
            }
            None => {
                termination = if all_crossed {
                    Termination::SelfIntersection { iteration: iterations }
                } else {
                    Termination::Stalled
                };
                break;
            }
        }

        // Strain: tangential, invisible to the merit, stepped at
        // its explicit stability limit.
        let mut strain = flow.direction(&current, &strain_gradient(&current, fields, flow.strain_scale())?);
        let strain_norm = max_norm(&strain);
        if strain_norm > 0.0 {
            let cap = WaypointFrame::all(&current)
                .iter()
                .map(|f| f.ell)
                .fold(f64::INFINITY, f64::min)
                / (4.0 * config.strain_weight);
            let mut sigma = cap.min(max_move / strain_norm);
            // On the bounds the wall turns part of the normal push into a
            // slide that only the strain resists; stepping both by the same
            // amount lets them settle where they cancel.
            let wall = taken.min(sigma) / sigma;
            for (v, p) in strain.iter_mut().zip(current.waypoints()) {
                if on_boundary(p, fields) {
                    *v *= wall;
                }
            }
            for _ in 0..=config.step.max_backtracks {
                let trial = displaced(&current, &strain, sigma, fields);
                if trial.self_intersection().is_none() {
                    current = trial;
                    break;
                }
                sigma *= config.step.shrink;
            }
        }
        if !warned && current.waypoints().iter().any(|p| on_boundary(p, fields)) {
            warn!("iteration {iterations}: waypoints clamped to the grid bounds; the domain may be too small");
            warned = true;
        }
        if iterations % 500 == 0 {
            debug!("iteration {iterations}: residual {residual:.3e}, merit {merit:.6e}");
        }
    }

    let evaluation = gait::evaluate(&current, fields)?;
    info!(
        "optimizer finished after {iterations} iterations: {:?}, residual {:.3e}",
        termination,
        history.last().map_or(f64::NAN, |r| r.residual)
    );
    Ok(OptimizationReport {
        config: config.clone(),
        termination,
        iterations,
        seed,
        seed_evaluation,
        history,
        gait: current,
        evaluation,
    })
}
