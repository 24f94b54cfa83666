//! Closed gait loops in shape space and the functionals evaluated on them:
//! net displacement, metric pathlength and enclosed height-function flux.

use crate::body::{Shape, ShapeBounds};
use crate::se2::{BodyVelocity, GroupElement};
use crate::source::{Component, ConnectionSource, HeightSource, MetricSource};
use crate::{Error, Result};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_WAYPOINTS: usize = 12;
pub const DEFAULT_WAYPOINTS: usize = 100;
/// Runge–Kutta steps per gait segment.
pub const DEFAULT_SUBSTEPS: usize = 4;
/// Each fan triangle is split into this many squared sub-triangles before
/// quadrature.
pub const FLUX_SUBDIVISION: usize = 6;

/// Winding sense of a gait loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::CounterClockwise => 1.0,
            Orientation::Clockwise => -1.0,
        }
    }

    fn from_area(area: f64) -> Self {
        if area < 0.0 {
            Orientation::Clockwise
        } else {
            Orientation::CounterClockwise
        }
    }
}

/// An ordered closed loop of waypoints; the last waypoint connects back to
/// the first. The orientation always agrees with the sign of the enclosed
/// area (counterclockwise for degenerate loops).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaitFile", into = "GaitFile")]
pub struct Gait {
    waypoints: Vec<Shape>,
    orientation: Orientation,
}

/// On-disk form: `{ "waypoints": [[b1, b2], ...], "orientation": ±1 }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaitFile {
    pub waypoints: Vec<[f64; 2]>,
    pub orientation: i8,
}

impl TryFrom<GaitFile> for Gait {
    type Error = Error;

    fn try_from(file: GaitFile) -> Result<Self> {
        let declared = match file.orientation {
            1 => Orientation::CounterClockwise,
            -1 => Orientation::Clockwise,
            other => {
                return Err(Error::InvalidGait(format!(
                    "orientation must be 1 or -1, got {other}"
                )))
            }
        };
        let gait = Gait::new(file.waypoints.iter().map(|p| Shape::new(p[0], p[1])).collect())?;
        if gait.signed_area() != 0.0 && gait.orientation != declared {
            return Err(Error::InvalidGait(format!(
                "declared orientation {} disagrees with waypoint order (signed area {:e})",
                file.orientation,
                gait.signed_area()
            )));
        }
        Ok(gait)
    }
}

impl From<Gait> for GaitFile {
    fn from(gait: Gait) -> Self {
        GaitFile {
            waypoints: gait.waypoints.iter().map(|p| [p[0], p[1]]).collect(),
            orientation: gait.orientation.sign() as i8,
        }
    }
}

impl Gait {
    pub fn new(waypoints: Vec<Shape>) -> Result<Self> {
        if waypoints.len() < MIN_WAYPOINTS {
            return Err(Error::InvalidGait(format!(
                "need at least {MIN_WAYPOINTS} waypoints, got {}",
                waypoints.len()
            )));
        }
        if let Some(k) = waypoints.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidGait(format!("waypoint {k} is not finite")));
        }
        let orientation = Orientation::from_area(signed_area(&waypoints));
        Ok(Self {
            waypoints,
            orientation,
        })
    }

    /// Counterclockwise circle starting on the +β₁ side of `center`.
    pub fn circle(center: Shape, radius: f64, n: usize) -> Result<Self> {
        let points = (0..n)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n as f64;
                center + radius * Shape::new(phi.cos(), phi.sin())
            })
            .collect();
        Self::new(points)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn waypoints(&self) -> &[Shape] {
        &self.waypoints
    }

    pub fn into_waypoints(self) -> Vec<Shape> {
        self.waypoints
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Cyclic successor index.
    pub fn next(&self, i: usize) -> usize {
        (i + 1) % self.len()
    }

    /// Cyclic predecessor index.
    pub fn prev(&self, i: usize) -> usize {
        (i + self.len() - 1) % self.len()
    }

    pub fn signed_area(&self) -> f64 {
        signed_area(&self.waypoints)
    }

    /// Vertex mean.
    pub fn centroid(&self) -> Shape {
        self.waypoints.iter().sum::<Shape>() / self.len() as f64
    }

    /// Same loop traversed the other way, starting from the same waypoint.
    pub fn reversed(&self) -> Self {
        let mut points = Vec::with_capacity(self.len());
        points.push(self.waypoints[0]);
        points.extend(self.waypoints[1..].iter().rev());
        Self::new(points).expect("reversal keeps the waypoint count")
    }

    /// Same loop starting at waypoint `k`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut points = self.waypoints.clone();
        points.rotate_left(k % self.len());
        Self::new(points).expect("rotation keeps the waypoint count")
    }

    pub fn check_bounds(&self, bounds: &ShapeBounds) -> Result<()> {
        self.waypoints.iter().try_for_each(|p| bounds.check(p))
    }

    /// Largest distance between consecutive waypoints.
    pub fn max_segment_length(&self) -> f64 {
        (0..self.len())
            .map(|i| (self.waypoints[self.next(i)] - self.waypoints[i]).norm())
            .fold(0.0, f64::max)
    }

    /// First pair of non-adjacent edges that cross, if any. Edge `k` runs
    /// from waypoint `k` to waypoint `k + 1`.
    pub fn self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for a in 0..n {
            for b in a + 2..n {
                if a == 0 && b == n - 1 {
                    continue;
                }
                let (p, q) = (self.waypoints[a], self.waypoints[self.next(a)]);
                let (r, s) = (self.waypoints[b], self.waypoints[self.next(b)]);
                // Repeated waypoints are not crossings.
                if p == q || r == s {
                    continue;
                }
                if segments_cross(&p, &q, &r, &s) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, p: &Shape) -> bool {
        let mut inside = false;
        for k in 0..self.len() {
            let (a, b) = (self.waypoints[k], self.waypoints[self.next(k)]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Distance from `p` to the nearest point of the polygon outline.
    pub fn distance_to(&self, p: &Shape) -> f64 {
        (0..self.len())
            .map(|k| {
                let (a, b) = (self.waypoints[k], self.waypoints[self.next(k)]);
                let d = b - a;
                let len2 = d.norm_squared();
                let t = if len2 == 0.0 { 0.0 } else { ((p - a).dot(&d) / len2).clamp(0.0, 1.0) };
                (p - (a + t * d)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetric Hausdorff distance between the two outlines, measured from
    /// the waypoints of each to the edges of the other.
    pub fn hausdorff_distance(&self, other: &Gait) -> f64 {
        let one_way = |a: &Gait, b: &Gait| a.waypoints.iter().map(|p| b.distance_to(p)).fold(0.0, f64::max);
        one_way(self, other).max(one_way(other, self))
    }

    /// Largest distance between two waypoints.
    pub fn diameter(&self) -> f64 {
        let p = &self.waypoints;
        p.iter()
            .flat_map(|a| p.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    pub fn check_simple(&self) -> Result<()> {
        match self.self_intersection() {
            Some((first, second)) => Err(Error::SelfIntersection { first, second }),
            None => Ok(()),
        }
    }

    /// Copy with the waypoints replaced, keeping the count.
    pub(crate) fn with_waypoints(&self, waypoints: Vec<Shape>) -> Self {
        debug_assert_eq!(waypoints.len(), self.len());
        let orientation = Orientation::from_area(signed_area(&waypoints));
        Self {
            waypoints,
            orientation,
        }
    }
}

fn signed_area(points: &[Shape]) -> f64 {
    let n = points.len();
    0.5 * (0..n)
        .map(|k| cross(&points[k], &points[(k + 1) % n]))
        .sum::<f64>()
}

fn cross(a: &Shape, b: &Shape) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// Proper crossing or touching of two closed segments.
fn segments_cross(p: &Shape, q: &Shape, r: &Shape, s: &Shape) -> bool {
    let d1 = cross(&(q - p), &(r - p));
    let d2 = cross(&(q - p), &(s - p));
    let d3 = cross(&(s - r), &(p - r));
    let d4 = cross(&(s - r), &(q - r));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: &Shape, b: &Shape, c: &Shape, d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(p, q, r, d1) || on(p, q, s, d2) || on(r, s, p, d3) || on(r, s, q, d4)
}

/// One sample of the world trajectory over a gait cycle. Time runs one unit
/// per gait segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub beta: Shape,
    pub g: GroupElement,
}

fn rate<S: ConnectionSource>(
    source: &S,
    g: &[f64; 3],
    beta: &Shape,
    beta_dot: &Shape,
) -> Result<[f64; 3]> {
    let xi: BodyVelocity = source.connection_at(beta)?.body_velocity(beta_dot);
    let v = crate::se2::world_velocity(&GroupElement::new(g[0], g[1], g[2]), &xi);
    Ok([v.x_dot, v.y_dot, v.theta_dot])
}

fn axpy(g: &[f64; 3], h: f64, k: &[f64; 3]) -> [f64; 3] {
    [g[0] + h * k[0], g[1] + h * k[1], g[2] + h * k[2]]
}

/// Integrate `ġ = g ξ`, `ξ = −A(β)β̇` around the loop from the identity,
/// calling `visit` after every Runge–Kutta step.
fn integrate<S: ConnectionSource>(
    gait: &Gait,
    source: &S,
    substeps: usize,
    mut visit: impl FnMut(f64, &Shape, &[f64; 3]),
) -> Result<GroupElement> {
    if substeps == 0 {
        return Err(Error::InvalidGait("substeps must be positive".into()));
    }
    let h = 1.0 / substeps as f64;
    let mut g = [0.0; 3];
    let pts = gait.waypoints();
    visit(0.0, &pts[0], &g);
    for k in 0..gait.len() {
        let start = pts[k];
        let d = pts[gait.next(k)] - start;
        if d == Shape::zeros() {
            for s in 1..=substeps {
                visit(k as f64 + s as f64 * h, &start, &g);
            }
            continue;
        }
        for s in 0..substeps {
            let tau = s as f64 * h;
            let b0 = start + d * tau;
            let bm = start + d * (tau + 0.5 * h);
            let b1 = start + d * (tau + h);
            let k1 = rate(source, &g, &b0, &d)?;
            let k2 = rate(source, &axpy(&g, 0.5 * h, &k1), &bm, &d)?;
            let k3 = rate(source, &axpy(&g, 0.5 * h, &k2), &bm, &d)?;
            let k4 = rate(source, &axpy(&g, h, &k3), &b1, &d)?;
            for c in 0..3 {
                g[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
            visit(k as f64 + tau + h, &b1, &g);
        }
    }
    Ok(GroupElement::new(g[0], g[1], g[2]))
}

/// Net world-frame displacement over one cycle, starting from the identity.
pub fn displacement<S: ConnectionSource>(gait: &Gait, source: &S) -> Result<GroupElement> {
    displacement_with_substeps(gait, source, DEFAULT_SUBSTEPS)
}

pub fn displacement_with_substeps<S: ConnectionSource>(
    gait: &Gait,
    source: &S,
    substeps: usize,
) -> Result<GroupElement> {
    integrate(gait, source, substeps, |_, _, _| {})
}

/// Pose after every integration step, including the initial identity.
pub fn trajectory<S: ConnectionSource>(
    gait: &Gait,
    source: &S,
    substeps: usize,
) -> Result<Vec<TrajectorySample>> {
    let mut out = Vec::with_capacity(gait.len() * substeps + 1);
    integrate(gait, source, substeps, |t, beta, g| {
        out.push(TrajectorySample {
            t,
            beta: *beta,
            g: GroupElement::new(g[0], g[1], g[2]),
        })
    })?;
    Ok(out)
}

/// Metric length of the closed polygon, with the metric evaluated at the
/// middle of each edge.
pub fn pathlength<M: MetricSource>(gait: &Gait, metric: &M) -> Result<f64> {
    let pts = gait.waypoints();
    let mut total = 0.0;
    for k in 0..gait.len() {
        let (a, b) = (pts[k], pts[gait.next(k)]);
        let d = b - a;
        if d == Shape::zeros() {
            continue;
        }
        let m = metric.metric_at(&(0.5 * (a + b)))?;
        total += m.quadratic(&d).max(0.0).sqrt();
    }
    Ok(total)
}

/// Signed surface integral of each height function over the polygon.
/// Sampled fields integrate their interpolant exactly; any other source goes
/// through [`enclosed_flux_with_subdivision`] at `FLUX_SUBDIVISION`.
pub fn enclosed_flux<H: HeightSource>(gait: &Gait, heights: &H) -> Result<Vector3<f64>> {
    gait.check_simple()?;
    match heights.polygon_flux(gait.waypoints()) {
        Some(flux) => Ok(Vector3::from(flux?)),
        None => enclosed_flux_with_subdivision(gait, heights, FLUX_SUBDIVISION),
    }
}

/// Quadrature flux: the polygon is fanned from its vertex centroid and every
/// fan triangle is split into `subdivision²` pieces, each integrated with
/// the edge-midpoint rule.
pub fn enclosed_flux_with_subdivision<H: HeightSource>(
    gait: &Gait,
    heights: &H,
    subdivision: usize,
) -> Result<Vector3<f64>> {
    gait.check_simple()?;
    let c = gait.centroid();
    let pts = gait.waypoints();
    let m = subdivision.max(1);
    let eval = |p: &Shape| -> Result<Vector3<f64>> {
        Ok(Vector3::new(
            heights.height_at(p, Component::X)?,
            heights.height_at(p, Component::Y)?,
            heights.height_at(p, Component::Theta)?,
        ))
    };
    let mut total = Vector3::zeros();
    for k in 0..gait.len() {
        let (a, b) = (pts[k], pts[gait.next(k)]);
        let area = 0.5 * cross(&(a - c), &(b - c));
        if area == 0.0 {
            continue;
        }
        let ea = (a - c) / m as f64;
        let eb = (b - c) / m as f64;
        let node = |i: usize, j: usize| c + ea * i as f64 + eb * j as f64;
        let mut sum = Vector3::zeros();
        for i in 0..m {
            for j in 0..m - i {
                let (p0, p1, p2) = (node(i, j), node(i + 1, j), node(i, j + 1));
                sum += eval(&(0.5 * (p0 + p1)))? + eval(&(0.5 * (p1 + p2)))? + eval(&(0.5 * (p2 + p0)))?;
                if i + j + 2 <= m {
                    let p3 = node(i + 1, j + 1);
                    sum += eval(&(0.5 * (p1 + p3)))?
                        + eval(&(0.5 * (p3 + p2)))?
                        + eval(&(0.5 * (p2 + p1)))?;
                }
            }
        }
        total += sum * (area / (3.0 * (m * m) as f64));
    }
    Ok(total)
}

/// Selected displacement component per unit pathlength.
pub fn efficiency<S>(gait: &Gait, source: &S, component: Component) -> Result<f64>
where
    S: ConnectionSource + MetricSource,
{
    let s = pathlength(gait, source)?;
    if s <= 0.0 {
        return Err(Error::ZeroPathlength);
    }
    Ok(displacement(gait, source)?.component(component.index()) / s)
}

/// The functionals of one gait, as exported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitEvaluation {
    pub displacement: GroupElement,
    pub pathlength: f64,
    pub enclosed_flux: [f64; 3],
    /// Displacement components over pathlength; absent for zero pathlength.
    pub efficiency: Option<[f64; 3]>,
}

impl GaitEvaluation {
    pub fn efficiency_of(&self, component: Component) -> Result<f64> {
        self.efficiency
            .map(|e| e[component.index()])
            .ok_or(Error::ZeroPathlength)
    }
}

pub fn evaluate<S>(gait: &Gait, source: &S) -> Result<GaitEvaluation>
where
    S: ConnectionSource + MetricSource + HeightSource,
{
    let displacement = displacement(gait, source)?;
    let pathlength = pathlength(gait, source)?;
    let flux = enclosed_flux(gait, source)?;
    let efficiency = (pathlength > 0.0).then(|| {
        std::array::from_fn(|c| displacement.component(c) / pathlength)
    });
    Ok(GaitEvaluation {
        displacement,
        pathlength,
        enclosed_flux: [flux[0], flux[1], flux[2]],
        efficiency,
    })
}
