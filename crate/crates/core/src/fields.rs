//! Shape-space field grids.
//!
//! The connection, metric, and metric gradient are sampled on a uniform
//! grid; the constraint-curvature (height) functions
//! `H = -dA + [A₁, A₂]` are derived from the sampled connection by finite
//! differences. Queries between nodes use bilinear interpolation.
//!
//! Node `(i, j)` sits at `(β₁ᵢ, β₂ⱼ)`. Values are stored row-major with `i`
//! as the row index, so `values[i * n + j]`.

use crate::body::{Shape, ShapeBounds};
use crate::rft::{LocalConnection, MetricTensor, Swimmer};
use crate::source::{Component, ConnectionSource, HeightSource, MetricGradient, MetricSource};
use crate::{Error, Result};
use nalgebra::{Matrix2, Matrix3x2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const MIN_NODES: usize = 11;
pub const DEFAULT_NODES: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub bounds: ShapeBounds,
    /// Nodes per axis.
    pub n: usize,
}

impl GridSpec {
    pub fn new(bounds: ShapeBounds, n: usize) -> Result<Self> {
        let spec = Self { bounds, n };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_NODES {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_NODES} nodes per axis, got {}",
                self.n
            )));
        }
        for axis in 0..2 {
            let (lo, hi) = (self.bounds.min[axis], self.bounds.max[axis]);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidGrid(format!(
                    "axis {} bounds [{lo}, {hi}] are empty",
                    axis + 1
                )));
            }
        }
        Ok(())
    }

    /// Grid with spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.bounds.width(axis) / (self.n - 1) as f64
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        if index == self.n - 1 {
            self.bounds.max[axis]
        } else {
            self.bounds.min[axis] + index as f64 * self.spacing(axis)
        }
    }

    pub fn node(&self, i: usize, j: usize) -> Shape {
        Shape::new(self.coordinate(0, i), self.coordinate(1, j))
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Node mirrored through the center of the grid (`β ↦ -β` for
    /// symmetric bounds).
    pub fn mirror(&self, i: usize, j: usize) -> (usize, usize) {
        (self.n - 1 - i, self.n - 1 - j)
    }

    /// Cell containing `beta` and the bilinear weights of its corners.
    pub fn locate(&self, beta: &Shape) -> Result<Cell> {
        self.bounds.check(beta)?;
        let mut index = [0usize; 2];
        let mut frac = [0.0; 2];
        for axis in 0..2 {
            let mut u = (beta[axis] - self.bounds.min[axis]) / self.spacing(axis);
            // Snap round-off so that node queries return stored values.
            if (u - u.round()).abs() < 1e-9 {
                u = u.round();
            }
            let k = (u.floor() as usize).min(self.n - 2);
            index[axis] = k;
            frac[axis] = (u - k as f64).clamp(0.0, 1.0);
        }
        Ok(Cell { index, frac })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub index: [usize; 2],
    pub frac: [f64; 2],
}

/// One sampled scalar quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl FieldGrid {
    pub fn from_fn(spec: GridSpec, mut f: impl FnMut(Shape) -> f64) -> Self {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.n {
            for j in 0..spec.n {
                values.push(f(spec.node(i, j)));
            }
        }
        Self { spec, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    pub fn eval_cell(&self, cell: &Cell) -> f64 {
        let [i, j] = cell.index;
        let [s, t] = cell.frac;
        let n = self.spec.n;
        let v = &self.values;
        let f00 = v[i * n + j];
        let f01 = v[i * n + j + 1];
        let f10 = v[(i + 1) * n + j];
        let f11 = v[(i + 1) * n + j + 1];
        (1.0 - s) * ((1.0 - t) * f00 + t * f01) + s * ((1.0 - t) * f10 + t * f11)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Node with the largest value, or the smallest when `sign < 0`.
    pub fn extremum(&self, sign: f64) -> (usize, usize) {
        let mut best = (0, 0);
        let mut best_value = f64::NEG_INFINITY;
        for i in 0..self.spec.n {
            for j in 0..self.spec.n {
                let v = sign * self.at(i, j);
                if v > best_value {
                    best_value = v;
                    best = (i, j);
                }
            }
        }
        best
    }

    /// Interior node that is a local extremum (against its eight
    /// neighbours) of largest magnitude, if the field has one.
    /// Nonzero interior nodes that are at least as extreme as their eight
    /// neighbours, in row-major order.
    pub fn interior_extrema(&self) -> Vec<(usize, usize)> {
        let n = self.spec.n;
        let mut out = Vec::new();
        for i in 1..n - 1 {
            for j in 1..n - 1 {
                let v = self.at(i, j);
                if v == 0.0 {
                    continue;
                }
                let neighbours = (i - 1..=i + 1).flat_map(|a| (j - 1..=j + 1).map(move |b| (a, b)));
                let is_peak = neighbours
                    .filter(|&(a, b)| (a, b) != (i, j))
                    .all(|(a, b)| v.signum() * (v - self.at(a, b)) >= 0.0);
                if is_peak {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// The interior extremum of largest magnitude.
    pub fn strongest_interior_extremum(&self) -> Option<(usize, usize)> {
        self.strongest_of(self.interior_extrema())
    }

    /// The node of largest magnitude among `nodes`.
    pub fn strongest_of(&self, nodes: impl IntoIterator<Item = (usize, usize)>) -> Option<(usize, usize)> {
        nodes.into_iter().fold(None, |best, (i, j)| match best {
            Some((a, b)) if self.at(a, b).abs() >= self.at(i, j).abs() => best,
            _ => Some((i, j)),
        })
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> FieldGrid {
        FieldGrid {
            spec: self.spec,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Partial derivative along `axis`: central differences inside,
    /// second-order one-sided differences on the edges.
    pub fn partial(&self, axis: usize) -> FieldGrid {
        let n = self.spec.n;
        let h = self.spec.spacing(axis);
        let get = |i: usize, j: usize, k: usize| {
            if axis == 0 {
                self.at(k, j)
            } else {
                self.at(i, k)
            }
        };
        let mut values = Vec::with_capacity(self.spec.len());
        for i in 0..n {
            for j in 0..n {
                let k = if axis == 0 { i } else { j };
                let d = if k == 0 {
                    (-3.0 * get(i, j, 0) + 4.0 * get(i, j, 1) - get(i, j, 2)) / (2.0 * h)
                } else if k == n - 1 {
                    (3.0 * get(i, j, n - 1) - 4.0 * get(i, j, n - 2) + get(i, j, n - 3)) / (2.0 * h)
                } else {
                    (get(i, j, k + 1) - get(i, j, k - 1)) / (2.0 * h)
                };
                values.push(d);
            }
        }
        FieldGrid {
            spec: self.spec,
            values,
        }
    }

    /// CSV with header `beta1,beta2,value`, one row per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "beta1,beta2,value")?;
        for i in 0..self.spec.n {
            for j in 0..self.spec.n {
                let b = self.spec.node(i, j);
                writeln!(out, "{},{},{}", b[0], b[1], self.at(i, j))?;
            }
        }
        Ok(())
    }
}

/// Bilinear interpolation of a grid at `beta`.
pub fn interpolate(grid: &FieldGrid, beta: &Shape) -> Result<f64> {
    Ok(grid.eval_cell(&grid.spec.locate(beta)?))
}

/// Sampled connection, indexed `[row][column]` with rows (x, y, θ).
pub type ConnectionGrids = [[FieldGrid; 2]; 3];

/// Height functions `H = -dA + [A₁, A₂]`, one grid per position component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureField {
    pub components: [FieldGrid; 3],
}

impl CurvatureField {
    pub fn component(&self, c: Component) -> &FieldGrid {
        &self.components[c.index()]
    }
}

impl HeightSource for CurvatureField {
    fn height_at(&self, beta: &Shape, component: Component) -> Result<f64> {
        interpolate(self.component(component), beta)
    }

    /// Exact for the bilinear interpolant, see [`FluxPotential`].
    fn polygon_flux(&self, points: &[Shape]) -> Option<Result<[f64; 3]>> {
        let flux = |g: &FieldGrid| FluxPotential::new(g).polygon_flux(points);
        Some((|| Ok([flux(&self.components[0])?, flux(&self.components[1])?, flux(&self.components[2])?]))())
    }
}

/// Local Lie bracket `[A₁, A₂]` of the two connection columns on SE(2).
pub fn lie_bracket_local(a: &LocalConnection) -> Vector3<f64> {
    let m = &a.0;
    let (ax1, ax2) = (m[(0, 0)], m[(0, 1)]);
    let (ay1, ay2) = (m[(1, 0)], m[(1, 1)]);
    let (at1, at2) = (m[(2, 0)], m[(2, 1)]);
    Vector3::new(ay1 * at2 - ay2 * at1, ax2 * at1 - ax1 * at2, 0.0)
}

/// Row-wise curl `∂Aⁱ₂/∂β₁ − ∂Aⁱ₁/∂β₂`.
pub fn exterior_derivative(a: &ConnectionGrids) -> [FieldGrid; 3] {
    std::array::from_fn(|row| {
        let d2 = a[row][1].partial(0);
        let d1 = a[row][0].partial(1);
        FieldGrid {
            spec: d2.spec,
            values: d2
                .values
                .iter()
                .zip(&d1.values)
                .map(|(p, q)| p - q)
                .collect(),
        }
    })
}

pub fn curvature_field(a: &ConnectionGrids) -> CurvatureField {
    curvature_from_parts(a, &exterior_derivative(a))
}

fn curvature_from_parts(a: &ConnectionGrids, da: &[FieldGrid; 3]) -> CurvatureField {
    let spec = a[0][0].spec;
    let brackets: Vec<Vector3<f64>> = (0..spec.len())
        .map(|k| lie_bracket_local(&connection_at_index(a, k)))
        .collect();
    CurvatureField {
        components: std::array::from_fn(|row| FieldGrid {
            spec,
            values: (0..spec.len())
                .map(|k| {
                    if row == 2 {
                        -da[2].values[k]
                    } else {
                        -da[row].values[k] + brackets[k][row]
                    }
                })
                .collect(),
        }),
    }
}

fn connection_at_index(a: &ConnectionGrids, k: usize) -> LocalConnection {
    LocalConnection(Matrix3x2::from_fn(|r, c| a[r][c].values[k]))
}

/// Everything the gait tools need, sampled once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSet {
    pub spec: GridSpec,
    pub connection: ConnectionGrids,
    /// `M₁₁`, `M₁₂`, `M₂₂`.
    pub metric: [FieldGrid; 3],
    /// Indexed `[component][axis]`, components as in `metric`.
    pub metric_gradient: [[FieldGrid; 2]; 3],
    pub exterior_derivative: [FieldGrid; 3],
    pub curvature: CurvatureField,
}

/// Sample `A`, `M` and `∇M` on the grid and derive the height functions.
pub fn sample_fields(model: &Swimmer, spec: &GridSpec) -> Result<FieldSet> {
    spec.validate()?;
    model.validate()?;
    for corner in [
        Shape::new(spec.bounds.min[0], spec.bounds.min[1]),
        Shape::new(spec.bounds.max[0], spec.bounds.max[1]),
    ] {
        model.bounds.check(&corner)?;
    }

    let nodes: Vec<(usize, usize)> = (0..spec.n)
        .flat_map(|i| (0..spec.n).map(move |j| (i, j)))
        .collect();
    let samples: Vec<(LocalConnection, MetricTensor)> = nodes
        .par_iter()
        .map(|&(i, j)| {
            model
                .dynamics(&spec.node(i, j))
                .map_err(|e| Error::NodeFailure {
                    i,
                    j,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;

    let grid = |f: &dyn Fn(&(LocalConnection, MetricTensor)) -> f64| FieldGrid {
        spec: *spec,
        values: samples.iter().map(f).collect(),
    };
    let connection: ConnectionGrids =
        std::array::from_fn(|r| std::array::from_fn(|c| grid(&|s| s.0 .0[(r, c)])));
    let metric = [
        grid(&|s| s.1 .0[(0, 0)]),
        grid(&|s| s.1 .0[(0, 1)]),
        grid(&|s| s.1 .0[(1, 1)]),
    ];
    let metric_gradient = std::array::from_fn(|k| [metric[k].partial(0), metric[k].partial(1)]);
    let exterior_derivative = exterior_derivative(&connection);
    let curvature = curvature_from_parts(&connection, &exterior_derivative);
    Ok(FieldSet {
        spec: *spec,
        connection,
        metric,
        metric_gradient,
        exterior_derivative,
        curvature,
    })
}

fn symmetric(m11: f64, m12: f64, m22: f64) -> Matrix2<f64> {
    Matrix2::new(m11, m12, m12, m22)
}

impl FieldSet {
    pub fn height(&self, c: Component) -> &FieldGrid {
        self.curvature.component(c)
    }

    /// Exact-integration helper for the flux of one height function.
    pub fn flux_potential(&self, c: Component) -> FluxPotential {
        FluxPotential::new(self.height(c))
    }
}

impl ConnectionSource for FieldSet {
    fn connection_at(&self, beta: &Shape) -> Result<LocalConnection> {
        let cell = self.spec.locate(beta)?;
        Ok(LocalConnection(Matrix3x2::from_fn(|r, c| {
            self.connection[r][c].eval_cell(&cell)
        })))
    }
}

impl MetricSource for FieldSet {
    fn metric_at(&self, beta: &Shape) -> Result<MetricTensor> {
        let cell = self.spec.locate(beta)?;
        let [m11, m12, m22] = &self.metric;
        Ok(MetricTensor(symmetric(
            m11.eval_cell(&cell),
            m12.eval_cell(&cell),
            m22.eval_cell(&cell),
        )))
    }

    fn metric_gradient_at(&self, beta: &Shape) -> Result<MetricGradient> {
        let cell = self.spec.locate(beta)?;
        let g = &self.metric_gradient;
        Ok(std::array::from_fn(|axis| {
            symmetric(
                g[0][axis].eval_cell(&cell),
                g[1][axis].eval_cell(&cell),
                g[2][axis].eval_cell(&cell),
            )
        }))
    }
}

impl HeightSource for FieldSet {
    fn height_at(&self, beta: &Shape, component: Component) -> Result<f64> {
        self.curvature.height_at(beta, component)
    }
    fn polygon_flux(&self, points: &[Shape]) -> Option<Result<[f64; 3]>> {
        self.curvature.polygon_flux(points)
    }
}

/// `Ψ(β₁, β₂) = ∫ H(u, β₂) du` from the lower β₁ bound, for the bilinear
/// interpolant of `H`. By Green's theorem the signed flux of `H` through a
/// counterclockwise polygon is `∮ Ψ dβ₂`, which this type integrates
/// exactly edge by edge.
#[derive(Debug, Clone)]
pub struct FluxPotential {
    height: FieldGrid,
    /// Cumulative integral along β₁ at each node.
    cumulative: Vec<f64>,
}

impl FluxPotential {
    pub fn new(height: &FieldGrid) -> Self {
        let spec = height.spec;
        let h = spec.spacing(0);
        let n = spec.n;
        let mut cumulative = vec![0.0; spec.len()];
        for j in 0..n {
            for i in 1..n {
                cumulative[i * n + j] =
                    cumulative[(i - 1) * n + j] + 0.5 * h * (height.at(i - 1, j) + height.at(i, j));
            }
        }
        Self {
            height: height.clone(),
            cumulative,
        }
    }

    pub fn value(&self, beta: &Shape) -> Result<f64> {
        let spec = &self.height.spec;
        let cell = spec.locate(beta)?;
        Ok(self.value_in_cell(&cell))
    }

    fn value_in_cell(&self, cell: &Cell) -> f64 {
        let n = self.height.spec.n;
        let h = self.height.spec.spacing(0);
        let [i, j] = cell.index;
        let [s, t] = cell.frac;
        let line = |jj: usize| {
            let f0 = self.height.values[i * n + jj];
            let f1 = self.height.values[(i + 1) * n + jj];
            self.cumulative[i * n + jj] + h * (s * f0 + 0.5 * s * s * (f1 - f0))
        };
        (1.0 - t) * line(j) + t * line(j + 1)
    }

    /// `∮ Ψ dβ₂` around the closed polygon through `points`.
    pub fn polygon_flux(&self, points: &[Shape]) -> Result<f64> {
        let n = points.len();
        let mut total = 0.0;
        for k in 0..n {
            total += self.edge_integral(&points[k], &points[(k + 1) % n])?;
        }
        Ok(total)
    }

    /// `∫ Ψ dβ₂` along a straight edge, split at grid lines so that three-
    /// point Gauss–Legendre is exact on each piece.
    pub fn edge_integral(&self, a: &Shape, b: &Shape) -> Result<f64> {
        let spec = &self.height.spec;
        spec.bounds.check(a)?;
        spec.bounds.check(b)?;
        let d = b - a;
        if d[1] == 0.0 {
            return Ok(0.0);
        }
        let mut breaks = vec![0.0, 1.0];
        for axis in 0..2 {
            if d[axis] == 0.0 {
                continue;
            }
            let h = spec.spacing(axis);
            let ua = (a[axis] - spec.bounds.min[axis]) / h;
            let ub = (b[axis] - spec.bounds.min[axis]) / h;
            let (lo, hi) = if ua < ub { (ua, ub) } else { (ub, ua) };
            let mut k = lo.floor() + 1.0;
            while k < hi {
                breaks.push((k - ua) / (ub - ua));
                k += 1.0;
            }
        }
        breaks.sort_by(|x, y| x.total_cmp(y));

        const NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        const WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let mut sum = 0.0;
        for w in breaks.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let mid = 0.5 * (t0 + t1);
            let half = 0.5 * (t1 - t0);
            for (x, wt) in NODES.iter().zip(WEIGHTS) {
                let p = a + d * (mid + half * x);
                let cell = spec.locate(&spec.bounds.clamp(&p))?;
                sum += wt * half * self.value_in_cell(&cell);
            }
        }
        Ok(sum * d[1])
    }
}

/// Bundle of every sampled field with its grid metadata, for JSON export.
#[derive(Debug, Clone, Serialize)]
pub struct FieldExport<'a> {
    pub system: &'a str,
    pub grid: GridSpec,
    pub fields: Vec<NamedField<'a>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedField<'a> {
    pub name: String,
    pub values: &'a [f64],
}

impl FieldSet {
    /// Scalar grids under the names used for export.
    pub fn named_scalars(&self) -> Vec<(String, &FieldGrid)> {
        let rows = ["x", "y", "theta"];
        let metric = ["m11", "m12", "m22"];
        let mut out = Vec::new();
        for (r, name) in rows.iter().enumerate() {
            for c in 0..2 {
                out.push((format!("connection_{name}_{}", c + 1), &self.connection[r][c]));
            }
        }
        for (k, name) in metric.iter().enumerate() {
            out.push((format!("metric_{name}"), &self.metric[k]));
        }
        for (k, name) in metric.iter().enumerate() {
            for axis in 0..2 {
                out.push((
                    format!("metric_{name}_d{}", axis + 1),
                    &self.metric_gradient[k][axis],
                ));
            }
        }
        for (r, name) in rows.iter().enumerate() {
            out.push((format!("exterior_derivative_{name}"), &self.exterior_derivative[r]));
        }
        for (r, name) in rows.iter().enumerate() {
            out.push((format!("height_{name}"), &self.curvature.components[r]));
        }
        out
    }

    pub fn export<'a>(&'a self, system: &'a str) -> FieldExport<'a> {
        FieldExport {
            system,
            grid: self.spec,
            fields: self
                .named_scalars()
                .into_iter()
                .map(|(name, g)| NamedField {
                    name,
                    values: &g.values,
                })
                .collect(),
        }
    }

    /// Vector-field CSV for one connection row: `beta1,beta2,value1,value2`.
    pub fn write_connection_csv<W: Write>(&self, row: usize, mut out: W) -> std::io::Result<()> {
        writeln!(out, "beta1,beta2,value1,value2")?;
        let spec = &self.spec;
        for i in 0..spec.n {
            for j in 0..spec.n {
                let b = spec.node(i, j);
                writeln!(
                    out,
                    "{},{},{},{}",
                    b[0],
                    b[1],
                    self.connection[row][0].at(i, j),
                    self.connection[row][1].at(i, j)
                )?;
            }
        }
        Ok(())
    }

    pub fn negated_exterior_derivative(&self, row: usize) -> FieldGrid {
        self.exterior_derivative[row].map(|v| -v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(n: usize, half: f64) -> GridSpec {
        GridSpec::new(ShapeBounds::symmetric(half), n).unwrap()
    }

    fn uniform_connection(spec: GridSpec, f: impl Fn(Shape, usize, usize) -> f64) -> ConnectionGrids {
        std::array::from_fn(|r| std::array::from_fn(|c| FieldGrid::from_fn(spec, |b| f(b, r, c))))
    }

    #[test]
    fn rejects_coarse_grids() {
        assert!(GridSpec::new(ShapeBounds::default(), 10).is_err());
        assert!(GridSpec::new(ShapeBounds::default(), 11).is_ok());
    }

    #[test]
    fn bracket_cases() {
        let zero_theta = LocalConnection(Matrix3x2::new(1.0, 2.0, 3.0, 4.0, 0.0, 0.0));
        assert_eq!(lie_bracket_local(&zero_theta), Vector3::zeros());

        let c1 = nalgebra::Vector3::new(0.3, -1.2, 0.7);
        let proportional = LocalConnection(Matrix3x2::from_columns(&[c1, 2.5 * c1]));
        assert!(lie_bracket_local(&proportional).norm() < 1e-15);

        let a = LocalConnection(Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 1.0, 1.0));
        assert_eq!(lie_bracket_local(&a), Vector3::new(-1.0, -1.0, 0.0));
    }

    #[test]
    fn curl_of_constant_and_rotation_fields() {
        let s = spec(21, 1.0);
        let constant = uniform_connection(s, |_, r, c| (r + 2 * c) as f64);
        for g in exterior_derivative(&constant) {
            assert!(g.max_abs() < 1e-12);
        }
        let rotation = uniform_connection(s, |b, _, c| if c == 0 { -b[1] } else { b[0] });
        for g in exterior_derivative(&rotation) {
            for i in 1..s.n - 1 {
                for j in 1..s.n - 1 {
                    assert_abs_diff_eq!(g.at(i, j), 2.0, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn theta_height_is_bracket_free() {
        let s = spec(15, 1.0);
        let a = uniform_connection(s, |b, r, c| (r as f64 + 1.0) * b[c].sin() + b[1 - c] * b[0]);
        let da = exterior_derivative(&a);
        let h = curvature_field(&a);
        assert_eq!(h.components[2].values, da[2].map(|v| -v).values);
    }

    #[test]
    fn partial_is_exact_for_quadratics() {
        let s = spec(11, 2.0);
        let g = FieldGrid::from_fn(s, |b| b[0] * b[0] + 3.0 * b[0] * b[1]);
        let d = g.partial(0);
        for i in 0..s.n {
            for j in 0..s.n {
                let b = s.node(i, j);
                assert_abs_diff_eq!(d.at(i, j), 2.0 * b[0] + 3.0 * b[1], epsilon = 1e-12);
            }
        }
        // central difference on a 5-node axis, by hand
        let s5 = GridSpec { bounds: ShapeBounds::symmetric(1.0), n: 5 };
        let g5 = FieldGrid::from_fn(s5, |b| b[1].exp());
        let h: f64 = 0.5;
        assert_abs_diff_eq!(
            g5.partial(1).at(2, 2),
            (h.exp() - (-h).exp()) / (2.0 * h),
            epsilon = 1e-15
        );
    }

    #[test]
    fn interpolation_is_exact_at_nodes_and_affine() {
        let s = spec(11, 3.0);
        let g = FieldGrid::from_fn(s, |b| 2.0 * b[0] - b[1]);
        assert_eq!(interpolate(&g, &s.node(3, 7)).unwrap(), g.at(3, 7));
        let h = s.spacing(0);
        let center = s.node(4, 5) + Shape::new(h / 2.0, h / 2.0);
        assert_abs_diff_eq!(
            interpolate(&g, &center).unwrap(),
            2.0 * center[0] - center[1],
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(interpolate(&g, &Shape::new(3.0, 3.0)).unwrap(), 3.0, epsilon = 1e-14);
        let err = interpolate(&g, &Shape::new(3.1, 0.0)).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { axis: 0, .. }));
    }

    #[test]
    fn flux_potential_integrates_bilinear_fields_exactly() {
        let s = spec(11, 2.0);
        // Bilinear in each cell, so the interpolant is exact.
        let g = FieldGrid::from_fn(s, |b| 1.0 + b[0] - 0.5 * b[1] + 0.25 * b[0] * b[1]);
        let p = FluxPotential::new(&g);
        // Axis-aligned rectangle [-0.7, 1.1] x [-0.3, 0.9], counterclockwise.
        let pts = [
            Shape::new(-0.7, -0.3),
            Shape::new(1.1, -0.3),
            Shape::new(1.1, 0.9),
            Shape::new(-0.7, 0.9),
        ];
        let (x0, x1, y0, y1) = (-0.7f64, 1.1f64, -0.3f64, 0.9f64);
        let exact = (x1 - x0) * (y1 - y0)
            + 0.5 * (x1 * x1 - x0 * x0) * (y1 - y0)
            - 0.25 * (x1 - x0) * (y1 * y1 - y0 * y0)
            + 0.0625 * (x1 * x1 - x0 * x0) * (y1 * y1 - y0 * y0);
        assert_abs_diff_eq!(p.polygon_flux(&pts).unwrap(), exact, epsilon = 1e-12);
        let mut rev = pts.to_vec();
        rev.reverse();
        assert_abs_diff_eq!(p.polygon_flux(&rev).unwrap(), -exact, epsilon = 1e-12);
    }
}
