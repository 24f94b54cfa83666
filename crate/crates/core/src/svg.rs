//! Static SVG figures: height functions with contour lines and gait
//! overlays, and world-frame body snapshots along a trajectory.
//!
//! Output is plain SVG 1.1 with fixed-precision numbers, so the same input
//! always yields the same bytes.

use crate::body::{BodyDiscretization, Shape};
use crate::contour;
use crate::fields::FieldGrid;
use crate::gait::{Gait, TrajectorySample};
use crate::se2::GroupElement;
use nalgebra::Vector2;
use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 560.0;
const PLOT: (f64, f64, f64) = (80.0, 50.0, 440.0);
const BAR_X: f64 = 545.0;
const BAR_W: f64 = 18.0;
const CONTOUR_LEVELS: usize = 10;

/// How a gait is drawn over a height plot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineStyle {
    Solid,
    Dashed,
}

#[derive(Debug, Clone)]
pub struct GaitOverlay<'a> {
    pub gait: &'a Gait,
    pub style: LineStyle,
    pub label: String,
}

/// A height function over the shape box.
#[derive(Debug, Clone)]
pub struct HeightPlot<'a> {
    pub field: &'a FieldGrid,
    pub title: String,
    pub axis_names: [String; 2],
    pub overlays: Vec<GaitOverlay<'a>>,
}

/// Blue through white to red, symmetric about zero.
fn diverging(v: f64, range: f64) -> String {
    let t = if range > 0.0 { (v / range).clamp(-1.0, 1.0) } else { 0.0 };
    let (r, g, b) = if t >= 0.0 {
        (1.0, 1.0 - 0.8 * t, 1.0 - 0.85 * t)
    } else {
        (1.0 + 0.85 * t, 1.0 + 0.6 * t, 1.0)
    };
    format!(
        "#{:02x}{:02x}{:02x}",
        (255.0 * r).round() as u8,
        (255.0 * g).round() as u8,
        (255.0 * b).round() as u8
    )
}

/// Sequential map for time along a cycle.
fn sequential(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = 30.0 + 200.0 * t;
    let g = 60.0 + 80.0 * (1.0 - (2.0 * t - 1.0).abs());
    let b = 200.0 - 170.0 * t;
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Affine map from a data box onto the square plot area, y up.
struct Frame {
    min: [f64; 2],
    span: f64,
}

impl Frame {
    fn px(&self, p: &Vector2<f64>) -> (f64, f64) {
        let (x0, y0, size) = PLOT;
        (
            x0 + (p[0] - self.min[0]) / self.span * size,
            y0 + size - (p[1] - self.min[1]) / self.span * size,
        )
    }
}

fn header(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="13">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="30" text-anchor="middle" font-size="16">{}</text>"#,
        PLOT.0 + PLOT.2 / 2.0,
        escape(title)
    );
}

/// Round tick positions covering `[lo, hi]`, with the decimals they need.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let raw = (hi - lo) / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step - 1e-9).ceil() as i64;
    let last = (hi / step + 1e-9).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn axes(out: &mut String, frame: &Frame, names: &[String; 2]) {
    let (x0, y0, size) = PLOT;
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    for axis in 0..2 {
        let (values, decimals) = ticks(frame.min[axis], frame.min[axis] + frame.span);
        for v in values {
            let label = format!("{v:.decimals$}");
            let mut p = Vector2::new(frame.min[0], frame.min[1]);
            p[axis] = v;
            let (x, y) = frame.px(&p);
            if axis == 0 {
                let _ = writeln!(
                    out,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
                    y0 + size,
                    y0 + size + 5.0,
                    y0 + size + 19.0
                );
            } else {
                let _ = writeln!(
                    out,
                    r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"#,
                    x0 - 5.0,
                    x0 - 8.0,
                    y + 4.0
                );
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>
<text x="{:.1}" y="{:.1}" text-anchor="middle" transform="rotate(-90 {:.1} {:.1})">{}</text>"#,
        x0 + size / 2.0,
        y0 + size + 40.0,
        escape(&names[0]),
        x0 - 50.0,
        y0 + size / 2.0,
        x0 - 50.0,
        y0 + size / 2.0,
        escape(&names[1])
    );
}

fn colorbar(out: &mut String, label: &str, lo: f64, hi: f64, color: impl Fn(f64) -> String) {
    let (_, y0, size) = PLOT;
    let steps = 64;
    let h = size / steps as f64;
    for k in 0..steps {
        let v = hi - (k as f64 + 0.5) / steps as f64 * (hi - lo);
        let _ = writeln!(
            out,
            r#"<rect x="{BAR_X}" y="{:.2}" width="{BAR_W}" height="{:.2}" fill="{}"/>"#,
            y0 + k as f64 * h,
            h + 0.3,
            color(v)
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{BAR_X}" y="{y0}" width="{BAR_W}" height="{size}" fill="none" stroke="black"/>
<text x="{:.1}" y="{:.1}">{hi:.4}</text>
<text x="{:.1}" y="{:.1}">{lo:.4}</text>
<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        BAR_X + BAR_W + 4.0,
        y0 + 10.0,
        BAR_X + BAR_W + 4.0,
        y0 + size,
        BAR_X + BAR_W / 2.0,
        y0 - 8.0,
        escape(label)
    );
}

fn polyline(points: &[Vector2<f64>], frame: &Frame, closed: bool) -> String {
    let mut d = String::new();
    for (k, p) in points.iter().enumerate() {
        let (x, y) = frame.px(p);
        let _ = write!(d, "{}{x:.2},{y:.2}", if k == 0 { "M" } else { " L" });
    }
    if closed {
        d.push_str(" Z");
    }
    d
}

impl HeightPlot<'_> {
    /// Filled cells, contour lines every tenth of the range with the zero
    /// level drawn heavier, then the gait overlays.
    pub fn render(&self) -> String {
        let grid = self.field;
        let spec = grid.spec;
        let frame = Frame {
            min: spec.bounds.min,
            span: spec.bounds.width(0).max(spec.bounds.width(1)),
        };
        let range = grid.max_abs();
        let mut out = String::new();
        header(&mut out, &self.title);

        let (hx, hy) = (spec.spacing(0), spec.spacing(1));
        let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
        for i in 0..spec.n {
            for j in 0..spec.n {
                let c = spec.node(i, j);
                let (x, y) = frame.px(&Shape::new(c[0] - hx / 2.0, c[1] + hy / 2.0));
                let (x1, y1) = frame.px(&Shape::new(c[0] + hx / 2.0, c[1] - hy / 2.0));
                let (x, y) = (x.max(PLOT.0), y.max(PLOT.1));
                let (x1, y1) = (x1.min(PLOT.0 + PLOT.2), y1.min(PLOT.1 + PLOT.2));
                let _ = writeln!(
                    out,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                    x1 - x,
                    y1 - y,
                    diverging(grid.at(i, j), range)
                );
            }
        }
        let _ = writeln!(out, "</g>");

        for k in 1..CONTOUR_LEVELS {
            for sign in [-1.0, 1.0] {
                let level = sign * range * k as f64 / CONTOUR_LEVELS as f64;
                for c in contour::level_set(grid, level) {
                    let _ = writeln!(
                        out,
                        r##"<path d="{}" fill="none" stroke="#555555" stroke-width="0.6" stroke-opacity="0.7"/>"##,
                        polyline(&c.points, &frame, c.closed)
                    );
                }
            }
        }
        for c in contour::level_set(grid, 0.0) {
            let _ = writeln!(
                out,
                r#"<path class="zero-contour" d="{}" fill="none" stroke="black" stroke-width="2.2"/>"#,
                polyline(&c.points, &frame, c.closed)
            );
        }

        for (k, o) in self.overlays.iter().enumerate() {
            let dash = match o.style {
                LineStyle::Solid => "",
                LineStyle::Dashed => r#" stroke-dasharray="7,5""#,
            };
            let _ = writeln!(
                out,
                r##"<path class="gait" d="{}" fill="none" stroke="#1b7a1b" stroke-width="2.5"{dash}/>"##,
                polyline(o.gait.waypoints(), &frame, true)
            );
            // Start marker and the direction of travel.
            let p = o.gait.waypoints();
            let (sx, sy) = frame.px(&p[0]);
            let (nx, ny) = frame.px(&p[1 % p.len()]);
            let _ = writeln!(
                out,
                r##"<circle cx="{sx:.2}" cy="{sy:.2}" r="3.5" fill="#1b7a1b"/><line x1="{sx:.2}" y1="{sy:.2}" x2="{nx:.2}" y2="{ny:.2}" stroke="#1b7a1b" stroke-width="4"/>"##
            );
            let ly = PLOT.1 + PLOT.2 + 58.0 - 16.0 * (self.overlays.len() - 1 - k) as f64;
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="#1b7a1b" stroke-width="2.5"{dash}/><text x="{:.1}" y="{:.1}">{}</text>"##,
                PLOT.0 + PLOT.2 - 150.0,
                PLOT.0 + PLOT.2 - 120.0,
                PLOT.0 + PLOT.2 - 114.0,
                ly + 4.0,
                escape(&o.label)
            );
        }

        axes(&mut out, &frame, &self.axis_names);
        colorbar(&mut out, &self.title, -range, range, |v| diverging(v, range));
        out.push_str("</svg>\n");
        out
    }
}

/// One body outline placed in the world.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub points: Vec<Vector2<f64>>,
}

impl Snapshot {
    /// Segment end points of `body`, moved by the body-frame pose `g`.
    pub fn place(t: f64, body: &BodyDiscretization, g: &GroupElement) -> Self {
        let (s, c) = g.theta.sin_cos();
        let world = |p: Vector2<f64>| Vector2::new(g.x + c * p[0] - s * p[1], g.y + s * p[0] + c * p[1]);
        let mut points = Vec::with_capacity(body.segments.len() + 1);
        for (k, seg) in body.segments.iter().enumerate() {
            let (sn, cs) = seg.pose.theta.sin_cos();
            let half = 0.5 * seg.length * Vector2::new(cs, sn);
            let mid = Vector2::new(seg.pose.x, seg.pose.y);
            if k == 0 {
                points.push(world(mid - half));
            }
            points.push(world(mid + half));
        }
        Self { t, points }
    }
}

/// World-frame path of the body frame with body snapshots colored by the
/// cycle phase.
pub fn trajectory_plot(title: &str, samples: &[TrajectorySample], snapshots: &[Snapshot]) -> String {
    let mut all: Vec<Vector2<f64>> = samples.iter().map(|s| Vector2::new(s.g.x, s.g.y)).collect();
    all.extend(snapshots.iter().flat_map(|s| s.points.iter().copied()));
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &all {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    if all.is_empty() {
        lo = [-1.0; 2];
        hi = [1.0; 2];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-6) * 1.1;
    let center = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let frame = Frame {
        min: [center[0] - span / 2.0, center[1] - span / 2.0],
        span,
    };
    let t_end = samples.last().map_or(1.0, |s| s.t).max(f64::MIN_POSITIVE);

    let mut out = String::new();
    header(&mut out, title);
    for s in snapshots {
        let _ = writeln!(
            out,
            r#"<path class="snapshot" d="{}" fill="none" stroke="{}" stroke-width="2"/>"#,
            polyline(&s.points, &frame, false),
            sequential(s.t / t_end)
        );
    }
    let path: Vec<Vector2<f64>> = samples.iter().map(|s| Vector2::new(s.g.x, s.g.y)).collect();
    if !path.is_empty() {
        let _ = writeln!(
            out,
            r#"<path class="trajectory" d="{}" fill="none" stroke="black" stroke-width="1.2"/>"#,
            polyline(&path, &frame, false)
        );
    }
    axes(&mut out, &frame, &["x".to_string(), "y".to_string()]);
    colorbar(&mut out, "cycle time", 0.0, t_end, |v| sequential(v / t_end));
    out.push_str("</svg>\n");
    out
}
