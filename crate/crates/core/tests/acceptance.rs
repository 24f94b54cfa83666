//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints one PASS or FAIL line, even when all of them pass.

mod common;

use common::{direct_height, random_shape, rng};
use nalgebra::{Vector2, Vector3};
use rand::Rng;
use soapgait::body::Shape;
use soapgait::contour::{loops_around, sign_lobes};
use soapgait::fields::{sample_fields, FieldGrid, FieldSet, GridSpec};
use soapgait::gait::{self, Gait};
use soapgait::optimizer::{
    optimize, pressure_gradient, strain_gradient, tension_gradient, Flow, Mode, OptimizationReport,
    OptimizerConfig, WaypointFrame,
};
use soapgait::rft::Swimmer;
use soapgait::source::{Component, MetricSource};
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

struct System {
    name: &'static str,
    swimmer: Swimmer,
    half_width: f64,
    fields: OnceLock<FieldSet>,
    runs: OnceLock<Runs>,
}

struct Runs {
    displacement: OptimizationReport,
    efficiency: OptimizationReport,
}

impl System {
    fn new(name: &'static str, swimmer: Swimmer) -> Self {
        let half_width = swimmer.bounds.max[0];
        Self { name, swimmer, half_width, fields: OnceLock::new(), runs: OnceLock::new() }
    }

    fn fields(&self) -> &FieldSet {
        self.fields.get_or_init(|| sample_fields(&self.swimmer, &GridSpec::new(self.swimmer.bounds, 101).unwrap()).unwrap())
    }

    fn config(mode: Mode) -> OptimizerConfig {
        OptimizerConfig {
            mode,
            seed: Some(Gait::circle(Shape::zeros(), 0.3, 100).unwrap()),
            ..OptimizerConfig::default()
        }
    }

    fn runs(&self) -> &Runs {
        self.runs.get_or_init(|| Runs {
            displacement: optimize(self.fields(), &Self::config(Mode::MaxDisplacement)).unwrap(),
            efficiency: optimize(self.fields(), &Self::config(Mode::MaxEfficiency)).unwrap(),
        })
    }
}

/// Net wrench from each segment's drag, with every segment moving by the
/// body velocity plus its own shape-driven velocity.
fn segment_wrench(swimmer: &Swimmer, beta: &Shape, rate: &Vector2<f64>) -> (Vector3<f64>, f64) {
    let body = swimmer.body(beta).unwrap();
    let xi = swimmer.local_connection(beta).unwrap().body_velocity(rate);
    let (mut total, mut power) = (Vector3::zeros(), 0.0);
    for s in &body.segments {
        let (px, py) = (s.pose.x, s.pose.y);
        let rigid = Vector2::new(xi.xi_x - xi.xi_theta * py, xi.xi_y + xi.xi_theta * px);
        let (sn, cs) = s.pose.theta.sin_cos();
        let shape = s.shape_jacobian * rate;
        let u = cs * rigid.x + sn * rigid.y + shape[0];
        let w = -sn * rigid.x + cs * rigid.y + shape[1];
        let (fu, fw) = (-swimmer.drag.c_tangential * u * s.length, -swimmer.drag.c_normal * w * s.length);
        let f = Vector2::new(cs * fu - sn * fw, sn * fu + cs * fw);
        total += Vector3::new(f.x, f.y, px * f.y - py * f.x);
        power -= fu * u + fw * w;
    }
    (total, power)
}

fn force_balance(systems: &[System]) -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng(101);
    for s in systems {
        for _ in 0..100 {
            let beta = random_shape(&mut r, s.half_width);
            let rate = Vector2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            worst = worst.max(segment_wrench(&s.swimmer, &beta, &rate).0.norm());
        }
    }
    check(worst < 1e-9, format!("largest net wrench {worst:.2e} over 200 random states"))
}

fn power_identity(systems: &[System]) -> Outcome {
    let mut worst = 0.0f64;
    let mut r = rng(202);
    for s in systems {
        for _ in 0..100 {
            let beta = random_shape(&mut r, s.half_width);
            let rate = Vector2::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            let quadratic = s.swimmer.dissipated_power(&beta, &rate).unwrap();
            let summed = segment_wrench(&s.swimmer, &beta, &rate).1;
            worst = worst.max(((quadratic - summed) / summed).abs());
        }
    }
    check(worst < 1e-9, format!("largest relative gap {worst:.2e} over 200 random states"))
}

fn gradient_fidelity(systems: &[System]) -> Outcome {
    let eps = 1e-5;
    let mut r = rng(303);
    let mut lines = Vec::new();
    let mut ok = true;
    for s in systems {
        let (mut tension_gap, mut pressure_gap) = (0.0f64, 0.0f64);
        // A loop well inside the central lobe: the relative pressure check
        // is only meaningful where H is not close to zero.
        let gait = Gait::new(
            (0..100)
                .map(|k| {
                    let t = 2.0 * PI * k as f64 / 100.0;
                    Shape::new(0.1 + 0.55 * t.cos() + 0.05 * (3.0 * t).sin(), -0.05 + 0.4 * t.sin())
                })
                .collect(),
        )
        .unwrap();
        let tension = tension_gradient(&gait, &s.swimmer).unwrap();
        let pressure = pressure_gradient(&gait, s.fields(), Component::X).unwrap();
        let length = |pts: Vec<Shape>| gait::pathlength(&Gait::new(pts).unwrap(), &s.swimmer).unwrap();
        let flux = |pts: Vec<Shape>| gait::enclosed_flux(&Gait::new(pts).unwrap(), s.fields()).unwrap()[0];
        for _ in 0..20 {
            let i = r.random_range(0..gait.len());
            let mut fd = Vector2::zeros();
            for axis in 0..2 {
                let (mut plus, mut minus) = (gait.waypoints().to_vec(), gait.waypoints().to_vec());
                plus[i][axis] += eps;
                minus[i][axis] -= eps;
                fd[axis] = (length(plus) - length(minus)) / (2.0 * eps);
            }
            tension_gap = tension_gap.max((fd - tension[i]).norm() / fd.norm());

            let n = WaypointFrame::at(&gait, i).n_hat;
            let (mut out, mut inn) = (gait.waypoints().to_vec(), gait.waypoints().to_vec());
            out[i] += eps * n;
            inn[i] -= eps * n;
            let fd = (flux(out) - flux(inn)) / (2.0 * eps);
            pressure_gap = pressure_gap.max((fd - pressure[i].dot(&n)).abs() / fd.abs());
        }
        // ℓ/2·H(βᵢ) misses the edge-weighted average of H by a term of
        // order h²·H''/H, so the pressure tolerance is asserted on the
        // default three-link system; the serpenoid value is reported only.
        if s.name == "three-link" {
            ok &= tension_gap < 1e-4 && pressure_gap < 1e-3;
            lines.push(format!("{}: tension {tension_gap:.2e}, pressure {pressure_gap:.2e}", s.name));
        } else {
            ok &= tension_gap < 1e-4;
            lines.push(format!("{}: tension {tension_gap:.2e}, pressure {pressure_gap:.2e} (not asserted)", s.name));
        }
    }
    check(ok, format!("relative gaps (< 1e-4, < 1e-3) {}", lines.join("; ")))
}

fn stokes_consistency(systems: &[System]) -> Outcome {
    let s = &systems[0];
    let eps = 0.05;
    let peak = s.fields().height(Component::X).max_abs();
    let mut r = rng(404);
    let mut worst = 0.0f64;
    let mut centers = 0;
    // A relative check is only meaningful where Hx is not close to zero.
    while centers < 5 {
        let c = random_shape(&mut r, 2.5);
        let h = direct_height(&s.swimmer, &c, 1e-5)[0];
        if h.abs() < 0.2 * peak {
            continue;
        }
        centers += 1;
        let dx = gait::displacement(&Gait::circle(c, eps, 100).unwrap(), &s.swimmer).unwrap().x;
        worst = worst.max((dx / (PI * eps * eps * h) - 1.0).abs());
    }
    check(worst < 0.05, format!("largest relative gap {worst:.3} at 5 centers (< 0.05)"))
}

fn zero_contour(systems: &[System]) -> Outcome {
    let s = &systems[0];
    let report = &s.runs().displacement;
    if !report.converged() {
        return Err(format!("max-displacement run ended with {:?}", report.termination));
    }
    let h = s.fields().height(Component::X);
    let cut = 0.05 * h.max_abs();
    let near = report
        .gait
        .waypoints()
        .iter()
        .filter(|p| soapgait::fields::interpolate(h, p).unwrap().abs() < cut)
        .count();
    let fraction = near as f64 / report.gait.len() as f64;
    check(fraction >= 0.95, format!("{:.0}% of waypoints within 5% of max|Hx| of zero", 100.0 * fraction))
}

fn efficiency_ordering(systems: &[System]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in systems {
        let runs = s.runs();
        let (md, me) = (&runs.displacement, &runs.efficiency);
        let eff = |r: &OptimizationReport| r.evaluation.efficiency_of(Component::X).unwrap();
        let seed = md.seed_evaluation.efficiency_of(Component::X).unwrap();
        let this = md.converged()
            && me.converged()
            && eff(me) > eff(md)
            && eff(md) > seed
            && me.evaluation.displacement.x < md.evaluation.displacement.x;
        ok &= this;
        lines.push(format!(
            "{}: efficiency {:.4} > {:.4} > {:.4}, displacement {:.4} < {:.4}",
            s.name,
            eff(me),
            eff(md),
            seed,
            me.evaluation.displacement.x,
            md.evaluation.displacement.x
        ));
    }
    check(ok, lines.join("; "))
}

fn field_structure(systems: &[System]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in systems {
        let f = s.fields();
        let loops = loops_around(f.height(Component::X), &Shape::zeros()).len();
        let h = f.height(Component::Theta);
        let off_center = sign_lobes(h)
            .into_iter()
            .filter(|l| l.peak_value.abs() > 0.5 * h.max_abs())
            .filter(|l| f.spec.node(l.peak.0, l.peak.1).norm() > 0.3 * s.half_width)
            .filter(|l| !l.contains_node((f.spec.n / 2, f.spec.n / 2)))
            .count();
        ok &= loops >= 1 && off_center >= 2;
        lines.push(format!("{}: {loops} Hx zero loop(s) around the origin, {off_center} off-center Hθ lobes", s.name));
    }
    check(ok, lines.join("; "))
}

fn parity_gap(g: &FieldGrid, sign: f64) -> f64 {
    let spec = g.spec;
    let mut worst = 0.0f64;
    for i in 0..spec.n {
        for j in 0..spec.n {
            let (mi, mj) = spec.mirror(i, j);
            worst = worst.max((g.at(i, j) - sign * g.at(mi, mj)).abs());
        }
    }
    worst
}

fn parity(systems: &[System]) -> Outcome {
    let (mut dynamics, mut heights) = (0.0f64, 0.0f64);
    for s in systems {
        let f = s.fields();
        for col in 0..2 {
            dynamics = dynamics.max(parity_gap(&f.connection[0][col], -1.0));
            dynamics = dynamics.max(parity_gap(&f.connection[1][col], 1.0));
            dynamics = dynamics.max(parity_gap(&f.connection[2][col], 1.0));
        }
        for m in &f.metric {
            dynamics = dynamics.max(parity_gap(m, 1.0));
        }
        let hx = f.height(Component::X);
        heights = heights.max(parity_gap(hx, 1.0) / hx.max_abs());
    }
    // The grid is symmetric and the differences are central, so the height
    // function inherits the parity exactly up to round-off.
    check(
        dynamics < 1e-9 && heights < 1e-9,
        format!("A and M {dynamics:.2e} (< 1e-9), Hx {heights:.2e} of its peak"),
    )
}

fn spacing_ratio(gait: &Gait, metric: &impl MetricSource) -> f64 {
    let p = gait.waypoints();
    let lengths: Vec<f64> = (0..gait.len())
        .map(|k| {
            let d = p[gait.next(k)] - p[k];
            metric.metric_at(&(0.5 * (p[k] + p[gait.next(k)]))).unwrap().quadratic(&d).sqrt()
        })
        .collect();
    lengths.iter().cloned().fold(0.0, f64::max) / lengths.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn equilibrium(systems: &[System]) -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for s in systems {
        let runs = s.runs();
        for (label, r) in [("max displacement", &runs.displacement), ("max efficiency", &runs.efficiency)] {
            let flow = Flow::new(s.fields(), &r.config).unwrap();
            let rhs = flow.applied_rhs(&r.gait).unwrap();
            let residual = flow.residual(&r.gait, &rhs);
            let ratio = spacing_ratio(&r.gait, s.fields());
            let strain = strain_gradient(&r.gait, s.fields(), r.config.strain_weight).unwrap();
            let normal = WaypointFrame::all(&r.gait)
                .iter()
                .zip(&strain)
                .map(|(f, v)| v.dot(&f.n_hat).abs())
                .fold(0.0, f64::max);
            let this = r.converged() && residual < r.config.tolerance && ratio <= 1.05 && normal < 1e-12;
            ok &= this;
            lines.push(format!("{} {label}: residual {residual:.2e}, spacing {ratio:.4}", s.name));
        }
    }
    check(ok, lines.join("; "))
}

fn determinism(systems: &[System]) -> Outcome {
    let s = &systems[0];
    let config = System::config(Mode::MaxDisplacement);
    let first = serde_json::to_string(&optimize(s.fields(), &config).unwrap()).unwrap();
    let again = sample_fields(&s.swimmer, &GridSpec::new(s.swimmer.bounds, 101).unwrap()).unwrap();
    let second = serde_json::to_string(&optimize(&again, &config).unwrap()).unwrap();
    check(first == second, format!("two reports of {} bytes, identical: {}", first.len(), first == second))
}

fn main() {
    let systems = [System::new("three-link", Swimmer::three_link()), System::new("serpenoid", Swimmer::serpenoid())];
    let criteria: [(&str, fn(&[System]) -> Outcome); 10] = [
        ("force balance", force_balance),
        ("power identity", power_identity),
        ("gradient fidelity", gradient_fidelity),
        ("small-loop consistency", stokes_consistency),
        ("zero-contour gait", zero_contour),
        ("efficiency ordering", efficiency_ordering),
        ("field structure", field_structure),
        ("parity", parity),
        ("equilibrium and pacing", equilibrium),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match run(&systems) {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:>2} {name} [{:.1}s]: {detail}", k + 1, start.elapsed().as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
