mod common;

use common::{direct_height, rng};
use rand::Rng;
use soapgait::body::Shape;
use soapgait::fields::{sample_fields, FieldSet, GridSpec};
use soapgait::gait::{
    displacement, displacement_with_substeps, efficiency, enclosed_flux, enclosed_flux_with_subdivision,
    pathlength, trajectory, Gait, DEFAULT_SUBSTEPS,
};
use soapgait::rft::Swimmer;
use soapgait::se2::{compose, inverse, GroupElement};
use soapgait::source::{Component, MetricSource};
use std::f64::consts::PI;
use std::sync::OnceLock;

fn three_link_fields() -> &'static FieldSet {
    static F: OnceLock<FieldSet> = OnceLock::new();
    F.get_or_init(|| {
        let s = Swimmer::three_link();
        sample_fields(&s, &GridSpec::new(s.bounds, 101).unwrap()).unwrap()
    })
}

fn gap(a: &GroupElement, b: &GroupElement) -> f64 {
    (a.x - b.x).abs().max((a.y - b.y).abs()).max((a.theta - b.theta).abs())
}

/// A wobbly closed curve, so that no symmetry hides integration errors.
fn wobbly(center: Shape, n: usize) -> Gait {
    let pts = (0..n)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / n as f64;
            let r = 0.8 + 0.25 * (3.0 * t).cos();
            center + Shape::new(r * t.cos(), 1.2 * r * t.sin())
        })
        .collect();
    Gait::new(pts).unwrap()
}

#[test]
fn small_circles_follow_the_height_function() {
    let s = Swimmer::three_link();
    let eps = 0.05;
    let mut r = rng(21);
    let mut centers = vec![Shape::zeros()];
    // Points where Hx is tiny make a relative check meaningless, so centers
    // are drawn among those with at least a fifth of the peak value.
    let peak = three_link_fields().height(Component::X).max_abs();
    while centers.len() < 6 {
        let c = Shape::new(r.random_range(-2.5..2.5), r.random_range(-2.5..2.5));
        if direct_height(&s, &c, 1e-5)[0].abs() > 0.2 * peak {
            centers.push(c);
        }
    }
    for c in centers {
        let gait = Gait::circle(c, eps, 100).unwrap();
        let dx = displacement(&gait, &s).unwrap().x;
        let expected = PI * eps * eps * direct_height(&s, &c, 1e-5)[0];
        assert!(((dx - expected) / expected).abs() < 0.05, "at {c:?}: {dx} vs {expected}");
    }
}

#[test]
fn small_circle_efficiency_is_flux_over_circumference() {
    let s = Swimmer::three_link();
    let eps = 0.05;
    let gait = Gait::circle(Shape::zeros(), eps, 100).unwrap();
    let flux = PI * eps * eps * direct_height(&s, &Shape::zeros(), 1e-5)[0];
    // Circumference from a much finer polygon with the exact direction.
    let m = 20_000;
    let circumference: f64 = (0..m)
        .map(|k| {
            let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
            let p = eps * Shape::new(t.cos(), t.sin());
            let v = eps * Shape::new(-t.sin(), t.cos()) * (2.0 * PI / m as f64);
            s.metric_at(&p).unwrap().quadratic(&v).sqrt()
        })
        .sum();
    let e = efficiency(&gait, &s, Component::X).unwrap();
    assert!(((e - flux / circumference) / e).abs() < 0.05);
    assert!((efficiency(&gait.reversed(), &s, Component::X).unwrap() + e).abs() < 1e-6 * e.abs());
}

#[test]
fn square_pathlength_matches_fine_quadrature() {
    let s = Swimmer::three_link();
    let h = 0.1;
    let corners = [Shape::new(-h, -h), Shape::new(h, -h), Shape::new(h, h), Shape::new(-h, h)];
    let mut pts = Vec::new();
    for k in 0..4 {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        for j in 0..3 {
            pts.push(a + (b - a) * (j as f64 / 3.0));
        }
    }
    let gait = Gait::new(pts).unwrap();
    let per_side = 100;
    let oracle: f64 = (0..4)
        .map(|k| {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            let d = (b - a) / per_side as f64;
            (0..per_side)
                .map(|j| s.metric_at(&(a + d * (j as f64 + 0.5))).unwrap().quadratic(&d).sqrt())
                .sum::<f64>()
        })
        .sum();
    let p = pathlength(&gait, &s).unwrap();
    assert!(((p - oracle) / oracle).abs() < 5e-3, "{p} vs {oracle}");
}

#[test]
fn line_integral_is_fourth_order() {
    let s = Swimmer::three_link();
    let gait = wobbly(Shape::new(0.3, -0.2), 16);
    let reference = displacement_with_substeps(&gait, &s, 256).unwrap();
    let errors: Vec<f64> = [2usize, 4, 8]
        .iter()
        .map(|&k| gap(&displacement_with_substeps(&gait, &s, k).unwrap(), &reference))
        .collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 3.5, "observed order {order} from {errors:?}");
    }
}

#[test]
fn reversal_inverts_the_displacement() {
    let s = Swimmer::three_link();
    let gait = wobbly(Shape::new(-0.4, 0.5), 100);
    let forward = displacement(&gait, &s).unwrap();
    let back = displacement(&gait.reversed(), &s).unwrap();
    assert!(gap(&compose(&forward, &back), &GroupElement::IDENTITY) < 1e-7);
    assert!(gap(&back, &inverse(&forward)) < 1e-7);
    assert!((forward.theta + back.theta).abs() < 1e-7);
}

#[test]
fn relabeling_the_start_conjugates_the_displacement() {
    // Starting k waypoints later measures the same loop from a different
    // pose: the new displacement is h⁻¹ Δg h, with h the motion over the
    // skipped arc. Rotation, pathlength and flux do not change.
    let f = three_link_fields();
    let gait = wobbly(Shape::new(0.1, 0.2), 100);
    let k = 37;
    let dg = displacement(&gait, f).unwrap();
    let shifted = gait.rotated(k);
    let dg_shifted = displacement(&shifted, f).unwrap();
    let h = trajectory(&gait, f, DEFAULT_SUBSTEPS).unwrap()[k * DEFAULT_SUBSTEPS].g;
    let expected = compose(&compose(&inverse(&h), &dg), &h);
    assert!(gap(&dg_shifted, &expected) < 1e-9, "{dg_shifted:?} vs {expected:?}");
    assert!((dg_shifted.theta - dg.theta).abs() < 1e-12);
    assert!((pathlength(&shifted, f).unwrap() - pathlength(&gait, f).unwrap()).abs() < 1e-12);
    let (a, b) = (enclosed_flux(&shifted, f).unwrap(), enclosed_flux(&gait, f).unwrap());
    assert!((a - b).norm() < 1e-12);
}

#[test]
fn fan_quadrature_converges_to_the_exact_interpolant_flux() {
    let f = three_link_fields();
    let gait = wobbly(Shape::new(0.1, 0.2), 100);
    let exact = enclosed_flux(&gait, f).unwrap();
    let errors: Vec<f64> = [2usize, 4, 8, 16]
        .iter()
        .map(|&m| (enclosed_flux_with_subdivision(&gait, f, m).unwrap() - exact).norm())
        .collect();
    assert!(errors[3] < 0.1 * errors[0], "errors {errors:?}");
    assert!(errors[3] < 1e-3 * exact.norm());
}
