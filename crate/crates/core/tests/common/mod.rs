//! Oracles shared by the integration tests. Everything here is written
//! from first principles rather than through the library's assembly code.
#![allow(dead_code)]

use nalgebra::{Matrix2, Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soapgait::body::Shape;
use soapgait::fields::lie_bracket_local;
use soapgait::rft::Swimmer;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_shape(rng: &mut impl Rng, half_width: f64) -> Shape {
    Shape::new(rng.random_range(-half_width..half_width), rng.random_range(-half_width..half_width))
}

/// A straight piece of body: midpoint, orientation and length.
#[derive(Debug, Clone, Copy)]
pub struct Piece {
    pub mid: Vector2<f64>,
    pub theta: f64,
    pub length: f64,
}

fn dir(theta: f64) -> Vector2<f64> {
    Vector2::new(theta.cos(), theta.sin())
}

/// Three links of length 1/3 built joint by joint from the middle link,
/// then moved to the centroid / mean-angle frame.
pub fn three_link_chain(alpha: Shape, per_link: usize) -> Vec<Piece> {
    let link = 1.0 / 3.0;
    let dl = link / per_link as f64;
    let back_joint = Vector2::new(-link / 2.0, 0.0);
    let front_joint = Vector2::new(link / 2.0, 0.0);
    let mut pieces = Vec::new();
    for k in (0..per_link).rev() {
        // Tail link points from its free end toward the back joint.
        let from_joint = (k as f64 + 0.5) * dl;
        pieces.push(Piece { mid: back_joint - from_joint * dir(alpha[0]), theta: alpha[0], length: dl });
    }
    for k in 0..per_link {
        let along = -link / 2.0 + (k as f64 + 0.5) * dl;
        pieces.push(Piece { mid: Vector2::new(along, 0.0), theta: 0.0, length: dl });
    }
    for k in 0..per_link {
        let from_joint = (k as f64 + 0.5) * dl;
        pieces.push(Piece { mid: front_joint + from_joint * dir(alpha[1]), theta: alpha[1], length: dl });
    }
    recenter(pieces)
}

/// Serpenoid centerline sampled with the midpoint rule on `n` pieces.
pub fn serpenoid_chain(amps: Shape, n: usize) -> Vec<Piece> {
    let tau = std::f64::consts::TAU;
    let ds = 1.0 / n as f64;
    // Heading has a closed form: integral of the curvature from the tail.
    let heading = |s: f64| -amps[0] * ((tau * s).cos() + 1.0) + amps[1] * (tau * s).sin();
    let mut pos = Vector2::zeros();
    let mut pieces = Vec::with_capacity(n);
    for k in 0..n {
        let s = -0.5 + (k as f64 + 0.5) * ds;
        let theta = heading(s);
        let half = 0.5 * ds * dir(theta);
        pieces.push(Piece { mid: pos + half, theta, length: ds });
        pos += 2.0 * half;
    }
    recenter(pieces)
}

pub fn recenter(pieces: Vec<Piece>) -> Vec<Piece> {
    let total: f64 = pieces.iter().map(|p| p.length).sum();
    let centroid = pieces.iter().map(|p| p.mid * p.length).sum::<Vector2<f64>>() / total;
    let mean = pieces.iter().map(|p| p.theta * p.length).sum::<f64>() / total;
    let (s, c) = mean.sin_cos();
    let back = Matrix2::new(c, s, -s, c);
    pieces
        .into_iter()
        .map(|p| Piece { mid: back * (p.mid - centroid), theta: p.theta - mean, length: p.length })
        .collect()
}

/// Net drag wrench on a rigidly moving chain: each piece feels
/// `-(c_t v_t t̂ + c_n v_n n̂) dl`, and the moment is taken about the origin.
pub fn rigid_drag_wrench(pieces: &[Piece], xi: Vector3<f64>, c_t: f64, c_n: f64) -> Vector3<f64> {
    let mut total = Vector3::zeros();
    for p in pieces {
        let v = Vector2::new(xi[0] - xi[2] * p.mid.y, xi[1] + xi[2] * p.mid.x);
        let t = dir(p.theta);
        let n = Vector2::new(-t.y, t.x);
        let f = -(c_t * v.dot(&t) * t + c_n * v.dot(&n) * n) * p.length;
        total += Vector3::new(f.x, f.y, p.mid.x * f.y - p.mid.y * f.x);
    }
    total
}

/// Height functions at `beta` from central differences of the direct
/// connection: `H = -(∂₁A₂ - ∂₂A₁) + [A₁, A₂]`.
pub fn direct_height(swimmer: &Swimmer, beta: &Shape, h: f64) -> Vector3<f64> {
    let a = |b: Shape| swimmer.local_connection(&b).unwrap();
    let e1 = Shape::new(h, 0.0);
    let e2 = Shape::new(0.0, h);
    let d1 = (a(beta + e1).0 - a(beta - e1).0) / (2.0 * h);
    let d2 = (a(beta + e2).0 - a(beta - e2).0) / (2.0 * h);
    let curl = d1.column(1) - d2.column(0);
    -curl + lie_bracket_local(&a(*beta))
}
