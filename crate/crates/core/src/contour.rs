//! Level sets and sign lobes of sampled scalar fields.
//!
//! Contours are traced on the grid cells with marching squares; ambiguous
//! saddle cells are resolved by the cell-center average. Lobes are the
//! 4-connected components of nodes sharing a strict sign.

use crate::body::Shape;
use crate::fields::FieldGrid;
use std::collections::HashMap;

/// One connected piece of a level set.
#[derive(Debug, Clone, PartialEq)]
pub struct Contour {
    pub points: Vec<Shape>,
    /// False when the piece runs into the grid boundary.
    pub closed: bool,
}

impl Contour {
    /// Winding number of the closed polyline around `p`; zero for open ones.
    pub fn winding_number(&self, p: &Shape) -> i32 {
        if !self.closed {
            return 0;
        }
        let n = self.points.len();
        let mut w = 0;
        for k in 0..n {
            let a = self.points[k] - p;
            let b = self.points[(k + 1) % n] - p;
            let cross = a[0] * b[1] - a[1] * b[0];
            if a[1] <= 0.0 {
                if b[1] > 0.0 && cross > 0.0 {
                    w += 1;
                }
            } else if b[1] <= 0.0 && cross < 0.0 {
                w -= 1;
            }
        }
        w
    }

    pub fn encloses(&self, p: &Shape) -> bool {
        self.winding_number(p) != 0
    }

    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let edges = if self.closed { n } else { n.saturating_sub(1) };
        (0..edges)
            .map(|k| (self.points[(k + 1) % n] - self.points[k]).norm())
            .sum()
    }
}

/// A cell edge, identified by its lower node and direction (0 along β₁).
type EdgeKey = (usize, usize, u8);

/// All pieces of `{grid = level}`.
pub fn level_set(grid: &FieldGrid, level: f64) -> Vec<Contour> {
    let spec = grid.spec;
    let n = spec.n;
    // Nodes exactly on the level count as above it, so no crossing lands on
    // a node and every cell has an even number of crossings.
    let above = |i: usize, j: usize| grid.at(i, j) >= level;
    let crossing = |key: EdgeKey| -> Shape {
        let (i, j, dir) = key;
        let (i1, j1) = if dir == 0 { (i + 1, j) } else { (i, j + 1) };
        let (v0, v1) = (grid.at(i, j) - level, grid.at(i1, j1) - level);
        let t = v0 / (v0 - v1);
        let (a, b) = (spec.node(i, j), spec.node(i1, j1));
        a + (b - a) * t
    };

    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            // Corners counterclockwise from the lower left; edge k joins
            // corner k to corner k + 1.
            let corners = [above(i, j), above(i + 1, j), above(i + 1, j + 1), above(i, j + 1)];
            let edges: [EdgeKey; 4] = [(i, j, 0), (i + 1, j, 1), (i, j + 1, 0), (i, j, 1)];
            let cut: Vec<usize> = (0..4).filter(|&k| corners[k] != corners[(k + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let center = 0.25 * (grid.at(i, j) + grid.at(i + 1, j) + grid.at(i + 1, j + 1) + grid.at(i, j + 1));
                    // Join so that the center's side stays connected.
                    if (center >= level) == corners[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }

    let mut neighbours: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, (a, b)) in segments.iter().enumerate() {
        neighbours.entry(*a).or_default().push(s);
        neighbours.entry(*b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    // Open pieces start at boundary edges, which touch a single segment.
    let mut starts: Vec<usize> = (0..segments.len())
        .filter(|&s| neighbours[&segments[s].0].len() == 1 || neighbours[&segments[s].1].len() == 1)
        .collect();
    starts.extend(0..segments.len());
    for start in starts {
        if used[start] {
            continue;
        }
        let (a, b) = segments[start];
        let (first, mut tip) = if neighbours[&b].len() == 1 { (b, a) } else { (a, b) };
        used[start] = true;
        let mut keys = vec![first, tip];
        let closed = loop {
            let next = neighbours[&tip].iter().copied().find(|&s| !used[s]);
            match next {
                Some(s) => {
                    used[s] = true;
                    let (p, q) = segments[s];
                    tip = if p == tip { q } else { p };
                    if tip == first {
                        break true;
                    }
                    keys.push(tip);
                }
                None => break false,
            }
        };
        out.push(Contour {
            points: keys.into_iter().map(crossing).collect(),
            closed,
        });
    }
    out
}

/// Closed pieces of the zero set that wind around `p`.
pub fn loops_around(grid: &FieldGrid, p: &Shape) -> Vec<Contour> {
    level_set(grid, 0.0).into_iter().filter(|c| c.encloses(p)).collect()
}

/// A connected region of nodes where the field has one strict sign.
#[derive(Debug, Clone, PartialEq)]
pub struct Lobe {
    pub sign: f64,
    pub nodes: Vec<(usize, usize)>,
    /// Node of largest magnitude and its value.
    pub peak: (usize, usize),
    pub peak_value: f64,
    /// Node mean, in shape coordinates.
    pub centroid: Shape,
}

impl Lobe {
    pub fn contains_node(&self, node: (usize, usize)) -> bool {
        self.nodes.contains(&node)
    }
}

/// 4-connected sign components, largest peak magnitude first.
pub fn sign_lobes(grid: &FieldGrid) -> Vec<Lobe> {
    let spec = grid.spec;
    let n = spec.n;
    let mut label = vec![usize::MAX; n * n];
    let mut lobes = Vec::new();
    for start in 0..n * n {
        let (si, sj) = (start / n, start % n);
        let v = grid.at(si, sj);
        if label[start] != usize::MAX || v == 0.0 {
            continue;
        }
        let sign = v.signum();
        let id = lobes.len();
        let mut stack = vec![(si, sj)];
        label[start] = id;
        let mut nodes = Vec::new();
        while let Some((i, j)) = stack.pop() {
            nodes.push((i, j));
            let mut visit = |ii: usize, jj: usize| {
                let k = ii * n + jj;
                if label[k] == usize::MAX && grid.at(ii, jj) * sign > 0.0 {
                    label[k] = id;
                    stack.push((ii, jj));
                }
            };
            if i > 0 {
                visit(i - 1, j);
            }
            if i + 1 < n {
                visit(i + 1, j);
            }
            if j > 0 {
                visit(i, j - 1);
            }
            if j + 1 < n {
                visit(i, j + 1);
            }
        }
        nodes.sort_unstable();
        let peak = *nodes
            .iter()
            .max_by(|a, b| grid.at(a.0, a.1).abs().total_cmp(&grid.at(b.0, b.1).abs()))
            .expect("lobe has its seed node");
        let centroid = nodes.iter().map(|&(i, j)| spec.node(i, j)).sum::<Shape>() / nodes.len() as f64;
        lobes.push(Lobe {
            sign,
            peak,
            peak_value: grid.at(peak.0, peak.1),
            centroid,
            nodes,
        });
    }
    lobes.sort_by(|a, b| b.peak_value.abs().total_cmp(&a.peak_value.abs()));
    lobes
}
