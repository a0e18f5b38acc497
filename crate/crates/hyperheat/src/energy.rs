//! Edge spread `f_e`, the total energy `φ(x) = (1/p) Σ_e w(e) f_e(x)^p`, the
//! active-set geometry of the subdifferential faces, the canonical (uniform
//! coefficient) subgradient selection, and the `D - A` cross-check on
//! ordinary graphs.

use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Potential};

/// Active sets and spread of a single edge at a point: `spread = max - min`
/// over the edge, `argmax`/`argmin` holding every vertex within `tol` of the
/// extremes. Encodes the face of the subdifferential of `f_e` at `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFace {
    pub edge: usize,
    pub spread: f64,
    pub argmax: Vec<usize>,
    pub argmin: Vec<usize>,
    /// Tie tolerance used to build the active sets.
    pub tol: f64,
}

/// Default tie-detection tolerance, relative to the scale of `x`.
pub fn default_active_tol(x: &[f64]) -> f64 {
    let linf = x.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    1e-9 * (1.0 + linf)
}

/// Builds the face of edge `e_idx` at `x`. `spread` is the exact max minus
/// the exact min; the active sets use the tolerance.
pub fn edge_face(g: &Hypergraph, x: &[f64], e_idx: usize, tol: f64) -> EdgeFace {
    let e = &g.edges()[e_idx];
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for &v in &e.vertices {
        if x[v] > max {
            max = x[v];
        }
        if x[v] < min {
            min = x[v];
        }
    }
    let argmax: Vec<usize> = e.vertices.iter().copied().filter(|&v| x[v] >= max - tol).collect();
    let argmin: Vec<usize> = e.vertices.iter().copied().filter(|&v| x[v] <= min + tol).collect();
    EdgeFace {
        edge: e_idx,
        spread: max - min,
        argmax,
        argmin,
        tol,
    }
}

pub fn edge_faces(g: &Hypergraph, x: &[f64], tol: f64) -> Vec<EdgeFace> {
    (0..g.edge_count()).map(|e| edge_face(g, x, e, tol)).collect()
}

/// `s^p`, exact for the integer exponents exercised everywhere.
pub(crate) fn pow_p(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        s
    } else if p == 2.0 {
        s * s
    } else if p == 3.0 {
        s * s * s
    } else {
        s.powf(p)
    }
}

/// `s^(p-1)`, the derivative of `s^p / p`. For `p = 1` this is 1 even at
/// `s = 0`, matching the gradient of the identity map.
pub(crate) fn pow_pm1(s: f64, p: f64) -> f64 {
    if p == 1.0 {
        1.0
    } else if p == 2.0 {
        s
    } else if p == 3.0 {
        s * s
    } else {
        s.powf(p - 1.0)
    }
}

/// Total energy `(1/p) Σ_e w(e) f_e(x)^p`.
pub fn energy(g: &Hypergraph, x: &[f64], p: f64) -> f64 {
    let sum: f64 = g
        .edges()
        .iter()
        .map(|e| {
            let mut max = f64::NEG_INFINITY;
            let mut min = f64::INFINITY;
            for &v in &e.vertices {
                max = max.max(x[v]);
                min = min.min(x[v]);
            }
            e.weight * pow_p(max - min, p)
        })
        .sum();
    sum / p
}

/// One edge's convex coefficients inside a subgradient representation:
/// the edge's scalar `scale = w(e) f_e(x)^(p-1)` times the face point
/// `Σ λ_u 1_u - Σ μ_v 1_v` with `λ, μ` simplex coefficients over the active
/// sets.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeCoefficients {
    pub edge: usize,
    pub scale: f64,
    pub argmax: Vec<(usize, f64)>,
    pub argmin: Vec<(usize, f64)>,
}

/// One element of the subdifferential at `x`, with its certifying per-edge
/// convex coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SubgradientPoint {
    pub vector: Potential,
    pub coefficients: Vec<EdgeCoefficients>,
}

impl SubgradientPoint {
    /// Re-assembles the vector from the coefficients. Accumulation follows
    /// edge order, argmax entries before argmin entries, so a selection built
    /// the same way reproduces its vector bit-exactly.
    pub fn reconstruct(&self, n: usize) -> Potential {
        let mut acc = vec![0.0; n];
        for c in &self.coefficients {
            for &(u, lam) in &c.argmax {
                acc[u] += c.scale * lam;
            }
            for &(v, mu) in &c.argmin {
                acc[v] -= c.scale * mu;
            }
        }
        acc
    }
}

/// The canonical selection from the subdifferential: uniform coefficients
/// over each active set. Deterministic and odd; for a flat edge (spread 0)
/// the active sets are the whole edge and the uniform choice contributes the
/// centroid, which is the zero vector.
pub fn canonical_subgradient(g: &Hypergraph, x: &[f64], p: f64, tol: f64) -> SubgradientPoint {
    let n = g.vertex_count();
    let mut vector = vec![0.0; n];
    let mut coefficients = Vec::with_capacity(g.edge_count());
    for e_idx in 0..g.edge_count() {
        let face = edge_face(g, x, e_idx, tol);
        let scale = g.edges()[e_idx].weight * pow_pm1(face.spread, p);
        let lam = 1.0 / face.argmax.len() as f64;
        let mu = 1.0 / face.argmin.len() as f64;
        for &u in &face.argmax {
            vector[u] += scale * lam;
        }
        for &v in &face.argmin {
            vector[v] -= scale * mu;
        }
        coefficients.push(EdgeCoefficients {
            edge: e_idx,
            scale,
            argmax: face.argmax.iter().map(|&u| (u, lam)).collect(),
            argmin: face.argmin.iter().map(|&v| (v, mu)).collect(),
        });
    }
    SubgradientPoint {
        vector,
        coefficients,
    }
}

/// `(D - A) x` on an ordinary graph, accumulated edge by edge as
/// `w(e) (x_i - x_j)` so it agrees bit-exactly with the canonical subgradient
/// at `p = 2`, where the face is a single point whenever `x_i != x_j` and
/// both routes contribute zero when `x_i == x_j`.
pub fn graph_laplacian_check(g: &Hypergraph, x: &[f64]) -> Result<Potential> {
    let mut acc = vec![0.0; g.vertex_count()];
    for (idx, e) in g.edges().iter().enumerate() {
        if e.vertices.len() != 2 {
            return Err(Error::NotAnOrdinaryGraph {
                edge: idx + 1,
                size: e.vertices.len(),
            });
        }
        let (i, j) = (e.vertices[0], e.vertices[1]);
        acc[i] += e.weight * (x[i] - x[j]);
        acc[j] += e.weight * (x[j] - x[i]);
    }
    Ok(acc)
}
