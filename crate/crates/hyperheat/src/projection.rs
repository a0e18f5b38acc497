//! Euclidean projection onto the subdifferential set at a point.
//!
//! The set is a Minkowski sum over edges of scaled simplex differences
//! `Σ_e s_e (conv{1_u : u ∈ argmax} - conv{1_v : v ∈ argmin})`, which has a
//! cheap per-edge linear minimization oracle. A fully corrective Wolfe
//! min-norm-point iteration over the extreme points computes the projection
//! of any target vector, which covers the minimal section (target 0) and
//! membership/distance queries.

use nalgebra::{DMatrix, DVector};

use crate::energy::{pow_pm1, EdgeCoefficients};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Potential};

/// One edge's contribution to the subdifferential set: the scaled face
/// `scale * (conv{1_u} - conv{1_v})` over its active sets.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFactor {
    pub edge: usize,
    pub scale: f64,
    pub argmax: Vec<usize>,
    pub argmin: Vec<usize>,
}

/// The full subdifferential set at a point, as a product of per-edge faces.
/// An empty factor list is the singleton `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceProduct {
    pub dim: usize,
    pub factors: Vec<FaceFactor>,
}

impl FaceProduct {
    /// The subdifferential set at `x` for exponent `p`. Edges whose scale
    /// `w(e) f_e(x)^(p-1)` vanishes contribute only `{0}` and are dropped;
    /// for `p = 1` a flat edge keeps scale `w(e)` with both active sets equal
    /// to the whole edge, which is exactly its base polytope.
    pub fn at(g: &Hypergraph, x: &[f64], p: f64, tol: f64) -> FaceProduct {
        let mut factors = Vec::new();
        for e_idx in 0..g.edge_count() {
            let face = crate::energy::edge_face(g, x, e_idx, tol);
            let scale = g.edges()[e_idx].weight * pow_pm1(face.spread, p);
            if scale > 0.0 {
                factors.push(FaceFactor {
                    edge: e_idx,
                    scale,
                    argmax: face.argmax,
                    argmin: face.argmin,
                });
            }
        }
        FaceProduct {
            dim: g.vertex_count(),
            factors,
        }
    }

    /// Number of extreme-point candidates (product of per-edge choices).
    pub fn extreme_point_candidates(&self) -> usize {
        self.factors
            .iter()
            .map(|f| f.argmax.len() * f.argmin.len())
            .product()
    }

    fn atom_vector(&self, picks: &[(usize, usize)], target: &[f64]) -> Vec<f64> {
        let mut v: Vec<f64> = target.iter().map(|&t| -t).collect();
        for (f, &(u, w)) in self.factors.iter().zip(picks) {
            v[u] += f.scale;
            v[w] -= f.scale;
        }
        v
    }

    /// Per-edge linear minimization: the extreme point minimizing `d · a`.
    /// Scanning order and strict comparisons make ties deterministic (lowest
    /// index wins) and mirror-symmetric under negation of `d`.
    fn lmo(&self, d: &[f64]) -> Vec<(usize, usize)> {
        self.factors
            .iter()
            .map(|f| {
                let mut best_u = f.argmax[0];
                for &u in &f.argmax[1..] {
                    if d[u] < d[best_u] {
                        best_u = u;
                    }
                }
                let mut best_v = f.argmin[0];
                for &v in &f.argmin[1..] {
                    if d[v] > d[best_v] {
                        best_v = v;
                    }
                }
                (best_u, best_v)
            })
            .collect()
    }
}

/// Projection of a target vector onto the face product.
#[derive(Debug, Clone)]
pub struct ProjectionResult {
    /// The point of the set closest to the target.
    pub point: Potential,
    /// Euclidean distance from the target to the set.
    pub distance: f64,
    /// Achieved optimality gap on the squared norm of the translated problem.
    pub gap: f64,
    pub iterations: usize,
    /// Certifying convex coefficients over each factor's active sets.
    pub coefficients: Vec<EdgeCoefficients>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `min |Σ α_i a_i|` over `Σ α_i = 1` (affine, signs free) via the
/// KKT system, with an SVD solve so affinely dependent corrals stay stable.
fn affine_min_norm(atoms: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = atoms.len();
    let mut kkt = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in i..m {
            let g = dot(&atoms[i], &atoms[j]);
            kkt[(i, j)] = g;
            kkt[(j, i)] = g;
        }
        kkt[(i, m)] = 1.0;
        kkt[(m, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let svd = kkt.svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let eps = (1e-13 * max_sv).max(f64::MIN_POSITIVE);
    let sol = svd
        .solve(&rhs, eps)
        .map_err(|m| Error::invalid(format!("corral solve failed: {m}")))?;
    Ok((0..m).map(|i| sol[i]).collect())
}

/// Wolfe min-norm-point iteration for the projection of `target` onto the
/// face product. Terminates when the squared-norm optimality gap drops below
/// `tol_gap`, or when the oracle stops producing new extreme points (the
/// fully corrective step is then optimal over the whole set and the achieved
/// gap is reported).
pub fn project(
    face: &FaceProduct,
    target: &[f64],
    tol_gap: f64,
    max_iter: usize,
) -> Result<ProjectionResult> {
    assert_eq!(face.dim, target.len(), "target dimension mismatch");
    let mut picks_list: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut atoms: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();

    let zero_dir = vec![0.0; face.dim];
    let first = face.lmo(&zero_dir);
    atoms.push(face.atom_vector(&first, target));
    picks_list.push(first);
    alphas.push(1.0);
    let mut z = atoms[0].clone();

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    while iterations < max_iter {
        iterations += 1;
        let cand = face.lmo(&z);
        let cand_vec = face.atom_vector(&cand, target);
        gap = dot(&z, &z) - dot(&z, &cand_vec);
        if gap <= tol_gap {
            break;
        }
        if picks_list.contains(&cand) {
            // The corral optimum already dominates every extreme point the
            // oracle can produce; the residual gap is floating-point noise.
            break;
        }
        picks_list.push(cand);
        atoms.push(cand_vec);
        alphas.push(0.0);

        // Fully corrective minor cycle.
        let mut guard = 0;
        loop {
            guard += 1;
            if guard > 3 * atoms.len() + 10 {
                break;
            }
            let aff = affine_min_norm(&atoms)?;
            if aff.iter().all(|&a| a >= -1e-12) {
                let sum: f64 = aff.iter().map(|&a| a.max(0.0)).sum();
                for (al, af) in alphas.iter_mut().zip(&aff) {
                    *al = af.max(0.0) / sum;
                }
                break;
            }
            // Step toward the affine solution until a coefficient hits zero.
            let mut theta = 1.0_f64;
            for i in 0..atoms.len() {
                if aff[i] < 0.0 {
                    let t = alphas[i] / (alphas[i] - aff[i]);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            for i in 0..atoms.len() {
                alphas[i] = (1.0 - theta) * alphas[i] + theta * aff[i];
            }
            let mut i = 0;
            let mut removed = false;
            while i < atoms.len() {
                if alphas[i] <= 1e-14 {
                    alphas.remove(i);
                    atoms.remove(i);
                    picks_list.remove(i);
                    removed = true;
                } else {
                    i += 1;
                }
            }
            if !removed {
                // No blocking coefficient was eliminated; bail out so the
                // major loop can re-evaluate the gap.
                break;
            }
            let sum: f64 = alphas.iter().sum();
            for a in alphas.iter_mut() {
                *a /= sum;
            }
        }

        z = vec![0.0; face.dim];
        for (a, atom) in alphas.iter().zip(&atoms) {
            for (zi, ai) in z.iter_mut().zip(atom) {
                *zi += a * ai;
            }
        }
    }

    if iterations >= max_iter && gap > tol_gap {
        return Err(Error::NonConvergence {
            context: "min-norm point",
            residual: gap,
            iterations,
        });
    }

    let point: Vec<f64> = z.iter().zip(target).map(|(zi, t)| zi + t).collect();
    let mut coefficients = Vec::with_capacity(face.factors.len());
    for (fi, f) in face.factors.iter().enumerate() {
        let mut lam: Vec<(usize, f64)> = f.argmax.iter().map(|&u| (u, 0.0)).collect();
        let mut mu: Vec<(usize, f64)> = f.argmin.iter().map(|&v| (v, 0.0)).collect();
        for (a, picks) in alphas.iter().zip(&picks_list) {
            let (u, v) = picks[fi];
            lam.iter_mut().find(|(w, _)| *w == u).unwrap().1 += a;
            mu.iter_mut().find(|(w, _)| *w == v).unwrap().1 += a;
        }
        coefficients.push(EdgeCoefficients {
            edge: f.edge,
            scale: f.scale,
            argmax: lam,
            argmin: mu,
        });
    }
    Ok(ProjectionResult {
        distance: l2(&z),
        gap: gap.max(0.0),
        point,
        iterations,
        coefficients,
    })
}

pub fn default_max_iter(face: &FaceProduct) -> usize {
    let sets: usize = face
        .factors
        .iter()
        .map(|f| f.argmax.len() + f.argmin.len())
        .sum();
    100 + 20 * (sets + face.dim)
}

/// The least-norm element of the face product, with certifying coefficients.
pub fn min_norm_point(face: &FaceProduct, tol_opt: f64) -> Result<ProjectionResult> {
    let zeros = vec![0.0; face.dim];
    let res = project(face, &zeros, tol_opt, default_max_iter(face))?;
    if res.gap > tol_opt {
        return Err(Error::NonConvergence {
            context: "min-norm point",
            residual: res.gap,
            iterations: res.iterations,
        });
    }
    Ok(res)
}

/// Euclidean distance from `v` to the face product; membership holds when the
/// distance is below the caller's tolerance.
pub fn distance_to_face(face: &FaceProduct, v: &[f64], tol_opt: f64) -> Result<f64> {
    let res = project(face, v, tol_opt, default_max_iter(face))?;
    Ok(res.distance)
}
