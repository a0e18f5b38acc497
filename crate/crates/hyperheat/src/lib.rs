//! Hypergraph p-Laplacian toolkit.
//!
//! The operator is the (multivalued) subdifferential of the edge-spread
//! energy `φ(x) = (1/p) Σ_e w(e) (max_e x - min_e x)^p` on a weighted
//! hypergraph. This crate provides:
//!
//! - the hypergraph representation, components, component averaging, the
//!   explicit Poincaré-Wirtinger constant and the zero-eigenspace basis
//!   ([`hypergraph`]);
//! - edge spreads, energies, subdifferential faces and the canonical
//!   subgradient selection, plus the `D - A` cross-check on ordinary graphs
//!   ([`energy`]);
//! - Euclidean projection onto the subdifferential set (minimal section,
//!   membership/distance queries) via a Wolfe min-norm-point iteration
//!   ([`projection`]);
//! - the resolvent `x + λL(x) ∋ y` by strongly convex minimization
//!   ([`resolvent`]);
//! - implicit/explicit time stepping for the gradient-flow Cauchy problem
//!   with decay envelopes and the closed-form 4-vertex reference
//!   ([`evolution`]);
//! - the time-periodic problem via a regularized contraction ([`periodic`]);
//! - seeded verification suites and independent brute-force oracles
//!   ([`verify`]);
//! - the batch CLI ([`cli`]).

pub mod cli;
pub mod config;
pub mod energy;
pub mod error;
pub mod evolution;
pub mod hypergraph;
pub mod periodic;
pub mod projection;
pub mod resolvent;
pub mod signal;
pub mod verify;

pub use error::{Error, Result};
pub use hypergraph::{ComponentPartition, Hypergraph, Potential};

/// Small vector helpers shared by solvers, suites, and tests.
pub mod vecops {
    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }
    pub fn l2(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }
    pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
    pub fn l1(a: &[f64]) -> f64 {
        a.iter().map(|v| v.abs()).sum()
    }
    pub fn linf(a: &[f64]) -> f64 {
        a.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }
    pub fn linf_dist(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
    }
    pub fn lq(a: &[f64], q: f64) -> f64 {
        if q.is_infinite() {
            linf(a)
        } else {
            a.iter()
                .map(|v| v.abs().powf(q))
                .sum::<f64>()
                .powf(1.0 / q)
        }
    }
    pub fn axpy(y: &mut [f64], alpha: f64, x: &[f64]) {
        for (yi, xi) in y.iter_mut().zip(x) {
            *yi += alpha * xi;
        }
    }
}
