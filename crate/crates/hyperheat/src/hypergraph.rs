//! Weighted hypergraph representation, validation, connected components,
//! component averaging, the explicit Poincaré-Wirtinger constant, and the
//! zero-eigenspace basis.
//!
//! Vertices are 0-based everywhere in the API; the text format is 1-based and
//! conversion happens only at that boundary.

use crate::error::{Error, Result};

/// A vertex potential, one real value per vertex.
pub type Potential = Vec<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Sorted, deduplicated, 0-based vertex indices; always at least two.
    pub vertices: Vec<usize>,
    /// Strictly positive weight.
    pub weight: f64,
}

/// Weighted hypergraph `(V, E, w)`. Immutable after construction; edge order
/// is preserved so per-edge iteration is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    vertex_count: usize,
    edges: Vec<Edge>,
}

impl Hypergraph {
    /// Validates and builds a hypergraph. Edge vertex lists are 0-based; the
    /// raw list may contain duplicates, which are collapsed before the
    /// two-distinct-vertices check. Errors carry the 1-based edge ordinal.
    pub fn new(vertex_count: usize, raw_edges: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(Error::invalid("vertex count must be positive"));
        }
        let mut edges = Vec::with_capacity(raw_edges.len());
        for (i, (mut vertices, weight)) in raw_edges.into_iter().enumerate() {
            let ordinal = i + 1;
            if vertices.is_empty() {
                return Err(Error::EmptyEdge { edge: ordinal });
            }
            vertices.sort_unstable();
            vertices.dedup();
            if vertices.len() < 2 {
                return Err(Error::SingletonEdge { edge: ordinal });
            }
            if let Some(&v) = vertices.iter().find(|&&v| v >= vertex_count) {
                return Err(Error::IndexOutOfRange {
                    edge: ordinal,
                    index: v + 1,
                    vertex_count,
                });
            }
            if !(weight > 0.0) {
                return Err(Error::NonpositiveWeight {
                    edge: ordinal,
                    weight,
                });
            }
            edges.push(Edge { vertices, weight });
        }
        Ok(Hypergraph {
            vertex_count,
            edges,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn min_weight(&self) -> Result<f64> {
        self.edges
            .iter()
            .map(|e| e.weight)
            .fold(None, |acc: Option<f64>, w| {
                Some(acc.map_or(w, |a| a.min(w)))
            })
            .ok_or(Error::NoEdges)
    }

    pub fn max_weight(&self) -> Result<f64> {
        self.edges
            .iter()
            .map(|e| e.weight)
            .fold(None, |acc: Option<f64>, w| {
                Some(acc.map_or(w, |a| a.max(w)))
            })
            .ok_or(Error::NoEdges)
    }

    /// True when every edge joins exactly two vertices.
    pub fn is_ordinary(&self) -> bool {
        self.edges.iter().all(|e| e.vertices.len() == 2)
    }

    /// Connected components. Two vertices share a component iff they are
    /// joined by a chain of hyperedges. Components are discovered from the
    /// least unvisited vertex index onward, so they come out ordered by least
    /// contained vertex; vertices in no edge form singleton components.
    pub fn connected_components(&self) -> ComponentPartition {
        let n = self.vertex_count;
        let mut edges_at: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (ei, e) in self.edges.iter().enumerate() {
            for &v in &e.vertices {
                edges_at[v].push(ei);
            }
        }
        let mut component_of = vec![usize::MAX; n];
        let mut components: Vec<Vec<usize>> = Vec::new();
        let mut queue = Vec::new();
        for start in 0..n {
            if component_of[start] != usize::MAX {
                continue;
            }
            let cid = components.len();
            let mut members = Vec::new();
            component_of[start] = cid;
            queue.push(start);
            while let Some(v) = queue.pop() {
                members.push(v);
                for &ei in &edges_at[v] {
                    for &u in &self.edges[ei].vertices {
                        if component_of[u] == usize::MAX {
                            component_of[u] = cid;
                            queue.push(u);
                        }
                    }
                }
            }
            members.sort_unstable();
            components.push(members);
        }
        ComponentPartition {
            components,
            component_of,
        }
    }

    /// Reads the text format:
    ///
    /// ```text
    /// # comment
    /// n 4
    /// e 1.5 1 2 3 4
    /// ```
    ///
    /// One `n <count>` line before any `e <weight> <v1> <v2> ...` line;
    /// vertex indices are 1-based; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut vertex_count: Option<usize> = None;
        let mut raw_edges: Vec<(Vec<usize>, f64)> = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let mut tokens = line.split_whitespace();
            let Some(head) = tokens.next() else { continue };
            match head {
                "n" => {
                    if vertex_count.is_some() {
                        return Err(Error::Parse {
                            line: lineno,
                            message: "duplicate n line".into(),
                        });
                    }
                    let count: usize = tokens
                        .next()
                        .ok_or_else(|| Error::Parse {
                            line: lineno,
                            message: "n line needs a vertex count".into(),
                        })?
                        .parse()
                        .map_err(|_| Error::Parse {
                            line: lineno,
                            message: "vertex count must be a non-negative integer".into(),
                        })?;
                    if count == 0 {
                        return Err(Error::Parse {
                            line: lineno,
                            message: "vertex count must be positive".into(),
                        });
                    }
                    if tokens.next().is_some() {
                        return Err(Error::Parse {
                            line: lineno,
                            message: "trailing tokens after vertex count".into(),
                        });
                    }
                    vertex_count = Some(count);
                }
                "e" => {
                    let n = vertex_count.ok_or_else(|| Error::Parse {
                        line: lineno,
                        message: "e line before n line".into(),
                    })?;
                    let weight: f64 = tokens
                        .next()
                        .ok_or_else(|| Error::Parse {
                            line: lineno,
                            message: "e line needs a weight".into(),
                        })?
                        .parse()
                        .map_err(|_| Error::Parse {
                            line: lineno,
                            message: "edge weight must be a real number".into(),
                        })?;
                    let mut vertices = Vec::new();
                    for tok in tokens {
                        let v: usize = tok.parse().map_err(|_| Error::Parse {
                            line: lineno,
                            message: format!("bad vertex index {tok:?}"),
                        })?;
                        if v == 0 || v > n {
                            return Err(Error::IndexOutOfRange {
                                edge: raw_edges.len() + 1,
                                index: v,
                                vertex_count: n,
                            });
                        }
                        vertices.push(v - 1);
                    }
                    raw_edges.push((vertices, weight));
                }
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unknown directive {other:?}"),
                    });
                }
            }
        }
        let n = vertex_count.ok_or_else(|| Error::Parse {
            line: text.lines().count() + 1,
            message: "missing n line".into(),
        })?;
        Hypergraph::new(n, raw_edges)
    }

    /// Writes the text format so that `from_text(to_text(g)) == g` bit-exactly
    /// (weights use the shortest round-trip decimal form).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("n {}\n", self.vertex_count));
        for e in &self.edges {
            out.push_str(&format!("e {}", e.weight));
            for &v in &e.vertices {
                out.push_str(&format!(" {}", v + 1));
            }
            out.push('\n');
        }
        out
    }
}

/// Partition of the vertex set into connected components, ordered by least
/// contained vertex index.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentPartition {
    components: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

impl ComponentPartition {
    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn count(&self) -> usize {
        self.components.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.component_of.len()
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.component_of[v]
    }

    /// Mean of `x` over each component, in component order.
    pub fn component_means(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().map(|&v| x[v]).sum::<f64>() / c.len() as f64)
            .collect()
    }

    /// The averaging map: constant on each component with the component mean.
    pub fn average(&self, x: &[f64]) -> Potential {
        let means = self.component_means(x);
        (0..self.component_of.len())
            .map(|v| means[self.component_of[v]])
            .collect()
    }

    /// Indicator vectors of the components; their span is exactly the set of
    /// potentials on which the operator vanishes.
    pub fn zero_eigenspace_basis(&self) -> Vec<Potential> {
        let n = self.component_of.len();
        self.components
            .iter()
            .map(|c| {
                let mut b = vec![0.0; n];
                for &v in c {
                    b[v] = 1.0;
                }
                b
            })
            .collect()
    }

    /// Builds the vector that is `values[k]` on component `k`.
    pub fn piecewise_constant(&self, values: &[f64]) -> Potential {
        assert_eq!(values.len(), self.components.len());
        (0..self.component_of.len())
            .map(|v| values[self.component_of[v]])
            .collect()
    }
}

/// The explicit constant `C` with `|x - x̄|_{ℓq}^p ≤ p · C · φ(x)`:
/// `(Σ_j (#S_j)^(2 - 1/p))^p / min_e w(e)`.
pub fn poincare_constant(g: &Hypergraph, partition: &ComponentPartition, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {p}")));
    }
    let min_w = g.min_weight()?;
    let sum: f64 = partition
        .components()
        .iter()
        .map(|c| (c.len() as f64).powf(2.0 - 1.0 / p))
        .sum();
    Ok(sum.powf(p) / min_w)
}
