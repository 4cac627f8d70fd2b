//! The multigraph `D(Δ, r)` on vertices `{0, 1, …, n}` with sink `0`.
//!
//! With `Δ̃ = diag(r)·Δ`, vertex `j` has `−Δ̃_ij` edges to each `i ≠ j` and
//! `Σ_i Δ̃_ij` edges to the sink. Its reduced Laplacian is `Δ̃ᵀ`, so the
//! number of spanning arborescences oriented toward `0` is
//! `det Δ̃ = (∏ r_i)·det Δ`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::budget::Budgets;
use crate::error::{Error, Result};
use crate::json;
use crate::matrix::{IntMatrix, RateVector, ToppleMatrix};

/// `Δ̃ = diag(r)·Δ`; its column sums are `rΔ ≥ 0`.
pub fn scaled_matrix(matrix: &ToppleMatrix, rate: &RateVector) -> IntMatrix {
    assert_eq!(matrix.dim(), rate.dim(), "dimension mismatch");
    IntMatrix::from_fn(matrix.dim(), |i, j| &rate.rates()[i] * matrix.get(i, j))
}

/// Edge multiplicities of `D(Δ, r)`: `multiplicity[a][b]` counts edges
/// `a → b`. Row 0 (the sink) is all zero and there are no loops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SandpileDigraph {
    n: usize,
    #[serde(serialize_with = "json::int_rows")]
    multiplicity: Vec<Vec<BigInt>>,
}

impl SandpileDigraph {
    pub fn build(matrix: &ToppleMatrix, rate: &RateVector) -> Self {
        let n = matrix.dim();
        let scaled = scaled_matrix(matrix, rate);
        let mut multiplicity = vec![vec![BigInt::zero(); n + 1]; n + 1];
        for j in 0..n {
            for i in 0..n {
                if i != j {
                    multiplicity[j + 1][i + 1] = -scaled.get(i, j);
                }
            }
            multiplicity[j + 1][0] = (0..n).map(|i| scaled.get(i, j)).sum();
        }
        SandpileDigraph { n, multiplicity }
    }

    /// Number of non-sink vertices.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn edges(&self, from: usize, to: usize) -> &BigInt {
        &self.multiplicity[from][to]
    }

    pub fn total_edges(&self) -> BigInt {
        self.multiplicity.iter().flatten().sum()
    }

    /// Spanning arborescences oriented toward `root`, counted with edge
    /// multiplicity: every other vertex picks one out-edge and all paths
    /// reach the root.
    pub fn count_arborescences(&self, root: usize, budgets: &Budgets) -> Result<BigInt> {
        let vertices = self.n + 1;
        if root >= vertices {
            return Err(Error::VertexOutOfRange {
                index: root,
                n: self.n,
            });
        }
        if vertices > budgets.digraph_vertices {
            return Err(Error::BudgetExceeded {
                what: "arborescence enumeration (vertices)",
                size: BigInt::from(vertices),
                budget: budgets.digraph_vertices as u64,
            });
        }
        let choosers: Vec<usize> = (0..vertices).filter(|&v| v != root).collect();
        let options: Vec<Vec<usize>> = choosers
            .iter()
            .map(|&v| {
                (0..vertices)
                    .filter(|&t| t != v && self.multiplicity[v][t].is_positive())
                    .collect()
            })
            .collect();
        let mut parent = vec![usize::MAX; vertices];
        let mut total = BigInt::zero();
        self.choose(
            &choosers,
            &options,
            0,
            &mut parent,
            root,
            &BigInt::one(),
            &mut total,
        );
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn choose(
        &self,
        choosers: &[usize],
        options: &[Vec<usize>],
        depth: usize,
        parent: &mut [usize],
        root: usize,
        weight: &BigInt,
        total: &mut BigInt,
    ) {
        if depth == choosers.len() {
            if reaches_root(parent, choosers, root) {
                *total += weight;
            }
            return;
        }
        let v = choosers[depth];
        for &t in &options[depth] {
            parent[v] = t;
            let w = weight * &self.multiplicity[v][t];
            self.choose(choosers, options, depth + 1, parent, root, &w, total);
        }
        parent[v] = usize::MAX;
    }

    /// Deterministic DOT text; parallel edges are written once per copy.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph sandpile {\n");
        out.push_str("  0 [label=\"sink\"];\n");
        for v in 1..=self.n {
            writeln!(out, "  {v} [label=\"{v}\"];").unwrap();
        }
        for (a, row) in self.multiplicity.iter().enumerate() {
            for (b, count) in row.iter().enumerate() {
                let mut k = count.clone();
                while k.is_positive() {
                    writeln!(out, "  {a} -> {b};").unwrap();
                    k -= 1;
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn reaches_root(parent: &[usize], choosers: &[usize], root: usize) -> bool {
    choosers.iter().all(|&start| {
        let mut v = start;
        for _ in 0..parent.len() {
            if v == root {
                return true;
            }
            v = parent[v];
        }
        v == root
    })
}
