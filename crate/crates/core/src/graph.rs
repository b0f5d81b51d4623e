//! Finite metric graphs and their incidence/degree algebra.
//!
//! Internal edges are parametrised on `[0, 1]` with `0` at the tail vertex and
//! `1` at the head vertex; external edges are half-lines `[0, ∞)` anchored at
//! a vertex with `0` at the anchor. Boundary traces are ordered
//! `(f^e(0), f^i(0), f^i(1))`, i.e. external anchors first, then internal
//! tails, then internal heads.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricGraph {
    pub n: usize,
    /// `(tail, head)` per internal edge.
    pub internal_edges: Vec<(usize, usize)>,
    /// Anchor vertex per external edge.
    pub external_edges: Vec<usize>,
}

/// Position of a boundary value inside a trace vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSlot {
    External(usize),
    Tail(usize),
    Head(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceSet {
    pub phi_e_minus: DMatrix<f64>,
    pub phi_i_minus: DMatrix<f64>,
    pub phi_i_plus: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeSet {
    pub d_e_minus: DMatrix<f64>,
    pub d_i_minus: DMatrix<f64>,
    pub d_i_plus: DMatrix<f64>,
    pub d_total: DMatrix<f64>,
}

impl DegreeSet {
    pub fn degrees(&self) -> Vec<usize> {
        self.d_total.diagonal().iter().map(|&d| d.round() as usize).collect()
    }
}

impl MetricGraph {
    pub fn new(n: usize, internal_edges: Vec<(usize, usize)>, external_edges: Vec<usize>) -> Self {
        Self { n, internal_edges, external_edges }
    }

    /// Single internal edge `0 → 1`.
    pub fn interval() -> Self {
        Self::new(2, vec![(0, 1)], vec![])
    }

    /// Single internal edge from vertex `0` to itself.
    pub fn loop_edge() -> Self {
        Self::new(1, vec![(0, 0)], vec![])
    }

    /// Compact star: center `0`, internal edges `0 → k` for `k = 1..=arms`.
    pub fn star(arms: usize) -> Self {
        Self::new(arms + 1, (1..=arms).map(|k| (0, k)).collect(), vec![])
    }

    /// Number of external edges (ℓ).
    pub fn ell(&self) -> usize {
        self.external_edges.len()
    }

    /// Number of internal edges (m).
    pub fn m(&self) -> usize {
        self.internal_edges.len()
    }

    /// Length ℓ + 2m of a boundary trace vector.
    pub fn trace_len(&self) -> usize {
        self.ell() + 2 * self.m()
    }

    pub fn slot(&self, index: usize) -> TraceSlot {
        let (l, m) = (self.ell(), self.m());
        if index < l {
            TraceSlot::External(index)
        } else if index < l + m {
            TraceSlot::Tail(index - l)
        } else {
            TraceSlot::Head(index - l - m)
        }
    }

    pub fn slot_index(&self, slot: TraceSlot) -> usize {
        match slot {
            TraceSlot::External(k) => k,
            TraceSlot::Tail(j) => self.ell() + j,
            TraceSlot::Head(j) => self.ell() + self.m() + j,
        }
    }

    /// Vertex hosting each trace slot, in trace order.
    pub fn slot_vertices(&self) -> Vec<usize> {
        let mut v = self.external_edges.clone();
        v.extend(self.internal_edges.iter().map(|e| e.0));
        v.extend(self.internal_edges.iter().map(|e| e.1));
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.ell() + self.m() == 0 {
            return Err(Error::EmptyGraph);
        }
        for (j, &(a, b)) in self.internal_edges.iter().enumerate() {
            for v in [a, b] {
                if v >= self.n {
                    return Err(Error::IndexOutOfRange {
                        what: format!("internal edge {j}"),
                        index: v,
                        n: self.n,
                    });
                }
            }
        }
        for (k, &v) in self.external_edges.iter().enumerate() {
            if v >= self.n {
                return Err(Error::IndexOutOfRange {
                    what: format!("external edge {k}"),
                    index: v,
                    n: self.n,
                });
            }
        }
        Ok(())
    }

    /// Vertices not touched by any edge. They are legal but inert.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        let mut used = vec![false; self.n];
        for v in self.slot_vertices() {
            if v < self.n {
                used[v] = true;
            }
        }
        (0..self.n).filter(|&v| !used[v]).collect()
    }

    pub fn incidence_matrices(&self) -> IncidenceSet {
        let (n, l, m) = (self.n, self.ell(), self.m());
        let mut phi_e_minus = DMatrix::zeros(n, l);
        let mut phi_i_minus = DMatrix::zeros(n, m);
        let mut phi_i_plus = DMatrix::zeros(n, m);
        for (k, &v) in self.external_edges.iter().enumerate() {
            phi_e_minus[(v, k)] = 1.0;
        }
        for (j, &(tail, head)) in self.internal_edges.iter().enumerate() {
            phi_i_minus[(tail, j)] = 1.0;
            phi_i_plus[(head, j)] = 1.0;
        }
        IncidenceSet { phi_e_minus, phi_i_minus, phi_i_plus }
    }

    pub fn degree_matrices(&self) -> DegreeSet {
        let inc = self.incidence_matrices();
        let d_e_minus = &inc.phi_e_minus * inc.phi_e_minus.transpose();
        let d_i_minus = &inc.phi_i_minus * inc.phi_i_minus.transpose();
        let d_i_plus = &inc.phi_i_plus * inc.phi_i_plus.transpose();
        let d_total = &d_e_minus + &d_i_minus + &d_i_plus;
        DegreeSet { d_e_minus, d_i_minus, d_i_plus, d_total }
    }

    /// `[(Φ^{e,−})ᵀ; (Φ^{i,−})ᵀ; (Φ^{i,+})ᵀ]`, an `(ℓ+2m) × n` 0/1 matrix.
    pub fn stacked_incidence_transpose(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.trace_len(), self.n);
        for (row, v) in self.slot_vertices().into_iter().enumerate() {
            s[(row, v)] = 1.0;
        }
        s
    }

    /// Basis of the traces of functions continuous on the graph.
    pub fn continuity_space(&self) -> CMat {
        let s = self.stacked_incidence_transpose();
        let cols = linalg::independent_columns(&s, 1e-10);
        let mut basis = CMat::zeros(s.nrows(), cols.len());
        for (dst, &src) in cols.iter().enumerate() {
            basis.set_column(dst, &s.column(src).map(linalg::c));
        }
        basis
    }

    /// Rebuilds a graph from its incidence matrices.
    pub fn from_incidence(inc: &IncidenceSet) -> Result<Self> {
        let n = inc.phi_i_minus.nrows().max(inc.phi_e_minus.nrows());
        let column_vertex = |m: &DMatrix<f64>, col: usize| -> Result<usize> {
            let hits: Vec<usize> = (0..m.nrows()).filter(|&r| m[(r, col)] != 0.0).collect();
            match hits.as_slice() {
                [v] => Ok(*v),
                _ => Err(Error::InvalidArgument(format!(
                    "incidence column {col} has {} nonzero entries",
                    hits.len()
                ))),
            }
        };
        let internal_edges = (0..inc.phi_i_minus.ncols())
            .map(|j| Ok((column_vertex(&inc.phi_i_minus, j)?, column_vertex(&inc.phi_i_plus, j)?)))
            .collect::<Result<Vec<_>>>()?;
        let external_edges = (0..inc.phi_e_minus.ncols())
            .map(|k| column_vertex(&inc.phi_e_minus, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, internal_edges, external_edges })
    }
}
