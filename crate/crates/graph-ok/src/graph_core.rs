//! Graph data model and the `(q, r)`-parameterized discrete calculus.
//!
//! Node functions are plain `&[f64]` slices of length `n`; node sets are
//! boolean masks of length `n`. Node indices are 0-based.
//!
//! For `q, r` the inner products are
//!
//! ```text
//! <u, v>_V   = sum_i u_i v_i d_i^r
//! <f, g>_E   = 1/2 sum_ij f_ij g_ij w_ij^(2q-1)
//! (grad u)_ij = w_ij^(1-q) (u_j - u_i)
//! (div f)_i  = d_i^(-r) sum_j w_ij^q f_ji
//! (Lap u)_i  = d_i^(-r) sum_j w_ij (u_i - u_j)
//! ```
//!
//! with the convention `w^0 = 0` wherever `w = 0`.

use std::collections::VecDeque;

use thiserror::Error;

/// Default node cap for subset-sum enumeration of admissible masses.
pub const ADMISSIBLE_MASS_CAP: usize = 25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("weight matrix has {len} entries, expected {n}x{n}")]
    Shape { n: usize, len: usize },
    #[error("a graph needs at least two nodes, got {0}")]
    TooFewNodes(usize),
    #[error("edge ({i}, {j}) refers to a node outside 0..{n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("negative or non-finite weight {w} at ({i}, {j})")]
    NegativeWeight { i: usize, j: usize, w: f64 },
    #[error("self-loop at node {0}")]
    SelfLoop(usize),
    #[error("asymmetric weights at ({i}, {j}): {wij} vs {wji}")]
    Asymmetric { i: usize, j: usize, wij: f64, wji: f64 },
    #[error("node {0} has no incident edges")]
    IsolatedNode(usize),
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("q = {0} outside [1/2, 1]")]
    QOutOfRange(f64),
    #[error("r = {0} outside [0, 1]")]
    ROutOfRange(f64),
    #[error("subset-sum enumeration over {n} nodes exceeds the cap of {cap}")]
    TooLarge { n: usize, cap: usize },
}

/// Check the graph invariants on a row-major weight matrix.
///
/// A graph without any edge reports `Disconnected`; `IsolatedNode` is
/// reserved for a zero-degree node in a graph that does have edges.
pub fn validate(n: usize, weights: &[f64]) -> Result<(), GraphError> {
    if weights.len() != n * n {
        return Err(GraphError::Shape { n, len: weights.len() });
    }
    if n < 2 {
        return Err(GraphError::TooFewNodes(n));
    }
    for i in 0..n {
        for j in 0..n {
            let w = weights[i * n + j];
            if !(w.is_finite() && w >= 0.0) {
                return Err(GraphError::NegativeWeight { i, j, w });
            }
        }
    }
    for i in 0..n {
        if weights[i * n + i] != 0.0 {
            return Err(GraphError::SelfLoop(i));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let (wij, wji) = (weights[i * n + j], weights[j * n + i]);
            if wij != wji {
                return Err(GraphError::Asymmetric { i, j, wij, wji });
            }
        }
    }
    let components = component_count(n, weights);
    let has_edge = weights.iter().any(|&w| w > 0.0);
    if has_edge {
        if let Some(i) = (0..n).find(|&i| weights[i * n..(i + 1) * n].iter().all(|&w| w == 0.0)) {
            return Err(GraphError::IsolatedNode(i));
        }
    }
    if components != 1 {
        return Err(GraphError::Disconnected { components });
    }
    Ok(())
}

fn component_count(n: usize, weights: &[f64]) -> usize {
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        components += 1;
        seen[start] = true;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if !seen[j] && weights[i * n + j] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    components
}

/// A finite, simple, connected, undirected, edge-weighted graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    weights: Vec<f64>,
    degrees: Vec<f64>,
}

impl Graph {
    /// Build from a row-major `n x n` weight matrix.
    pub fn from_dense(n: usize, weights: Vec<f64>) -> Result<Self, GraphError> {
        validate(n, &weights)?;
        let degrees = (0..n).map(|i| weights[i * n..(i + 1) * n].iter().sum()).collect();
        Ok(Self { n, weights, degrees })
    }

    /// Build from undirected weighted edges; a repeated edge keeps the last weight.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut w = vec![0.0; n * n];
        for (i, j, x) in edges {
            if i >= n || j >= n {
                return Err(GraphError::IndexOutOfRange { i, j, n });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
        Self::from_dense(n, w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    /// Row-major weight matrix.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight_row(&self, i: usize) -> &[f64] {
        &self.weights[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> f64 {
        self.degrees[i]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }

    /// `d_-`, the smallest degree.
    pub fn min_degree(&self) -> f64 {
        self.degrees.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `d_+`, the largest degree.
    pub fn max_degree(&self) -> f64 {
        self.degrees.iter().cloned().fold(0.0, f64::max)
    }

    /// Neighbours of `i` with their edge weights, in index order.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weight_row(i).iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(j, &w)| (j, w))
    }

    /// Adjacency-list view.
    pub fn adjacency_list(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n).map(|i| self.neighbors(i).collect()).collect()
    }

    /// Undirected edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let w = self.weight(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count() / 2
    }

    /// Unnormalized Laplacian `D - W`, row-major.
    pub fn unnormalized_laplacian(&self) -> Vec<f64> {
        let n = self.n;
        let mut l: Vec<f64> = self.weights.iter().map(|w| -w).collect();
        for i in 0..n {
            l[i * n + i] = self.degrees[i];
        }
        l
    }
}

/// The calculus parameters `q` in `[1/2, 1]` and `r` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalculusParams {
    pub q: f64,
    pub r: f64,
}

impl CalculusParams {
    pub fn new(q: f64, r: f64) -> Result<Self, CalculusError> {
        if !(0.5..=1.0).contains(&q) {
            return Err(CalculusError::QOutOfRange(q));
        }
        if !(0.0..=1.0).contains(&r) {
            return Err(CalculusError::ROutOfRange(r));
        }
        Ok(Self { q, r })
    }

    /// `q = 1` with the given `r`.
    pub fn with_r(r: f64) -> Result<Self, CalculusError> {
        Self::new(1.0, r)
    }
}

impl Default for CalculusParams {
    fn default() -> Self {
        Self { q: 1.0, r: 0.0 }
    }
}

/// `w^p` with `w^0 = 0` for `w = 0`.
#[inline]
pub(crate) fn wpow(w: f64, p: f64) -> f64 {
    if w == 0.0 {
        0.0
    } else if p == 1.0 {
        w
    } else if p == 0.0 {
        1.0
    } else {
        w.powf(p)
    }
}

/// Skew-symmetric edge function supported on the edge set.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    n: usize,
    values: Vec<f64>,
}

impl EdgeFunction {
    /// Build from `f(i, j)` evaluated for `i < j` on edges; the lower
    /// triangle is filled by skew symmetry.
    pub fn from_fn(graph: &Graph, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = graph.n();
        let mut values = vec![0.0; n * n];
        for (i, j, _) in graph.edges() {
            let x = f(i, j);
            values[i * n + j] = x;
            values[j * n + i] = -x;
        }
        Self { n, values }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Characteristic function of a node set.
pub fn indicator(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// Node-set mask from a list of indices.
pub fn mask_from_indices(n: usize, idx: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in idx {
        m[i] = true;
    }
    m
}

/// Discrete calculus on a validated graph for fixed `(q, r)`.
///
/// Caches `d_i^r`, `d_i^{-r}` and `vol V`.
#[derive(Debug, Clone)]
pub struct Calculus<'g> {
    graph: &'g Graph,
    params: CalculusParams,
    dr: Vec<f64>,
    dmr: Vec<f64>,
    vol: f64,
}

impl<'g> Calculus<'g> {
    pub fn new(graph: &'g Graph, params: CalculusParams) -> Self {
        let dr: Vec<f64> = graph.degrees().iter().map(|d| d.powf(params.r)).collect();
        let dmr = dr.iter().map(|x| 1.0 / x).collect();
        let vol = dr.iter().sum();
        Self { graph, params, dr, dmr, vol }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn params(&self) -> CalculusParams {
        self.params
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    /// `d_i^r` for every node.
    pub fn dr(&self) -> &[f64] {
        &self.dr
    }

    /// `d_i^{-r}` for every node.
    pub fn dmr(&self) -> &[f64] {
        &self.dmr
    }

    pub fn volume_all(&self) -> f64 {
        self.vol
    }

    pub fn volume(&self, mask: &[bool]) -> f64 {
        mask.iter().zip(&self.dr).filter(|(&b, _)| b).map(|(_, d)| d).sum()
    }

    pub fn mass(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.dr).map(|(a, d)| a * d).sum()
    }

    /// The constant value of `A(u) = M(u) / vol V`.
    pub fn average_value(&self, u: &[f64]) -> f64 {
        self.mass(u) / self.vol
    }

    pub fn average(&self, u: &[f64]) -> Vec<f64> {
        vec![self.average_value(u); self.n()]
    }

    /// `u - A(u)`.
    pub fn centered(&self, u: &[f64]) -> Vec<f64> {
        let a = self.average_value(u);
        u.iter().map(|x| x - a).collect()
    }

    pub fn v_inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.dr).map(|((a, b), d)| a * b * d).sum()
    }

    pub fn v_norm(&self, u: &[f64]) -> f64 {
        self.v_inner(u, u).sqrt()
    }

    /// `||u||_{V, inf} = max_i |u_i|`.
    pub fn v_sup_norm(&self, u: &[f64]) -> f64 {
        u.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
    }

    pub fn e_inner(&self, f: &EdgeFunction, g: &EdgeFunction) -> f64 {
        let p = 2.0 * self.params.q - 1.0;
        let mut s = 0.0;
        for (i, j, w) in self.graph.edges() {
            // both orientations contribute the same product
            s += f.get(i, j) * g.get(i, j) * wpow(w, p);
        }
        s
    }

    pub fn e_norm(&self, f: &EdgeFunction) -> f64 {
        self.e_inner(f, f).sqrt()
    }

    pub fn gradient(&self, u: &[f64]) -> EdgeFunction {
        let p = 1.0 - self.params.q;
        let g = self.graph;
        EdgeFunction::from_fn(g, |i, j| wpow(g.weight(i, j), p) * (u[j] - u[i]))
    }

    pub fn divergence(&self, f: &EdgeFunction) -> Vec<f64> {
        let q = self.params.q;
        (0..self.n())
            .map(|i| {
                let s: f64 = self.graph.neighbors(i).map(|(j, w)| wpow(w, q) * f.get(j, i)).sum();
                self.dmr[i] * s
            })
            .collect()
    }

    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        let g = self.graph;
        (0..self.n())
            .map(|i| {
                let row = g.weight_row(i);
                let s: f64 = row.iter().zip(u).map(|(w, uj)| w * (u[i] - uj)).sum();
                self.dmr[i] * s
            })
            .collect()
    }

    /// Matrix of the Laplacian, `D^{-r}(D - W)`, row-major.
    pub fn laplacian_matrix(&self) -> Vec<f64> {
        let n = self.n();
        let mut l = self.graph.unnormalized_laplacian();
        for i in 0..n {
            for x in &mut l[i * n..(i + 1) * n] {
                *x *= self.dmr[i];
            }
        }
        l
    }

    /// `TV(u) = 1/2 sum_ij w_ij^q |u_i - u_j|`.
    pub fn total_variation(&self, u: &[f64]) -> f64 {
        let q = self.params.q;
        self.graph.edges().iter().map(|&(i, j, w)| wpow(w, q) * (u[i] - u[j]).abs()).sum()
    }

    /// `1/2 ||grad u||_E^2 = 1/4 sum_ij w_ij (u_i - u_j)^2`.
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        dirichlet_energy(self.graph, u)
    }

    /// Graph curvature of `S`.
    pub fn curvature(&self, mask: &[bool]) -> Vec<f64> {
        let q = self.params.q;
        (0..self.n())
            .map(|i| {
                let s: f64 = self
                    .graph
                    .neighbors(i)
                    .filter(|&(j, _)| mask[j] != mask[i])
                    .map(|(_, w)| wpow(w, q))
                    .sum();
                if mask[i] {
                    self.dmr[i] * s
                } else {
                    -self.dmr[i] * s
                }
            })
            .collect()
    }

    /// `kappa_S^+ = max_{i in S} (kappa_S)_i`; `None` for empty `S`.
    pub fn curvature_max(&self, mask: &[bool]) -> Option<f64> {
        let k = self.curvature(mask);
        (0..self.n()).filter(|&i| mask[i]).map(|i| k[i]).reduce(f64::max)
    }

    /// Sorted set of masses reachable by binary node functions.
    pub fn admissible_masses(&self) -> Result<Vec<f64>, CalculusError> {
        self.admissible_masses_capped(ADMISSIBLE_MASS_CAP)
    }

    pub fn admissible_masses_capped(&self, cap: usize) -> Result<Vec<f64>, CalculusError> {
        let n = self.n();
        if n > cap {
            return Err(CalculusError::TooLarge { n, cap });
        }
        let mut sums = vec![0.0];
        for &d in &self.dr {
            let shifted: Vec<f64> = sums.iter().map(|s| s + d).collect();
            sums.extend(shifted);
            sums.sort_by(f64::total_cmp);
            sums.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
        Ok(sums)
    }
}

/// Dirichlet energy; independent of both `q` and `r`.
pub fn dirichlet_energy(graph: &Graph, u: &[f64]) -> f64 {
    0.5 * graph.edges().iter().map(|&(i, j, w)| w * (u[i] - u[j]).powi(2)).sum::<f64>()
}
