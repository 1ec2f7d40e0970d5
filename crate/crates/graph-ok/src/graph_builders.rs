//! Generators for the example graphs and an edge-list reader.
//!
//! The stitched mesh joins a 12 x 17 square lattice (left) to a
//! 12-row triangular lattice (right) whose even rows carry 17 nodes and
//! odd rows 16 nodes shifted by half a spacing. Each square node in the
//! last column is bonded to the first triangular node of its row. Nodes
//! are numbered by `(x, y)` position, column by column from the left.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::graph_core::{Graph, GraphError};

/// Node count of the one supported stitched mesh.
pub const STITCHED_NODES: usize = 402;
const STITCHED_ROWS: usize = 12;
const STITCHED_COLS: usize = 17;

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{what} needs at least {min} nodes, got {got}")]
    TooSmall { what: &'static str, min: usize, got: usize },
    #[error("torus grid size {0} is not a perfect square")]
    NotSquare(usize),
    #[error("stitched mesh is only provided with {STITCHED_NODES} nodes, got {0}")]
    UnsupportedSize(usize),
    #[error("invalid two-moons parameters: {0}")]
    BadParams(String),
    #[error("k-nearest-neighbour graph is disconnected for every k")]
    Disconnected,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Unweighted star; node 0 is the centre.
pub fn star(n: usize) -> Result<Graph, BuildError> {
    if n < 3 {
        return Err(BuildError::TooSmall { what: "star", min: 3, got: n });
    }
    Ok(Graph::from_edges(n, (1..n).map(|j| (0, j, 1.0)))?)
}

pub fn complete(n: usize) -> Result<Graph, BuildError> {
    if n < 2 {
        return Err(BuildError::TooSmall { what: "complete graph", min: 2, got: n });
    }
    let edges = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0)));
    Ok(Graph::from_edges(n, edges)?)
}

/// Complete bipartite graph; nodes `0..n1` form the first part.
pub fn complete_bipartite(n1: usize, n2: usize) -> Result<Graph, BuildError> {
    if n1 == 0 || n2 == 0 {
        return Err(BuildError::TooSmall { what: "bipartite part", min: 1, got: n1.min(n2) });
    }
    let edges = (0..n1).flat_map(|i| (0..n2).map(move |j| (i, n1 + j, 1.0)));
    Ok(Graph::from_edges(n1 + n2, edges)?)
}

/// Unweighted path `0 - 1 - ... - (n-1)`.
pub fn path(n: usize) -> Result<Graph, BuildError> {
    if n < 2 {
        return Err(BuildError::TooSmall { what: "path", min: 2, got: n });
    }
    Ok(Graph::from_edges(n, (0..n - 1).map(|i| (i, i + 1, 1.0)))?)
}

/// Periodic `sqrt(n) x sqrt(n)` grid, row-major numbering.
pub fn torus_grid(n: usize) -> Result<Graph, BuildError> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(BuildError::NotSquare(n));
    }
    if side < 3 {
        return Err(BuildError::TooSmall { what: "torus side", min: 3, got: side });
    }
    let mut edges = Vec::with_capacity(2 * n);
    for r in 0..side {
        for c in 0..side {
            let i = r * side + c;
            edges.push((i, r * side + (c + 1) % side, 1.0));
            edges.push((i, ((r + 1) % side) * side + c, 1.0));
        }
    }
    Ok(Graph::from_edges(n, edges)?)
}

/// Planar coordinates of the torus nodes, `(column, row)`.
pub fn torus_positions(n: usize) -> Result<Vec<(f64, f64)>, BuildError> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n {
        return Err(BuildError::NotSquare(n));
    }
    Ok((0..n).map(|i| ((i % side) as f64, (i / side) as f64)).collect())
}

/// Square lattice stitched to a triangular lattice; see the module docs.
pub fn stitched(n: usize) -> Result<Graph, BuildError> {
    stitched_with_positions(n).map(|(g, _)| g)
}

/// The stitched mesh together with node coordinates.
pub fn stitched_with_positions(n: usize) -> Result<(Graph, Vec<(f64, f64)>), BuildError> {
    if n != STITCHED_NODES {
        return Err(BuildError::UnsupportedSize(n));
    }
    // (x, y, lattice, row, k)
    let mut nodes: Vec<(f64, f64, bool, usize, usize)> = Vec::new();
    for r in 0..STITCHED_ROWS {
        for c in 0..STITCHED_COLS {
            nodes.push((c as f64, r as f64, false, r, c));
        }
        let (offset, len) = if r % 2 == 0 { (0.0, STITCHED_COLS) } else { (0.5, STITCHED_COLS - 1) };
        for k in 0..len {
            nodes.push(((STITCHED_COLS + k) as f64 + offset, r as f64, true, r, k));
        }
    }
    debug_assert_eq!(nodes.len(), STITCHED_NODES);
    nodes.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let index = |tri: bool, r: usize, k: usize| {
        nodes.iter().position(|nd| nd.2 == tri && nd.3 == r && nd.4 == k).expect("node exists")
    };
    let tri_len = |r: usize| if r % 2 == 0 { STITCHED_COLS } else { STITCHED_COLS - 1 };
    let mut edges = Vec::new();
    for r in 0..STITCHED_ROWS {
        for c in 0..STITCHED_COLS {
            if c + 1 < STITCHED_COLS {
                edges.push((index(false, r, c), index(false, r, c + 1), 1.0));
            }
            if r + 1 < STITCHED_ROWS {
                edges.push((index(false, r, c), index(false, r + 1, c), 1.0));
            }
        }
        edges.push((index(false, r, STITCHED_COLS - 1), index(true, r, 0), 1.0));
        for k in 0..tri_len(r) {
            if k + 1 < tri_len(r) {
                edges.push((index(true, r, k), index(true, r, k + 1), 1.0));
            }
            if r + 1 < STITCHED_ROWS {
                // even row node k sits between odd-row nodes k-1 and k
                let below: Vec<usize> = if r % 2 == 0 {
                    [k.checked_sub(1), Some(k)].into_iter().flatten().filter(|&m| m < tri_len(r + 1)).collect()
                } else {
                    vec![k, k + 1]
                };
                for m in below {
                    edges.push((index(true, r, k), index(true, r + 1, m), 1.0));
                }
            }
        }
    }
    let g = Graph::from_edges(STITCHED_NODES, edges)?;
    let pos = nodes.iter().map(|nd| (nd.0, nd.1)).collect();
    Ok((g, pos))
}

/// Parameters of the two-moons point cloud and its k-NN graph.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoMoonsParams {
    pub samples_per_moon: usize,
    pub dimension: usize,
    pub noise_sigma: f64,
    pub k_nearest: usize,
    pub seed: u64,
}

impl Default for TwoMoonsParams {
    fn default() -> Self {
        Self { samples_per_moon: 300, dimension: 100, noise_sigma: 0.02, k_nearest: 10, seed: 0 }
    }
}

impl fmt::Display for TwoMoonsParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "samples_per_moon={} dimension={} noise_sigma={} k_nearest={} seed={}",
            self.samples_per_moon, self.dimension, self.noise_sigma, self.k_nearest, self.seed
        )
    }
}

/// Points of the two half circles embedded in the first two coordinates,
/// with isotropic Gaussian noise in every coordinate.
pub fn two_moons_points(p: &TwoMoonsParams) -> Result<Vec<Vec<f64>>, BuildError> {
    if p.dimension < 2 {
        return Err(BuildError::BadParams("dimension must be at least 2".into()));
    }
    if !(p.noise_sigma >= 0.0 && p.noise_sigma.is_finite()) {
        return Err(BuildError::BadParams("noise_sigma must be finite and nonnegative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let noise = Normal::new(0.0, p.noise_sigma).map_err(|e| BuildError::BadParams(e.to_string()))?;
    let mut pts = Vec::with_capacity(2 * p.samples_per_moon);
    for moon in 0..2 {
        for _ in 0..p.samples_per_moon {
            let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let mut x = vec![0.0; p.dimension];
            if moon == 0 {
                x[0] = t.cos();
                x[1] = t.sin();
            } else {
                x[0] = 1.0 - t.cos();
                x[1] = 0.5 - t.sin();
            }
            for xi in &mut x {
                *xi += noise.sample(&mut rng);
            }
            pts.push(x);
        }
    }
    Ok(pts)
}

/// Weighted k-NN graph on the two-moons cloud.
///
/// An edge is present when either endpoint lists the other among its `k`
/// nearest neighbours, with weight `exp(-|x_i - x_j|^2 / s^2)` where `s`
/// is the mean k-NN distance. See [`two_moons_with_k`] for the handling
/// of disconnected clouds.
pub fn two_moons(p: &TwoMoonsParams) -> Result<Graph, BuildError> {
    two_moons_with_k(p).map(|(g, _)| g)
}

/// [`two_moons`] together with the neighbour count actually used. When the
/// requested `k` leaves the graph disconnected, `k` is increased one at a
/// time until it is connected.
pub fn two_moons_with_k(p: &TwoMoonsParams) -> Result<(Graph, usize), BuildError> {
    if p.k_nearest == 0 || p.samples_per_moon < p.k_nearest + 1 {
        return Err(BuildError::BadParams("need samples_per_moon >= k_nearest + 1 >= 2".into()));
    }
    let pts = two_moons_points(p)?;
    let n = pts.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum();
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    }
    let order: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut o: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            o.sort_by(|&a, &b| d2[i * n + a].total_cmp(&d2[i * n + b]).then(a.cmp(&b)));
            o
        })
        .collect();
    for k in p.k_nearest..n {
        let dist_sum: f64 = (0..n).map(|i| order[i][..k].iter().map(|&j| d2[i * n + j].sqrt()).sum::<f64>()).sum();
        let s2 = (dist_sum / (n * k) as f64).powi(2);
        let mut w = vec![0.0; n * n];
        for (i, list) in order.iter().enumerate() {
            for &j in &list[..k] {
                let x = (-d2[i * n + j] / s2).exp();
                w[i * n + j] = x;
                w[j * n + i] = x;
            }
        }
        match Graph::from_dense(n, w) {
            Ok(g) => return Ok((g, k)),
            Err(GraphError::Disconnected { .. }) | Err(GraphError::IsolatedNode(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(BuildError::Disconnected)
}

/// Outcome details of reading an edge list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeListReport {
    pub data_lines: usize,
    pub self_loops_dropped: usize,
}

/// Parse edge-list text.
///
/// Grammar: UTF-8 lines; `#` starts a comment running to end of line;
/// blank lines are skipped; every other line holds exactly three
/// whitespace-separated fields `i j w`, with `i`, `j` 0-based decimal
/// integers and `w` a finite nonnegative float. Entries accumulate into a
/// matrix `A` (repeated pairs add up). With `symmetrize` the weights are
/// `(A + A^T) / 2`, otherwise every line is an undirected edge and the
/// weight is `A_ij + A_ji`. Self-loops are dropped and counted. The node
/// count is one more than the largest index seen.
pub fn parse_weighted_edgelist(text: &str, symmetrize: bool) -> Result<(Graph, EdgeListReport), BuildError> {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut report = EdgeListReport::default();
    let mut n = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let line_no = lineno + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(BuildError::Parse {
                line: line_no,
                msg: format!("expected 3 fields `i j w`, found {}", fields.len()),
            });
        }
        let idx = |s: &str| {
            s.parse::<usize>().map_err(|e| BuildError::Parse { line: line_no, msg: format!("bad index `{s}`: {e}") })
        };
        let (i, j) = (idx(fields[0])?, idx(fields[1])?);
        let w: f64 = fields[2]
            .parse()
            .map_err(|e| BuildError::Parse { line: line_no, msg: format!("bad weight `{}`: {e}", fields[2]) })?;
        if !(w.is_finite() && w >= 0.0) {
            return Err(BuildError::Parse { line: line_no, msg: format!("weight {w} must be finite and nonnegative") });
        }
        report.data_lines += 1;
        n = n.max(i + 1).max(j + 1);
        if i == j {
            report.self_loops_dropped += 1;
            continue;
        }
        entries.push((i, j, w));
    }
    let mut a = vec![0.0; n * n];
    for (i, j, w) in entries {
        a[i * n + j] += w;
    }
    let scale = if symmetrize { 0.5 } else { 1.0 };
    let mut sym = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            sym[i * n + j] = scale * (a[i * n + j] + a[j * n + i]);
        }
    }
    Ok((Graph::from_dense(n, sym)?, report))
}

pub fn load_weighted_edgelist(path: &Path, symmetrize: bool) -> Result<(Graph, EdgeListReport), BuildError> {
    let text = std::fs::read_to_string(path)?;
    parse_weighted_edgelist(&text, symmetrize)
}

/// Serialize as an edge list (one line per undirected edge, `i < j`).
pub fn to_edgelist(graph: &Graph) -> String {
    let mut s = format!("# {} nodes, {} edges\n", graph.n(), graph.edge_count());
    for (i, j, w) in graph.edges() {
        s.push_str(&format!("{i} {j} {w:?}\n"));
    }
    s
}
