//! Equilibrium measures and Green's functions.
//!
//! The equilibrium measure `ν^S` of a proper subset `S` solves
//! `(Δν)_i = 1` on `S` with `ν = 0` off `S`. Restricted to `S` this is
//! `(D - W)_SS ν_S = d_S^r`, an irreducibly diagonally dominant M-matrix
//! system which is solved densely. Green's functions are assembled from
//! equilibrium measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dense;
use crate::graph_core::{Calculus, Graph};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("subset is the whole node set; no equilibrium measure exists")]
    FullSubset,
    #[error("subset is empty")]
    EmptySubset,
    #[error("mask length {got} does not match {n} nodes")]
    MaskLength { n: usize, got: usize },
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("endpoints must differ")]
    SameEndpoints,
    #[error("restricted linear system could not be solved")]
    SolveFailed,
}

/// Equilibrium measure of a subset.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    pub subset: Vec<bool>,
    pub nu: Vec<f64>,
}

pub fn equilibrium_measure(calc: &Calculus, subset: &[bool]) -> Result<EquilibriumMeasure, PotentialError> {
    let g = calc.graph();
    let n = g.n();
    if subset.len() != n {
        return Err(PotentialError::MaskLength { n, got: subset.len() });
    }
    if subset.iter().all(|&s| s) {
        return Err(PotentialError::FullSubset);
    }
    let idx: Vec<usize> = (0..n).filter(|&i| subset[i]).collect();
    let k = idx.len();
    let mut nu = vec![0.0; n];
    if k > 0 {
        let mut a = vec![0.0; k * k];
        for (p, &i) in idx.iter().enumerate() {
            for (q, &j) in idx.iter().enumerate() {
                a[p * k + q] = if i == j { g.degree(i) } else { -g.weight(i, j) };
            }
        }
        let b: Vec<f64> = idx.iter().map(|&i| calc.dr()[i]).collect();
        let x = dense::solve(&a, k, &b).ok_or(PotentialError::SolveFailed)?;
        for (&i, v) in idx.iter().zip(x) {
            nu[i] = v;
        }
    }
    Ok(EquilibriumMeasure { subset: subset.to_vec(), nu })
}

fn without(n: usize, j: usize) -> Vec<bool> {
    (0..n).map(|i| i != j).collect()
}

/// Which boundary problem a Green's function solves.
#[derive(Debug, Clone, PartialEq)]
pub enum GreensKind {
    /// Zero outside the subset.
    Dirichlet(Vec<bool>),
    /// Pinned to zero at the given node.
    Poisson(usize),
}

/// Green's function `G_ij`, stored for every node `i` and every source
/// node `j` in `sources`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensTable {
    pub kind: GreensKind,
    n: usize,
    sources: Vec<usize>,
    // values[i * sources.len() + c] = G_{i, sources[c]}
    values: Vec<f64>,
}

impl GreensTable {
    pub fn sources(&self) -> &[usize] {
        &self.sources
    }

    /// `G_ij`; `j` must be a source node.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let c = self.sources.iter().position(|&s| s == j).expect("j is a source node");
        self.values[i * self.sources.len() + c]
    }

    /// The column `G^j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        let c = self.sources.iter().position(|&s| s == j).expect("j is a source node");
        (0..self.n).map(|i| self.values[i * self.sources.len() + c]).collect()
    }

    /// `u_i = Σ_j d_j^r G_ij f_j` over the source nodes.
    pub fn expand(&self, calc: &Calculus, f: &[f64]) -> Vec<f64> {
        let m = self.sources.len();
        let w: Vec<f64> = self.sources.iter().map(|&j| calc.dr()[j] * f[j]).collect();
        (0..self.n).map(|i| self.values[i * m..(i + 1) * m].iter().zip(&w).map(|(g, x)| g * x).sum()).collect()
    }
}

/// Green's function with zero boundary values off `subset`.
pub fn greens_dirichlet(calc: &Calculus, subset: &[bool]) -> Result<GreensTable, PotentialError> {
    let n = calc.n();
    let base = equilibrium_measure(calc, subset)?;
    let sources: Vec<usize> = (0..n).filter(|&i| subset[i]).collect();
    if sources.is_empty() {
        return Err(PotentialError::EmptySubset);
    }
    let m_s = calc.mass(&base.nu);
    let m = sources.len();
    let mut values = vec![0.0; n * m];
    for (c, &j) in sources.iter().enumerate() {
        let mut minus = subset.to_vec();
        minus[j] = false;
        let reduced = equilibrium_measure(calc, &minus)?;
        let scale = base.nu[j] / (m_s - calc.mass(&reduced.nu));
        for i in 0..n {
            values[i * m + c] = scale * (base.nu[i] - reduced.nu[i]);
        }
    }
    Ok(GreensTable { kind: GreensKind::Dirichlet(subset.to_vec()), n, sources, values })
}

/// Green's function for the Poisson problem pinned at node `k`.
pub fn greens_poisson(calc: &Calculus, k: usize) -> Result<GreensTable, PotentialError> {
    let n = calc.n();
    if k >= n {
        return Err(PotentialError::NodeOutOfRange(k));
    }
    let vol = calc.volume_all();
    let nus: Vec<Vec<f64>> =
        (0..n).map(|j| equilibrium_measure(calc, &without(n, j)).map(|e| e.nu)).collect::<Result<_, _>>()?;
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = (nus[k][i] + nus[j][k] - nus[j][i]) / vol;
        }
    }
    Ok(GreensTable { kind: GreensKind::Poisson(k), n, sources: (0..n).collect(), values })
}

/// `P[walk from i hits a before b]`, through the Poisson Green's function
/// pinned at `b`.
pub fn hitting_probability(calc: &Calculus, a: usize, b: usize) -> Result<Vec<f64>, PotentialError> {
    let n = calc.n();
    if a >= n || b >= n {
        return Err(PotentialError::NodeOutOfRange(a.max(b)));
    }
    if a == b {
        return Err(PotentialError::SameEndpoints);
    }
    let vol = calc.volume_all();
    let nb = equilibrium_measure(calc, &without(n, b))?.nu;
    let na = equilibrium_measure(calc, &without(n, a))?.nu;
    let c_ab = (nb[a] + na[b]) / vol;
    // G_{i a} with pin b, from the Poisson formula
    Ok((0..n).map(|i| (nb[i] + na[b] - na[i]) / vol / c_ab).collect())
}

/// Monte-Carlo estimate of the hitting probability, `walks` walks per
/// start node, transition probabilities `ω_ij / d_i`.
pub fn random_walk_green_estimate(
    graph: &Graph,
    a: usize,
    b: usize,
    walks: usize,
    seed: u64,
) -> Result<Vec<f64>, PotentialError> {
    let n = graph.n();
    if a >= n || b >= n {
        return Err(PotentialError::NodeOutOfRange(a.max(b)));
    }
    if a == b {
        return Err(PotentialError::SameEndpoints);
    }
    let table: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .map(|i| {
            let mut acc = 0.0;
            graph
                .neighbors(i)
                .map(|(j, w)| {
                    acc += w;
                    (j, acc)
                })
                .unzip()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![0.0; n];
    for (start, o) in out.iter_mut().enumerate() {
        if start == a || start == b {
            *o = if start == a { 1.0 } else { 0.0 };
            continue;
        }
        let mut hits = 0usize;
        for _ in 0..walks.max(1) {
            let mut at = start;
            while at != a && at != b {
                let (nbrs, cum) = &table[at];
                let x = rng.random::<f64>() * graph.degree(at);
                let k = cum.partition_point(|&c| c <= x).min(nbrs.len() - 1);
                at = nbrs[k];
            }
            hits += usize::from(at == a);
        }
        *o = hits as f64 / walks.max(1) as f64;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_builders::{complete_bipartite, star};
    use crate::graph_core::{mask_from_indices, CalculusParams};
    use crate::spectral_engine::Spectrum;
    use proptest::prelude::*;

    fn calc(g: &Graph, r: f64) -> Calculus<'_> {
        Calculus::new(g, CalculusParams::with_r(r).unwrap())
    }

    #[test]
    fn empty_and_full_subsets() {
        let g = star(5).unwrap();
        let c = calc(&g, 0.0);
        let e = equilibrium_measure(&c, &[false; 5]).unwrap();
        assert!(e.nu.iter().all(|&x| x == 0.0));
        assert_eq!(equilibrium_measure(&c, &[true; 5]), Err(PotentialError::FullSubset));
        assert_eq!(greens_dirichlet(&c, &[false; 5]), Err(PotentialError::EmptySubset));
    }

    #[test]
    fn bipartite_part_measure() {
        let g = complete_bipartite(3, 4).unwrap();
        for &r in &[0.0, 0.5, 1.0] {
            let c = calc(&g, r);
            let s = mask_from_indices(7, &[0, 2]);
            let e = equilibrium_measure(&c, &s).unwrap();
            for i in 0..7 {
                let want = if s[i] { g.degree(i).powf(r - 1.0) } else { 0.0 };
                assert!((e.nu[i] - want).abs() < 1e-12);
            }
            // curvature bound holds with equality here
            let kplus = c.curvature_max(&s).unwrap();
            assert!((e.nu[0] - 1.0 / kplus).abs() < 1e-12);
        }
    }

    #[test]
    fn star_complement_of_leaf() {
        let n = 6;
        let g = star(n).unwrap();
        for &r in &[0.0, 0.4, 1.0] {
            let c = calc(&g, r);
            let e = equilibrium_measure(&c, &without(n, 3)).unwrap();
            let a = ((n - 1) as f64).powf(r);
            assert!((e.nu[0] - (a + n as f64 - 2.0)).abs() < 1e-10);
            assert!((e.nu[1] - (a + n as f64 - 1.0)).abs() < 1e-10);
            assert_eq!(e.nu[3], 0.0);
        }
    }

    #[test]
    fn complement_measure_laplacian_at_pin() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.3), (0, 4, 1.2)]).unwrap();
        let c = calc(&g, 0.7);
        for j in 0..5 {
            let mask = without(5, j);
            let e = equilibrium_measure(&c, &mask).unwrap();
            let lap = c.laplacian(&e.nu);
            let want = -c.dmr()[j] * c.volume(&mask);
            assert!((lap[j] - want).abs() < 1e-10);
        }
    }

    #[test]
    fn singleton_dirichlet() {
        let g = star(5).unwrap();
        let c = calc(&g, 0.5);
        let s = mask_from_indices(5, &[2]);
        let t = greens_dirichlet(&c, &s).unwrap();
        let lap = c.laplacian(&t.column(2));
        assert!((lap[2] - c.dmr()[2]).abs() < 1e-12);
    }

    #[test]
    fn poisson_symmetry_on_star() {
        let g = star(6).unwrap();
        let c = calc(&g, 0.5);
        let t = greens_poisson(&c, 2).unwrap();
        for i in 0..6 {
            assert_eq!(t.get(2, i), 0.0);
            for j in 0..6 {
                assert!((t.get(i, j) - t.get(j, i)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rejects_bad_endpoints() {
        let g = star(4).unwrap();
        assert_eq!(random_walk_green_estimate(&g, 1, 1, 10, 0), Err(PotentialError::SameEndpoints));
        assert_eq!(hitting_probability(&calc(&g, 0.0), 0, 9), Err(PotentialError::NodeOutOfRange(9)));
    }

    #[test]
    fn random_walk_matches_green() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0), (1, 2, 2.0), (3, 4, 0.5)])
            .unwrap();
        let c = calc(&g, 0.0);
        let (a, b) = (0, 1);
        let walks = 100_000;
        let exact = hitting_probability(&c, a, b).unwrap();
        let est = random_walk_green_estimate(&g, a, b, walks, 11).unwrap();
        assert_eq!(est[a], 1.0);
        assert_eq!(est[b], 0.0);
        for i in 0..5 {
            let sd = (exact[i] * (1.0 - exact[i]) / walks as f64).sqrt();
            assert!((est[i] - exact[i]).abs() <= 3.0 * sd + 1e-12, "node {i}: {} vs {}", est[i], exact[i]);
        }
        let swapped = hitting_probability(&c, b, a).unwrap();
        for i in 0..5 {
            assert!((exact[i] + swapped[i] - 1.0).abs() < 1e-12);
        }
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (3usize..10).prop_flat_map(|n| {
            let m = n * (n - 1) / 2;
            (Just(n), proptest::collection::vec(prop_oneof![Just(0.0), 0.1f64..3.0], m))
        })
        .prop_map(|(n, ws)| {
            let mut w = vec![0.0; n * n];
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let x = if j == i + 1 { ws[k].max(0.5) } else { ws[k] };
                    w[i * n + j] = x;
                    w[j * n + i] = x;
                    k += 1;
                }
            }
            Graph::from_dense(n, w).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn measure_invariants(g in arb_graph(), r in 0.0f64..=1.0, bits in proptest::collection::vec(any::<bool>(), 10)) {
            let n = g.n();
            let mut s = bits[..n].to_vec();
            s[0] = false;
            prop_assume!(s.iter().any(|&b| b));
            let c = calc(&g, r);
            let e = equilibrium_measure(&c, &s).unwrap();
            let lap = c.laplacian(&e.nu);
            for i in 0..n {
                if s[i] {
                    prop_assert!((lap[i] - 1.0).abs() < 1e-10);
                    prop_assert!(e.nu[i] > 0.0);
                    prop_assert!(e.nu[i] >= 1.0 / c.curvature_max(&s).unwrap() * (1.0 - 1e-12));
                } else {
                    prop_assert_eq!(e.nu[i], 0.0);
                }
            }
            // monotone in the subset
            let first = s.iter().position(|&b| b).unwrap();
            let mut smaller = s.clone();
            smaller[first] = false;
            let e2 = equilibrium_measure(&c, &smaller).unwrap();
            for i in 0..n {
                prop_assert!(e.nu[i] >= e2.nu[i] - 1e-12);
            }
        }

        #[test]
        fn dirichlet_green_properties(g in arb_graph(), r in 0.0f64..=1.0,
                                      bits in proptest::collection::vec(any::<bool>(), 10),
                                      f in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let n = g.n();
            let mut s = bits[..n].to_vec();
            s[n - 1] = false;
            s[0] = true;
            let c = calc(&g, r);
            let t = greens_dirichlet(&c, &s).unwrap();
            for &j in t.sources() {
                let col = t.column(j);
                let lap = c.laplacian(&col);
                for i in 0..n {
                    if s[i] {
                        let want = if i == j { c.dmr()[j] } else { 0.0 };
                        prop_assert!((lap[i] - want).abs() < 1e-10 * (1.0 + want.abs()));
                    } else {
                        prop_assert!(col[i].abs() < 1e-12);
                    }
                }
                for &i in t.sources() {
                    prop_assert!((t.get(i, j) - t.get(j, i)).abs() < 1e-10 * (1.0 + t.get(i, j).abs()));
                }
            }
            // expansion solves the Dirichlet problem
            let u = t.expand(&c, &f[..n]);
            let lap = c.laplacian(&u);
            for i in 0..n {
                if s[i] {
                    prop_assert!((lap[i] - f[i]).abs() < 1e-9);
                } else {
                    prop_assert!(u[i].abs() < 1e-12);
                }
            }
            // the measure is recovered from the indicator
            let chi: Vec<f64> = s.iter().map(|&b| f64::from(u8::from(b))).collect();
            let nu = t.expand(&c, &chi);
            let e = equilibrium_measure(&c, &s).unwrap();
            for i in 0..n {
                prop_assert!((nu[i] - e.nu[i]).abs() < 1e-9 * (1.0 + e.nu[i]));
            }
        }

        #[test]
        fn poisson_green_properties(g in arb_graph(), r in 0.0f64..=1.0, kraw in 0usize..10,
                                    f in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let n = g.n();
            let k = kraw % n;
            let c = calc(&g, r);
            let t = greens_poisson(&c, k).unwrap();
            for j in 0..n {
                let lap = c.laplacian(&t.column(j));
                for i in 0..n {
                    let mut want = 0.0;
                    if i == j { want += c.dmr()[j]; }
                    if i == k { want -= c.dmr()[k]; }
                    prop_assert!((lap[i] - want).abs() < 1e-10 * (1.0 + want.abs()));
                    prop_assert!((t.get(i, j) - t.get(j, i)).abs() < 1e-10 * (1.0 + t.get(i, j).abs()));
                }
                prop_assert!(t.get(k, j).abs() < 1e-14);
            }
            let f0 = c.centered(&f[..n]);
            let u = t.expand(&c, &f0);
            prop_assert!(u[k].abs() < 1e-12);
            let lap = c.laplacian(&u);
            for i in 0..n {
                prop_assert!((lap[i] - f0[i]).abs() < 1e-9);
            }
            // agrees with the spectral zero-mass solution up to a constant
            let s = Spectrum::decompose(&c).unwrap();
            let phi = s.poisson_zero_mass(&f0);
            let shift = phi[k] - u[k];
            for i in 0..n {
                prop_assert!((phi[i] - u[i] - shift).abs() < 1e-9);
            }
        }
    }
}
