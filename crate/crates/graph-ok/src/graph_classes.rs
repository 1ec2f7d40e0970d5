//! The graph classes `C`, `C⁰` and `C_γ`, and the transformed graph.
//!
//! Everything is driven by the functions `f^j = ν^{V∖{j}} - A(ν^{V∖{j}})`.
//! They are tabulated either from the equilibrium measures directly (one
//! linear solve per node) or from the spectrum, where
//! `f^j_i = -vol V · Σ_{m≥1} λ_m^{-1} φ^m_i φ^m_j`. The spectral route costs
//! a single `O(n³)` pass and is what [`classify`] uses on large graphs.
//!
//! For `r = 0` and `G ∈ C_γ`, the weights
//! `ω̃_ij = ω_ij + γ f^j_i / vol V` define a graph whose Laplacian is `L`.

use thiserror::Error;

use crate::graph_core::{Calculus, Graph, GraphError};
use crate::potential_theory::{equilibrium_measure, PotentialError};
use crate::spectral_engine::{OperatorL, SpectralError, Spectrum};

/// Relative zero tolerance for the sign tests.
pub const SIGN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassError {
    #[error("the transformed graph needs r = 0, got r = {0}")]
    RequiresRZero(f64),
    #[error("graph is not in C_gamma for gamma = {gamma}; worst pair ({i}, {j}) has value {value}")]
    NotInCgamma { gamma: f64, i: usize, j: usize, value: f64 },
    #[error("node pair ({0}, {0}) is not a pair of distinct nodes")]
    SamePair(usize),
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
    #[error("negative gamma {0}")]
    NegativeGamma(f64),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Table of `f^j_i`, stored row-major by `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FTable {
    n: usize,
    volume: f64,
    dr: Vec<f64>,
    data: Vec<f64>,
}

impl FTable {
    /// Tabulate from the equilibrium measures of `V ∖ {j}`.
    pub fn from_equilibrium(calc: &Calculus) -> Result<Self, ClassError> {
        let n = calc.n();
        let mut data = Vec::with_capacity(n * n);
        for j in 0..n {
            let mask: Vec<bool> = (0..n).map(|i| i != j).collect();
            let nu = equilibrium_measure(calc, &mask)?.nu;
            let avg = calc.average_value(&nu);
            data.extend(nu.iter().map(|x| x - avg));
        }
        Ok(Self { n, volume: calc.volume_all(), dr: calc.dr().to_vec(), data })
    }

    /// Tabulate from the spectral expansion of the zero-mass potentials.
    pub fn from_spectrum(spectrum: &Spectrum) -> Self {
        let n = spectrum.n();
        let vol = spectrum.volume();
        let mut data = vec![0.0; n * n];
        for m in 1..n {
            let p = spectrum.eigenfunction(m);
            let s = -vol / spectrum.eigenvalue(m);
            for j in 0..n {
                let c = s * p[j];
                let row = &mut data[j * n..(j + 1) * n];
                row.iter_mut().zip(p).for_each(|(x, pi)| *x += c * pi);
            }
        }
        Self { n, volume: vol, dr: spectrum.dr().to_vec(), data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `f^j_i`.
    pub fn get(&self, j: usize, i: usize) -> f64 {
        self.data[j * self.n + i]
    }

    /// The function `f^j`.
    pub fn function(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    /// `φ^j = -(d_j^r / vol V) f^j`, the zero-mass potential of `χ_{j}`.
    pub fn potential(&self, j: usize) -> Vec<f64> {
        let c = -self.dr[j] / self.volume;
        self.function(j).iter().map(|x| c * x).collect()
    }

    /// `M(ν^{V∖{j}})`. Since `ν_j = 0`, this is `-vol V · f^j_j`.
    pub fn equilibrium_mass(&self, j: usize) -> f64 {
        -self.volume * self.get(j, j)
    }

    /// `ν^{V∖{j}} = f^j - f^j_j`.
    pub fn equilibrium(&self, j: usize) -> Vec<f64> {
        let c = self.get(j, j);
        self.function(j).iter().map(|x| x - c).collect()
    }

    fn scale(&self) -> f64 {
        self.data.iter().fold(1.0f64, |a, x| a.max(x.abs()))
    }
}

/// `f^j` for every `j`, from the equilibrium measures.
pub fn f_functions(calc: &Calculus) -> Result<Vec<Vec<f64>>, ClassError> {
    let t = FTable::from_equilibrium(calc)?;
    Ok((0..t.n).map(|j| t.function(j).to_vec()).collect())
}

/// A node pair `(i, j)` attaining the minimum of a class predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Witness {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl Witness {
    fn take_min(slot: &mut Option<Witness>, i: usize, j: usize, value: f64) {
        if slot.map_or(true, |w| value < w.value) {
            *slot = Some(Witness { i, j, value });
        }
    }
}

/// Membership of one graph in the classes, for one `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub gamma: f64,
    pub in_c: bool,
    pub in_c0: bool,
    pub in_cgamma: bool,
    /// `None` when no `f^j_i` is negative.
    pub gamma_star: Option<f64>,
    /// Minimum of `f^j_i` over `i ≠ j`.
    pub c_witness: Witness,
    /// Minimum of `f^j_i` over non-adjacent `i ≠ j`; `None` on complete graphs.
    pub c0_witness: Option<Witness>,
    /// Minimum of `d_i^{-r} ω_ij + γ (d_j^r / vol V) f^j_i` over `i ≠ j`.
    pub cgamma_witness: Witness,
    /// Minimum of the same quantity over adjacent pairs only.
    pub cgamma_edge_witness: Witness,
}

fn check_gamma(gamma: f64) -> Result<(), ClassError> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(ClassError::NegativeGamma(gamma))
    }
}

/// Exhaustive scan of the class predicates over all ordered pairs.
pub fn classify(calc: &Calculus, table: &FTable, gamma: f64) -> Result<ClassReport, ClassError> {
    check_gamma(gamma)?;
    let g = calc.graph();
    let n = g.n();
    let dr = calc.dr();
    let dmr = calc.dmr();
    let vol = calc.volume_all();
    let tol = SIGN_TOL * table.scale();
    let (mut c, mut c0, mut cg, mut cge) = (None, None, None, None);
    let mut gamma_star: Option<f64> = None;
    for j in 0..n {
        for i in (0..n).filter(|&i| i != j) {
            let f = table.get(j, i);
            let w = g.weight(i, j);
            Witness::take_min(&mut c, i, j, f);
            if w == 0.0 {
                Witness::take_min(&mut c0, i, j, f);
            }
            let value = dmr[i] * w + gamma * dr[j] / vol * f;
            Witness::take_min(&mut cg, i, j, value);
            if w > 0.0 {
                Witness::take_min(&mut cge, i, j, value);
            }
            if f < -tol {
                let bound = vol * dmr[i] * dmr[j] * w / f.abs();
                gamma_star = Some(gamma_star.map_or(bound, |b| b.min(bound)));
            }
        }
    }
    let c = c.expect("graphs have at least two nodes");
    let cg = cg.expect("graphs have at least two nodes");
    let cge = cge.expect("connected graphs have an edge");
    let in_c = c.value >= -tol;
    let in_c0 = c0.map_or(true, |w| w.value >= -tol);
    let in_cgamma = gamma == 0.0 || (in_c0 && cge.value > tol);
    Ok(ClassReport {
        gamma,
        in_c,
        in_c0,
        in_cgamma,
        gamma_star,
        c_witness: c,
        c0_witness: c0,
        cgamma_witness: cg,
        cgamma_edge_witness: cge,
    })
}

/// `γ_*(G)`; `None` when `G ∈ C`.
pub fn gamma_star(calc: &Calculus, table: &FTable) -> Option<f64> {
    classify(calc, table, 0.0).ok().and_then(|r| r.gamma_star)
}

/// Outcome of the two sufficient conditions for `C` and `C⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SufficientConditions {
    /// `ω_ij M(ν^{V∖{j}}) ≤ vol V d_i^r` for every `j` and neighbour `i`.
    pub cond_c: bool,
    /// `N_s(i,j) M(ν^{V∖{j}}) ≤ vol V d_i^r` for every `j` and non-neighbour `i ≠ j`.
    pub cond_c0: bool,
}

/// `N_s(i,j) = Σ_{k ∈ N(j)} ω_ik`.
pub fn shared_neighbour_weight(graph: &Graph, i: usize, j: usize) -> f64 {
    graph.neighbors(j).map(|(k, _)| graph.weight(i, k)).sum()
}

pub fn sufficient_conditions(calc: &Calculus, table: &FTable) -> SufficientConditions {
    let g = calc.graph();
    let n = g.n();
    let vol = calc.volume_all();
    let dr = calc.dr();
    let mut cond_c = true;
    let mut cond_c0 = true;
    for j in 0..n {
        let mass = table.equilibrium_mass(j);
        for i in (0..n).filter(|&i| i != j) {
            let rhs = vol * dr[i];
            let slack = SIGN_TOL * rhs.max(1.0);
            let w = g.weight(i, j);
            if w > 0.0 {
                cond_c &= w * mass <= rhs + slack;
            } else {
                cond_c0 &= shared_neighbour_weight(g, i, j) * mass <= rhs + slack;
            }
        }
    }
    SufficientConditions { cond_c, cond_c0 }
}

/// The graph with weights `ω̃_ij = ω_ij + γ f^j_i / vol V` (`r = 0`).
///
/// Its unnormalized Laplacian equals `L`. Values within roundoff below zero
/// are clamped to zero.
pub fn tilde_graph(calc: &Calculus, spectrum: &Spectrum, gamma: f64) -> Result<Graph, ClassError> {
    let r = calc.params().r;
    if r != 0.0 {
        return Err(ClassError::RequiresRZero(r));
    }
    let table = FTable::from_spectrum(spectrum);
    let report = classify(calc, &table, gamma)?;
    if !report.in_cgamma {
        let w = report.cgamma_edge_witness;
        let w = match report.c0_witness {
            Some(c0) if !report.in_c0 => c0,
            _ => w,
        };
        return Err(ClassError::NotInCgamma { gamma, i: w.i, j: w.j, value: w.value });
    }
    let g = calc.graph();
    let n = g.n();
    let vol = calc.volume_all();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let f = 0.5 * (table.get(j, i) + table.get(i, j));
            let x = (g.weight(i, j) + gamma * f / vol).max(0.0);
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
    }
    Ok(Graph::from_dense(n, w)?)
}

/// `F₀(χ_S)` read off the transformed graph: the ω̃-weight of the cut
/// `Σ_{i∈S, j∉S} ω̃_ij`.
pub fn f0_via_tilde(tilde: &Graph, mask: &[bool]) -> f64 {
    let n = tilde.n();
    (0..n)
        .filter(|&i| mask[i])
        .map(|i| tilde.weight_row(i).iter().enumerate().filter(|&(j, _)| !mask[j]).map(|(_, w)| w).sum::<f64>())
        .sum()
}

/// The same cut written as `Σ_{i∈S} (d̃_i - Σ_{j∈S} ω̃_ij)`.
pub fn f0_via_tilde_degrees(tilde: &Graph, mask: &[bool]) -> f64 {
    let n = tilde.n();
    (0..n)
        .filter(|&i| mask[i])
        .map(|i| tilde.degree(i) - (0..n).filter(|&j| mask[j]).map(|j| tilde.weight(i, j)).sum::<f64>())
        .sum()
}

/// Interval bracketing `ω̃_ij - ω_ij` in terms of the spectrum (`r = 0`).
pub fn weight_increase_bounds(spectrum: &Spectrum, gamma: f64, i: usize, j: usize) -> Result<(f64, f64), ClassError> {
    if spectrum.r() != 0.0 {
        return Err(ClassError::RequiresRZero(spectrum.r()));
    }
    check_gamma(gamma)?;
    let n = spectrum.n();
    if i >= n || j >= n {
        return Err(ClassError::NodeOutOfRange(i.max(j)));
    }
    if i == j {
        return Err(ClassError::SamePair(i));
    }
    let s: f64 = (1..n)
        .map(|m| {
            let p = spectrum.eigenfunction(m);
            (p[i] - p[j]).powi(2) / spectrum.eigenvalue(m)
        })
        .sum();
    let c = 1.0 - 1.0 / n as f64;
    let lo = gamma * (0.5 * s - c / spectrum.eigenvalue(1));
    let hi = gamma * (0.5 * s - c / spectrum.eigenvalue(n - 1));
    Ok((lo, hi))
}

/// `ω̃` assembled as `-d_j^r Σ_m Λ_m φ^m_i φ^m_j`, without symmetrizing or checks.
pub fn tilde_weights_spectral(op: &OperatorL) -> Vec<f64> {
    let n = op.spectrum().n();
    let mut m = op.matrix();
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = if i == j { 0.0 } else { -m[i * n + j] };
        }
    }
    m
}
