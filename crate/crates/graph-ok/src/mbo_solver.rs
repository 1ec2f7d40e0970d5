//! Threshold dynamics for the Ohta-Kawasaki energy.
//!
//! Both schemes alternate a diffusion step `u = e^{-τL} v` with a
//! threshold. OKMBO keeps `{i : u_i ≥ ½}`. mcOKMBO ranks nodes by `u`
//! (stable descending sort, ties to the lower index) and fills them with
//! the value 1 while the accumulated mass `Σ d_i^r` stays within `M`; the
//! next node receives the remaining mass `d^{-r}(M - Σ d^r)` and the rest
//! receive 0. Each iterate therefore has at most one entry in `(0, 1)`.
//!
//! `J_τ` is non-increasing along both schemes and each run reaches a fixed
//! point in finitely many steps.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::functionals;
use crate::graph_core::{Calculus, Graph};
use crate::spectral_engine::{OperatorL, SpectralError, Spectrum};

/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 500;
/// Default stopping tolerance on `‖v^k - v^{k-1}‖₂`.
pub const DEFAULT_TOLERANCE: f64 = 1e-24;
// Relative slack when comparing accumulated mass against M.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MboError {
    #[error("mass {mass} outside [0, {volume}]")]
    MassOutOfRange { mass: f64, volume: f64 },
    #[error("tau must be positive and finite, got {0}")]
    BadTau(f64),
    #[error("gamma must be nonnegative and finite, got {0}")]
    BadGamma(f64),
    #[error("max_iterations must be at least 1")]
    NoIterations,
    #[error("mcOKMBO needs a prescribed mass")]
    MissingMass,
    #[error("state has length {got}, graph has {n} nodes")]
    Length { n: usize, got: usize },
    #[error("the node set is empty")]
    EmptySet,
    #[error("graph is not an unweighted star centred at node 0")]
    NotAStar,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Run parameters shared by both schemes.
#[derive(Debug, Clone, PartialEq)]
pub struct MboConfig {
    pub gamma: f64,
    pub tau: f64,
    /// Prescribed mass; required by mcOKMBO, ignored by OKMBO.
    pub mass: Option<f64>,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl MboConfig {
    pub fn new(gamma: f64, tau: f64) -> Self {
        Self { gamma, tau, mass: None, max_iterations: DEFAULT_MAX_ITERATIONS, tolerance: DEFAULT_TOLERANCE, seed: 0 }
    }

    pub fn with_mass(mut self, mass: f64) -> Self {
        self.mass = Some(mass);
        self
    }

    pub fn validate(&self) -> Result<(), MboError> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(MboError::BadTau(self.tau));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(MboError::BadGamma(self.gamma));
        }
        if self.max_iterations == 0 {
            return Err(MboError::NoIterations);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// `‖v^k - v^{k-1}‖₂` fell below the tolerance.
    Converged,
    MaxIterations,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Converged => "converged",
            Termination::MaxIterations => "max_iterations",
        })
    }
}

/// Diagnostics of one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub j_tau: f64,
    pub f0: f64,
    /// `F_ε` without the well term; `F0 / 2` on binary states.
    pub f_interface: f64,
    pub mass: f64,
    /// `‖v^k - v^{k-1}‖₂`, absent for `k = 0`.
    pub diff_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MboTrace {
    /// `v^0, v^1, ..., v^K`.
    pub states: Vec<Vec<f64>>,
    pub records: Vec<IterateRecord>,
    pub terminated_at: usize,
    pub reason: Termination,
    /// Index of the iterate with the smallest `F0`.
    pub best: usize,
}

impl MboTrace {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trace holds v^0")
    }

    pub fn final_record(&self) -> &IterateRecord {
        self.records.last().expect("trace holds v^0")
    }

    /// Whether `J_τ(v^k) ≤ J_τ(v^{k-1})` (up to `rel_tol`) for all `k ≥ from`.
    pub fn lyapunov_monotone(&self, from: usize, rel_tol: f64) -> bool {
        self.records
            .windows(2)
            .filter(|w| w[1].k >= from.max(1))
            .all(|w| w[1].j_tau <= w[0].j_tau + rel_tol * (1.0 + w[0].j_tau.abs()))
    }
}

fn indicator(mask: &[bool]) -> Vec<f64> {
    mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
}

/// One OKMBO step: `{i : (e^{-τL} χ_S)_i ≥ ½}`.
pub fn okmbo_step(op: &OperatorL, tau: f64, set: &[bool]) -> Vec<bool> {
    op.heat(tau, &indicator(set)).iter().map(|&u| u >= 0.5).collect()
}

/// Node order used by the mass threshold: descending `u`, ties ascending index.
pub fn relabelling(u: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..u.len()).collect();
    order.sort_by(|&a, &b| u[b].total_cmp(&u[a]));
    order
}

/// Mass-conserving threshold of `u` to mass `mass`.
pub fn mass_threshold(calc: &Calculus, u: &[f64], mass: f64) -> Result<Vec<f64>, MboError> {
    let n = calc.n();
    if u.len() != n {
        return Err(MboError::Length { n, got: u.len() });
    }
    let vol = calc.volume_all();
    let slack = MASS_SLACK * vol;
    if !(mass >= 0.0 && mass <= vol + slack) {
        return Err(MboError::MassOutOfRange { mass, volume: vol });
    }
    let dr = calc.dr();
    let mut v = vec![0.0; n];
    let mut cum = 0.0;
    for i in relabelling(u) {
        if cum + dr[i] <= mass + slack {
            v[i] = 1.0;
            cum += dr[i];
        } else {
            v[i] = ((mass - cum) / dr[i]).clamp(0.0, 1.0);
            break;
        }
    }
    Ok(v)
}

fn record(op: &OperatorL, calc: &Calculus, tau: f64, k: usize, v: &[f64], diff: Option<f64>) -> IterateRecord {
    let s = op.spectrum();
    let a = s.coefficients(v);
    let lam = s.eigenvalues();
    let h: f64 = a.iter().zip(lam).skip(1).map(|(x, l)| x * x / l).sum();
    let mass = calc.mass(v);
    let heat: f64 = a.iter().zip(op.eigenvalues()).map(|(x, l)| (-tau * l).exp() * x * x).sum();
    let gamma = op.gamma();
    IterateRecord {
        k,
        j_tau: mass - heat,
        f0: calc.total_variation(v) + gamma * h,
        f_interface: calc.dirichlet_energy(v) + 0.5 * gamma * h,
        mass,
        diff_norm: diff,
    }
}

fn run<F>(calc: &Calculus, op: &OperatorL, config: &MboConfig, v0: Vec<f64>, mut step: F) -> Result<MboTrace, MboError>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>, MboError>,
{
    let n = calc.n();
    if v0.len() != n {
        return Err(MboError::Length { n, got: v0.len() });
    }
    let mut records = vec![record(op, calc, config.tau, 0, &v0, None)];
    let mut states = vec![v0];
    let mut reason = Termination::MaxIterations;
    for k in 1..=config.max_iterations {
        let prev = states.last().expect("nonempty");
        let next = step(&op.heat(config.tau, prev))?;
        let diff = prev.iter().zip(&next).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        records.push(record(op, calc, config.tau, k, &next, Some(diff)));
        states.push(next);
        if diff < config.tolerance {
            reason = Termination::Converged;
            break;
        }
    }
    let best = records.iter().enumerate().min_by(|a, b| a.1.f0.total_cmp(&b.1.f0)).map(|(i, _)| i).unwrap_or(0);
    Ok(MboTrace { terminated_at: states.len() - 1, states, records, reason, best })
}

/// OKMBO evolution of the set `s0`.
pub fn okmbo_run(calc: &Calculus, spectrum: &Spectrum, config: &MboConfig, s0: &[bool]) -> Result<MboTrace, MboError> {
    config.validate()?;
    let op = OperatorL::new(spectrum, config.gamma)?;
    run(calc, &op, config, indicator(s0), |u| Ok(u.iter().map(|&x| if x >= 0.5 { 1.0 } else { 0.0 }).collect()))
}

/// mcOKMBO evolution of `v0` at the configured mass.
pub fn mcokmbo_run(calc: &Calculus, spectrum: &Spectrum, config: &MboConfig, v0: &[f64]) -> Result<MboTrace, MboError> {
    config.validate()?;
    let mass = config.mass.ok_or(MboError::MissingMass)?;
    let op = OperatorL::new(spectrum, config.gamma)?;
    run(calc, &op, config, v0.to_vec(), |u| mass_threshold(calc, u, mass))
}

/// Sufficient condition (binary `v`, `r = 0`) for the next mcOKMBO
/// iterate to differ from `v`: `min_{v=1} u < max_{v=0} u`.
pub fn escapes_pinning(op: &OperatorL, tau: f64, v: &[f64]) -> bool {
    let u = op.heat(tau, v);
    let lo = u.iter().zip(v).filter(|p| *p.1 == 1.0).map(|p| *p.0).fold(f64::INFINITY, f64::min);
    let hi = u.iter().zip(v).filter(|p| *p.1 == 0.0).map(|p| *p.0).fold(f64::NEG_INFINITY, f64::max);
    lo < hi
}

/// Why `τ_t(S)` is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TauTUndefined {
    FullSet,
    HalfVolume,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PinningBounds {
    /// Below this, OKMBO returns `S` unchanged.
    pub tau_rho: f64,
    /// Above this, OKMBO jumps to `∅` or `V`.
    pub tau_t: Result<f64, TauTUndefined>,
    /// Below this, OKMBO returns `S` unchanged; proven only for graphs in
    /// the class `C_γ`.
    pub tau_kappa: f64,
}

pub fn pinning_bounds(op: &OperatorL, calc: &Calculus, set: &[bool]) -> Result<PinningBounds, MboError> {
    if !set.iter().any(|&b| b) {
        return Err(MboError::EmptySet);
    }
    let r = calc.params().r;
    let dmin = calc.graph().min_degree().powf(r / 2.0);
    let vol_s = calc.volume(set);
    let vol = calc.volume_all();
    let tau_rho = (1.0 + 0.5 * dmin / vol_s.sqrt()).ln() / op.lambda_plus();
    let tau_t = if set.iter().all(|&b| b) {
        Err(TauTUndefined::FullSet)
    } else if (vol_s / vol - 0.5).abs() <= 1e-12 {
        Err(TauTUndefined::HalfVolume)
    } else {
        let arg = (vol_s * (vol - vol_s)).sqrt() / (vol.sqrt() * (vol_s / vol - 0.5).abs() * dmin);
        Ok(arg.ln() / op.lambda_minus())
    };
    let lchi = op.apply(&indicator(set));
    let tau_kappa = 0.5 / lchi.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    Ok(PinningBounds { tau_rho, tau_t, tau_kappa })
}

/// Centre-node behaviour of one OKMBO step on the unweighted star.
#[derive(Debug, Clone, PartialEq)]
pub struct StarCentrePinning {
    pub centre_in_set: bool,
    /// Bound on `e^{-Λ_{n-1} τ}`: at least it (centre in `S`) or above it
    /// (centre not in `S`) keeps the centre's membership unchanged.
    pub threshold: f64,
    /// Whether the centre keeps its membership at the given `τ`.
    pub pinned: bool,
}

pub fn star_center_pinning(graph: &Graph, r: f64, gamma: f64, set: &[bool], tau: f64) -> Result<StarCentrePinning, MboError> {
    let n = graph.n();
    let is_star = n >= 3
        && set.len() == n
        && (0..n).all(|i| (0..n).all(|j| graph.weight(i, j) == f64::from(u8::from(i != j && (i == 0 || j == 0)))));
    if !is_star {
        return Err(MboError::NotAStar);
    }
    let nm = (n - 1) as f64;
    let vol = nm.powf(r) + nm;
    let centre = set[0];
    let mass = if centre { nm.powf(r) } else { 0.0 } + set[1..].iter().filter(|&&b| b).count() as f64;
    let lam = nm.powf(1.0 - r) + 1.0;
    let e = (-(lam + gamma / lam) * tau).exp();
    let (threshold, pinned) = if centre {
        let t = 0.5 * (vol - 2.0 * mass) / (vol - mass);
        (t, e >= t)
    } else {
        let t = 1.0 - 0.5 * vol / mass;
        (t, e > t)
    };
    Ok(StarCentrePinning { centre_in_set: centre, threshold, pinned })
}

/// Initial-condition recipes for mcOKMBO.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialCondition {
    /// Mass threshold of a seeded uniform random vector.
    Random(u64),
    /// Mass threshold of the descending ramp `n, n-1, ..., 1`.
    Structured,
    /// Mass threshold of the sum of the eigenfunctions spanning the
    /// eigenspace of the smallest nonzero `Λ_m`. The basis of a degenerate
    /// eigenspace is solver dependent, and so is this state.
    EigenBased,
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Random(s) => write!(f, "random(seed={s})"),
            InitialCondition::Structured => f.write_str("structured"),
            InitialCondition::EigenBased => f.write_str("eigen"),
        }
    }
}

/// Relative width used to collect the minimal-`Λ` eigenspace.
pub const EIGENSPACE_TOL: f64 = 1e-9;

/// Indices `m ≥ 1` whose `Λ_m` equals the minimum up to [`EIGENSPACE_TOL`].
pub fn minimal_eigenspace(op: &OperatorL) -> Vec<usize> {
    let big = op.eigenvalues();
    let min = big[1..].iter().copied().fold(f64::INFINITY, f64::min);
    (1..big.len()).filter(|&m| (big[m] - min).abs() <= EIGENSPACE_TOL * min.max(1.0)).collect()
}

pub fn initial_condition(
    calc: &Calculus,
    op: &OperatorL,
    mass: f64,
    kind: InitialCondition,
) -> Result<Vec<f64>, MboError> {
    let n = calc.n();
    let u: Vec<f64> = match kind {
        InitialCondition::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| rng.random::<f64>()).collect()
        }
        InitialCondition::Structured => (0..n).map(|i| (n - i) as f64).collect(),
        InitialCondition::EigenBased => {
            let mut acc = vec![0.0; n];
            for m in minimal_eigenspace(op) {
                acc.iter_mut().zip(op.spectrum().eigenfunction(m)).for_each(|(a, p)| *a += p);
            }
            acc
        }
    };
    mass_threshold(calc, &u, mass)
}

/// `J_τ` of a state, re-exported for convenience.
pub fn lyapunov(op: &OperatorL, tau: f64, v: &[f64]) -> f64 {
    functionals::j_tau_spectral(op, tau, v)
}
