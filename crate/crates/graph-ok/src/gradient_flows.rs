//! Mass-preserving gradient flows of `F_ε`.
//!
//! The mass-constrained Allen-Cahn flow is the `V` gradient flow with a
//! Lagrange multiplier; the Cahn-Hilliard flow is the `H^{-1}` gradient
//! flow and conserves mass on its own. Both are integrated with forward
//! Euler, halving the step whenever `F_ε` would increase.

use std::fmt;

use thiserror::Error;

use crate::functionals::{double_well_prime, f_eps};
use crate::graph_core::Calculus;
use crate::spectral_engine::Spectrum;

/// Maximum number of consecutive halvings of the step size.
pub const MAX_HALVINGS: usize = 20;

/// An energy increase this small relative to `1 + |F_ε|` is roundoff; the
/// step is then recorded as a null step.
const ROUNDOFF: f64 = 64.0 * f64::EPSILON;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("gamma must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("step size must be positive, got {0}")]
    NonpositiveStep(f64),
    #[error("state has length {got}, graph has {n} nodes")]
    Length { n: usize, got: usize },
    #[error("step {step}: energy still increased after {MAX_HALVINGS} halvings (h = {h})")]
    StepSizeUnderflow { step: usize, h: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    AllenCahnConstrained,
    CahnHilliard,
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowKind::AllenCahnConstrained => "allen-cahn",
            FlowKind::CahnHilliard => "cahn-hilliard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub eps: f64,
    pub gamma: f64,
    pub h: f64,
    pub steps: usize,
    pub kind: FlowKind,
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(FlowError::NonpositiveEpsilon(self.eps));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(FlowError::NegativeGamma(self.gamma));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(FlowError::NonpositiveStep(self.h));
        }
        Ok(())
    }
}

fn weighted_well_prime(calc: &Calculus, u: &[f64]) -> Vec<f64> {
    u.iter().zip(calc.dmr()).map(|(&x, d)| d * double_well_prime(x)).collect()
}

/// `μ = (1/(ε vol V)) Σ_i W'(u_i)`; the constrained Allen-Cahn flow is
/// `-(V gradient) + μ`.
pub fn lagrange_multiplier(calc: &Calculus, eps: f64, u: &[f64]) -> f64 {
    u.iter().map(|&x| double_well_prime(x)).sum::<f64>() / (eps * calc.volume_all())
}

/// The unconstrained `V` gradient `Δu + (1/ε) d^{-r}W'(u) + γ φ` of `F_ε`.
pub fn v_gradient(calc: &Calculus, spectrum: &Spectrum, eps: f64, gamma: f64, u: &[f64]) -> Vec<f64> {
    let lap = calc.laplacian(u);
    let wp = weighted_well_prime(calc, u);
    let phi = spectrum.poisson_zero_mass(u);
    (0..u.len()).map(|i| lap[i] + wp[i] / eps + gamma * phi[i]).collect()
}

/// Right-hand side of the selected flow.
pub fn flow_rhs(calc: &Calculus, spectrum: &Spectrum, config: &FlowConfig, u: &[f64]) -> Vec<f64> {
    let eps = config.eps;
    let gamma = config.gamma;
    match config.kind {
        FlowKind::AllenCahnConstrained => {
            let lap = calc.laplacian(u);
            let wp = weighted_well_prime(calc, u);
            let wp_avg = calc.average_value(&wp);
            let phi = spectrum.poisson_zero_mass(u);
            let phi_avg = calc.average_value(&phi);
            (0..u.len()).map(|i| -lap[i] - (wp[i] - wp_avg) / eps - gamma * (phi[i] - phi_avg)).collect()
        }
        FlowKind::CahnHilliard => {
            let lap2 = calc.laplacian(&calc.laplacian(u));
            let lw = calc.laplacian(&weighted_well_prime(calc, u));
            let avg = calc.average_value(u);
            (0..u.len()).map(|i| -lap2[i] - lw[i] / eps - gamma * (u[i] - avg)).collect()
        }
    }
}

/// One accepted Euler step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowRecord {
    pub k: usize,
    pub t: f64,
    pub h: f64,
    pub f_eps: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<FlowRecord>,
    pub final_state: Vec<f64>,
    pub halvings: usize,
}

impl Trajectory {
    /// CSV with header `k,F_eps,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,F_eps,mass\n");
        for r in &self.records {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", r.k, r.f_eps, r.mass));
        }
        out
    }

    pub fn energy_non_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].f_eps <= w[0].f_eps)
    }

    pub fn max_mass_drift(&self) -> f64 {
        let m0 = self.records[0].mass;
        self.records.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max)
    }
}

/// Forward Euler for `config.steps` accepted steps.
///
/// A step that raises `F_ε` is retried with half the step size; the reduced
/// step size is kept for the rest of the run. Near a stationary state the
/// energy change drops to roundoff and the state is left unchanged.
pub fn flow_integrate(calc: &Calculus, spectrum: &Spectrum, config: &FlowConfig, u0: &[f64]) -> Result<Trajectory, FlowError> {
    config.validate()?;
    let n = calc.n();
    if u0.len() != n {
        return Err(FlowError::Length { n, got: u0.len() });
    }
    let energy = |u: &[f64]| f_eps(calc, spectrum, config.gamma, config.eps, u).expect("epsilon validated");
    let mut u = u0.to_vec();
    let mut e = energy(&u);
    let mut h = config.h;
    let mut t = 0.0;
    let mut halvings = 0;
    let mut records = vec![FlowRecord { k: 0, t, h, f_eps: e, mass: calc.mass(&u) }];
    for k in 1..=config.steps {
        let rhs = flow_rhs(calc, spectrum, config, &u);
        let mut tries = 0;
        let (next, e_next) = loop {
            let cand: Vec<f64> = u.iter().zip(&rhs).map(|(x, d)| x + h * d).collect();
            let ec = energy(&cand);
            if ec <= e {
                break (cand, ec);
            }
            if ec - e <= ROUNDOFF * (1.0 + e.abs()) {
                break (u.clone(), e);
            }
            if tries == MAX_HALVINGS {
                return Err(FlowError::StepSizeUnderflow { step: k, h });
            }
            h *= 0.5;
            tries += 1;
            halvings += 1;
        };
        u = next;
        e = e_next;
        t += h;
        records.push(FlowRecord { k, t, h, f_eps: e, mass: calc.mass(&u) });
    }
    Ok(Trajectory { records, final_state: u, halvings })
}
