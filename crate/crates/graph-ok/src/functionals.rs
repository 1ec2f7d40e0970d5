//! Ohta-Kawasaki energies.
//!
//! For `q = 1` and a binary `χ_S` with coefficients `a_m = <χ_S, φ^m>_V`,
//!
//! ```text
//! TV(χ_S)    = Σ λ_m a_m²
//! H(χ_S)     = ‖χ_S - A(χ_S)‖²_{H^{-1}} = Σ a_m² / λ_m
//! F0(χ_S)    = TV + γ H = Σ (λ_m + γ/λ_m) a_m² = <χ_S, L χ_S>_V
//! F_ε(χ_S)   = ½‖∇χ_S‖² + (γ/2) H = F0(χ_S) / 2
//! ```
//!
//! `F0` is normalized so that `J_τ(χ_S)/τ → F0(χ_S)` as `τ → 0`; the
//! diffuse energy `F_ε` keeps its halves and so tends to `F0/2` on
//! binary states.

use thiserror::Error;

use crate::graph_core::Calculus;
use crate::spectral_engine::{OperatorL, Spectrum};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
}

/// Double-well potential `x² (x - 1)²`.
pub fn double_well(x: f64) -> f64 {
    x * x * (x - 1.0) * (x - 1.0)
}

pub fn double_well_prime(x: f64) -> f64 {
    2.0 * x * (x - 1.0) * (2.0 * x - 1.0)
}

/// `‖u - A(u)‖²_{H^{-1}} = Σ_{m≥1} a_m² / λ_m`.
pub fn hminus1_norm_sq(spectrum: &Spectrum, u: &[f64]) -> f64 {
    let a = spectrum.coefficients(u);
    a.iter().zip(spectrum.eigenvalues()).skip(1).map(|(x, l)| x * x / l).sum()
}

/// `TV(u) + γ ‖u - A(u)‖²_{H^{-1}}`, valid for any `u`.
pub fn f0(calc: &Calculus, spectrum: &Spectrum, gamma: f64, u: &[f64]) -> f64 {
    calc.total_variation(u) + gamma * hminus1_norm_sq(spectrum, u)
}

/// `Σ (λ_m + γ/λ_m) a_m²`; agrees with [`f0`] on binary input when `q = 1`.
pub fn f0_spectral_binary(spectrum: &Spectrum, gamma: f64, u: &[f64]) -> f64 {
    let a = spectrum.coefficients(u);
    a.iter().zip(spectrum.eigenvalues()).skip(1).map(|(x, l)| (l + gamma / l) * x * x).sum()
}

/// `½‖∇u‖² + (1/ε) Σ W(u_i) + (γ/2) ‖u - A(u)‖²_{H^{-1}}`.
pub fn f_eps(calc: &Calculus, spectrum: &Spectrum, gamma: f64, eps: f64, u: &[f64]) -> Result<f64, FunctionalError> {
    if !(eps > 0.0) {
        return Err(FunctionalError::NonpositiveEpsilon(eps));
    }
    let well: f64 = u.iter().map(|&x| double_well(x)).sum();
    Ok(f_eps_interface(calc, spectrum, gamma, u) + well / eps)
}

/// `F_ε` without the double-well term; equals `F_ε` on binary states.
pub fn f_eps_interface(calc: &Calculus, spectrum: &Spectrum, gamma: f64, u: &[f64]) -> f64 {
    calc.dirichlet_energy(u) + 0.5 * gamma * hminus1_norm_sq(spectrum, u)
}

/// `J_τ(u) = <χ_V - u, e^{-τL} u>_V`.
pub fn j_tau(op: &OperatorL, calc: &Calculus, tau: f64, u: &[f64]) -> f64 {
    let heat = op.heat(tau, u);
    let w: Vec<f64> = u.iter().map(|x| 1.0 - x).collect();
    calc.v_inner(&w, &heat)
}

/// `J_τ(u) = M(u) - Σ e^{-τΛ_m} a_m²`.
pub fn j_tau_spectral(op: &OperatorL, tau: f64, u: &[f64]) -> f64 {
    let s = op.spectrum();
    let a = s.coefficients(u);
    let mass: f64 = u.iter().zip(s.dr()).map(|(x, d)| x * d).sum();
    mass - a.iter().zip(op.eigenvalues()).map(|(x, l)| (-tau * l).exp() * x * x).sum::<f64>()
}

/// First variation `<χ_V - 2 e^{-τL} u, v>_V`.
pub fn dj_tau(op: &OperatorL, calc: &Calculus, tau: f64, u: &[f64], v: &[f64]) -> f64 {
    let heat = op.heat(tau, u);
    let w: Vec<f64> = heat.iter().map(|h| 1.0 - 2.0 * h).collect();
    calc.v_inner(&w, v)
}

/// `|J_τ(χ_S)/τ - F0(χ_S)|`.
pub fn gamma_limit_gap(op: &OperatorL, calc: &Calculus, tau: f64, chi: &[f64]) -> f64 {
    let f = f0(calc, op.spectrum(), op.gamma(), chi);
    (j_tau_spectral(op, tau, chi) / tau - f).abs()
}

/// Closed form of `F0(χ_S)` on the unweighted star with centre `0`.
pub fn star_f0_closed_form(n: usize, r: f64, gamma: f64, chi: &[f64]) -> f64 {
    assert!(n >= 3 && chi.len() == n);
    // tail[l] = number of leaves with index >= l
    let mut tail = vec![0.0; n + 1];
    for l in (1..n).rev() {
        tail[l] = tail[l + 1] + chi[l];
    }
    let nf = n as f64;
    let mut total = 0.0;
    for l in 1..n - 1 {
        let k = nf - 1.0 - l as f64;
        let t = k * chi[l] - tail[l + 1];
        total += (1.0 + gamma) / (k * (k + 1.0)) * t * t;
    }
    let top = (nf - 1.0).powf(1.0 - r) + 1.0;
    let t = (nf - 1.0) * chi[0] - tail[1];
    total + (1.0 + gamma / (top * top)) / (nf - 1.0) * t * t
}

/// Energies of one state, with the parameters that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub tv: f64,
    pub hminus1: f64,
    pub f0: f64,
    /// `F_ε` without the well term (equals `F_ε` on binary states).
    pub f_interface: f64,
    pub feps: Option<f64>,
    pub jtau: Option<f64>,
    pub q: f64,
    pub r: f64,
    pub gamma: f64,
    pub eps: Option<f64>,
    pub tau: Option<f64>,
}

impl EnergyReport {
    pub fn evaluate(
        calc: &Calculus,
        op: &OperatorL,
        u: &[f64],
        eps: Option<f64>,
        tau: Option<f64>,
    ) -> Result<Self, FunctionalError> {
        let s = op.spectrum();
        let gamma = op.gamma();
        let tv = calc.total_variation(u);
        let hminus1 = hminus1_norm_sq(s, u);
        let feps = eps.map(|e| f_eps(calc, s, gamma, e, u)).transpose()?;
        Ok(Self {
            tv,
            hminus1,
            f0: tv + gamma * hminus1,
            f_interface: calc.dirichlet_energy(u) + 0.5 * gamma * hminus1,
            feps,
            jtau: tau.map(|t| j_tau_spectral(op, t, u)),
            q: calc.params().q,
            r: calc.params().r,
            gamma,
            eps,
            tau,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_builders::{star, torus_grid};
    use crate::graph_core::{CalculusParams, Graph};
    use proptest::prelude::*;

    fn setup(g: &Graph, r: f64) -> (Calculus<'_>, Spectrum) {
        let c = Calculus::new(g, CalculusParams::with_r(r).unwrap());
        let s = Spectrum::decompose(&c).unwrap();
        (c, s)
    }

    fn subset(n: usize, bits: u32) -> Vec<f64> {
        (0..n).map(|i| f64::from((bits >> i) & 1)).collect()
    }

    #[test]
    fn constants_have_no_energy() {
        let g = star(5).unwrap();
        let (c, s) = setup(&g, 0.5);
        let ones = vec![1.0; 5];
        assert!(hminus1_norm_sq(&s, &ones).abs() < 1e-14);
        assert!(f0(&c, &s, 2.0, &ones).abs() < 1e-12);
        assert!(f0(&c, &s, 2.0, &[0.0; 5]).abs() < 1e-14);
    }

    #[test]
    fn hminus1_via_curvature() {
        let g = Graph::from_edges(5, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 4, 0.5), (4, 0, 1.0)]).unwrap();
        let (c, s) = setup(&g, 0.3);
        let mask = [true, false, true, true, false];
        let chi: Vec<f64> = mask.iter().map(|&b| f64::from(u8::from(b))).collect();
        let kappa = c.curvature(&mask);
        let ak = s.coefficients(&kappa);
        let want: f64 = ak.iter().zip(s.eigenvalues()).skip(1).map(|(x, l)| x * x / l.powi(3)).sum();
        assert!((hminus1_norm_sq(&s, &chi) - want).abs() < 1e-12);
    }

    #[test]
    fn star_closed_form_on_all_subsets() {
        let n = 6;
        let g = star(n).unwrap();
        for &r in &[0.0, 0.5, 1.0] {
            let (c, s) = setup(&g, r);
            for &gamma in &[0.0, 0.7, 3.0] {
                for bits in 0..(1u32 << n) {
                    let chi = subset(n, bits);
                    let closed = star_f0_closed_form(n, r, gamma, &chi);
                    assert!((closed - f0_spectral_binary(&s, gamma, &chi)).abs() < 1e-9);
                    assert!((closed - f0(&c, &s, gamma, &chi)).abs() < 1e-9);
                    let comp: Vec<f64> = chi.iter().map(|x| 1.0 - x).collect();
                    assert!((f0(&c, &s, gamma, &comp) - closed).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn feps_on_constant_half() {
        let g = star(4).unwrap();
        let (c, s) = setup(&g, 0.0);
        let u = vec![0.5; 4];
        let eps = 0.3;
        assert!((f_eps(&c, &s, 0.0, eps, &u).unwrap() - 4.0 / eps / 16.0).abs() < 1e-14);
        assert_eq!(f_eps(&c, &s, 0.0, 0.0, &u), Err(FunctionalError::NonpositiveEpsilon(0.0)));
    }

    #[test]
    fn feps_is_half_f0_on_binary() {
        let g = torus_grid(16).unwrap();
        let (c, s) = setup(&g, 0.0);
        let chi = subset(16, 0b1011_0110_0001_1100);
        let fe = f_eps(&c, &s, 1.5, 0.1, &chi).unwrap();
        assert!((fe - 0.5 * f0(&c, &s, 1.5, &chi)).abs() < 1e-10);
    }

    #[test]
    fn j_tau_simple_values() {
        let g = star(5).unwrap();
        let (c, s) = setup(&g, 0.4);
        let op = OperatorL::new(&s, 1.1).unwrap();
        let ones = vec![1.0; 5];
        assert!(j_tau(&op, &c, 0.7, &ones).abs() < 1e-12);
        assert!(j_tau(&op, &c, 0.7, &[0.0; 5]).abs() < 1e-14);
        let half = vec![0.5; 5];
        assert!((j_tau(&op, &c, 0.7, &half) - 0.25 * c.volume_all()).abs() < 1e-12);
    }

    #[test]
    fn gap_vanishes_on_empty_set() {
        let g = star(8).unwrap();
        let (c, s) = setup(&g, 0.0);
        let op = OperatorL::new(&s, 1.0).unwrap();
        for &tau in &[1.0, 0.1, 0.01] {
            assert!(gamma_limit_gap(&op, &c, tau, &[0.0; 8]) < 1e-14);
        }
    }

    #[test]
    fn gap_decreases_on_torus() {
        let g = torus_grid(16).unwrap();
        let (c, s) = setup(&g, 0.0);
        let op = OperatorL::new(&s, 0.5).unwrap();
        let chi = subset(16, 0b0000_0110_0110_0011);
        let gaps: Vec<f64> = [1.0, 0.5, 0.25, 0.125].iter().map(|&t| gamma_limit_gap(&op, &c, t, &chi)).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{gaps:?}");
    }

    #[test]
    fn star_minimizer_sign_rule() {
        let n = 6;
        let g = star(n).unwrap();
        let (c, s) = setup(&g, 0.0);
        let lam = s.eigenvalue(n - 1);
        let vol = c.volume_all();
        for &gamma in &[0.5 * lam, lam, 2.0 * lam] {
            for m in 1..n {
                let mass = m as f64;
                let mut best = f64::INFINITY;
                let mut values = Vec::new();
                for bits in 0..(1u32 << n) {
                    let chi = subset(n, bits);
                    if (c.mass(&chi) - mass).abs() > 1e-12 {
                        continue;
                    }
                    let e = f0(&c, &s, gamma, &chi);
                    best = best.min(e);
                    values.push((chi[0], e));
                }
                let with0 = values.iter().filter(|v| v.0 == 0.0).map(|v| v.1).fold(f64::INFINITY, f64::min);
                let with1 = values.iter().filter(|v| v.0 == 1.0).map(|v| v.1).fold(f64::INFINITY, f64::min);
                let sign = (vol - 2.0 * mass) * (gamma - lam);
                if sign.abs() < 1e-12 {
                    assert!(values.iter().all(|v| (v.1 - best).abs() < 1e-9));
                } else if sign < 0.0 {
                    assert!(with0 < with1 - 1e-9);
                } else {
                    assert!(with1 < with0 - 1e-9);
                }
                let diff = with0 - with1;
                assert!((diff - (2.0 * mass - vol) * (1.0 - gamma / lam)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn telescoping_sums() {
        for big_n in [1usize, 2, 7, 100, 10_000] {
            let nn = big_n as f64;
            let s: f64 = (0..big_n).map(|l| 1.0 / ((nn - l as f64) * (nn - l as f64 + 1.0))).sum();
            assert!((s - nn / (nn + 1.0)).abs() <= 1e-12 * (nn / (nn + 1.0)));
        }
        for big_n in [5usize, 30, 10_000] {
            let nn = big_n as f64;
            for q in [1usize, 2, big_n / 2, big_n - 3] {
                let s: f64 = (2..=q + 1).map(|l| 1.0 / ((nn - l as f64) * (nn - l as f64 + 1.0))).sum();
                let want = q as f64 / ((nn - 1.0) * (nn - q as f64 - 1.0));
                assert!((s - want).abs() <= 1e-12 * want, "N={big_n} q={q}");
            }
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
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn spectral_and_direct_f0_agree_exhaustively(g in arb_graph(), r in 0.0f64..=1.0, gamma in 0.0f64..4.0) {
            let n = g.n();
            let (c, s) = setup(&g, r);
            for bits in 0..(1u32 << n) {
                let chi = subset(n, bits);
                let a = f0(&c, &s, gamma, &chi);
                let b = f0_spectral_binary(&s, gamma, &chi);
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a));
            }
        }

        #[test]
        fn hminus1_is_potential_dirichlet(g in arb_graph(), r in 0.0f64..=1.0,
                                          u in proptest::collection::vec(-1.0f64..2.0, 10)) {
            let n = g.n();
            let (c, s) = setup(&g, r);
            let u = &u[..n];
            let phi = s.poisson_zero_mass(u);
            let e = c.e_norm(&c.gradient(&phi)).powi(2);
            prop_assert!((hminus1_norm_sq(&s, u) - e).abs() < 1e-10 * (1.0 + e));
            // independent of q
            let cq = Calculus::new(&g, CalculusParams::new(0.6, r).unwrap());
            let eq = cq.e_norm(&cq.gradient(&phi)).powi(2);
            prop_assert!((eq - e).abs() < 1e-10 * (1.0 + e));
        }

        #[test]
        fn j_tau_forms_and_variation(g in arb_graph(), r in 0.0f64..=1.0, gamma in 0.0f64..3.0, tau in 0.05f64..3.0,
                                     u in proptest::collection::vec(0.0f64..1.0, 10),
                                     v in proptest::collection::vec(-1.0f64..1.0, 10)) {
            let n = g.n();
            let (c, s) = setup(&g, r);
            let op = OperatorL::new(&s, gamma).unwrap();
            let (u, v) = (&u[..n], &v[..n]);
            let j = j_tau(&op, &c, tau, u);
            prop_assert!((j - j_tau_spectral(&op, tau, u)).abs() < 1e-10 * (1.0 + j.abs()));
            prop_assert!(j >= -1e-12);
            let h = 1e-6;
            let up: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - h * b).collect();
            let fd = (j_tau_spectral(&op, tau, &up) - j_tau_spectral(&op, tau, &um)) / (2.0 * h);
            let d = dj_tau(&op, &c, tau, u, v);
            prop_assert!((fd - d).abs() < 1e-6 * (1.0 + d.abs()));
        }

        #[test]
        fn feps_term_by_term(g in arb_graph(), r in 0.0f64..=1.0, gamma in 0.0f64..3.0, eps in 0.01f64..2.0,
                             u in proptest::collection::vec(-0.5f64..1.5, 10)) {
            let n = g.n();
            let (c, s) = setup(&g, r);
            let u = &u[..n];
            let mut grad = 0.0;
            for i in 0..n {
                for j in 0..n {
                    grad += 0.25 * g.weight(i, j) * (u[i] - u[j]).powi(2);
                }
            }
            let well: f64 = u.iter().map(|x| (x * (x - 1.0)).powi(2)).sum();
            let phi = s.poisson_zero_mass(u);
            let h: f64 = c.v_inner(&c.centered(u), &phi);
            let want = grad + well / eps + 0.5 * gamma * h;
            let got = f_eps(&c, &s, gamma, eps, u).unwrap();
            prop_assert!((got - want).abs() < 1e-10 * (1.0 + want.abs()));
        }
    }
}
