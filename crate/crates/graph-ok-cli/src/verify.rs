//! Property checks on a single graph for the `verify` subcommand.

use std::fmt;

use graph_ok::graph_classes::{classify, tilde_graph, ClassReport, FTable};
use graph_ok::graph_core::Calculus;
use graph_ok::potential_theory::{equilibrium_measure, greens_poisson};
use graph_ok::spectral_engine::{OperatorL, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::experiment::Setup;

const SEMIGROUP_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Pass,
    Fail,
    Skipped(&'static str),
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub description: String,
    pub r: f64,
    pub classes: ClassReport,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.classes;
        writeln!(f, "graph: {} (r = {}, gamma = {})", self.description, self.r, c.gamma)?;
        writeln!(f, "in_C = {}", c.in_c)?;
        writeln!(f, "in_C0 = {}", c.in_c0)?;
        writeln!(f, "in_Cgamma = {}", c.in_cgamma)?;
        let w = &c.c_witness;
        writeln!(f, "C witness: min f^j_i = {:.6} at (i, j) = ({}, {})", w.value, w.i, w.j)?;
        match &c.c0_witness {
            Some(w) => writeln!(f, "C0 witness: min over non-edges = {:.6} at ({}, {})", w.value, w.i, w.j)?,
            None => writeln!(f, "C0 witness: none (complete graph)")?,
        }
        let w = &c.cgamma_witness;
        writeln!(f, "Cgamma witness: {:.6} at ({}, {})", w.value, w.i, w.j)?;
        let w = &c.cgamma_edge_witness;
        writeln!(f, "Cgamma witness over edges: {:.6} at ({}, {})", w.value, w.i, w.j)?;
        match c.gamma_star {
            Some(g) => writeln!(f, "gamma_star = {g:.6}")?,
            None => writeln!(f, "gamma_star = unbounded")?,
        }
        for ch in &self.checks {
            let s = match &ch.status {
                Status::Pass => "PASS".to_string(),
                Status::Fail => "FAIL".to_string(),
                Status::Skipped(why) => format!("SKIP ({why})"),
            };
            writeln!(f, "{}: {s} {}", ch.name, ch.detail)?;
        }
        write!(f, "verify: {}", if self.all_pass() { "all checks passed" } else { "some checks failed" })
    }
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check { name, status: if ok { Status::Pass } else { Status::Fail }, detail }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn eigen_residual(calc: &Calculus, s: &Spectrum) -> Check {
    let mut worst = 0.0f64;
    for m in 0..s.n() {
        let phi = s.eigenfunction(m);
        let lap = calc.laplacian(phi);
        worst = worst.max(max_abs(lap.iter().zip(phi).map(|(a, p)| a - s.eigenvalue(m) * p)));
    }
    let scale = s.eigenvalues().last().copied().unwrap_or(1.0).max(1.0);
    check("eigenpair residual", worst <= 1e-8 * scale, format!("max |Δφ - λφ| = {worst:.2e}"))
}

fn orthonormality(calc: &Calculus, s: &Spectrum) -> Check {
    let n = s.n();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let ip = calc.v_inner(s.eigenfunction(a), s.eigenfunction(b));
            worst = worst.max((ip - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    check("eigenbasis orthonormality", worst <= 1e-9, format!("max deviation = {worst:.2e}"))
}

fn greens_symmetry(calc: &Calculus) -> Result<Check, CliError> {
    let n = calc.n();
    let table = greens_poisson(calc, 0)?;
    let (mut sym, mut res, mut scale) = (0.0f64, 0.0f64, 1.0f64);
    for j in 0..n {
        let col = table.column(j);
        scale = scale.max(max_abs(col.iter().copied()));
        let lap = calc.laplacian(&col);
        for i in 0..n {
            sym = sym.max((table.get(i, j) - table.get(j, i)).abs());
            let mut want = 0.0;
            if i == j {
                want += calc.dmr()[j];
            }
            if i == 0 {
                want -= calc.dmr()[0];
            }
            res = res.max((lap[i] - want).abs());
        }
    }
    Ok(check(
        "Green's function symmetry and residual",
        sym <= 1e-9 * scale && res <= 1e-9 * scale,
        format!("asymmetry {sym:.2e}, residual {res:.2e}"),
    ))
}

fn equilibrium(calc: &Calculus) -> Result<Check, CliError> {
    let mask: Vec<bool> = (0..calc.n()).map(|i| i != 0).collect();
    let nu = equilibrium_measure(calc, &mask)?.nu;
    let lap = calc.laplacian(&nu);
    let res = max_abs((1..calc.n()).map(|i| lap[i] - 1.0));
    let scale = max_abs(nu.iter().copied()).max(1.0);
    let ok = res <= 1e-9 * scale && nu.iter().all(|&x| x >= 0.0) && nu[0] == 0.0;
    Ok(check("equilibrium measure of V minus node 0", ok, format!("residual {res:.2e}")))
}

fn tilde_check(calc: &Calculus, s: &Spectrum, gamma: f64, classes: &ClassReport) -> Result<Check, CliError> {
    const NAME: &str = "transformed graph Laplacian equals L";
    if calc.params().r != 0.0 {
        return Ok(Check { name: NAME, status: Status::Skipped("needs r = 0"), detail: String::new() });
    }
    if !classes.in_cgamma {
        return Ok(Check { name: NAME, status: Status::Skipped("graph not in Cgamma"), detail: String::new() });
    }
    let tilde = tilde_graph(calc, s, gamma)?;
    let l = OperatorL::new(s, gamma)?.matrix();
    let lt = tilde.unnormalized_laplacian();
    let err = max_abs(l.iter().zip(&lt).map(|(a, b)| a - b));
    let scale = max_abs(l.iter().copied()).max(1.0);
    Ok(check(NAME, err <= 1e-9 * scale, format!("max entry difference {err:.2e}")))
}

fn semigroup_check(op: &OperatorL, classes: &ClassReport, seed: u64) -> Check {
    const NAME: &str = "comparison principle and box preservation";
    if !classes.in_cgamma {
        return Check { name: NAME, status: Status::Skipped("graph not in Cgamma"), detail: String::new() };
    }
    let n = op.spectrum().n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violation = 0.0f64;
    for _ in 0..SEMIGROUP_SAMPLES {
        let u0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v0: Vec<f64> = u0.iter().map(|x| x + rng.random_range(0.0..1.0)).collect();
        let t = rng.random_range(0.0..3.0);
        let (u, v) = (op.heat(t, &u0), op.heat(t, &v0));
        let lo = u0.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = u0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..n {
            violation = violation.max(u[i] - v[i]).max(lo - u[i]).max(u[i] - hi);
        }
    }
    check(NAME, violation <= 1e-10, format!("{SEMIGROUP_SAMPLES} samples, worst violation {violation:.2e}"))
}

pub fn verify(config: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let setup = Setup::new(config)?;
    let calc = setup.calculus(config);
    let s = &setup.spectrum;
    let classes = classify(&calc, &FTable::from_spectrum(s), config.gamma)?;
    let op = OperatorL::new(s, config.gamma)?;
    let checks = vec![
        eigen_residual(&calc, s),
        orthonormality(&calc, s),
        greens_symmetry(&calc)?,
        equilibrium(&calc)?,
        tilde_check(&calc, s, config.gamma, &classes)?,
        semigroup_check(&op, &classes, config.seed),
    ];
    Ok(VerifyReport { description: config.graph.describe(), r: config.r, classes, checks })
}
