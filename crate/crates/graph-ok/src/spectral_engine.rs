//! Eigendecomposition of the graph Laplacian and the operator
//! `L = Δ + γ Δ^{-1}` restricted to zero-mass functions.
//!
//! For `r != 0` the Laplacian is self-adjoint only in the degree-weighted
//! inner product, so [`Spectrum::decompose`] diagonalizes the symmetric
//! matrix `D^{-r/2} (D - W) D^{-r/2}` and maps eigenvectors back with
//! `D^{-r/2}`. Each eigenfunction is flipped so that its entry of largest
//! magnitude is positive (ties go to the lowest index), and `φ^0` is set
//! to the exact constant `vol(V)^{-1/2}`.
//!
//! Bases inside degenerate eigenspaces depend on the eigensolver. Heat
//! semigroup, Poisson solves and all energies are projector functions and
//! therefore basis independent.

use thiserror::Error;

use crate::dense;
use crate::graph_core::Calculus;

/// Smallest admissible nonzero eigenvalue.
pub const LAMBDA_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("symmetric eigensolver failed")]
    EigensolverFailure,
    #[error("eigenvalue {m} is {lambda:e}, graph is numerically disconnected")]
    NumericallyDisconnected { m: usize, lambda: f64 },
    #[error("gamma must be finite and nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("malformed spectrum data: {0}")]
    Malformed(String),
}

/// Eigenvalues `λ_m` and V-orthonormal eigenfunctions `φ^m` of Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    n: usize,
    r: f64,
    dr: Vec<f64>,
    vol: f64,
    values: Vec<f64>,
    // vecs[m * n + i] = φ^m_i
    vecs: Vec<f64>,
}

// Relative tolerance used to detect ties for the sign convention.
const SIGN_TIE: f64 = 1e-10;

fn normalize_sign(v: &mut [f64]) {
    let big = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if let Some(k) = v.iter().position(|x| x.abs() >= big * (1.0 - SIGN_TIE)) {
        if v[k] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

impl Spectrum {
    pub fn decompose(calc: &Calculus) -> Result<Self, SpectralError> {
        let g = calc.graph();
        let n = g.n();
        let half: Vec<f64> = calc.dmr().iter().map(|x| x.sqrt()).collect();
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            for (j, w) in g.neighbors(i) {
                s[i * n + j] = -half[i] * w * half[j];
            }
            s[i * n + i] = g.degree(i) * half[i] * half[i];
        }
        let (mut values, mut vecs) = dense::symmetric_eigen(&s, n).ok_or(SpectralError::EigensolverFailure)?;
        for m in 0..n {
            let col = &mut vecs[m * n..(m + 1) * n];
            col.iter_mut().zip(&half).for_each(|(x, h)| *x *= h);
            normalize_sign(col);
        }
        let vol = calc.volume_all();
        values[0] = 0.0;
        vecs[..n].iter_mut().for_each(|x| *x = vol.powf(-0.5));
        if let Some(m) = (1..n).find(|&m| values[m] < LAMBDA_FLOOR) {
            return Err(SpectralError::NumericallyDisconnected { m, lambda: values[m] });
        }
        Ok(Self { n, r: calc.params().r, dr: calc.dr().to_vec(), vol, values, vecs })
    }

    /// Rebuild from stored eigenpairs, checking shapes and ordering.
    pub fn from_parts(r: f64, dr: Vec<f64>, values: Vec<f64>, vecs: Vec<f64>) -> Result<Self, SpectralError> {
        let n = dr.len();
        if values.len() != n || vecs.len() != n * n {
            return Err(SpectralError::Malformed(format!(
                "expected {n} eigenvalues and {} vector entries, got {} and {}",
                n * n,
                values.len(),
                vecs.len()
            )));
        }
        if values.windows(2).any(|w| w[1] < w[0]) || values.first() != Some(&0.0) {
            return Err(SpectralError::Malformed("eigenvalues must start at 0 and be sorted".into()));
        }
        if let Some(m) = (1..n).find(|&m| values[m] < LAMBDA_FLOOR) {
            return Err(SpectralError::NumericallyDisconnected { m, lambda: values[m] });
        }
        let vol = dr.iter().sum();
        Ok(Self { n, r, dr, vol, values, vecs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dr(&self) -> &[f64] {
        &self.dr
    }

    pub fn volume(&self) -> f64 {
        self.vol
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn eigenvalue(&self, m: usize) -> f64 {
        self.values[m]
    }

    pub fn eigenfunction(&self, m: usize) -> &[f64] {
        &self.vecs[m * self.n..(m + 1) * self.n]
    }

    /// All eigenfunctions, `φ^m_i` at index `m * n + i`.
    pub fn eigenfunctions(&self) -> &[f64] {
        &self.vecs
    }

    /// Coefficients `a_m = <u, φ^m>_V`.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.n);
        let du: Vec<f64> = u.iter().zip(&self.dr).map(|(a, b)| a * b).collect();
        (0..self.n).map(|m| self.eigenfunction(m).iter().zip(&du).map(|(p, x)| p * x).sum()).collect()
    }

    /// `Σ_m c_m φ^m`.
    pub fn synthesize(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.n);
        let mut out = vec![0.0; self.n];
        for (m, &cm) in c.iter().enumerate() {
            if cm != 0.0 {
                out.iter_mut().zip(self.eigenfunction(m)).for_each(|(o, p)| *o += cm * p);
            }
        }
        out
    }

    /// Zero-mass solution of `Δφ = u - A(u)`.
    pub fn poisson_zero_mass(&self, u: &[f64]) -> Vec<f64> {
        let mut a = self.coefficients(u);
        a[0] = 0.0;
        a.iter_mut().zip(&self.values).skip(1).for_each(|(x, l)| *x /= l);
        self.synthesize(&a)
    }

    /// Apply `e^{-tΔ}`.
    pub fn heat(&self, t: f64, u: &[f64]) -> Vec<f64> {
        assert!(t >= 0.0, "heat time must be nonnegative");
        let mut a = self.coefficients(u);
        a.iter_mut().zip(&self.values).for_each(|(x, l)| *x *= (-t * l).exp());
        self.synthesize(&a)
    }
}

/// The operator `Lu = Δu + γφ` with `φ` the zero-mass Poisson potential.
#[derive(Debug, Clone)]
pub struct OperatorL<'s> {
    spectrum: &'s Spectrum,
    gamma: f64,
    big_lambda: Vec<f64>,
}

impl<'s> OperatorL<'s> {
    pub fn new(spectrum: &'s Spectrum, gamma: f64) -> Result<Self, SpectralError> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(SpectralError::NegativeGamma(gamma));
        }
        let mut big_lambda: Vec<f64> = spectrum.values.iter().map(|&l| l + gamma / l).collect();
        big_lambda[0] = 0.0;
        Ok(Self { spectrum, gamma, big_lambda })
    }

    pub fn spectrum(&self) -> &'s Spectrum {
        self.spectrum
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Eigenvalues `Λ_m = λ_m + γ/λ_m` (and `Λ_0 = 0`), indexed like `λ_m`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.big_lambda
    }

    /// Smallest nonzero eigenvalue of `L`.
    pub fn lambda_minus(&self) -> f64 {
        let l = &self.spectrum.values;
        let f = |x: f64| x + self.gamma / x;
        let n = l.len();
        let sg = self.gamma.sqrt();
        if l[1] > sg {
            return f(l[1]);
        }
        if l[n - 1] < sg {
            return f(l[n - 1]);
        }
        let lo = l[1..].iter().copied().filter(|&x| x <= sg).fold(f64::NEG_INFINITY, f64::max);
        let hi = l[1..].iter().copied().filter(|&x| x >= sg).fold(f64::INFINITY, f64::min);
        if sg < (lo * hi).sqrt() {
            f(lo)
        } else {
            f(hi)
        }
    }

    /// Largest eigenvalue of `L`.
    pub fn lambda_plus(&self) -> f64 {
        let l = &self.spectrum.values;
        let (l1, ln) = (l[1], l[l.len() - 1]);
        if l1 * ln < self.gamma {
            l1 + self.gamma / l1
        } else {
            ln + self.gamma / ln
        }
    }

    /// Apply `e^{-τL}`.
    pub fn heat(&self, tau: f64, u: &[f64]) -> Vec<f64> {
        let mut a = self.spectrum.coefficients(u);
        self.heat_coefficients(tau, &mut a);
        self.spectrum.synthesize(&a)
    }

    /// Scale coefficients in place by `e^{-τΛ_m}`.
    pub fn heat_coefficients(&self, tau: f64, a: &mut [f64]) {
        assert!(tau >= 0.0, "heat time must be nonnegative");
        a.iter_mut().zip(&self.big_lambda).for_each(|(x, l)| *x *= (-tau * l).exp());
    }

    /// `Lu` through the spectral expansion.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut a = self.spectrum.coefficients(u);
        a.iter_mut().zip(&self.big_lambda).for_each(|(x, l)| *x *= l);
        self.spectrum.synthesize(&a)
    }

    /// `Lu = Δu + γφ` with the Laplacian applied directly.
    pub fn apply_direct(&self, calc: &Calculus, u: &[f64]) -> Vec<f64> {
        let phi = self.spectrum.poisson_zero_mass(u);
        calc.laplacian(u).iter().zip(&phi).map(|(a, p)| a + self.gamma * p).collect()
    }

    /// Dense row-major matrix of `L`, `L_ij = Σ_m Λ_m φ^m_i φ^m_j d_j^r`.
    pub fn matrix(&self) -> Vec<f64> {
        let n = self.spectrum.n;
        let mut out = vec![0.0; n * n];
        for m in 1..n {
            let p = self.spectrum.eigenfunction(m);
            let lm = self.big_lambda[m];
            for i in 0..n {
                let c = lm * p[i];
                for j in 0..n {
                    out[i * n + j] += c * p[j] * self.spectrum.dr[j];
                }
            }
        }
        out
    }
}
