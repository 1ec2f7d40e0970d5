//! Dense kernels delegated to faer. Matrices cross this boundary as
//! row-major `&[f64]` of side `n`.

use faer::linalg::solvers::Solve;
use faer::{Mat, Side};

/// Solve `A x = b` for a square row-major `A` by partially pivoted LU.
///
/// Returns `None` when the solution is not finite (singular input).
pub(crate) fn solve(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    if n == 0 {
        return Some(Vec::new());
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let lu = m.partial_piv_lu();
    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    lu.solve_in_place(rhs.as_mut());
    let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Eigendecomposition of a symmetric row-major matrix.
///
/// Eigenvalues come back in nondecreasing order; eigenvectors are stored
/// column-major, `vecs[m * n + i]` being entry `i` of vector `m`.
pub(crate) fn symmetric_eigen(a: &[f64], n: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    debug_assert_eq!(a.len(), n * n);
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let evd = m.self_adjoint_eigen(Side::Lower).ok()?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let vals: Vec<f64> = (0..n).map(|k| s[k]).collect();
    let mut vecs = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            vecs[k * n + i] = u[(i, k)];
        }
    }
    let finite = vals.iter().chain(vecs.iter()).all(|v| v.is_finite());
    finite.then_some((vals, vecs))
}
