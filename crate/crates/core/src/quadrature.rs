//! Gauss–Hermite rules for standard normal expectations and an adaptive
//! Simpson integrator.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::sym_eigen_sorted;

/// Nodes and weights with `Σ wᵢ f(xᵢ) ≈ E[f(X)]`, `X ~ N(0,1)`.
#[derive(Clone, Debug)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the probabilists' Hermite Jacobi matrix.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let off = (k as f64).sqrt();
            jacobi[(k, k - 1)] = off;
            jacobi[(k - 1, k)] = off;
        }
        let (vals, vecs) = sym_eigen_sorted(&jacobi);
        let nodes: Vec<f64> = vals.iter().cloned().collect();
        let mut weights: Vec<f64> = (0..order).map(|i| vecs[(0, i)] * vecs[(0, i)]).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        GaussHermite { nodes, weights }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// `E[f(X, Y)]` for standard normals with correlation `u`,
    /// using `Y = uX + √(1-u²) Z`.
    pub fn expect_bivariate(&self, u: f64, f: impl Fn(f64, f64) -> f64) -> f64 {
        let s = (1.0 - u * u).max(0.0).sqrt();
        let mut total = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (&z, &wz) in self.nodes.iter().zip(&self.weights) {
                inner += wz * f(x, u * x + s * z);
            }
            total += wx * inner;
        }
        total
    }
}

fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson with Richardson correction, absolute tolerance `tol`.
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(fa, fm, fb, a, b);
    recurse(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, a, m);
    let right = simpson(fm, frm, fb, m, b);
    let delta = left + right - whole;
    if !delta.is_finite() {
        return Err(Error::Numerical(format!("non-finite integrand on [{a}, {b}]")));
    }
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (error estimate {:.3e})",
            delta.abs() / 15.0
        )));
    }
    let l = recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?;
    let r = recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?;
    Ok(l + r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_hermite_moments() {
        let gh = GaussHermite::new(60);
        assert!((gh.expect(|_| 1.0) - 1.0).abs() < 1e-14);
        assert!(gh.expect(|x| x).abs() < 1e-12);
        assert!((gh.expect(|x| x * x) - 1.0).abs() < 1e-12);
        assert!((gh.expect(|x| x.powi(4)) - 3.0).abs() < 1e-11);
        // E[cos X] = e^{-1/2}
        assert!((gh.expect(f64::cos) - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn bivariate_covariance() {
        let gh = GaussHermite::new(40);
        for u in [-0.7, 0.0, 0.3, 1.0] {
            assert!((gh.expect_bivariate(u, |x, y| x * y) - u).abs() < 1e-12);
        }
    }

    #[test]
    fn simpson_integrates_gaussian() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(&f, -10.0, 10.0, 1e-12, 50).unwrap();
        assert!((v - 1.0).abs() < 1e-10);
    }
}
