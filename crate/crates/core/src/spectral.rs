//! Round-to-round spectral update.
//!
//! Each round carries a pair `(Φ, Ψ)` of `K_t × K_t` matrices. From them we
//! build `Ξ`, a `K_t × d` matrix with `ΞᵀΦΞ = I` and `ΞᵀΨΞ` diagonal, then
//! draw a random sign matrix `β` (`d × K_{t+1}`) and map both through `ϕ` to
//! get the next pair. A draw is kept only when the next pair passes the
//! eigenvalue-window check.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::denoiser::{phi_map, phi_second_deriv_at_zero, Denoiser, Schedule};
use crate::error::{param, Error, Result};
use crate::linalg::sym_eigen_sorted;
use crate::rng::StreamRng;

pub const WINDOW_LO: f64 = 0.9;
pub const WINDOW_HI: f64 = 1.1;
pub const INTERSECTION_TOL: f64 = 1e-8;
pub const XI_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_RESAMPLES: usize = 64;
pub const DEFAULT_DIVISOR: usize = 12;

/// `(Φ, Ψ, ε, K)` for one round.
#[derive(Clone, Debug, PartialEq)]
pub struct RoundMatrices {
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub eps: f64,
    pub k: usize,
}

/// Eigenvalue counts inside the two windows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowReport {
    pub k: usize,
    pub eps: f64,
    pub required: usize,
    pub phi_in_window: usize,
    pub psi_in_window: usize,
    pub phi_eigenvalues: Vec<f64>,
    pub psi_eigenvalues: Vec<f64>,
}

impl WindowReport {
    pub fn holds(&self) -> bool {
        self.phi_in_window >= self.required && self.psi_in_window >= self.required
    }

    /// Smaller of the two in-window counts, used to rank failed draws.
    pub fn score(&self) -> usize {
        self.phi_in_window.min(self.psi_in_window)
    }
}

/// `⌈3k/4⌉`.
pub fn required_count(k: usize) -> usize {
    (3 * k).div_ceil(4)
}

fn in_open(x: f64, lo: f64, hi: f64) -> bool {
    x > lo && x < hi
}

impl RoundMatrices {
    /// `Φ⁰ = I`, `Ψ⁰ = ε₀ I`.
    pub fn initial(k0: usize, eps0: f64) -> Self {
        RoundMatrices {
            phi: DMatrix::identity(k0, k0),
            psi: DMatrix::identity(k0, k0) * eps0,
            eps: eps0,
            k: k0,
        }
    }

    pub fn window_report(&self) -> WindowReport {
        let phi_eigenvalues = crate::linalg::sym_eigenvalues(&self.phi);
        let psi_eigenvalues = crate::linalg::sym_eigenvalues(&self.psi);
        let phi_in_window = phi_eigenvalues
            .iter()
            .filter(|&&x| in_open(x, WINDOW_LO, WINDOW_HI))
            .count();
        let (lo, hi) = (WINDOW_LO * self.eps, WINDOW_HI * self.eps);
        let psi_in_window = psi_eigenvalues.iter().filter(|&&x| in_open(x, lo, hi)).count();
        WindowReport {
            k: self.k,
            eps: self.eps,
            required: required_count(self.k),
            phi_in_window,
            psi_in_window,
            phi_eigenvalues,
            psi_eigenvalues,
        }
    }
}

/// Text histogram of `values` over `bins` equal-width bins.
pub fn histogram(values: &[f64], bins: usize) -> String {
    if values.is_empty() || bins == 0 {
        return String::from("(empty)");
    }
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
        return format!("[{lo:.4}]: {}", values.len());
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(b, c)| {
            let a = lo + b as f64 * width;
            format!("[{a:.4}, {:.4}): {c}", a + width)
        })
        .collect::<Vec<_>>()
        .join("; ")
}

fn deficiency(msg: String, rm: &RoundMatrices) -> Error {
    let rep = rm.window_report();
    Error::SpectralDeficiency(format!(
        "{msg}; K = {}, ε = {:.6e}, in-window Φ {} / Ψ {} (need {}); Φ spectrum {}; Ψ spectrum {}",
        rm.k,
        rm.eps,
        rep.phi_in_window,
        rep.psi_in_window,
        rep.required,
        histogram(&rep.phi_eigenvalues, 8),
        histogram(&rep.psi_eigenvalues, 8),
    ))
}

/// Residuals of the `Ξ` postconditions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiCheck {
    /// `‖ΞᵀΦΞ − I‖_F`.
    pub phi_residual: f64,
    /// Frobenius mass of the off-diagonal of `ΞᵀΨΞ`.
    pub psi_offdiag: f64,
    /// Diagonal of `ΞᵀΨΞ`.
    pub psi_diag: Vec<f64>,
    pub diag_in_window: bool,
}

impl XiCheck {
    pub fn holds(&self) -> bool {
        self.phi_residual <= XI_TOL && self.psi_offdiag <= XI_TOL && self.diag_in_window
    }
}

pub fn check_xi(rm: &RoundMatrices, xi: &DMatrix<f64>) -> XiCheck {
    let d = xi.ncols();
    let p = xi.transpose() * &rm.phi * xi;
    let q = xi.transpose() * &rm.psi * xi;
    let phi_residual = (p - DMatrix::<f64>::identity(d, d)).norm();
    let mut off = 0.0;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                off += q[(i, j)] * q[(i, j)];
            }
        }
    }
    let psi_diag: Vec<f64> = (0..d).map(|i| q[(i, i)]).collect();
    let diag_in_window = psi_diag
        .iter()
        .all(|&x| in_open(x, WINDOW_LO * rm.eps, WINDOW_HI * rm.eps));
    XiCheck {
        phi_residual,
        psi_offdiag: off.sqrt(),
        psi_diag,
        diag_in_window,
    }
}

fn window_vectors(m: &DMatrix<f64>, lo: f64, hi: f64) -> DMatrix<f64> {
    let (vals, vecs) = sym_eigen_sorted(m);
    let keep: Vec<usize> = (0..vals.len()).filter(|&i| in_open(vals[i], lo, hi)).collect();
    DMatrix::from_fn(m.nrows(), keep.len(), |r, c| vecs[(r, keep[c])])
}

/// `Ξ` with `columns` columns inside the intersection of the in-window
/// eigenspaces of `Φ` and `Ψ`, `Φ`-orthonormal and `Ψ`-diagonalizing.
pub fn build_xi(rm: &RoundMatrices, columns: usize) -> Result<DMatrix<f64>> {
    let k = rm.k;
    if rm.phi.shape() != (k, k) || rm.psi.shape() != (k, k) {
        return param(format!("round matrices must be {k}×{k}"));
    }
    if columns == 0 || columns > k {
        return param(format!("cannot build {columns} columns from K = {k}"));
    }
    let v = window_vectors(&rm.phi, WINDOW_LO, WINDOW_HI);
    let z = window_vectors(&rm.psi, WINDOW_LO * rm.eps, WINDOW_HI * rm.eps);
    if v.ncols() == 0 || z.ncols() == 0 {
        return Err(deficiency("no eigenvalues inside a window".into(), rm));
    }

    // principal angles between span(V) and span(Z)
    let svd = (v.transpose() * &z).svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Numerical("SVD returned no vectors".into()))?;
    let sel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] >= 1.0 - INTERSECTION_TOL)
        .collect();
    if sel.len() < columns {
        return Err(deficiency(
            format!(
                "eigenspace intersection has dimension {} < {columns}",
                sel.len()
            ),
            rm,
        ));
    }
    let u_sel = DMatrix::from_fn(u.nrows(), sel.len(), |r, c| u[(r, sel[c])]);
    let w = &v * u_sel;

    // (WᵀΨW) x = μ (WᵀΦW) x via Cholesky of WᵀΦW
    let p = w.transpose() * &rm.phi * &w;
    let q = w.transpose() * &rm.psi * &w;
    let p = (&p + p.transpose()) * 0.5;
    let q = (&q + q.transpose()) * 0.5;
    let chol = p
        .cholesky()
        .ok_or_else(|| Error::Numerical("WᵀΦW is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("Cholesky factor is singular".into()))?;
    let c = &l_inv * q * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let (mu, y) = sym_eigen_sorted(&c);
    let x_all = l_inv.transpose() * y;

    let (lo, hi) = (WINDOW_LO * rm.eps, WINDOW_HI * rm.eps);
    let mut ritz: Vec<usize> = (0..mu.len()).filter(|&i| in_open(mu[i], lo, hi)).collect();
    if ritz.len() < columns {
        return Err(deficiency(
            format!("only {} Ritz values inside the Ψ window, need {columns}", ritz.len()),
            rm,
        ));
    }
    ritz.sort_by(|&a, &b| {
        (mu[a] - rm.eps)
            .abs()
            .total_cmp(&(mu[b] - rm.eps).abs())
            .then(a.cmp(&b))
    });
    ritz.truncate(columns);
    ritz.sort_unstable();
    let x = DMatrix::from_fn(x_all.nrows(), columns, |r, c| x_all[(r, ritz[c])]);
    let xi = w * x;

    let chk = check_xi(rm, &xi);
    if !chk.holds() {
        return Err(Error::Numerical(format!(
            "Ξ postconditions failed: ‖ΞᵀΦΞ − I‖_F = {:.3e}, off-diagonal ΞᵀΨΞ = {:.3e}, diagonal {:?}",
            chk.phi_residual, chk.psi_offdiag, chk.psi_diag
        )));
    }
    Ok(xi)
}

/// `d × k_next` matrix with i.i.d. entries `±1/√d`.
pub fn sample_beta(d: usize, k_next: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let s = 1.0 / (d as f64).sqrt();
    DMatrix::from_fn(d, k_next, |_, _| if rng.random::<bool>() { s } else { -s })
}

/// Next-round matrices and the number of clamped `ϕ` arguments.
#[derive(Clone, Debug)]
pub struct RoundUpdate {
    pub next: RoundMatrices,
    pub clamped: usize,
}

/// Arguments this far past ±1 are counted as clamps; closer ones are rounding.
const CLAMP_SLACK: f64 = 1e-12;

fn phi_clamped(d: &Denoiser, x: f64, clamped: &mut usize) -> f64 {
    if x.abs() > 1.0 + CLAMP_SLACK {
        *clamped += 1;
    }
    phi_map(d, x.clamp(-1.0, 1.0))
}

/// `Φ'_{ij} = ϕ(βᵢᵀβⱼ)`, `Ψ'_{ij} = ϕ(ρ/2 · βᵢᵀ D βⱼ)` with `D = ΞᵀΨΞ`,
/// and `ε' = ϕ(ρ/2 · tr(D)/d)`.
pub fn update_round(
    rm: &RoundMatrices,
    xi: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    den: &Denoiser,
    rho: f64,
) -> Result<RoundUpdate> {
    let d = xi.ncols();
    if xi.nrows() != rm.k || beta.nrows() != d || d == 0 {
        return param(format!(
            "shape mismatch: K = {}, Ξ {:?}, β {:?}",
            rm.k,
            xi.shape(),
            beta.shape()
        ));
    }
    let k_next = beta.ncols();
    let dm = xi.transpose() * &rm.psi * xi;
    let dm = (&dm + dm.transpose()) * 0.5;
    let gram = beta.transpose() * beta;
    let cross = beta.transpose() * &dm * beta;
    let mut clamped = 0;
    let mut phi = DMatrix::<f64>::zeros(k_next, k_next);
    let mut psi = DMatrix::<f64>::zeros(k_next, k_next);
    for j in 0..k_next {
        for i in j..k_next {
            let a = phi_clamped(den, gram[(i, j)], &mut clamped);
            let b = phi_clamped(den, 0.5 * rho * cross[(i, j)], &mut clamped);
            phi[(i, j)] = a;
            phi[(j, i)] = a;
            psi[(i, j)] = b;
            psi[(j, i)] = b;
        }
    }
    let eps = phi_clamped(den, 0.5 * rho * dm.trace() / d as f64, &mut clamped);
    Ok(RoundUpdate {
        next: RoundMatrices {
            phi,
            psi,
            eps,
            k: k_next,
        },
        clamped,
    })
}

/// One accepted round of the spectral update.
#[derive(Clone, Debug)]
pub struct SpectralStep {
    pub t: usize,
    pub xi: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub resamples: usize,
    pub report: StepReport,
}

/// Serializable summary of a round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub t: usize,
    pub k: usize,
    pub k_next: usize,
    pub columns: usize,
    pub eps: f64,
    pub eps_next: f64,
    pub resamples: usize,
    pub clamped: usize,
    pub xi_check: XiCheck,
    pub phi_in_window_next: usize,
    pub psi_in_window_next: usize,
    pub required_next: usize,
    pub phi_histogram_next: String,
    pub psi_histogram_next: String,
    /// `ε_{t+1} ≥ (ρ²ϕ''(0)/16) ε_t²`.
    pub eps_growth_ok: bool,
}

/// Builds `Ξ` for `rm` and draws `β` until the next pair passes the window
/// check, with at most `max_resamples` redraws.
#[allow(clippy::too_many_arguments)]
pub fn advance(
    t: usize,
    rm: &RoundMatrices,
    columns: usize,
    k_next: usize,
    den: &Denoiser,
    rho: f64,
    max_resamples: usize,
    rng: &mut StreamRng,
) -> Result<(SpectralStep, RoundMatrices)> {
    let xi = build_xi(rm, columns)?;
    let xi_check = check_xi(rm, &xi);
    let mut best: Option<WindowReport> = None;
    for attempt in 0..=max_resamples {
        let beta = sample_beta(columns, k_next, rng);
        let up = update_round(rm, &xi, &beta, den, rho)?;
        let rep = up.next.window_report();
        if rep.holds() {
            let growth = rho * rho * phi_second_deriv_at_zero(den) / 16.0 * rm.eps * rm.eps;
            let report = StepReport {
                t,
                k: rm.k,
                k_next,
                columns,
                eps: rm.eps,
                eps_next: up.next.eps,
                resamples: attempt,
                clamped: up.clamped,
                xi_check,
                phi_in_window_next: rep.phi_in_window,
                psi_in_window_next: rep.psi_in_window,
                required_next: rep.required,
                phi_histogram_next: histogram(&rep.phi_eigenvalues, 8),
                psi_histogram_next: histogram(&rep.psi_eigenvalues, 8),
                eps_growth_ok: up.next.eps >= growth,
            };
            let step = SpectralStep {
                t,
                xi,
                beta,
                resamples: attempt,
                report,
            };
            return Ok((step, up.next));
        }
        if best.as_ref().is_none_or(|b| rep.score() > b.score()) {
            best = Some(rep);
        }
    }
    let b = best.expect("at least one draw");
    Err(Error::SpectralDeficiency(format!(
        "round {t}: no β among {} draws met the eigenvalue window (K_next = {k_next}, ε_next = {:.6e}, best in-window Φ {} / Ψ {}, need {}); Φ spectrum {}; Ψ spectrum {}",
        max_resamples + 1,
        b.eps,
        b.phi_in_window,
        b.psi_in_window,
        b.required,
        histogram(&b.phi_eigenvalues, 8),
        histogram(&b.psi_eigenvalues, 8),
    )))
}

/// `Ξ`, `β` for rounds `0..T` and `Ξ` for the final round `T`.
///
/// None of this depends on the data or the seed pair, so one plan serves
/// every seed pair of a run.
#[derive(Clone, Debug)]
pub struct SpectralPlan {
    pub steps: Vec<SpectralStep>,
    pub final_xi: DMatrix<f64>,
    /// `(Φ⁽ᵗ⁾, Ψ⁽ᵗ⁾)` for `t = 0, …, T`.
    pub matrices: Vec<RoundMatrices>,
    pub final_check: XiCheck,
}

impl SpectralPlan {
    pub fn rounds(&self) -> usize {
        self.steps.len()
    }

    pub fn final_round(&self) -> &RoundMatrices {
        self.matrices.last().expect("plan holds round 0")
    }

    /// `Ξ⁽ᵗ⁾` for `t = 0, …, T`.
    pub fn xi(&self, t: usize) -> &DMatrix<f64> {
        if t < self.steps.len() {
            &self.steps[t].xi
        } else {
            &self.final_xi
        }
    }

    /// Realized `ε₀, …, ε_T`.
    pub fn epsilons(&self) -> Vec<f64> {
        self.matrices.iter().map(|m| m.eps).collect()
    }

    pub fn mean_resamples(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().map(|s| s.resamples as f64).sum::<f64>() / self.steps.len() as f64
    }
}

/// Runs the spectral update for `final_round` rounds.
pub fn build_plan(
    sched: &Schedule,
    den: &Denoiser,
    final_round: usize,
    max_resamples: usize,
    rng: &mut StreamRng,
) -> Result<SpectralPlan> {
    let mut matrices = vec![RoundMatrices::initial(sched.k0, sched.eps0)];
    let mut steps = Vec::with_capacity(final_round);
    for t in 0..final_round {
        let rm = &matrices[t];
        let k_next = sched.k_at(t + 1)?;
        let columns = sched.columns(rm.k);
        let (step, next) = advance(t, rm, columns, k_next, den, sched.rho, max_resamples, rng)?;
        steps.push(step);
        matrices.push(next);
    }
    let last = matrices.last().expect("round 0 present");
    let final_xi = build_xi(last, sched.columns(last.k))?;
    let final_check = check_xi(last, &final_xi);
    Ok(SpectralPlan {
        steps,
        final_xi,
        matrices,
        final_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoiser::make_denoiser;
    use crate::rng::rng_from_seed;

    #[test]
    fn required_count_rounds_up() {
        assert_eq!(required_count(24), 18);
        assert_eq!(required_count(10), 8);
        assert_eq!(required_count(1), 1);
    }

    #[test]
    fn isotropic_case() {
        let rm = RoundMatrices::initial(24, 0.3);
        assert!(rm.window_report().holds());
        let xi = build_xi(&rm, 2).unwrap();
        assert_eq!(xi.shape(), (24, 2));
        assert!((xi.transpose() * &xi - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
        let q = xi.transpose() * &rm.psi * &xi;
        assert!((q - DMatrix::<f64>::identity(2, 2) * 0.3).norm() < 1e-12);
    }

    #[test]
    fn bad_quarter_excluded() {
        let k = 24;
        let eps = 0.2;
        let diag: Vec<f64> = (0..k).map(|i| if i < 18 { 1.0 } else { 0.01 }).collect();
        let phi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        let psi = &phi * eps;
        let rm = RoundMatrices { phi, psi, eps, k };
        assert!(rm.window_report().holds());
        let xi = build_xi(&rm, 2).unwrap();
        for r in 18..k {
            for c in 0..2 {
                assert!(xi[(r, c)].abs() < 1e-6);
            }
        }
        assert!(check_xi(&rm, &xi).holds());
    }

    #[test]
    fn rotated_pair_is_diagonalized() {
        // Φ and Ψ share the in-window subspace but are not simultaneously diagonal
        let k = 12;
        let eps = 0.25;
        let mut rng = rng_from_seed(4);
        let g = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5);
        let qr = g.qr();
        let o = qr.q();
        let phi_d: Vec<f64> = (0..k).map(|i| 0.95 + 0.01 * i as f64).collect();
        let phi = &o * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phi_d)) * o.transpose();
        let psi_d: Vec<f64> = (0..k).map(|i| eps * (0.97 + 0.005 * i as f64)).collect();
        let r = {
            let h = DMatrix::from_fn(k, k, |_, _| rng.random::<f64>() - 0.5);
            h.qr().q()
        };
        let psi = &r * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(psi_d)) * r.transpose();
        let rm = RoundMatrices { phi, psi, eps, k };
        let xi = build_xi(&rm, 3).unwrap();
        let chk = check_xi(&rm, &xi);
        assert!(chk.phi_residual < 1e-10 && chk.psi_offdiag < 1e-10, "{chk:?}");
    }

    #[test]
    fn disjoint_windows_are_deficient() {
        let k = 8;
        let phi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0,
        ]));
        let psi = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            0.0, 0.0, 0.0, 0.0, 0.3, 0.3, 0.3, 0.3,
        ]));
        let rm = RoundMatrices { phi, psi, eps: 0.3, k };
        let err = build_xi(&rm, 1).unwrap_err();
        assert!(matches!(err, Error::SpectralDeficiency(_)));
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn beta_entries_and_columns() {
        let mut rng = rng_from_seed(8);
        for (d, kn) in [(2usize, 96usize), (8, 40), (128, 64)] {
            let b = sample_beta(d, kn, &mut rng);
            let s = 1.0 / (d as f64).sqrt();
            assert!(b.iter().all(|&x| x == s || x == -s));
            for c in 0..kn {
                assert!((b.column(c).norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_on_isotropic_psi() {
        let den = make_denoiser(1.0).unwrap();
        let rho = 0.8;
        let eps = 0.3;
        let rm = RoundMatrices::initial(24, eps);
        let xi = build_xi(&rm, 2).unwrap();
        let beta = sample_beta(2, 96, &mut rng_from_seed(1));
        let up = update_round(&rm, &xi, &beta, &den, rho).unwrap();
        assert!((up.next.eps - phi_map(&den, rho * eps / 2.0)).abs() < 1e-14);
        assert!((0..96).all(|i| (up.next.phi[(i, i)] - 1.0).abs() < 1e-12));
        assert!(crate::linalg::is_symmetric(&up.next.phi));
        assert!(crate::linalg::is_symmetric(&up.next.psi));
        assert_eq!(up.clamped, 0);
    }

    #[test]
    fn small_round_sizes_fail_window_with_histogram() {
        // with d = 2 sign columns, Φ' is block-constant and has no eigenvalue near 1
        let den = make_denoiser(1.0).unwrap();
        let rm = RoundMatrices::initial(24, 0.15);
        let err = advance(0, &rm, 2, 96, &den, 0.8, 3, &mut rng_from_seed(2)).unwrap_err();
        match err {
            Error::SpectralDeficiency(msg) => assert!(msg.contains("spectrum")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn histogram_format() {
        assert_eq!(histogram(&[], 4), "(empty)");
        assert_eq!(histogram(&[1.0, 1.0], 4), "[1.0000]: 2");
        let h = histogram(&[0.0, 0.5, 1.0], 2);
        assert!(h.contains(": 1") && h.contains(": 2"));
    }
}
