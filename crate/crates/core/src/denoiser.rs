//! The cosine denoiser `φ`, its correlation map `ϕ(u) = E[φ(X)φ(Y)]` and
//! the round-size schedule.
//!
//! With `φ(x) = a₁(cos(bx) − e^{−b²/2})` every quantity the iteration needs
//! has a closed form:
//!
//! * `a₁ = √2 / (1 − e^{−b²})`, so that `E[φ(X)²] = 1`;
//! * `ϕ(u) = a₁² e^{−b²} (cosh(b²u) − 1) = (cosh(b²u) − 1)/(cosh(b²) − 1)`;
//! * `ϕ''(0) = a₁² e^{−b²} b⁴`;
//! * Taylor coefficients `c_m = a₁² e^{−b²} b^{2m}/m!` for even `m ≥ 2`, zero otherwise.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

pub const DEFAULT_BANDWIDTH: f64 = 1.0;

/// Bound on `sup|φ|`, `sup|φ'|`, `sup|φ''|`.
pub const SUP_BOUND: f64 = 100.0;

/// Coefficients scanned when estimating `Λ`.
pub const LAMBDA_SCAN: usize = 40;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Denoiser {
    /// Frequency `b` of the non-constant term.
    pub bandwidth: f64,
    /// `(aᵢ, bᵢ)` with `φ(x) = Σ aᵢ cos(bᵢ x)`; the first term is the constant offset.
    pub terms: Vec<(f64, f64)>,
    /// `a₁`, the normalization making `E[φ(X)²] = 1`.
    pub var_norm: f64,
}

/// Builds the two-term denoiser with frequency `b`.
pub fn make_denoiser(b: f64) -> Result<Denoiser> {
    if !(b > 0.0) || !b.is_finite() {
        return param(format!("denoiser frequency must be positive and finite, got {b}"));
    }
    let b2 = b * b;
    // (1 + e^{-2b²})/2 − e^{-b²} = (1 − e^{-b²})² / 2
    let one_minus = -(-b2).exp_m1();
    let a1 = std::f64::consts::SQRT_2 / one_minus;
    let a0 = -a1 * (-0.5 * b2).exp();
    let d = Denoiser {
        bandwidth: b,
        terms: vec![(a0, 0.0), (a1, b)],
        var_norm: a1,
    };
    let bound = d.analytic_sup_bound();
    if !(bound <= SUP_BOUND) {
        return param(format!(
            "denoiser frequency {b} gives Σ|aᵢ|·max(1, bᵢ²) = {bound:.3}, above {SUP_BOUND}"
        ));
    }
    Ok(d)
}

impl Denoiser {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(a, b)| a * (b * x).cos()).sum()
    }

    pub fn deriv1(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(a, b)| -a * b * (b * x).sin()).sum()
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(a, b)| -a * b * b * (b * x).cos()).sum()
    }

    /// `Σ|aᵢ|·max(1, bᵢ²)`, which bounds `φ`, `φ'` and `φ''` at once.
    pub fn analytic_sup_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b)| a.abs() * (b * b).max(1.0))
            .sum()
    }

    /// `a₁² e^{−b²}`, the common prefactor of `ϕ` and its coefficients.
    fn prefactor(&self) -> f64 {
        let b = self.bandwidth;
        self.var_norm * self.var_norm * (-b * b).exp()
    }

    /// `E[φ(X)]` from the cosine characteristic function.
    pub fn mean_closed_form(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b)| a * (-0.5 * b * b).exp())
            .sum()
    }

    /// `E[φ(X)²]` from the product-to-sum identity.
    pub fn second_moment_closed_form(&self) -> f64 {
        let mut total = 0.0;
        for &(ai, bi) in &self.terms {
            for &(aj, bj) in &self.terms {
                let plus = (-0.5 * (bi + bj) * (bi + bj)).exp();
                let minus = (-0.5 * (bi - bj) * (bi - bj)).exp();
                total += 0.5 * ai * aj * (plus + minus);
            }
        }
        total
    }

    /// Taylor coefficient `c_m` of `ϕ` at 0.
    pub fn taylor_coefficient(&self, m: usize) -> f64 {
        if m == 0 || m % 2 == 1 {
            return 0.0;
        }
        let b2 = self.bandwidth * self.bandwidth;
        // b^{2m}/m! accumulated as a product to avoid overflow
        let mut term = 1.0;
        for k in 1..=m {
            term *= b2 / k as f64;
        }
        self.prefactor() * term
    }

    /// `Λ = max_{m ≤ 40} |c_m| / 2^m`.
    pub fn lambda_cap(&self) -> f64 {
        (2..=LAMBDA_SCAN)
            .map(|m| self.taylor_coefficient(m).abs() / 2f64.powi(m as i32))
            .fold(0.0, f64::max)
    }
}

/// `ϕ(u)` in closed form; `u` must lie in `[-1, 1]`.
pub fn phi_map(d: &Denoiser, u: f64) -> f64 {
    debug_assert!(u.abs() <= 1.0 + 1e-12, "correlation {u} outside [-1, 1]");
    let b2 = d.bandwidth * d.bandwidth;
    // cosh(x) − 1 = 2 sinh²(x/2), exact near 0
    let s = (0.5 * b2 * u).sinh();
    d.prefactor() * 2.0 * s * s
}

/// `ϕ''(0) = a₁² e^{−b²} b⁴`.
pub fn phi_second_deriv_at_zero(d: &Denoiser) -> f64 {
    let b2 = d.bandwidth * d.bandwidth;
    d.prefactor() * b2 * b2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum ScheduleMode {
    /// Runs only if `K₀` meets the asymptotic lower bound, which no
    /// machine-sized `K₀` does; kept to report the reference value.
    PaperConstants,
    /// `K_{t+1} = round(γ K_t²)`; `None` means `γ = 4/K₀`.
    Practical { gamma: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub rho: f64,
    pub n: usize,
    pub k0: usize,
    pub eps0: f64,
    /// `K₀, …, K_{t*}`.
    pub ks: Vec<usize>,
    /// A-priori `ε₀, …, ε_{t*}` from `ε_{t+1} = ϕ(ρ ε_t / 2)`; the run
    /// replaces these with the realized values.
    pub epss: Vec<f64>,
    pub t_star: usize,
    /// `c₂ = ϕ''(0)/2`.
    pub c2: f64,
    pub phi_second: f64,
    pub lambda_cap: f64,
    pub gamma: f64,
    pub divisor: usize,
    /// `(ln n)^{1.1}`.
    pub size_target: f64,
    /// `K₀ε₀²γ(ϕ''(0)ρ²/16)²`; above 1 the proxy `K_tε_t²` must increase.
    pub growth_condition: f64,
    pub paper_k0_bound: f64,
    pub paper_log_ratio: f64,
    pub paper_conditions_met: bool,
}

/// `10^{30} ρ^{−30} |ϕ''(0)|⁴ Λ⁴ ε₀^{−2}`.
pub fn paper_k0_bound(rho: f64, d: &Denoiser) -> f64 {
    let eps0 = phi_map(d, rho / 2.0);
    let p2 = phi_second_deriv_at_zero(d);
    let lam = d.lambda_cap();
    1e30 * rho.powi(-30) * p2.powi(4) * lam.powi(4) / (eps0 * eps0)
}

/// Ratio of logarithms in the second `K₀` condition; must be below 1.01.
pub fn paper_log_ratio(rho: f64, k0: f64, d: &Denoiser) -> f64 {
    let eps0 = phi_map(d, rho / 2.0);
    let p2 = phi_second_deriv_at_zero(d);
    let lam = d.lambda_cap();
    let num = (1e-30 * p2 * p2 * lam * lam * rho.powi(20) * k0).ln();
    let den = (1e40 * p2.powi(4) * lam.powi(-4) * rho.powi(24) * k0 * eps0 * eps0).ln();
    num / den
}

/// Sizes and a-priori signal levels for each round.
pub fn build_schedule(
    rho: f64,
    n: usize,
    k0: usize,
    mode: ScheduleMode,
    d: &Denoiser,
    divisor: usize,
) -> Result<Schedule> {
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("rho must lie in (0, 1], got {rho}"));
    }
    if n < 2 {
        return param(format!("n must be at least 2, got {n}"));
    }
    if divisor == 0 {
        return param("column divisor must be positive");
    }
    if k0 / divisor < 1 {
        return Err(Error::Schedule(format!(
            "K₀/{divisor} must be at least 1, got K₀ = {k0}"
        )));
    }
    let eps0 = phi_map(d, rho / 2.0);
    let phi_second = phi_second_deriv_at_zero(d);
    let lambda_cap = d.lambda_cap();
    let bound = paper_k0_bound(rho, d);
    let ratio = paper_log_ratio(rho, k0 as f64, d);
    let paper_ok = (k0 as f64) >= bound && ratio < 1.01;

    let gamma = match mode {
        ScheduleMode::PaperConstants => {
            if !paper_ok {
                return Err(Error::Schedule(format!(
                    "paper-constants mode needs K₀ ≥ {bound:.3e} and log ratio < 1.01 (got K₀ = {k0}, ratio {ratio:.4}); use practical mode"
                )));
            }
            1e-20 * rho.powi(20) * phi_second * phi_second / (lambda_cap * lambda_cap)
        }
        ScheduleMode::Practical { gamma } => gamma.unwrap_or(4.0 / k0 as f64),
    };
    if !(gamma > 0.0) || !gamma.is_finite() {
        return param(format!("gamma must be positive, got {gamma}"));
    }

    let size_target = (n as f64).ln().powf(1.1);
    let mut sched = Schedule {
        rho,
        n,
        k0,
        eps0,
        ks: vec![k0],
        epss: vec![eps0],
        t_star: 0,
        c2: phi_second / 2.0,
        phi_second,
        lambda_cap,
        gamma,
        divisor,
        size_target,
        growth_condition: k0 as f64
            * eps0
            * eps0
            * gamma
            * (phi_second * rho * rho / 16.0).powi(2),
        paper_k0_bound: bound,
        paper_log_ratio: ratio,
        paper_conditions_met: paper_ok,
    };
    while (*sched.ks.last().unwrap() as f64) < size_target {
        let t = sched.ks.len() - 1;
        let next = sched.next_k(sched.ks[t])?;
        sched.ks.push(next);
        let e = phi_map(d, rho / 2.0 * sched.epss[t]);
        sched.epss.push(e);
    }
    sched.t_star = sched.ks.len() - 1;

    if sched.growth_condition > 1.0 {
        let proxy: Vec<f64> = sched
            .ks
            .iter()
            .zip(&sched.epss)
            .map(|(&k, &e)| k as f64 * e * e)
            .collect();
        if proxy.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Schedule(format!(
                "signal proxy K_t ε_t² not increasing: {proxy:?}"
            )));
        }
    }
    Ok(sched)
}

impl Schedule {
    fn next_k(&self, k: usize) -> Result<usize> {
        let next = (self.gamma * (k as f64) * (k as f64)).round();
        if !(next > k as f64) {
            return Err(Error::Schedule(format!(
                "round size must grow: K = {k} maps to {next} with γ = {}",
                self.gamma
            )));
        }
        if next > 1e12 {
            return Err(Error::Schedule(format!("round size {next:.3e} is too large")));
        }
        Ok(next as usize)
    }

    /// `K_t`, continuing the recursion past `t*` when needed.
    pub fn k_at(&self, t: usize) -> Result<usize> {
        if let Some(&k) = self.ks.get(t) {
            return Ok(k);
        }
        let mut k = *self.ks.last().unwrap();
        for _ in self.ks.len() - 1..t {
            k = self.next_k(k)?;
        }
        Ok(k)
    }

    /// Number of `Ξ` columns at round size `k`.
    pub fn columns(&self, k: usize) -> usize {
        (k / self.divisor).max(1)
    }

    /// Last round the iteration runs to.
    pub fn final_round(&self, min_rounds: usize) -> usize {
        self.t_star.max(min_rounds)
    }
}
