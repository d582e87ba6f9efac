//! Noise re-injection and spectral cleaning.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::linalg::top_singular;
use crate::model::ObservedPair;
use crate::rng::{rng_from_seed, split_seed, StreamRng};

pub const DEFAULT_THRESHOLD_MULT: f64 = 10.0;

/// `Â'` and `B̂'` together with the symmetric noise that produced them.
#[derive(Clone, Debug)]
pub struct Reinjected {
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
}

pub fn symmetric_gaussian(n: usize, rng: &mut StreamRng) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        for j in 0..i {
            let x: f64 = rng.sample(StandardNormal);
            g[(i, j)] = x;
            g[(j, i)] = x;
        }
    }
    g
}

/// `(M + N)/√2` below the diagonal, `(M - N)/√2` above it, zero on it.
fn mix(m: &DMatrix<f64>, noise: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, n, |i, j| {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Greater => (m[(i, j)] + noise[(i, j)]) * s,
            Less => (m[(i, j)] - noise[(i, j)]) * s,
            Equal => 0.0,
        }
    })
}

/// Re-injection with caller-supplied noise matrices.
pub fn reinject_with(obs: &ObservedPair, g: DMatrix<f64>, h: DMatrix<f64>) -> Result<Reinjected> {
    let n = obs.n();
    for (name, m) in [
        ("A'", &obs.a_prime),
        ("B'", &obs.b_prime),
        ("G", &g),
        ("H", &h),
    ] {
        if m.shape() != (n, n) {
            return param(format!("{name} has shape {:?}, expected ({n}, {n})", m.shape()));
        }
    }
    Ok(Reinjected {
        a_hat: mix(&obs.a_prime, &g),
        b_hat: mix(&obs.b_prime, &h),
        g,
        h,
    })
}

/// Samples `G`, `H` (one standard normal per unordered pair) and re-injects.
pub fn reinject_noise(obs: &ObservedPair, seed: u64) -> Result<Reinjected> {
    let mut rng = rng_from_seed(seed);
    let n = obs.n();
    let g = symmetric_gaussian(n, &mut rng);
    let h = symmetric_gaussian(n, &mut rng);
    reinject_with(obs, g, h)
}

/// One iteration of the cleaning loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleanStep {
    pub iteration: usize,
    pub top_singular_value: f64,
    pub removed_index: usize,
}

#[derive(Clone, Debug)]
pub struct CleanOutcome {
    pub cleaned: DMatrix<f64>,
    /// Removed indices in removal order.
    pub zeroed: Vec<usize>,
    pub final_norm: f64,
    pub trace: Vec<CleanStep>,
}

fn zero_row_col(m: &mut DMatrix<f64>, i: usize) {
    m.row_mut(i).fill(0.0);
    m.column_mut(i).fill(0.0);
}

/// Zeroes rows/columns sampled by leading-singular-vector mass until
/// `‖M‖op < threshold_mult·√n`.
pub fn spectral_clean(
    m: &DMatrix<f64>,
    threshold_mult: f64,
    rng: &mut StreamRng,
) -> Result<CleanOutcome> {
    if !m.is_square() {
        return param(format!("cleaning needs a square matrix, got {:?}", m.shape()));
    }
    if !(threshold_mult > 0.0) {
        return param(format!("threshold multiplier must be positive, got {threshold_mult}"));
    }
    let n = m.nrows();
    let threshold = threshold_mult * (n as f64).sqrt();
    let mut work = m.clone();
    let mut zeroed = Vec::new();
    let mut trace = Vec::new();
    loop {
        let top = top_singular(&work)?;
        if top.sigma < threshold {
            return Ok(CleanOutcome {
                cleaned: work,
                zeroed,
                final_norm: top.sigma,
                trace,
            });
        }
        if zeroed.len() >= n {
            return Err(Error::Internal(format!(
                "cleaning exceeded {n} iterations with norm {} still above {threshold}",
                top.sigma
            )));
        }
        // sample i with probability (l_i² + r_i²)/2
        let draw: f64 = rng.random::<f64>();
        let mut acc = 0.0;
        let mut pick = None;
        let mut last_positive = None;
        for i in 0..n {
            let w = 0.5 * (top.left[i] * top.left[i] + top.right[i] * top.right[i]);
            if w > 0.0 {
                last_positive = Some(i);
            }
            acc += w;
            if draw < acc && w > 0.0 {
                pick = Some(i);
                break;
            }
        }
        // rounding can leave the total mass just below the draw
        let i = pick.or(last_positive).ok_or_else(|| {
            Error::Numerical("leading singular vectors carry no mass".into())
        })?;
        zero_row_col(&mut work, i);
        trace.push(CleanStep {
            iteration: zeroed.len(),
            top_singular_value: top.sigma,
            removed_index: i,
        });
        zeroed.push(i);
    }
}

/// Cleaned pair `(𝒜̂, ℬ̂)`; rows/columns in `s` (resp. `t`) are zero.
#[derive(Clone, Debug)]
pub struct CleanedPair {
    pub a_clean: DMatrix<f64>,
    pub b_clean: DMatrix<f64>,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub g_noise: DMatrix<f64>,
    pub h_noise: DMatrix<f64>,
    pub iters_a: usize,
    pub iters_b: usize,
    pub norm_a: f64,
    pub norm_b: f64,
    pub trace_a: Vec<CleanStep>,
    pub trace_b: Vec<CleanStep>,
}

impl CleanedPair {
    pub fn n(&self) -> usize {
        self.a_clean.nrows()
    }
}

/// Re-injects noise from `seed` and cleans both matrices.
///
/// The cleaning samplers use child streams of `seed`, so two observed pairs
/// cleaned with the same seed share `G`, `H` and the sampler state.
pub fn clean_pair(obs: &ObservedPair, seed: u64, threshold_mult: f64) -> Result<CleanedPair> {
    let re = reinject_noise(obs, seed)?;
    let mut rng_a = rng_from_seed(split_seed(seed, 100));
    let mut rng_b = rng_from_seed(split_seed(seed, 101));
    let ca = spectral_clean(&re.a_hat, threshold_mult, &mut rng_a)?;
    let cb = spectral_clean(&re.b_hat, threshold_mult, &mut rng_b)?;
    let mut s = ca.zeroed.clone();
    s.sort_unstable();
    let mut t = cb.zeroed.clone();
    t.sort_unstable();
    Ok(CleanedPair {
        iters_a: ca.zeroed.len(),
        iters_b: cb.zeroed.len(),
        norm_a: ca.final_norm,
        norm_b: cb.final_norm,
        a_clean: ca.cleaned,
        b_clean: cb.cleaned,
        s,
        t,
        g_noise: re.g,
        h_noise: re.h,
        trace_a: ca.trace,
        trace_b: cb.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::operator_norm;
    use crate::model::{corrupt, generate, PiMode, Strategy};

    #[test]
    fn zero_noise_scales_by_root_half() {
        let inst = generate(6, 0.5, PiMode::Identity, 1).unwrap();
        let obs = ObservedPair::clean(&inst);
        let z = DMatrix::zeros(6, 6);
        let re = reinject_with(&obs, z.clone(), z).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = inst.a[(i, j)] / 2f64.sqrt();
                assert!((re.a_hat[(i, j)] - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reinjected_variance_and_covariance() {
        let n = 2000;
        let inst = generate(n, 0.8, PiMode::UniformRandom, 12).unwrap();
        let obs = ObservedPair::clean(&inst);
        let re = reinject_noise(&obs, 99).unwrap();
        let mut sum_sq = 0.0;
        let mut cov = 0.0;
        let mut count = 0.0;
        for j in 0..n {
            for i in 0..n {
                if i == j {
                    continue;
                }
                let a = re.a_hat[(i, j)];
                let b = re.b_hat[(inst.pi_star.apply(i), inst.pi_star.apply(j))];
                sum_sq += a * a;
                cov += a * b;
                count += 1.0;
            }
        }
        let var = sum_sq / count;
        let cov = cov / count;
        assert!((var - 1.0).abs() <= 0.05, "variance {var}");
        assert!((cov - 0.4).abs() <= 0.05, "covariance {cov}");
        // the transform is not symmetric
        assert_ne!(re.a_hat[(1, 0)], re.a_hat[(0, 1)]);
        assert!((0..n).all(|i| re.a_hat[(i, i)] == 0.0));
    }

    #[test]
    fn small_norm_left_unchanged() {
        let n = 64;
        let m = DMatrix::<f64>::identity(n, n) * (5.0 * (n as f64).sqrt());
        let out = spectral_clean(&m, 10.0, &mut rng_from_seed(0)).unwrap();
        assert!(out.zeroed.is_empty());
        assert_eq!(out.cleaned, m);
    }

    #[test]
    fn two_by_two_needs_one_step() {
        let c = 20.0 * 2f64.sqrt();
        let m = DMatrix::from_row_slice(2, 2, &[0.0, c, c, 0.0]);
        let out = spectral_clean(&m, 10.0, &mut rng_from_seed(3)).unwrap();
        assert_eq!(out.zeroed.len(), 1);
        assert_eq!(out.cleaned, DMatrix::zeros(2, 2));
    }

    #[test]
    fn guard_and_zeroed_rows_hold() {
        let n = 300;
        let inst = generate(n, 0.8, PiMode::UniformRandom, 21).unwrap();
        let lambda = 30.0 * (n as f64).sqrt();
        let (obs, _) =
            corrupt(&inst, 0.02, Strategy::Rank1Spike { lambda: Some(lambda) }, 5).unwrap();
        let cp = clean_pair(&obs, 17, 10.0).unwrap();
        let bound = 10.0 * (n as f64).sqrt();
        assert!(operator_norm(&cp.a_clean).unwrap() < bound);
        assert!(operator_norm(&cp.b_clean).unwrap() < bound);
        assert!(!cp.s.is_empty());
        for &i in &cp.s {
            assert!(cp.a_clean.row(i).iter().all(|&x| x == 0.0));
            assert!(cp.a_clean.column(i).iter().all(|&x| x == 0.0));
        }
        for &i in &cp.t {
            assert!(cp.b_clean.row(i).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn zero_out_adversary_output_invariants() {
        let n = 250;
        let inst = generate(n, 0.8, PiMode::UniformRandom, 2).unwrap();
        let (obs, _) = corrupt(&inst, 0.05, Strategy::ZeroOut, 3).unwrap();
        let cp = clean_pair(&obs, 4, 10.0).unwrap();
        let bound = 10.0 * (n as f64).sqrt();
        assert!(cp.norm_a < bound && cp.norm_b < bound);
        assert!(operator_norm(&cp.a_clean).unwrap() <= bound);
    }

    #[test]
    fn non_square_rejected() {
        let m = DMatrix::<f64>::zeros(3, 4);
        assert!(spectral_clean(&m, 10.0, &mut rng_from_seed(0)).is_err());
    }
}
