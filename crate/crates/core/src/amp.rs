//! Seeded message passing on the cleaned pair.
//!
//! Rows of the `A`-side iterates are indexed by `[n] ∖ 𝖵_𝚒` and rows of the
//! `B`-side iterates by `[n] ∖ 𝖵_𝚓`, both in increasing vertex order.

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::denoiser::Denoiser;
use crate::error::{param, Error, Result};
use crate::linalg::principal_submatrix;
use crate::model::Permutation;
use crate::preprocess::CleanedPair;
use crate::spectral::SpectralPlan;
use crate::rng::StreamRng;

/// Ordered seed tuples `(u₁, …, u_K)` and `(v₁, …, v_K)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPair {
    pub u_seq: Vec<usize>,
    pub v_seq: Vec<usize>,
    /// Whether `v_k = π*(u_k)` with all seeds outside the corrupted and
    /// cleaned sets; `None` when ground truth was not consulted.
    pub goodness: Option<bool>,
}

fn check_distinct(seq: &[usize], n: usize, side: &str) -> Result<()> {
    let mut seen = vec![false; n];
    for &x in seq {
        if x >= n {
            return param(format!("{side} seed {x} out of range for n = {n}"));
        }
        if seen[x] {
            return param(format!("{side} seed {x} repeated"));
        }
        seen[x] = true;
    }
    Ok(())
}

impl SeedPair {
    pub fn new(u_seq: Vec<usize>, v_seq: Vec<usize>, n: usize) -> Result<Self> {
        if u_seq.len() != v_seq.len() {
            return param(format!(
                "seed tuples differ in length: {} vs {}",
                u_seq.len(),
                v_seq.len()
            ));
        }
        if u_seq.is_empty() || u_seq.len() >= n {
            return param(format!("need 1 ≤ K₀ < n seeds, got {} with n = {n}", u_seq.len()));
        }
        check_distinct(&u_seq, n, "A-side")?;
        check_distinct(&v_seq, n, "B-side")?;
        Ok(SeedPair {
            u_seq,
            v_seq,
            goodness: None,
        })
    }

    pub fn len(&self) -> usize {
        self.u_seq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_seq.is_empty()
    }

    /// A good pair drawn from ground truth: `u` avoids `bad_a`, `π*(u)`
    /// avoids `bad_b`.
    pub fn oracle(
        pi_star: &Permutation,
        k0: usize,
        bad_a: &[usize],
        bad_b: &[usize],
        rng: &mut StreamRng,
    ) -> Result<Self> {
        let n = pi_star.len();
        let u_seq = eligible_sample(pi_star, k0, bad_a, bad_b, rng)?;
        let v_seq = u_seq.iter().map(|&u| pi_star.apply(u)).collect();
        let mut s = SeedPair::new(u_seq, v_seq, n)?;
        s.goodness = Some(true);
        Ok(s)
    }

    /// Same `u` as [`SeedPair::oracle`] would pick, with `v` drawn uniformly
    /// among tuples that miss `π*(u_k)` in every slot.
    pub fn bad(
        pi_star: &Permutation,
        k0: usize,
        bad_a: &[usize],
        bad_b: &[usize],
        rng: &mut StreamRng,
    ) -> Result<Self> {
        let n = pi_star.len();
        let u_seq = eligible_sample(pi_star, k0, bad_a, bad_b, rng)?;
        if n < 2 * k0 + 1 {
            return param(format!("n = {n} too small for a bad seed tuple of size {k0}"));
        }
        let v_seq = loop {
            let v: Vec<usize> = index::sample(rng, n, k0).into_vec();
            if v.iter().zip(&u_seq).all(|(&v, &u)| v != pi_star.apply(u)) {
                break v;
            }
        };
        let mut s = SeedPair::new(u_seq, v_seq, n)?;
        s.goodness = Some(false);
        Ok(s)
    }

    /// Ground-truth goodness given the corrupted/cleaned sets.
    pub fn is_good(&self, pi_star: &Permutation, bad_a: &[usize], bad_b: &[usize]) -> bool {
        self.u_seq.iter().zip(&self.v_seq).all(|(&u, &v)| {
            v == pi_star.apply(u) && !bad_a.contains(&u) && !bad_b.contains(&v)
        })
    }
}

fn eligible_sample(
    pi_star: &Permutation,
    k0: usize,
    bad_a: &[usize],
    bad_b: &[usize],
    rng: &mut StreamRng,
) -> Result<Vec<usize>> {
    let n = pi_star.len();
    let mut blocked_a = vec![false; n];
    bad_a.iter().for_each(|&i| blocked_a[i] = true);
    let mut blocked_b = vec![false; n];
    bad_b.iter().for_each(|&i| blocked_b[i] = true);
    let pool: Vec<usize> = (0..n)
        .filter(|&u| !blocked_a[u] && !blocked_b[pi_star.apply(u)])
        .collect();
    if pool.len() < k0 {
        return param(format!(
            "only {} eligible seed vertices, need {k0}",
            pool.len()
        ));
    }
    Ok(index::sample(rng, pool.len(), k0)
        .into_iter()
        .map(|i| pool[i])
        .collect())
}

/// Iterates `f, g` for round `t`, plus `h, ℓ` once the linear step ran.
#[derive(Clone, Debug)]
pub struct AmpIterate {
    pub t: usize,
    pub f: DMatrix<f64>,
    pub g: DMatrix<f64>,
    /// Zero columns until the linear step of round `t` ran.
    pub h: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub rows_a: Vec<usize>,
    pub rows_b: Vec<usize>,
}

/// `[n]` minus `seq`, increasing.
pub fn complement(n: usize, seq: &[usize]) -> Vec<usize> {
    let mut mask = vec![true; n];
    seq.iter().for_each(|&i| mask[i] = false);
    (0..n).filter(|&i| mask[i]).collect()
}

/// `f⁽⁰⁾[i,k] = φ(𝒜̂[i,u_k])`, `g⁽⁰⁾[i,k] = φ(ℬ̂[i,v_k])`.
pub fn init_iterate(cp: &CleanedPair, seeds: &SeedPair, den: &Denoiser) -> Result<AmpIterate> {
    let n = cp.n();
    SeedPair::new(seeds.u_seq.clone(), seeds.v_seq.clone(), n)?;
    let rows_a = complement(n, &seeds.u_seq);
    let rows_b = complement(n, &seeds.v_seq);
    let k = seeds.len();
    let f = DMatrix::from_fn(rows_a.len(), k, |i, c| {
        den.eval(cp.a_clean[(rows_a[i], seeds.u_seq[c])])
    });
    let g = DMatrix::from_fn(rows_b.len(), k, |i, c| {
        den.eval(cp.b_clean[(rows_b[i], seeds.v_seq[c])])
    });
    Ok(AmpIterate {
        t: 0,
        h: DMatrix::zeros(rows_a.len(), 0),
        l: DMatrix::zeros(rows_b.len(), 0),
        f,
        g,
        rows_a,
        rows_b,
    })
}

/// `(1/√n) · M_sub · f · Ξ`.
pub fn linear_step(m_sub: &DMatrix<f64>, f: &DMatrix<f64>, xi: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let fx = f * xi;
    (m_sub * fx) / (n as f64).sqrt()
}

fn finite_or_err(m: &DMatrix<f64>, what: &str, t: usize) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numerical(format!("non-finite entry in {what} at round {t}")))
    }
}

/// Submatrices `𝒜̂[rows_a, rows_a]` and `ℬ̂[rows_b, rows_b]`.
pub struct Operators {
    pub a_sub: DMatrix<f64>,
    pub b_sub: DMatrix<f64>,
    pub n: usize,
}

impl Operators {
    pub fn new(cp: &CleanedPair, it: &AmpIterate) -> Self {
        Operators {
            a_sub: principal_submatrix(&cp.a_clean, &it.rows_a),
            b_sub: principal_submatrix(&cp.b_clean, &it.rows_b),
            n: cp.n(),
        }
    }
}

/// Linear step with `Ξ`, then `f' = φ(hβ)`, `g' = φ(ℓβ)`.
pub fn amp_round(
    it: &AmpIterate,
    ops: &Operators,
    xi: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    den: &Denoiser,
) -> Result<AmpIterate> {
    if it.f.ncols() != xi.nrows() || xi.ncols() != beta.nrows() {
        return param(format!(
            "round {}: f has {} columns, Ξ is {:?}, β is {:?}",
            it.t,
            it.f.ncols(),
            xi.shape(),
            beta.shape()
        ));
    }
    let h = linear_step(&ops.a_sub, &it.f, xi, ops.n);
    let l = linear_step(&ops.b_sub, &it.g, xi, ops.n);
    finite_or_err(&h, "h", it.t)?;
    finite_or_err(&l, "ℓ", it.t)?;
    let f = (&h * beta).map(|x| den.eval(x));
    let g = (&l * beta).map(|x| den.eval(x));
    Ok(AmpIterate {
        t: it.t + 1,
        f,
        g,
        h: DMatrix::zeros(it.rows_a.len(), 0),
        l: DMatrix::zeros(it.rows_b.len(), 0),
        rows_a: it.rows_a.clone(),
        rows_b: it.rows_b.clone(),
    })
}

/// Empirical concentration of round `t` against `(Φ⁽ᵗ⁾, Ψ⁽ᵗ⁾)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundTelemetry {
    pub t: usize,
    pub k: usize,
    pub eps: f64,
    /// `‖fᵀf/n − Φ‖∞`.
    pub ff_gap: f64,
    /// `‖fᵀg/n − Ψ‖∞` with rows aligned by `π*`; `None` without ground truth.
    pub fg_gap: Option<f64>,
    /// `‖𝟙ᵀf/n‖∞`.
    pub mean_gap: f64,
    pub max_abs_f: f64,
}

fn sup_gap(m: &DMatrix<f64>, target: &DMatrix<f64>) -> f64 {
    m.iter()
        .zip(target.iter())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
}

/// `fᵀg` summed over vertices `i` with `i ∈ rows_a` and `π*(i) ∈ rows_b`.
pub fn aligned_cross(it: &AmpIterate, pi_star: &Permutation, n: usize) -> DMatrix<f64> {
    let mut pos_b = vec![usize::MAX; n];
    for (r, &v) in it.rows_b.iter().enumerate() {
        pos_b[v] = r;
    }
    let k = it.f.ncols();
    let mut out = DMatrix::<f64>::zeros(k, k);
    for (ra, &u) in it.rows_a.iter().enumerate() {
        let rb = pos_b[pi_star.apply(u)];
        if rb == usize::MAX {
            continue;
        }
        let fr = it.f.row(ra);
        let gr = it.g.row(rb);
        out += fr.transpose() * gr;
    }
    out
}

pub fn telemetry(
    it: &AmpIterate,
    phi: &DMatrix<f64>,
    psi: &DMatrix<f64>,
    eps: f64,
    n: usize,
    pi_star: Option<&Permutation>,
) -> RoundTelemetry {
    let nf = n as f64;
    let ff = it.f.transpose() * &it.f / nf;
    let fg_gap = pi_star.map(|p| sup_gap(&(aligned_cross(it, p, n) / nf), psi));
    let mean_gap = it
        .f
        .column_iter()
        .map(|c| (c.sum() / nf).abs())
        .fold(0.0, f64::max);
    RoundTelemetry {
        t: it.t,
        k: it.f.ncols(),
        eps,
        ff_gap: sup_gap(&ff, phi),
        fg_gap,
        mean_gap,
        max_abs_f: crate::linalg::max_abs(&it.f),
    }
}

/// Final iterate (with `h⁽ᵀ⁾`, `ℓ⁽ᵀ⁾`) and per-round telemetry.
#[derive(Clone, Debug)]
pub struct AmpRun {
    pub last: AmpIterate,
    pub telemetry: Vec<RoundTelemetry>,
}

/// Runs rounds `0..T` from the plan and the final linear step with `Ξ⁽ᵀ⁾`.
pub fn run_amp(
    cp: &CleanedPair,
    seeds: &SeedPair,
    plan: &SpectralPlan,
    den: &Denoiser,
    pi_star: Option<&Permutation>,
) -> Result<AmpRun> {
    if plan.matrices[0].k != seeds.len() {
        return param(format!(
            "plan starts at K₀ = {} but {} seeds were given",
            plan.matrices[0].k,
            seeds.len()
        ));
    }
    let n = cp.n();
    let mut it = init_iterate(cp, seeds, den)?;
    let ops = Operators::new(cp, &it);
    let mut tel = Vec::with_capacity(plan.rounds() + 1);
    for step in &plan.steps {
        let rm = &plan.matrices[it.t];
        tel.push(telemetry(&it, &rm.phi, &rm.psi, rm.eps, n, pi_star));
        it = amp_round(&it, &ops, &step.xi, &step.beta, den)?;
    }
    let rm = plan.final_round();
    tel.push(telemetry(&it, &rm.phi, &rm.psi, rm.eps, n, pi_star));
    it.h = linear_step(&ops.a_sub, &it.f, &plan.final_xi, n);
    it.l = linear_step(&ops.b_sub, &it.g, &plan.final_xi, n);
    finite_or_err(&it.h, "h", it.t)?;
    finite_or_err(&it.l, "ℓ", it.t)?;
    Ok(AmpRun {
        last: it,
        telemetry: tel,
    })
}
