//! Seeded refinement by thresholded co-neighborhood counts, and selection
//! among candidate permutations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::model::{ObservedPair, Permutation};
use crate::quadrature::adaptive_simpson;

pub const PSI_TOL: f64 = 1e-10;
const PSI_DEPTH: u32 = 60;
const PSI_UPPER: f64 = 40.0;

/// Upper tail of the standard normal.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// `α = P(X ≥ 1)`.
pub fn alpha() -> f64 {
    normal_tail(1.0)
}

/// `ψ(ρ) = P(X ≥ 1, Y ≥ 1)` for standard normals with correlation `ρ`.
pub fn psi(rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return param(format!("rho must lie in [0, 1], got {rho}"));
    }
    let s2 = 1.0 - rho * rho;
    if s2 <= 0.0 {
        return Ok(alpha());
    }
    let s = s2.sqrt();
    let density = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let f = |x: f64| density(x) * normal_tail((1.0 - rho * x) / s);
    // the conditional tail switches on near x = 1/ρ; split there
    let mid = if rho > 0.0 { (1.0 / rho).clamp(1.0, PSI_UPPER) } else { 1.0 };
    let left = if mid > 1.0 {
        adaptive_simpson(&f, 1.0, mid, PSI_TOL / 2.0, PSI_DEPTH)?
    } else {
        0.0
    };
    let right = adaptive_simpson(&f, mid, PSI_UPPER, PSI_TOL / 2.0, PSI_DEPTH)?;
    Ok(left + right)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineParams {
    pub alpha: f64,
    pub psi_rho: f64,
    /// `Δ = ψ(ρ) n / 10`.
    pub delta: f64,
    pub max_swaps: usize,
}

impl RefineParams {
    /// Defaults with `max_swaps = 10n`.
    pub fn new(rho: f64, n: usize) -> Result<Self> {
        let psi_rho = psi(rho)?;
        Ok(RefineParams {
            alpha: alpha(),
            psi_rho,
            delta: psi_rho * n as f64 / 10.0,
            max_swaps: 10 * n,
        })
    }
}

/// `1{M_{uw} ≥ 1}` as a 0/1 matrix.
pub fn indicator(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|x| if x >= 1.0 { 1.0 } else { 0.0 })
}

/// `N_π(u,v) = Σ_w (1{A'_{uw} ≥ 1} − α)(1{B'_{v,π(w)} ≥ 1} − α)`, summed directly.
pub fn neighborhood_stat(obs: &ObservedPair, pi: &Permutation, u: usize, v: usize, alpha: f64) -> f64 {
    let n = obs.n();
    (0..n)
        .map(|w| {
            let a = if obs.a_prime[(u, w)] >= 1.0 { 1.0 } else { 0.0 };
            let b = if obs.b_prime[(v, pi.apply(w))] >= 1.0 { 1.0 } else { 0.0 };
            (a - alpha) * (b - alpha)
        })
        .sum()
}

/// All `N_π(u,v)` at once, kept current under swaps.
///
/// `N = C − α(deg_A(u) + deg_B(v)) + nα²` with the integer count
/// `C[u,v] = Σ_w 1{A'_{uw} ≥ 1}·1{B'_{v,π(w)} ≥ 1}`.
#[derive(Clone, Debug)]
pub struct NeighborhoodTable {
    ia: DMatrix<f64>,
    ib: DMatrix<f64>,
    counts: DMatrix<f64>,
    deg_a: Vec<f64>,
    deg_b: Vec<f64>,
    alpha: f64,
    n: usize,
}

impl NeighborhoodTable {
    pub fn new(obs: &ObservedPair, pi: &Permutation, alpha: f64) -> Result<Self> {
        let n = obs.n();
        if pi.len() != n {
            return param(format!("permutation has size {}, expected {n}", pi.len()));
        }
        let ia = indicator(&obs.a_prime);
        let ib = indicator(&obs.b_prime);
        // ib_perm[v, w] = ib[v, π(w)]
        let ib_perm = DMatrix::from_fn(n, n, |v, w| ib[(v, pi.apply(w))]);
        let counts = &ia * ib_perm.transpose();
        let deg_a = ia.row_iter().map(|r| r.sum()).collect();
        let deg_b = ib.row_iter().map(|r| r.sum()).collect();
        Ok(NeighborhoodTable {
            ia,
            ib,
            counts,
            deg_a,
            deg_b,
            alpha,
            n,
        })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        let a = self.alpha;
        self.counts[(u, v)] - a * (self.deg_a[u] + self.deg_b[v]) + self.n as f64 * a * a
    }

    /// Update after `π(u)` moves from `old` to `v` and `π(u')` from `v` to `old`.
    fn apply_swap(&mut self, u: usize, u_prime: usize, v: usize, old: usize) {
        let n = self.n;
        let da: Vec<f64> = (0..n).map(|y| self.ia[(y, u)] - self.ia[(y, u_prime)]).collect();
        let db: Vec<f64> = (0..n).map(|x| self.ib[(x, v)] - self.ib[(x, old)]).collect();
        for x in 0..n {
            if db[x] == 0.0 {
                continue;
            }
            let mut col = self.counts.column_mut(x);
            for y in 0..n {
                col[y] += da[y] * db[x];
            }
        }
    }
}

/// Swap decision recorded at the time it was made.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwapRecord {
    pub u: usize,
    pub v: usize,
    /// `π̂⁻¹(v)` before the swap.
    pub u_prev: usize,
    /// `π̂(u)` before the swap.
    pub v_prev: usize,
    pub n_uv: f64,
    pub n_u_prev: f64,
    pub n_prev_v: f64,
}

/// First `(u, v)` in increasing scan order with `N(u,v) ≥ Δ`,
/// `N(u,π̂(u)) < Δ/10` and `N(π̂⁻¹(v),v) < Δ/10`.
pub fn find_swap(
    stat: impl Fn(usize, usize) -> f64,
    pi: &Permutation,
    inv: &Permutation,
    delta: f64,
) -> Option<SwapRecord> {
    let n = pi.len();
    let low = delta / 10.0;
    let col_ok: Vec<bool> = (0..n).map(|v| stat(inv.apply(v), v) < low).collect();
    for u in 0..n {
        let n_u_prev = stat(u, pi.apply(u));
        if !(n_u_prev < low) {
            continue;
        }
        for v in 0..n {
            if !col_ok[v] {
                continue;
            }
            let n_uv = stat(u, v);
            if n_uv >= delta {
                return Some(SwapRecord {
                    u,
                    v,
                    u_prev: inv.apply(v),
                    v_prev: pi.apply(u),
                    n_uv,
                    n_u_prev,
                    n_prev_v: stat(inv.apply(v), v),
                });
            }
        }
    }
    None
}

/// `π̂(u) := v` and `π̂(π̂⁻¹(v)) := old π̂(u)`.
pub fn apply_swap(pi: &mut Permutation, inv: &mut Permutation, u: usize, v: usize) {
    let u_prime = inv.apply(v);
    pi.swap_images(u, u_prime);
    *inv = pi.inverse();
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOutcome {
    pub pi: Permutation,
    pub swaps: Vec<SwapRecord>,
    pub truncated: bool,
}

/// Applies the swap rule until no pair qualifies or `max_swaps` is hit.
pub fn seeded_refine(obs: &ObservedPair, pi_tilde: &Permutation, params: &RefineParams) -> Result<RefineOutcome> {
    let mut pi = pi_tilde.clone();
    let mut inv = pi.inverse();
    let mut table = NeighborhoodTable::new(obs, &pi, params.alpha)?;
    let mut swaps = Vec::new();
    loop {
        let found = find_swap(|u, v| table.get(u, v), &pi, &inv, params.delta);
        let Some(rec) = found else {
            return Ok(RefineOutcome {
                pi,
                swaps,
                truncated: false,
            });
        };
        if swaps.len() >= params.max_swaps {
            return Ok(RefineOutcome {
                pi,
                swaps,
                truncated: true,
            });
        }
        table.apply_swap(rec.u, rec.u_prev, rec.v, rec.v_prev);
        apply_swap(&mut pi, &mut inv, rec.u, rec.v);
        if pi.apply(rec.u) != rec.v || pi.apply(rec.u_prev) != rec.v_prev {
            return Err(Error::Internal("swap did not produce the prescribed reassignment".into()));
        }
        swaps.push(rec);
    }
}

/// `Σ_{u<v} 1{A'_{uv} ≥ 1}·1{B'_{π(u)π(v)} ≥ 1}`.
pub fn selection_score(obs: &ObservedPair, pi: &Permutation) -> u64 {
    let n = obs.n();
    let mut total = 0u64;
    for v in 1..n {
        let pv = pi.apply(v);
        for u in 0..v {
            if obs.a_prime[(u, v)] >= 1.0 && obs.b_prime[(pi.apply(u), pv)] >= 1.0 {
                total += 1;
            }
        }
    }
    total
}

/// Index of the best-scoring candidate (first on ties) and all scores.
pub fn final_select(obs: &ObservedPair, candidates: &[Permutation]) -> Result<(usize, Vec<u64>)> {
    if candidates.is_empty() {
        return param("final selection needs at least one candidate");
    }
    let n = obs.n();
    if let Some(c) = candidates.iter().find(|c| c.len() != n) {
        return param(format!("candidate of size {} for n = {n}", c.len()));
    }
    let scores: Vec<u64> = candidates.iter().map(|c| selection_score(obs, c)).collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    Ok((best, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate, PiMode};
    use crate::rng::rng_from_seed;

    #[test]
    fn alpha_value_and_symmetry() {
        let a = alpha();
        assert!(a > 0.158 && a < 0.159);
        let lower = 0.5 * libm::erfc(1.0 / std::f64::consts::SQRT_2);
        assert!((normal_tail(-1.0) - (1.0 - lower)).abs() < 1e-12);
        assert!(normal_tail(2.0) < a);
    }

    #[test]
    fn psi_endpoints() {
        let a = alpha();
        assert!((psi(0.0).unwrap() - a * a).abs() < 1e-10);
        assert_eq!(psi(1.0).unwrap(), a);
        let near = psi(1.0 - 1e-9).unwrap();
        assert!(near <= a && a - near < 1e-4);
        assert!(psi(-0.1).is_err());
    }

    #[test]
    fn psi_bounds_and_monotone() {
        let a = alpha();
        let mut prev = 0.0;
        for k in 0..=20 {
            let r = k as f64 / 20.0;
            let p = psi(r).unwrap();
            assert!(p >= a * a - 1e-8 && p <= a + 1e-8);
            assert!(p >= prev - 1e-8);
            prev = p;
        }
    }

    #[test]
    fn row_below_threshold_collapses() {
        let inst = generate(40, 0.7, PiMode::UniformRandom, 4).unwrap();
        let mut obs = ObservedPair::clean(&inst);
        for w in 0..40 {
            obs.a_prime[(3, w)] = 0.5f64.min(obs.a_prime[(3, w)]);
            obs.a_prime[(w, 3)] = obs.a_prime[(3, w)];
        }
        let a = alpha();
        let pi = inst.pi_star.clone();
        for v in [0, 5, 17] {
            let deg = (0..40).filter(|&w| obs.b_prime[(v, w)] >= 1.0).count() as f64;
            let want = -a * (deg - a * 40.0);
            assert!((neighborhood_stat(&obs, &pi, 3, v, a) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn table_matches_direct_sum_through_swaps() {
        let n = 60;
        let inst = generate(n, 0.8, PiMode::UniformRandom, 9).unwrap();
        let obs = ObservedPair::clean(&inst);
        let a = alpha();
        let mut pi = Permutation::random(n, &mut rng_from_seed(1));
        let mut inv = pi.inverse();
        let mut table = NeighborhoodTable::new(&obs, &pi, a).unwrap();
        for (u, v) in [(3, 10), (7, 7), (0, 59), (20, 3)] {
            let u_prev = inv.apply(v);
            let old = pi.apply(u);
            table.apply_swap(u, u_prev, v, old);
            apply_swap(&mut pi, &mut inv, u, v);
            for x in (0..n).step_by(7) {
                for y in (0..n).step_by(5) {
                    let direct = neighborhood_stat(&obs, &pi, x, y, a);
                    assert!((table.get(x, y) - direct).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn handcrafted_swap_rule() {
        // π̂ = identity on 4 vertices; only (1, 2) qualifies
        let delta = 10.0;
        let table = [
            [0.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 12.0, 11.0],
            [0.0, 0.0, 0.5, 0.0],
            [0.0, 0.0, 0.0, 5.0],
        ];
        let mut pi = Permutation::identity(4);
        let mut inv = pi.inverse();
        let rec = find_swap(|u, v| table[u][v], &pi, &inv, delta).unwrap();
        assert_eq!((rec.u, rec.v, rec.u_prev, rec.v_prev), (1, 2, 2, 1));
        apply_swap(&mut pi, &mut inv, 1, 2);
        assert_eq!(pi.as_slice(), &[0, 2, 1, 3]);
        // (1, 3) fails because N(3, π̂(3)) = 5 ≥ Δ/10
        let none = find_swap(
            |u, v| if (u, v) == (1, 2) { 0.0 } else { table[u][v] },
            &Permutation::identity(4),
            &Permutation::identity(4),
            delta,
        );
        assert!(none.is_none());
    }

    #[test]
    fn selection_prefers_truth() {
        let inst = generate(200, 0.8, PiMode::UniformRandom, 6).unwrap();
        let obs = ObservedPair::clean(&inst);
        let mut rng = rng_from_seed(2);
        let mut cands = vec![Permutation::random(200, &mut rng), inst.pi_star.clone()];
        cands.push(Permutation::random(200, &mut rng));
        let (best, scores) = final_select(&obs, &cands).unwrap();
        assert_eq!(best, 1);
        assert!(scores.iter().all(|&s| s <= scores[1]));
        assert_eq!(final_select(&obs, &cands[..1]).unwrap().0, 0);
        assert!(final_select(&obs, &[]).is_err());
    }

    #[test]
    fn ties_go_to_first() {
        let inst = generate(30, 0.8, PiMode::Identity, 6).unwrap();
        let obs = ObservedPair::clean(&inst);
        let c = vec![inst.pi_star.clone(), inst.pi_star.clone()];
        assert_eq!(final_select(&obs, &c).unwrap().0, 0);
    }
}
