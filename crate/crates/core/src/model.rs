//! Correlated Gaussian Wigner pairs and principal-minor corruption.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::rng::{rng_from_seed, StreamRng};

/// A bijection of `{0, …, n-1}`; `p[i]` is the image of `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn random(n: usize, rng: &mut StreamRng) -> Self {
        let mut v: Vec<usize> = (0..n).collect();
        v.shuffle(rng);
        Permutation(v)
    }

    pub fn from_vec(v: Vec<usize>) -> Result<Self> {
        let n = v.len();
        let mut seen = vec![false; n];
        for &x in &v {
            if x >= n || seen[x] {
                return param(format!("not a permutation of 0..{n}: {v:?}"));
            }
            seen[x] = true;
        }
        Ok(Permutation(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    #[inline]
    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    /// Exchanges the images of `a` and `b`.
    pub fn swap_images(&mut self, a: usize, b: usize) {
        self.0.swap(a, b);
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Permutation::from_vec(v)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.0
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PiMode {
    Identity,
    #[default]
    UniformRandom,
}

impl FromStr for PiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(PiMode::Identity),
            "uniform-random" => Ok(PiMode::UniformRandom),
            _ => param(format!("unknown permutation mode {s:?}")),
        }
    }
}

/// Ground-truth pair `(A, B)` with `B[π*(i), π*(j)] = ρ A[i,j] + √(1-ρ²) Z[i,j]`.
#[derive(Clone, Debug)]
pub struct CorrelatedInstance {
    pub n: usize,
    pub rho: f64,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub pi_star: Permutation,
    pub rng_seed: u64,
}

/// Draws a correlated pair. Deterministic in `seed`.
pub fn generate(n: usize, rho: f64, pi_mode: PiMode, seed: u64) -> Result<CorrelatedInstance> {
    if n < 2 {
        return param(format!("n must be at least 2, got {n}"));
    }
    if !(0.0..=1.0).contains(&rho) {
        return param(format!("rho must lie in [0, 1], got {rho}"));
    }
    let mut rng = rng_from_seed(seed);
    let pi_star = match pi_mode {
        PiMode::Identity => Permutation::identity(n),
        PiMode::UniformRandom => Permutation::random(n, &mut rng),
    };
    let noise_scale = (1.0 - rho * rho).sqrt();
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        for j in 0..i {
            let x: f64 = rng.sample(StandardNormal);
            let z: f64 = rng.sample(StandardNormal);
            let y = rho * x + noise_scale * z;
            a[(i, j)] = x;
            a[(j, i)] = x;
            let (pi, pj) = (pi_star.apply(i), pi_star.apply(j));
            b[(pi, pj)] = y;
            b[(pj, pi)] = y;
        }
    }
    Ok(CorrelatedInstance {
        n,
        rho,
        a,
        b,
        pi_star,
        rng_seed: seed,
    })
}

/// Adversary used to fill a corrupted principal minor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Strategy {
    /// `c (J - I)` on the minor.
    PlantedCliqueWeight { weight: f64 },
    /// `λ v vᵀ` on the minor with a random unit `v`; `None` means `20√n`.
    Rank1Spike { lambda: Option<f64> },
    /// `-A` on the minor.
    ZeroOut,
    /// `-2A` on the minor.
    AdaptiveSignFlip,
}

impl Strategy {
    pub const TAGS: [&'static str; 4] = [
        "planted-clique-weight",
        "rank1-spike",
        "zero-out",
        "adaptive-sign-flip",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Strategy::PlantedCliqueWeight { .. } => Self::TAGS[0],
            Strategy::Rank1Spike { .. } => Self::TAGS[1],
            Strategy::ZeroOut => Self::TAGS[2],
            Strategy::AdaptiveSignFlip => Self::TAGS[3],
        }
    }

    /// Parses a tag with the default magnitude.
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "planted-clique-weight" => Ok(Strategy::PlantedCliqueWeight { weight: 5.0 }),
            "rank1-spike" => Ok(Strategy::Rank1Spike { lambda: None }),
            "zero-out" => Ok(Strategy::ZeroOut),
            "adaptive-sign-flip" => Ok(Strategy::AdaptiveSignFlip),
            _ => param(format!(
                "unknown corruption strategy {tag:?} (expected one of {:?})",
                Self::TAGS
            )),
        }
    }

    /// Replaces the magnitude parameter where the strategy has one.
    pub fn with_magnitude(self, magnitude: Option<f64>) -> Self {
        match (self, magnitude) {
            (Strategy::PlantedCliqueWeight { .. }, Some(w)) => {
                Strategy::PlantedCliqueWeight { weight: w }
            }
            (Strategy::Rank1Spike { .. }, Some(l)) => Strategy::Rank1Spike { lambda: Some(l) },
            (s, _) => s,
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::from_tag(s)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Perturbations `E` (on `Q×Q`) and `F` (on `R×R`).
///
/// Only the principal blocks are stored: `e_block[(a, b)]` is `E[q[a], q[b]]`.
#[derive(Clone, Debug)]
pub struct CorruptionPlan {
    pub q: Vec<usize>,
    pub r: Vec<usize>,
    pub e_block: DMatrix<f64>,
    pub f_block: DMatrix<f64>,
    pub strategy: Strategy,
    pub epsilon: f64,
}

impl CorruptionPlan {
    /// Dense `E`.
    pub fn e_dense(&self, n: usize) -> DMatrix<f64> {
        scatter(n, &self.q, &self.e_block)
    }

    /// Dense `F`.
    pub fn f_dense(&self, n: usize) -> DMatrix<f64> {
        scatter(n, &self.r, &self.f_block)
    }
}

fn scatter(n: usize, idx: &[usize], block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::<f64>::zeros(n, n);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            m[(i, j)] = block[(a, b)];
        }
    }
    m
}

/// The matrices the algorithm actually sees: `A' = A + E`, `B' = B + F`.
#[derive(Clone, Debug)]
pub struct ObservedPair {
    pub a_prime: DMatrix<f64>,
    pub b_prime: DMatrix<f64>,
}

impl ObservedPair {
    pub fn n(&self) -> usize {
        self.a_prime.nrows()
    }

    /// Uncorrupted view of an instance.
    pub fn clean(inst: &CorrelatedInstance) -> Self {
        ObservedPair {
            a_prime: inst.a.clone(),
            b_prime: inst.b.clone(),
        }
    }
}

/// `⌈εn⌉`, ignoring floating-point dust in the product.
pub fn corrupted_count(epsilon: f64, n: usize) -> usize {
    let x = epsilon * n as f64;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn adversary_block(
    strategy: Strategy,
    m: &DMatrix<f64>,
    idx: &[usize],
    rng: &mut StreamRng,
) -> DMatrix<f64> {
    let k = idx.len();
    let n = m.nrows();
    let mut block = match strategy {
        Strategy::PlantedCliqueWeight { weight } => DMatrix::from_element(k, k, weight),
        Strategy::Rank1Spike { lambda } => {
            let lambda = lambda.unwrap_or(20.0 * (n as f64).sqrt());
            let mut v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
            }
            DMatrix::from_fn(k, k, |a, b| lambda * (v[a] * v[b]))
        }
        Strategy::ZeroOut => DMatrix::from_fn(k, k, |a, b| -m[(idx[a], idx[b])]),
        Strategy::AdaptiveSignFlip => DMatrix::from_fn(k, k, |a, b| -2.0 * m[(idx[a], idx[b])]),
    };
    // diagonals stay zero
    block.fill_diagonal(0.0);
    block
}

/// Applies `strategy` to random principal minors of size `⌈εn⌉` in each matrix.
pub fn corrupt(
    inst: &CorrelatedInstance,
    epsilon: f64,
    strategy: Strategy,
    seed: u64,
) -> Result<(ObservedPair, CorruptionPlan)> {
    if !(0.0..1.0).contains(&epsilon) {
        return param(format!("epsilon must lie in [0, 1), got {epsilon}"));
    }
    let n = inst.n;
    let k = corrupted_count(epsilon, n);
    if k > n {
        return param(format!("corrupted set size {k} exceeds n = {n}"));
    }
    let mut rng = rng_from_seed(seed);
    let mut q = index::sample(&mut rng, n, k).into_vec();
    q.sort_unstable();
    let mut r = index::sample(&mut rng, n, k).into_vec();
    r.sort_unstable();
    let e_block = adversary_block(strategy, &inst.a, &q, &mut rng);
    let f_block = adversary_block(strategy, &inst.b, &r, &mut rng);

    let mut a_prime = inst.a.clone();
    for (x, &i) in q.iter().enumerate() {
        for (y, &j) in q.iter().enumerate() {
            a_prime[(i, j)] += e_block[(x, y)];
        }
    }
    let mut b_prime = inst.b.clone();
    for (x, &i) in r.iter().enumerate() {
        for (y, &j) in r.iter().enumerate() {
            b_prime[(i, j)] += f_block[(x, y)];
        }
    }
    Ok((
        ObservedPair { a_prime, b_prime },
        CorruptionPlan {
            q,
            r,
            e_block,
            f_block,
            strategy,
            epsilon,
        },
    ))
}

/// Fraction of vertices on which `pi_hat` agrees with `pi_star`.
pub fn overlap(pi_hat: &Permutation, pi_star: &Permutation) -> Result<f64> {
    if pi_hat.len() != pi_star.len() {
        return param(format!(
            "permutation sizes differ: {} vs {}",
            pi_hat.len(),
            pi_star.len()
        ));
    }
    if pi_hat.is_empty() {
        return Ok(1.0);
    }
    let agree = pi_hat
        .as_slice()
        .iter()
        .zip(pi_star.as_slice())
        .filter(|(a, b)| a == b)
        .count();
    Ok(agree as f64 / pi_hat.len() as f64)
}
