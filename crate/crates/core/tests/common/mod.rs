#![allow(dead_code)]

use nalgebra::DMatrix;
use wigmatch::amp::{run_amp, SeedPair};
use wigmatch::assign::{build_scores, AssignmentProblem};
use wigmatch::denoiser::{build_schedule, make_denoiser, Denoiser, ScheduleMode};
use wigmatch::model::{generate, CorrelatedInstance, ObservedPair, Permutation, PiMode};
use wigmatch::preprocess::{clean_pair, CleanedPair, DEFAULT_THRESHOLD_MULT};
use wigmatch::rng::{rng_from_seed, StreamSeeds};
use wigmatch::spectral::{build_plan, SpectralPlan, DEFAULT_DIVISOR, DEFAULT_MAX_RESAMPLES};

pub struct CleanSetup {
    pub inst: CorrelatedInstance,
    pub obs: ObservedPair,
    pub cp: CleanedPair,
    pub den: Denoiser,
}

pub fn clean_setup(n: usize, rho: f64, master: u64) -> CleanSetup {
    let seeds = StreamSeeds::from_master(master);
    let inst = generate(n, rho, PiMode::UniformRandom, seeds.instance).unwrap();
    let obs = ObservedPair::clean(&inst);
    let cp = clean_pair(&obs, seeds.noise, DEFAULT_THRESHOLD_MULT).unwrap();
    CleanSetup {
        inst,
        obs,
        cp,
        den: make_denoiser(1.0).unwrap(),
    }
}

pub fn good_seeds(s: &CleanSetup, k0: usize, seed: u64) -> SeedPair {
    SeedPair::oracle(&s.inst.pi_star, k0, &s.cp.s, &s.cp.t, &mut rng_from_seed(seed)).unwrap()
}

pub fn bad_seeds(s: &CleanSetup, k0: usize, seed: u64) -> SeedPair {
    SeedPair::bad(&s.inst.pi_star, k0, &s.cp.s, &s.cp.t, &mut rng_from_seed(seed)).unwrap()
}

/// Plan with `final_round` rounds at `ρ`, `K₀`, default divisor.
pub fn plan(rho: f64, n: usize, k0: usize, final_round: usize, den: &Denoiser, seed: u64) -> wigmatch::Result<SpectralPlan> {
    let sched = build_schedule(rho, n, k0, ScheduleMode::Practical { gamma: None }, den, DEFAULT_DIVISOR)?;
    build_plan(&sched, den, final_round, DEFAULT_MAX_RESAMPLES, &mut rng_from_seed(seed))
}

pub fn final_scores(s: &CleanSetup, seeds: &SeedPair, plan: &SpectralPlan) -> AssignmentProblem {
    let run = run_amp(&s.cp, seeds, plan, &s.den, Some(&s.inst.pi_star)).unwrap();
    build_scores(&run.last).unwrap()
}

/// Column of each row's true partner, if it is among the columns.
pub fn true_columns(p: &AssignmentProblem, pi: &Permutation) -> Vec<Option<usize>> {
    let mut pos = vec![usize::MAX; pi.len()];
    for (c, &v) in p.col_labels.iter().enumerate() {
        pos[v] = c;
    }
    p.row_labels
        .iter()
        .map(|&u| Some(pos[pi.apply(u)]).filter(|&c| c != usize::MAX))
        .collect()
}

/// Fraction of rows whose true-partner score beats every other entry of the row.
pub fn row_dominance(p: &AssignmentProblem, pi: &Permutation) -> f64 {
    let cols = true_columns(p, pi);
    let mut wins = 0usize;
    for (r, c) in cols.iter().enumerate() {
        let Some(c) = *c else { continue };
        let d = p.score[(r, c)];
        if (0..p.score.ncols()).all(|j| j == c || p.score[(r, j)] < d) {
            wins += 1;
        }
    }
    wins as f64 / cols.len() as f64
}

/// `(mean true-partner score, mean |other score|)`.
pub fn diag_offdiag(p: &AssignmentProblem, pi: &Permutation) -> (f64, f64) {
    let cols = true_columns(p, pi);
    let (mut d, mut nd) = (0.0, 0usize);
    let mut diag_abs = 0.0;
    for (r, c) in cols.iter().enumerate() {
        if let Some(c) = *c {
            d += p.score[(r, c)];
            diag_abs += p.score[(r, c)].abs();
            nd += 1;
        }
    }
    let total: f64 = p.score.iter().map(|x| x.abs()).sum();
    (d / nd as f64, (total - diag_abs) / (p.score.len() - nd) as f64)
}

pub fn sup_norm(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// `π* ∘ τ` with `count` disjoint random transpositions `τ`.
pub fn perturb(pi: &Permutation, count: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..pi.len()).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut v = pi.as_slice().to_vec();
    for k in 0..count {
        v.swap(idx[2 * k], idx[2 * k + 1]);
    }
    Permutation::from_vec(v).unwrap()
}

pub fn pass_line(id: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {id:>2} [{}] {name}: {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}
