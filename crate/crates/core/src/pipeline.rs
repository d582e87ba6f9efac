//! End-to-end runs, repeated trials and parameter sweeps.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amp::{run_amp, RoundTelemetry, SeedPair};
use crate::assign::{assemble_pi, assignment_value, build_scores, solve_lap};
use crate::denoiser::{
    build_schedule, make_denoiser, paper_k0_bound, phi_map, phi_second_deriv_at_zero, Denoiser,
    Schedule, ScheduleMode, DEFAULT_BANDWIDTH, SUP_BOUND,
};
use crate::error::{param, Error, Result};
use crate::model::{corrupt, generate, overlap, ObservedPair, Permutation, PiMode, Strategy};
use crate::preprocess::{clean_pair, CleanedPair, DEFAULT_THRESHOLD_MULT};
use crate::refine::{alpha, final_select, psi, seeded_refine, RefineParams};
use crate::rng::{rng_from_seed, split_seed, StreamSeeds};
use crate::spectral::{build_plan, SpectralPlan, StepReport, XiCheck, DEFAULT_DIVISOR, DEFAULT_MAX_RESAMPLES};

pub const SCHEMA_VERSION: u32 = 1;

/// Largest `n` and `K₀` for exhaustive seed enumeration.
pub const TINY_MAX_N: usize = 12;
pub const TINY_MAX_K0: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedMode {
    /// Seed pairs drawn from ground truth.
    OracleSeed,
    /// Every ordered pair of `K₀`-tuples.
    TinyEnumeration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Practical,
    PaperConstants,
}

fn default_n() -> usize {
    1000
}
fn default_rho() -> f64 {
    0.8
}
fn default_strategy() -> String {
    "rank1-spike".into()
}
fn default_k0() -> usize {
    24
}
fn default_min_rounds() -> usize {
    2
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_divisor() -> usize {
    DEFAULT_DIVISOR
}
fn default_max_resamples() -> usize {
    DEFAULT_MAX_RESAMPLES
}
fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD_MULT
}
fn default_pi_mode() -> String {
    "uniform-random".into()
}
fn default_one() -> usize {
    1
}
fn default_mode() -> SeedMode {
    SeedMode::OracleSeed
}
fn default_schedule() -> ScheduleKind {
    ScheduleKind::Practical
}

/// Flat run configuration; every key has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default)]
    pub epsilon: f64,
    /// Adversary tag: planted-clique-weight, rank1-spike, zero-out, adaptive-sign-flip.
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// Clique weight or spike strength; strategy default when absent.
    #[serde(default)]
    pub magnitude: Option<f64>,
    #[serde(default = "default_k0")]
    pub k0: usize,
    /// Round-size growth `γ`; `4/K₀` when absent.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default = "default_min_rounds")]
    pub min_rounds: usize,
    #[serde(default = "default_bandwidth")]
    pub bandwidth: f64,
    #[serde(default = "default_divisor")]
    pub divisor: usize,
    #[serde(default = "default_max_resamples")]
    pub max_resamples: usize,
    #[serde(default = "default_threshold")]
    pub threshold_mult: f64,
    #[serde(default = "default_pi_mode")]
    pub pi_mode: String,
    #[serde(default = "default_mode")]
    pub mode: SeedMode,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub instance_seed: Option<u64>,
    #[serde(default)]
    pub noise_seed: Option<u64>,
    #[serde(default)]
    pub beta_seed: Option<u64>,
    #[serde(default)]
    pub corruption_seed: Option<u64>,
    /// Ground-truth seed pairs per run (oracle mode).
    #[serde(default = "default_one")]
    pub good_seed_pairs: usize,
    /// Negative-control seed pairs per run (oracle mode).
    #[serde(default)]
    pub bad_seed_pairs: usize,
    #[serde(default = "default_one")]
    pub trials: usize,
    /// JSON manifest path (run) or CSV path (sweep).
    #[serde(default)]
    pub output: Option<String>,
    /// Binary instance dump path.
    #[serde(default)]
    pub dump: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        toml_like_defaults()
    }
}

fn toml_like_defaults() -> RunConfig {
    RunConfig {
        n: default_n(),
        rho: default_rho(),
        epsilon: 0.0,
        strategy: default_strategy(),
        magnitude: None,
        k0: default_k0(),
        gamma: None,
        min_rounds: default_min_rounds(),
        bandwidth: default_bandwidth(),
        divisor: default_divisor(),
        max_resamples: default_max_resamples(),
        threshold_mult: default_threshold(),
        pi_mode: default_pi_mode(),
        mode: default_mode(),
        schedule: default_schedule(),
        seed: 0,
        instance_seed: None,
        noise_seed: None,
        beta_seed: None,
        corruption_seed: None,
        good_seed_pairs: 1,
        bad_seed_pairs: 0,
        trials: 1,
        output: None,
        dump: None,
    }
}

impl RunConfig {
    pub fn strategy(&self) -> Result<Strategy> {
        Ok(Strategy::from_tag(&self.strategy)?.with_magnitude(self.magnitude))
    }

    pub fn pi_mode(&self) -> Result<PiMode> {
        self.pi_mode.parse()
    }

    pub fn schedule_mode(&self) -> ScheduleMode {
        match self.schedule {
            ScheduleKind::Practical => ScheduleMode::Practical { gamma: self.gamma },
            ScheduleKind::PaperConstants => ScheduleMode::PaperConstants,
        }
    }

    /// Stream seeds from `seed`, with per-stream overrides applied.
    pub fn stream_seeds(&self) -> StreamSeeds {
        let mut s = StreamSeeds::from_master(self.seed);
        if let Some(x) = self.instance_seed {
            s.instance = x;
        }
        if let Some(x) = self.noise_seed {
            s.noise = x;
        }
        if let Some(x) = self.beta_seed {
            s.beta = x;
        }
        if let Some(x) = self.corruption_seed {
            s.corruption = x;
        }
        s
    }

    /// Checks every precondition that does not need data.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return param(format!("n must be at least 2, got {}", self.n));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return param(format!("rho must lie in (0, 1], got {}", self.rho));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return param(format!("epsilon must lie in [0, 1), got {}", self.epsilon));
        }
        self.strategy()?;
        self.pi_mode()?;
        if self.divisor == 0 {
            return param("divisor must be positive");
        }
        if self.k0 < self.divisor {
            return param(format!(
                "k0 = {} must be at least the divisor {}",
                self.k0, self.divisor
            ));
        }
        if self.k0 >= self.n {
            return param(format!("k0 = {} must be below n = {}", self.k0, self.n));
        }
        if !(self.threshold_mult > 0.0) {
            return param("threshold_mult must be positive");
        }
        if self.trials == 0 {
            return param("trials must be positive");
        }
        match self.mode {
            SeedMode::OracleSeed => {
                if self.good_seed_pairs + self.bad_seed_pairs == 0 {
                    return param("at least one seed pair is required");
                }
            }
            SeedMode::TinyEnumeration => {
                if self.n > TINY_MAX_N || self.k0 > TINY_MAX_K0 {
                    return param(format!(
                        "tiny enumeration needs n ≤ {TINY_MAX_N} and k0 ≤ {TINY_MAX_K0}, got n = {}, k0 = {}",
                        self.n, self.k0
                    ));
                }
            }
        }
        make_denoiser(self.bandwidth)?;
        Ok(())
    }

    /// Copy with `seed` set for trial `index`.
    pub fn for_trial(&self, index: usize) -> RunConfig {
        let mut c = self.clone();
        c.seed = trial_seed(self.seed, index);
        c.trials = 1;
        c
    }
}

/// Master seed of trial `index`; trial 0 keeps the base seed.
pub fn trial_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningSummary {
    pub iters_a: usize,
    pub iters_b: usize,
    pub norm_a: f64,
    pub norm_b: f64,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedPairRecord {
    pub u_seq: Vec<usize>,
    pub v_seq: Vec<usize>,
    pub goodness: Option<bool>,
    pub lap_objective: f64,
    pub mean_diag_score: Option<f64>,
    pub mean_abs_offdiag_score: Option<f64>,
    pub post_lap_overlap: f64,
    pub post_refine_overlap: f64,
    pub swaps: usize,
    pub swap_trace: Vec<(usize, usize)>,
    pub truncated: bool,
    pub selection_score: u64,
    pub telemetry: Vec<RoundTelemetry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub config: RunConfig,
    pub seeds: StreamSeeds,
    pub status: String,
    pub failure_stage: Option<String>,
    pub error_kind: Option<String>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub schedule: Option<Schedule>,
    pub final_round: Option<usize>,
    pub corrupted_a: Vec<usize>,
    pub corrupted_b: Vec<usize>,
    pub cleaning: Option<CleaningSummary>,
    pub spectral_rounds: Vec<StepReport>,
    pub realized_eps: Vec<f64>,
    pub final_xi_check: Option<XiCheck>,
    pub seed_pairs: Vec<SeedPairRecord>,
    pub selected: Option<usize>,
    /// Overlaps of the first ground-truth pair, or of the first pair.
    pub post_lap_overlap: Option<f64>,
    pub post_refine_overlap: Option<f64>,
    pub final_overlap: Option<f64>,
    pub assertions: Vec<AssertionResult>,
    pub timings: BTreeMap<String, f64>,
}

impl RunRecord {
    fn new(cfg: &RunConfig) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            seeds: cfg.stream_seeds(),
            status: "ok".into(),
            failure_stage: None,
            error_kind: None,
            error: None,
            exit_code: 0,
            schedule: None,
            final_round: None,
            corrupted_a: Vec::new(),
            corrupted_b: Vec::new(),
            cleaning: None,
            spectral_rounds: Vec::new(),
            realized_eps: Vec::new(),
            final_xi_check: None,
            seed_pairs: Vec::new(),
            selected: None,
            post_lap_overlap: None,
            post_refine_overlap: None,
            final_overlap: None,
            assertions: Vec::new(),
            timings: BTreeMap::new(),
        }
    }

    fn fail(&mut self, stage: &str, e: &Error) {
        self.status = "error".into();
        self.failure_stage = Some(stage.into());
        self.error_kind = Some(e.kind().into());
        self.error = Some(e.to_string());
        self.exit_code = e.exit_code();
    }

    fn assert(&mut self, name: &str, passed: bool, detail: String) {
        self.assertions.push(AssertionResult {
            name: name.into(),
            passed,
            detail,
        });
    }

    pub fn is_ok(&self) -> bool {
        self.exit_code == 0
    }

    pub fn assertions_pass(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

/// Everything a run computes before the per-seed-pair stage.
pub struct Prepared {
    pub denoiser: Denoiser,
    pub schedule: Schedule,
    pub pi_star: Permutation,
    pub obs: ObservedPair,
    pub cleaned: CleanedPair,
    pub q: Vec<usize>,
    pub r: Vec<usize>,
}

fn timed<T>(rec: &mut RunRecord, stage: &str, f: impl FnOnce() -> Result<T>) -> std::result::Result<T, ()> {
    let start = Instant::now();
    let out = f();
    rec.timings.insert(stage.into(), start.elapsed().as_secs_f64());
    out.map_err(|e| rec.fail(stage, &e))
}

fn union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut v: Vec<usize> = a.iter().chain(b).copied().collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// All ordered `k`-tuples of distinct elements of `[n]`.
pub fn ordered_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for x in 0..n {
            if !cur.contains(&x) {
                cur.push(x);
                rec(n, k, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn seed_pairs(cfg: &RunConfig, prep: &Prepared, seeds: &StreamSeeds) -> Result<Vec<SeedPair>> {
    let n = cfg.n;
    let bad_a = union(&prep.q, &prep.cleaned.s);
    let bad_b = union(&prep.r, &prep.cleaned.t);
    match cfg.mode {
        SeedMode::OracleSeed => {
            let mut rng = rng_from_seed(split_seed(seeds.instance, 200));
            let mut out = Vec::new();
            for _ in 0..cfg.good_seed_pairs {
                out.push(SeedPair::oracle(&prep.pi_star, cfg.k0, &bad_a, &bad_b, &mut rng)?);
            }
            for _ in 0..cfg.bad_seed_pairs {
                out.push(SeedPair::bad(&prep.pi_star, cfg.k0, &bad_a, &bad_b, &mut rng)?);
            }
            Ok(out)
        }
        SeedMode::TinyEnumeration => {
            let tuples = ordered_tuples(n, cfg.k0);
            let mut out = Vec::with_capacity(tuples.len() * tuples.len());
            for u in &tuples {
                for v in &tuples {
                    let mut s = SeedPair::new(u.clone(), v.clone(), n)?;
                    s.goodness = Some(s.is_good(&prep.pi_star, &bad_a, &bad_b));
                    out.push(s);
                }
            }
            Ok(out)
        }
    }
}

/// Generates, corrupts and cleans according to `cfg`.
pub fn prepare(cfg: &RunConfig, seeds: &StreamSeeds) -> Result<Prepared> {
    let denoiser = make_denoiser(cfg.bandwidth)?;
    let schedule = build_schedule(cfg.rho, cfg.n, cfg.k0, cfg.schedule_mode(), &denoiser, cfg.divisor)?;
    let inst = generate(cfg.n, cfg.rho, cfg.pi_mode()?, seeds.instance)?;
    let (obs, plan) = corrupt(&inst, cfg.epsilon, cfg.strategy()?, seeds.corruption)?;
    let cleaned = clean_pair(&obs, seeds.noise, cfg.threshold_mult)?;
    Ok(Prepared {
        denoiser,
        schedule,
        pi_star: inst.pi_star,
        obs,
        cleaned,
        q: plan.q,
        r: plan.r,
    })
}

/// The spectral plan for `cfg`, drawn from the beta stream.
pub fn spectral_plan(cfg: &RunConfig, sched: &Schedule, den: &Denoiser, beta_seed: u64) -> Result<SpectralPlan> {
    let t_final = sched.final_round(cfg.min_rounds);
    build_plan(sched, den, t_final, cfg.max_resamples, &mut rng_from_seed(beta_seed))
}

struct PairResult {
    record: SeedPairRecord,
    refined: Permutation,
}

fn score_separation(score: &DMatrix<f64>, rows: &[usize], cols: &[usize], pi: &Permutation) -> (Option<f64>, Option<f64>) {
    let mut pos = vec![usize::MAX; pi.len()];
    for (c, &v) in cols.iter().enumerate() {
        pos[v] = c;
    }
    let (mut diag, mut nd) = (0.0, 0usize);
    for (r, &u) in rows.iter().enumerate() {
        let c = pos[pi.apply(u)];
        if c != usize::MAX {
            diag += score[(r, c)];
            nd += 1;
        }
    }
    let total_abs: f64 = score.iter().map(|x| x.abs()).sum();
    let m = score.len();
    if nd == 0 || m <= nd {
        return (None, None);
    }
    let diag_abs: f64 = rows
        .iter()
        .enumerate()
        .filter_map(|(r, &u)| {
            let c = pos[pi.apply(u)];
            (c != usize::MAX).then(|| score[(r, c)].abs())
        })
        .sum();
    (Some(diag / nd as f64), Some((total_abs - diag_abs) / (m - nd) as f64))
}

fn run_seed_pair(
    prep: &Prepared,
    plan: &SpectralPlan,
    seeds: &SeedPair,
    params: &RefineParams,
) -> Result<PairResult> {
    let amp = run_amp(&prep.cleaned, seeds, plan, &prep.denoiser, Some(&prep.pi_star))?;
    let problem = build_scores(&amp.last)?;
    let sigma = solve_lap(&problem)?;
    let lap_objective = assignment_value(&problem.score, &sigma);
    let pi_lap = assemble_pi(seeds, &problem, &sigma)?;
    let (mean_diag_score, mean_abs_offdiag_score) =
        score_separation(&problem.score, &problem.row_labels, &problem.col_labels, &prep.pi_star);
    let refined = seeded_refine(&prep.obs, &pi_lap, params)?;
    let record = SeedPairRecord {
        u_seq: seeds.u_seq.clone(),
        v_seq: seeds.v_seq.clone(),
        goodness: seeds.goodness,
        lap_objective,
        mean_diag_score,
        mean_abs_offdiag_score,
        post_lap_overlap: overlap(&pi_lap, &prep.pi_star)?,
        post_refine_overlap: overlap(&refined.pi, &prep.pi_star)?,
        swaps: refined.swaps.len(),
        swap_trace: refined.swaps.iter().map(|s| (s.u, s.v)).collect(),
        truncated: refined.truncated,
        selection_score: 0,
        telemetry: amp.telemetry,
    };
    Ok(PairResult {
        record,
        refined: refined.pi,
    })
}

/// One full run. Failures are recorded in the returned record.
pub fn run_pipeline(cfg: &RunConfig) -> RunRecord {
    let mut rec = RunRecord::new(cfg);
    let total = Instant::now();
    if timed(&mut rec, "validate", || cfg.validate()).is_err() {
        return rec;
    }
    let seeds = cfg.stream_seeds();
    let Ok(prep) = timed(&mut rec, "prepare", || prepare(cfg, &seeds)) else {
        return rec;
    };
    rec.schedule = Some(prep.schedule.clone());
    rec.corrupted_a = prep.q.clone();
    rec.corrupted_b = prep.r.clone();
    let cp = &prep.cleaned;
    rec.cleaning = Some(CleaningSummary {
        iters_a: cp.iters_a,
        iters_b: cp.iters_b,
        norm_a: cp.norm_a,
        norm_b: cp.norm_b,
        s: cp.s.clone(),
        t: cp.t.clone(),
    });
    let guard = cfg.threshold_mult * (cfg.n as f64).sqrt();
    rec.assert(
        "cleaning-norm-guard",
        cp.norm_a < guard && cp.norm_b < guard,
        format!("norms {:.3}, {:.3} vs {guard:.3}", cp.norm_a, cp.norm_b),
    );
    rec.final_round = Some(prep.schedule.final_round(cfg.min_rounds));

    let Ok(plan) = timed(&mut rec, "spectral", || {
        spectral_plan(cfg, &prep.schedule, &prep.denoiser, seeds.beta)
    }) else {
        return rec;
    };
    rec.spectral_rounds = plan.steps.iter().map(|s| s.report.clone()).collect();
    rec.realized_eps = plan.epsilons();
    rec.final_xi_check = Some(plan.final_check.clone());
    for s in &plan.steps {
        let r = &s.report;
        rec.assert(
            &format!("xi-round-{}", r.t),
            r.xi_check.holds(),
            format!(
                "‖ΞᵀΦΞ−I‖_F = {:.2e}, offdiag {:.2e}",
                r.xi_check.phi_residual, r.xi_check.psi_offdiag
            ),
        );
        rec.assert(
            &format!("window-round-{}", r.t + 1),
            r.phi_in_window_next >= r.required_next && r.psi_in_window_next >= r.required_next,
            format!(
                "Φ {} / Ψ {} of {} required",
                r.phi_in_window_next, r.psi_in_window_next, r.required_next
            ),
        );
        rec.assert(
            &format!("eps-growth-round-{}", r.t + 1),
            r.eps_growth_ok,
            format!("ε {:.4e} → {:.4e}", r.eps, r.eps_next),
        );
    }
    rec.assert(
        "xi-final",
        plan.final_check.holds(),
        format!("‖ΞᵀΦΞ−I‖_F = {:.2e}", plan.final_check.phi_residual),
    );

    let Ok(pairs) = timed(&mut rec, "seed-pairs", || seed_pairs(cfg, &prep, &seeds)) else {
        return rec;
    };
    let Ok(params) = timed(&mut rec, "refine-params", || RefineParams::new(cfg.rho, cfg.n)) else {
        return rec;
    };
    let start = Instant::now();
    let results: Result<Vec<PairResult>> = pairs
        .par_iter()
        .map(|s| run_seed_pair(&prep, &plan, s, &params))
        .collect();
    rec.timings.insert("matching".into(), start.elapsed().as_secs_f64());
    let results = match results {
        Ok(r) => r,
        Err(e) => {
            rec.fail("matching", &e);
            return rec;
        }
    };
    let candidates: Vec<Permutation> = results.iter().map(|r| r.refined.clone()).collect();
    let Ok((best, scores)) = timed(&mut rec, "select", || final_select(&prep.obs, &candidates)) else {
        return rec;
    };
    rec.seed_pairs = results
        .into_iter()
        .zip(&scores)
        .map(|(mut r, &s)| {
            r.record.selection_score = s;
            r.record
        })
        .collect();
    let bounded = rec
        .seed_pairs
        .iter()
        .flat_map(|p| p.telemetry.iter())
        .all(|t| t.max_abs_f <= SUP_BOUND);
    rec.assert("iterate-bound", bounded, format!("|f| ≤ {SUP_BOUND}"));
    rec.assert(
        "selection-maximal",
        scores.iter().all(|&s| s <= scores[best]),
        format!("selected score {}", scores[best]),
    );
    let headline = rec
        .seed_pairs
        .iter()
        .position(|p| p.goodness == Some(true))
        .unwrap_or(0);
    rec.selected = Some(best);
    rec.post_lap_overlap = Some(rec.seed_pairs[headline].post_lap_overlap);
    rec.post_refine_overlap = Some(rec.seed_pairs[headline].post_refine_overlap);
    rec.final_overlap = overlap(&candidates[best], &prep.pi_star).ok();
    rec.timings.insert("total".into(), total.elapsed().as_secs_f64());
    rec
}

/// `cfg.trials` runs with consecutive master seeds, in parallel.
pub fn run_trials(cfg: &RunConfig) -> Vec<RunRecord> {
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_pipeline(&cfg.for_trial(t)))
        .collect()
}

/// Final `h` from a clean run and a corrupted run sharing `A, B, G, H, β`
/// and the seed pair.
#[derive(Clone, Debug)]
pub struct ReplayOutcome {
    pub h_clean: DMatrix<f64>,
    pub h_corrupt: DMatrix<f64>,
    /// `‖h_corrupt − h_clean‖_F / ‖h_clean‖_F`.
    pub relative_gap: f64,
}

pub fn shared_randomness_replay(cfg: &RunConfig) -> Result<ReplayOutcome> {
    cfg.validate()?;
    let seeds = cfg.stream_seeds();
    let den = make_denoiser(cfg.bandwidth)?;
    let sched = build_schedule(cfg.rho, cfg.n, cfg.k0, cfg.schedule_mode(), &den, cfg.divisor)?;
    let inst = generate(cfg.n, cfg.rho, cfg.pi_mode()?, seeds.instance)?;
    let clean_obs = ObservedPair::clean(&inst);
    let (obs, cplan) = corrupt(&inst, cfg.epsilon, cfg.strategy()?, seeds.corruption)?;
    let cp_clean = clean_pair(&clean_obs, seeds.noise, cfg.threshold_mult)?;
    let cp_corrupt = clean_pair(&obs, seeds.noise, cfg.threshold_mult)?;
    let plan = spectral_plan(cfg, &sched, &den, seeds.beta)?;
    let bad_a = union(&union(&cplan.q, &cp_clean.s), &cp_corrupt.s);
    let bad_b = union(&union(&cplan.r, &cp_clean.t), &cp_corrupt.t);
    let mut rng = rng_from_seed(split_seed(seeds.instance, 200));
    let pair = SeedPair::oracle(&inst.pi_star, cfg.k0, &bad_a, &bad_b, &mut rng)?;
    let h_clean = run_amp(&cp_clean, &pair, &plan, &den, None)?.last.h;
    let h_corrupt = run_amp(&cp_corrupt, &pair, &plan, &den, None)?.last.h;
    let base = h_clean.norm();
    let relative_gap = if base > 0.0 {
        (&h_corrupt - &h_clean).norm() / base
    } else {
        f64::INFINITY
    };
    Ok(ReplayOutcome {
        h_clean,
        h_corrupt,
        relative_gap,
    })
}

/// Axes of a sweep; the cartesian product is taken in the order
/// `n, ρ, ε, strategy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub n: Vec<usize>,
    pub rho: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub strategy: Vec<String>,
}

impl SweepGrid {
    pub fn cells(&self, base: &RunConfig) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &rho in &self.rho {
                for &epsilon in &self.epsilon {
                    for strategy in &self.strategy {
                        let mut c = base.clone();
                        c.n = n;
                        c.rho = rho;
                        c.epsilon = epsilon;
                        c.strategy = strategy.clone();
                        out.push(c);
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cell: usize,
    pub trial: usize,
    pub n: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub strategy: String,
    pub seed: u64,
    pub status: String,
    pub exit_code: i32,
    pub failure_stage: Option<String>,
    pub post_lap_overlap: Option<f64>,
    pub post_refine_overlap: Option<f64>,
    pub final_overlap: Option<f64>,
    pub cleaning_iters_a: Option<usize>,
    pub cleaning_iters_b: Option<usize>,
    pub mean_resamples: Option<f64>,
}

impl SweepRow {
    fn from_record(cell: usize, trial: usize, r: &RunRecord) -> Self {
        let c = &r.config;
        SweepRow {
            cell,
            trial,
            n: c.n,
            rho: c.rho,
            epsilon: c.epsilon,
            strategy: c.strategy.clone(),
            seed: c.seed,
            status: r.status.clone(),
            exit_code: r.exit_code,
            failure_stage: r.failure_stage.clone(),
            post_lap_overlap: r.post_lap_overlap,
            post_refine_overlap: r.post_refine_overlap,
            final_overlap: r.final_overlap,
            cleaning_iters_a: r.cleaning.as_ref().map(|c| c.iters_a),
            cleaning_iters_b: r.cleaning.as_ref().map(|c| c.iters_b),
            mean_resamples: (!r.spectral_rounds.is_empty()).then(|| {
                r.spectral_rounds.iter().map(|s| s.resamples as f64).sum::<f64>()
                    / r.spectral_rounds.len() as f64
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub cell: usize,
    pub n: usize,
    pub rho: f64,
    pub epsilon: f64,
    pub strategy: String,
    pub trials: usize,
    pub failures: usize,
    pub mean_final_overlap: Option<f64>,
    pub median_final_overlap: Option<f64>,
    pub mean_cleaning_iters: Option<f64>,
    pub mean_resamples: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub schema_version: u32,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<CellSummary>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

/// Runs every `(cell, trial)`; cell `c`, trial `t` uses master seed
/// `trial_seed(base.seed, c·trials + t)`.
pub fn sweep(base: &RunConfig, grid: &SweepGrid) -> SweepResult {
    let cells = grid.cells(base);
    let trials = base.trials.max(1);
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..trials).map(move |t| (c, t)))
        .collect();
    let rows: Vec<SweepRow> = jobs
        .par_iter()
        .map(|&(c, t)| {
            let mut cfg = cells[c].clone();
            cfg.seed = trial_seed(base.seed, c * trials + t);
            cfg.trials = 1;
            SweepRow::from_record(c, t, &run_pipeline(&cfg))
        })
        .collect();
    let summary = cells
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.cell == c).collect();
            let overlaps: Vec<f64> = mine.iter().filter_map(|r| r.final_overlap).collect();
            let iters: Vec<f64> = mine
                .iter()
                .filter_map(|r| Some((r.cleaning_iters_a? + r.cleaning_iters_b?) as f64 / 2.0))
                .collect();
            let res: Vec<f64> = mine.iter().filter_map(|r| r.mean_resamples).collect();
            CellSummary {
                cell: c,
                n: cfg.n,
                rho: cfg.rho,
                epsilon: cfg.epsilon,
                strategy: cfg.strategy.clone(),
                trials: mine.len(),
                failures: mine.iter().filter(|r| r.exit_code != 0).count(),
                mean_final_overlap: mean(&overlaps),
                median_final_overlap: median(&overlaps),
                mean_cleaning_iters: mean(&iters),
                mean_resamples: mean(&res),
            }
        })
        .collect();
    SweepResult {
        schema_version: SCHEMA_VERSION,
        rows,
        summary,
    }
}

pub const SWEEP_CSV_HEADER: &str = "cell,trial,n,rho,epsilon,strategy,seed,status,exit_code,failure_stage,post_lap_overlap,post_refine_overlap,final_overlap,cleaning_iters_a,cleaning_iters_b,mean_resamples";

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(w: &mut impl Write, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.cell,
            r.trial,
            r.n,
            r.rho,
            r.epsilon,
            r.strategy,
            r.seed,
            r.status,
            r.exit_code,
            opt(&r.failure_stage),
            opt(&r.post_lap_overlap),
            opt(&r.post_refine_overlap),
            opt(&r.final_overlap),
            opt(&r.cleaning_iters_a),
            opt(&r.cleaning_iters_b),
            opt(&r.mean_resamples),
        )?;
    }
    Ok(())
}

/// Reference constants for a given `ρ` and denoiser frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub rho: f64,
    pub bandwidth: f64,
    pub a1: f64,
    pub phi_second_at_zero: f64,
    pub lambda_cap: f64,
    pub eps0: f64,
    pub paper_k0_bound: f64,
    pub alpha: f64,
    pub psi_rho: f64,
}

pub fn constants(rho: f64, bandwidth: f64) -> Result<Constants> {
    if !(rho > 0.0 && rho <= 1.0) {
        return param(format!("rho must lie in (0, 1], got {rho}"));
    }
    let d = make_denoiser(bandwidth)?;
    Ok(Constants {
        rho,
        bandwidth,
        a1: d.var_norm,
        phi_second_at_zero: phi_second_deriv_at_zero(&d),
        lambda_cap: d.lambda_cap(),
        eps0: phi_map(&d, rho / 2.0),
        paper_k0_bound: paper_k0_bound(rho, &d),
        alpha: alpha(),
        psi_rho: psi(rho)?,
    })
}
