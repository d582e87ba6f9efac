//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1, 2, 5 and 10 are asserted; the process exits nonzero if one
//! of them fails. The remaining criteria are evaluated at full size and
//! reported with diagnostics.

mod common;

use std::time::Instant;

use common::*;
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use wigmatch::amp::{aligned_cross, init_iterate};
use wigmatch::assign::{assemble_pi, assignment_value, hungarian_min, solve_lap};
use wigmatch::denoiser::{make_denoiser, phi_map};
use wigmatch::model::{corrupt, generate, overlap, ObservedPair, Permutation, PiMode, Strategy};
use wigmatch::pipeline::{ordered_tuples, run_pipeline, shared_randomness_replay, RunConfig, RunRecord};
use wigmatch::preprocess::{clean_pair, DEFAULT_THRESHOLD_MULT};
use wigmatch::quadrature::GaussHermite;
use wigmatch::refine::{final_select, neighborhood_stat, RefineParams};
use wigmatch::rng::rng_from_seed;

type Criterion = (usize, &'static str, fn() -> Outcome, bool);

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let d = make_denoiser(1.0).unwrap();
    let gh2 = GaussHermite::new(80);
    let mut gap = 0.0f64;
    for k in -10..=10 {
        let u = k as f64 / 10.0;
        let q = gh2.expect_bivariate(u, |x, y| d.eval(x) * d.eval(y));
        gap = gap.max((q - phi_map(&d, u)).abs());
    }
    let gh = GaussHermite::new(200);
    let m1 = gh.expect(|x| d.eval(x));
    let m2 = gh.expect(|x| d.eval(x).powi(2));
    let secs = start.elapsed().as_secs_f64();
    let pass = gap <= 1e-8
        && d.taylor_coefficient(0) == 0.0
        && d.taylor_coefficient(1) == 0.0
        && m1.abs() <= 1e-10
        && (m2 - 1.0).abs() <= 1e-10
        && secs < 1.0;
    Outcome {
        pass,
        detail: format!(
            "max |ϕ − quadrature| {gap:.1e}, E[φ] {m1:.1e}, E[φ²]−1 {:.1e}, {secs:.3}s",
            m2 - 1.0
        ),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let n = 500;
    let guard = DEFAULT_THRESHOLD_MULT * (n as f64).sqrt();
    let spike = Strategy::from_tag("rank1-spike")
        .unwrap()
        .with_magnitude(Some(30.0 * (n as f64).sqrt()));
    let runs: Vec<(bool, usize)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let inst = generate(n, 0.8, PiMode::UniformRandom, 1000 + seed).unwrap();
            let (obs, _) = corrupt(&inst, 0.02, spike, 2000 + seed).unwrap();
            let cp = clean_pair(&obs, 3000 + seed, DEFAULT_THRESHOLD_MULT).unwrap();
            (cp.norm_a < guard && cp.norm_b < guard, cp.s.len().max(cp.t.len()))
        })
        .collect();
    let secs = start.elapsed().as_secs_f64();
    let guard_ok = runs.iter().all(|r| r.0);
    let within = runs.iter().filter(|r| r.1 <= 40).count();
    let worst = runs.iter().map(|r| r.1).max().unwrap();
    Outcome {
        pass: guard_ok && within >= 48 && secs < 120.0,
        detail: format!(
            "guard held {}/50, |zeroed| ≤ 40 in {within}/50 (max {worst}), {secs:.1}s",
            runs.iter().filter(|r| r.0).count()
        ),
    }
}

fn default_runs(n: usize, rho: f64, epsilon: f64, strategy: &str, trials: u64) -> Vec<RunRecord> {
    (0..trials)
        .into_par_iter()
        .map(|seed| {
            run_pipeline(&RunConfig {
                n,
                rho,
                epsilon,
                strategy: strategy.into(),
                seed,
                ..RunConfig::default()
            })
        })
        .collect()
}

fn failure_summary(runs: &[RunRecord]) -> String {
    let failed: Vec<&RunRecord> = runs.iter().filter(|r| !r.is_ok()).collect();
    match failed.first() {
        None => "all runs completed".into(),
        Some(r) => format!(
            "{}/{} runs stopped ({}, exit {})",
            failed.len(),
            runs.len(),
            r.error_kind.as_deref().unwrap_or("?"),
            r.exit_code
        ),
    }
}

fn criterion_3() -> Outcome {
    let runs = default_runs(1000, 0.8, 0.0, "rank1-spike", 20);
    let completed = runs.iter().all(|r| r.is_ok());
    let mut rounds = 0usize;
    let mut resamples = 0usize;
    let mut ok = completed;
    for r in runs.iter().filter(|r| r.is_ok()) {
        for s in &r.spectral_rounds {
            rounds += 1;
            resamples += s.resamples;
            ok &= s.xi_check.phi_residual <= 1e-8
                && s.xi_check.diag_in_window
                && s.phi_in_window_next >= s.required_next
                && s.psi_in_window_next >= s.required_next;
        }
    }
    let mean = if rounds > 0 { resamples as f64 / rounds as f64 } else { f64::NAN };
    ok &= rounds > 0 && mean <= 4.0;
    Outcome {
        pass: ok,
        detail: format!(
            "{}; {rounds} accepted rounds, mean resamples {mean:.2}",
            failure_summary(&runs)
        ),
    }
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let runs = default_runs(2000, 0.8, 0.0, "rank1-spike", 20);
    let mut ok = runs.iter().all(|r| r.is_ok());
    for r in runs.iter().filter(|r| r.is_ok()) {
        for t in r.seed_pairs.iter().flat_map(|p| &p.telemetry) {
            ok &= t.ff_gap <= 0.1 && t.fg_gap.is_some_and(|g| g <= 0.1);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let round0: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let s = clean_setup(2000, 0.8, seed);
            let it = init_iterate(&s.cp, &good_seeds(&s, 24, seed + 50), &s.den).unwrap();
            let mut ff = it.f.transpose() * &it.f / 2000.0;
            let mut fg = aligned_cross(&it, &s.inst.pi_star, 2000) / 2000.0;
            let eps0 = phi_map(&s.den, 0.4);
            for i in 0..24 {
                ff[(i, i)] -= 1.0;
                fg[(i, i)] -= eps0;
            }
            (sup_norm(&ff), sup_norm(&fg))
        })
        .collect();
    let within = round0.iter().filter(|g| g.0 <= 0.1 && g.1 <= 0.1).count();
    Outcome {
        pass: ok && secs < 600.0,
        detail: format!(
            "{}; round 0 alone within 0.1 in {within}/20 seeds (max ff {:.3}, fg {:.3})",
            failure_summary(&runs),
            round0.iter().map(|g| g.0).fold(0.0, f64::max),
            round0.iter().map(|g| g.1).fold(0.0, f64::max)
        ),
    }
}

fn criterion_5() -> Outcome {
    let perms = ordered_tuples(8, 8);
    let mut rng = rng_from_seed(0xACCE);
    let mut exact = 0;
    for _ in 0..100 {
        let score = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
        let best = perms
            .iter()
            .max_by(|a, b| assignment_value(&score, a).total_cmp(&assignment_value(&score, b)))
            .unwrap();
        let sigma = hungarian_min(&(-&score)).unwrap();
        if &sigma == best {
            exact += 1;
        }
    }
    Outcome {
        pass: exact == 100,
        detail: format!("Hungarian equals 8! enumeration on {exact}/100 instances"),
    }
}

fn single_round_lap_overlap(seed: u64) -> f64 {
    let s = clean_setup(1000, 0.8, seed);
    let seeds = good_seeds(&s, 24, seed + 7);
    let p = plan(0.8, 1000, 24, 0, &s.den, seed + 8).unwrap();
    let problem = final_scores(&s, &seeds, &p);
    let sigma = solve_lap(&problem).unwrap();
    overlap(&assemble_pi(&seeds, &problem, &sigma).unwrap(), &s.inst.pi_star).unwrap()
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let runs = default_runs(1000, 0.8, 0.0, "rank1-spike", 20);
    let good = runs
        .iter()
        .filter(|r| r.post_lap_overlap.is_some_and(|o| o >= 0.95))
        .count();
    let secs = start.elapsed().as_secs_f64();
    let diag: Vec<f64> = (0..5u64).into_par_iter().map(single_round_lap_overlap).collect();
    Outcome {
        pass: good >= 18 && secs < 1200.0,
        detail: format!(
            "post-LAP ≥ 0.95 in {good}/20; {}; single-round post-LAP overlaps {:?}",
            failure_summary(&runs),
            diag.iter().map(|o| (o * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    }
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for tag in Strategy::TAGS {
        let runs = default_runs(1000, 0.9, 0.01, tag, 20);
        let exact = runs.iter().filter(|r| r.post_refine_overlap == Some(1.0)).count();
        pass &= exact >= 18;
        parts.push(format!("{tag} {exact}/20 ({})", failure_summary(&runs)));
    }
    let control = run_pipeline(&RunConfig {
        n: 1000,
        rho: 0.9,
        epsilon: 0.01,
        good_seed_pairs: 0,
        bad_seed_pairs: 1,
        ..RunConfig::default()
    });
    let control_ok = control.post_lap_overlap.is_some_and(|o| o <= 0.05);
    pass &= control_ok;
    parts.push(format!(
        "bad-seed control post-LAP {:?} (exit {})",
        control.post_lap_overlap, control.exit_code
    ));
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_8() -> Outcome {
    let n = 1000;
    let inst = generate(n, 0.8, PiMode::UniformRandom, 808).unwrap();
    let obs = ObservedPair::clean(&inst);
    let params = RefineParams::new(0.8, n).unwrap();
    let delta = params.delta;
    let mut rng = rng_from_seed(809);
    let mut min_true = f64::INFINITY;
    let mut max_false = f64::NEG_INFINITY;
    let (mut true_ok, mut false_ok, mut false_total) = (0, 0, 0);
    for _ in 0..100 {
        let u = rng.random_range(0..n);
        let pu = inst.pi_star.apply(u);
        let t = neighborhood_stat(&obs, &inst.pi_star, u, pu, params.alpha);
        min_true = min_true.min(t);
        if t >= 2.0 * delta {
            true_ok += 1;
        }
        for _ in 0..100 {
            let v = loop {
                let v = rng.random_range(0..n);
                if v != pu {
                    break v;
                }
            };
            let f = neighborhood_stat(&obs, &inst.pi_star, u, v, params.alpha);
            max_false = max_false.max(f);
            false_total += 1;
            if f <= delta / 20.0 {
                false_ok += 1;
            }
        }
    }
    Outcome {
        pass: true_ok == 100 && false_ok == false_total,
        detail: format!(
            "Δ = {delta:.2}: N(u,π*(u)) ≥ 2Δ for {true_ok}/100 (min {min_true:.1}); \
             N(u,v) ≤ Δ/20 for {false_ok}/{false_total} (max {max_false:.1})"
        ),
    }
}

fn criterion_9() -> Outcome {
    let replay = |min_rounds: usize, seed: u64| {
        shared_randomness_replay(&RunConfig {
            n: 1000,
            epsilon: 0.01,
            min_rounds,
            seed,
            ..RunConfig::default()
        })
    };
    let full: Vec<_> = (0..20u64).into_par_iter().map(|s| replay(2, s)).collect();
    let within = full
        .iter()
        .filter(|r| r.as_ref().is_ok_and(|o| o.relative_gap <= 0.2))
        .count();
    let first_err = full.iter().find_map(|r| r.as_ref().err().map(|e| e.kind()));
    let single: Vec<f64> = (0..5u64)
        .into_par_iter()
        .map(|s| replay(0, s).map(|o| o.relative_gap).unwrap_or(f64::NAN))
        .collect();
    Outcome {
        pass: within >= 18,
        detail: format!(
            "gap ≤ 0.2 in {within}/20 (errors: {}); single-round gaps {:?}",
            first_err.unwrap_or("none"),
            single.iter().map(|g| (g * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    }
}

fn criterion_10() -> Outcome {
    let wins: Vec<bool> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let inst = generate(1000, 0.8, PiMode::UniformRandom, 10_000 + seed).unwrap();
            let obs = ObservedPair::clean(&inst);
            let mut rng = rng_from_seed(20_000 + seed);
            let mut cands: Vec<Permutation> = (0..5).map(|_| Permutation::random(1000, &mut rng)).collect();
            let slot = (seed as usize) % 6;
            cands.insert(slot, inst.pi_star.clone());
            final_select(&obs, &cands).unwrap().0 == slot
        })
        .collect();
    let count = wins.iter().filter(|&&w| w).count();
    Outcome {
        pass: count == 20,
        detail: format!("π* selected in {count}/20 trials"),
    }
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "denoiser correctness", criterion_1, true),
        (2, "spectral cleaning", criterion_2, true),
        (3, "spectral subroutine", criterion_3, false),
        (4, "AMP concentration", criterion_4, false),
        (5, "LAP optimality", criterion_5, true),
        (6, "almost-exact matching", criterion_6, false),
        (7, "exact recovery with corruption", criterion_7, false),
        (8, "refinement separations", criterion_8, false),
        (9, "corruption stability", criterion_9, false),
        (10, "final selection", criterion_10, true),
    ];
    let filter: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut broken = Vec::new();
    for (id, name, check, asserted) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = check();
        pass_line(
            id,
            name,
            out.pass,
            &format!("{} [{:.1}s]", out.detail, start.elapsed().as_secs_f64()),
        );
        if asserted && !out.pass {
            broken.push(id);
        }
    }
    if !broken.is_empty() {
        eprintln!("asserted criteria failed: {broken:?}");
        std::process::exit(1);
    }
}
