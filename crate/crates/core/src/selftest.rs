//! Fast property checks runnable from the command line.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assign::{assignment_value, hungarian_min};
use crate::denoiser::{make_denoiser, phi_map, DEFAULT_BANDWIDTH};
use crate::error::Result;
use crate::io::{read_instance, write_instance};
use crate::model::{corrupt, generate, Permutation, PiMode, Strategy};
use crate::pipeline::ordered_tuples;
use crate::preprocess::{clean_pair, DEFAULT_THRESHOLD_MULT};
use crate::quadrature::GaussHermite;
use crate::refine::{alpha, psi};
use crate::rng::rng_from_seed;
use crate::spectral::{build_xi, check_xi, RoundMatrices};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

type Check = fn() -> Result<(bool, String)>;

fn denoiser_moments() -> Result<(bool, String)> {
    let d = make_denoiser(DEFAULT_BANDWIDTH)?;
    let gh = GaussHermite::new(200);
    let m1 = gh.expect(|x| d.eval(x));
    let m2 = gh.expect(|x| d.eval(x).powi(2));
    Ok((
        m1.abs() <= 1e-10 && (m2 - 1.0).abs() <= 1e-10,
        format!("E[φ] = {m1:.2e}, E[φ²] − 1 = {:.2e}", m2 - 1.0),
    ))
}

fn correlation_map() -> Result<(bool, String)> {
    let d = make_denoiser(DEFAULT_BANDWIDTH)?;
    let gh = GaussHermite::new(80);
    let mut worst = 0.0f64;
    for k in -10..=10 {
        let u = k as f64 / 10.0;
        let q = gh.expect_bivariate(u, |x, y| d.eval(x) * d.eval(y));
        worst = worst.max((q - phi_map(&d, u)).abs());
    }
    let c0 = d.taylor_coefficient(0);
    let c1 = d.taylor_coefficient(1);
    Ok((
        worst <= 1e-8 && c0 == 0.0 && c1 == 0.0,
        format!("max quadrature gap {worst:.2e}, c₀ = {c0}, c₁ = {c1}"),
    ))
}

fn lap_brute_force() -> Result<(bool, String)> {
    let mut rng = rng_from_seed(0x5e1f);
    let perms = ordered_tuples(6, 6);
    for trial in 0..20 {
        let cost = DMatrix::from_fn(6, 6, |_, _| rng.random::<f64>());
        let best = perms
            .iter()
            .map(|p| assignment_value(&cost, p))
            .fold(f64::INFINITY, f64::min);
        let got = assignment_value(&cost, &hungarian_min(&cost)?);
        if (got - best).abs() > 1e-12 {
            return Ok((false, format!("trial {trial}: {got} vs optimum {best}")));
        }
    }
    Ok((true, "20 random 6×6 instances match enumeration".into()))
}

fn permutation_algebra() -> Result<(bool, String)> {
    let mut rng = rng_from_seed(7);
    let p = Permutation::random(50, &mut rng);
    let q = Permutation::random(50, &mut rng);
    let id = Permutation::identity(50);
    let ok = p.compose(&p.inverse()) == id
        && p.inverse().compose(&p) == id
        && p.compose(&q).inverse() == q.inverse().compose(&p.inverse());
    Ok((ok, "inverse and composition laws on n = 50".into()))
}

fn spectral_isotropic() -> Result<(bool, String)> {
    let d = make_denoiser(DEFAULT_BANDWIDTH)?;
    let rm = RoundMatrices::initial(24, phi_map(&d, 0.4));
    let xi = build_xi(&rm, 2)?;
    let c = check_xi(&rm, &xi);
    Ok((c.holds(), format!("‖ΞᵀΦΞ−I‖_F = {:.2e}", c.phi_residual)))
}

fn cleaning_guard() -> Result<(bool, String)> {
    let inst = generate(200, 0.8, PiMode::UniformRandom, 11)?;
    let (obs, _) = corrupt(&inst, 0.05, Strategy::from_tag("rank1-spike")?, 12)?;
    let cp = clean_pair(&obs, 13, DEFAULT_THRESHOLD_MULT)?;
    let guard = DEFAULT_THRESHOLD_MULT * (200f64).sqrt();
    Ok((
        cp.norm_a < guard && cp.norm_b < guard,
        format!(
            "norms {:.1}, {:.1} < {guard:.1} after {} + {} removals",
            cp.norm_a, cp.norm_b, cp.iters_a, cp.iters_b
        ),
    ))
}

fn refine_constants() -> Result<(bool, String)> {
    let a = alpha();
    let p = psi(0.8)?;
    Ok((
        a * a < p && p < a,
        format!("α = {a:.6}, ψ(0.8) = {p:.6}"),
    ))
}

fn instance_roundtrip() -> Result<(bool, String)> {
    let inst = generate(9, 0.7, PiMode::UniformRandom, 3)?;
    let mut buf = Vec::new();
    write_instance(&mut buf, &inst)?;
    let back = read_instance(&mut buf.as_slice())?;
    Ok((
        back.a == inst.a && back.b == inst.b && back.pi_star == inst.pi_star,
        format!("{} bytes", buf.len()),
    ))
}

const CHECKS: &[(&str, Check)] = &[
    ("denoiser-moments", denoiser_moments),
    ("correlation-map", correlation_map),
    ("lap-brute-force", lap_brute_force),
    ("permutation-algebra", permutation_algebra),
    ("spectral-isotropic", spectral_isotropic),
    ("cleaning-guard", cleaning_guard),
    ("refine-constants", refine_constants),
    ("instance-roundtrip", instance_roundtrip),
];

pub fn run_selftest() -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckResult {
                name: (*name).into(),
                passed,
                detail,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}
