//! Property suite over a matrix of dimensions, exponents and profiles.
//!
//! Each check records both sides of the inequality it tests, so a failing
//! case can be read off the report without rerunning anything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{geometry, make_exponents, LorentzIndex};
use crate::families::{default_bump, piecewise_power, terracini_profile, uc_profile, TrialFamily};
use crate::functionals::{
    dirichlet_energy, evaluate, hardy_term, lorentz_norm, radial_weight_identity_check,
};
use crate::grid::LogGrid;
use crate::profile::{RadialProfile, Sampled};
use crate::quadrature::{integrate_derivative_power, integrate_power};
use crate::scaling::multi_bubble_rearrangement;

pub const HARDY_POSITIVITY: &str = "hardy_positivity";
pub const B_MONOTONICITY: &str = "b_monotonicity";
pub const CAUCHY_SCHWARZ: &str = "cauchy_schwarz_chain";
pub const HOLDER: &str = "holder_chain";
pub const WEAK_DOMINATION: &str = "weak_norm_domination";
pub const REARRANGEMENT: &str = "rearrangement";
pub const RADIAL_WEIGHT: &str = "radial_weight_identity";

/// Every invariant name, in report order.
pub const INVARIANTS: [&str; 7] = [
    HARDY_POSITIVITY,
    B_MONOTONICITY,
    CAUCHY_SCHWARZ,
    HOLDER,
    WEAK_DOMINATION,
    REARRANGEMENT,
    RADIAL_WEIGHT,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub dims: Vec<u32>,
    pub seed: u64,
    /// Random smooth sampled profiles per `(d, p)`.
    pub random_profiles: usize,
    /// `(A, B, theta)` samples for the monotonicity check.
    pub monotonicity_samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 5],
            seed: 0,
            random_profiles: 4,
            monotonicity_samples: 100,
        }
    }
}

/// One assertion: `lhs` compared with `rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub invariant: String,
    pub case: String,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSummary {
    pub invariant: String,
    pub assertions: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn assertions(&self) -> usize {
        self.checks.len()
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summaries(&self) -> Vec<InvariantSummary> {
        INVARIANTS
            .iter()
            .map(|name| {
                let mine = self.checks.iter().filter(|c| c.invariant == *name);
                InvariantSummary {
                    invariant: name.to_string(),
                    assertions: mine.clone().count(),
                    failures: mine.filter(|c| !c.passed).count(),
                }
            })
            .collect()
    }
}

struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn push(&mut self, invariant: &str, case: String, lhs: f64, rhs: f64, passed: bool) {
        self.checks.push(Check {
            invariant: invariant.to_string(),
            case,
            lhs,
            rhs,
            passed: passed && lhs.is_finite() && rhs.is_finite(),
        });
    }

    /// `lhs >= rhs - tol * |rhs|`.
    fn at_least(&mut self, invariant: &str, case: String, lhs: f64, rhs: f64, tol: f64) {
        let ok = lhs >= rhs - tol * rhs.abs();
        self.push(invariant, case, lhs, rhs, ok);
    }
}

/// `(A - B)^theta B^{1-theta}`.
pub fn reduced_product(a: f64, b: f64, theta: f64) -> f64 {
    (a - b).max(0.0).powf(theta) * b.powf(1.0 - theta)
}

struct NamedProfile {
    name: String,
    profile: RadialProfile,
    /// Member of the `f_c` family, where the Cauchy-Schwarz chain is an equality.
    equality: bool,
}

fn random_profile(rng: &mut ChaCha8Rng, d: u32, p: f64) -> Result<RadialProfile> {
    let grid = LogGrid::new(-25.0, 25.0, 4001)?;
    let bumps: Vec<(f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.2..1.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(0.5..2.0),
            )
        })
        .collect();
    let smp = Sampled::from_fn(grid, |s| {
        bumps
            .iter()
            .map(|(a, c, w)| a * (-0.5 * ((s - c) / w).powi(2)).exp())
            .sum()
    })?;
    Ok(RadialProfile::sampled(smp, d, p))
}

fn profiles(d: u32, p: f64, rng: &mut ChaCha8Rng, randoms: usize) -> Result<Vec<NamedProfile>> {
    let mut out = Vec::new();
    let mut add = |name: String, profile: RadialProfile, equality: bool| {
        out.push(NamedProfile {
            name,
            profile,
            equality,
        })
    };
    if p == 2.0 {
        for c in [0.1, 0.25, 0.5, 1.0, 2.0] {
            add(format!("f_c c={c}"), uc_profile(c, d)?, true);
        }
        for eta in [0.5, 1.0, 2.0] {
            add(
                format!("terracini eta={eta}"),
                terracini_profile(eta, d)?,
                false,
            );
        }
    } else {
        for eps in [0.25, 1.0] {
            add(
                format!("piecewise_power eps={eps}"),
                piecewise_power(eps, d, p)?,
                false,
            );
        }
    }
    add("bump".into(), default_bump(d, p)?, false);
    for k in 0..randoms {
        add(format!("random #{k}"), random_profile(rng, d, p)?, false);
    }
    Ok(out)
}

fn profile_checks(rec: &mut Recorder, d: u32, p: f64, np: &NamedProfile) -> Result<()> {
    let exps = make_exponents(d, p, LorentzIndex::Infinite)?;
    let f = &np.profile;
    let case = format!("d={d} p={p} {}", np.name);
    let a = dirichlet_energy(f, &exps)?;
    let b = hardy_term(f, &exps)?;
    rec.push(
        HARDY_POSITIVITY,
        case.clone(),
        a - exps.hardy_constant() * b,
        -1e-8 * a,
        a - exps.hardy_constant() * b >= -1e-8 * a,
    );

    let sup = f.sup_norm();
    let dp = integrate_derivative_power(f, p)?;
    let pp = integrate_power(f, p)?;
    let lhs = dp.powf(1.0 / p) * pp.powf(1.0 - 1.0 / p);
    rec.at_least(HOLDER, case.clone(), lhs, 2.0 / p * sup.powf(p), 1e-9);

    if p == 2.0 {
        let product = dp * pp;
        let target = sup.powi(4);
        let ok = if np.equality {
            (product / target - 1.0).abs() <= 1e-6
        } else {
            product > target * (1.0 + 1e-6)
        };
        let label = if np.equality { "equality" } else { "strict" };
        rec.push(
            CAUCHY_SCHWARZ,
            format!("{case} ({label})"),
            product,
            target,
            ok,
        );

        let two_star = exps.p_star;
        let weak = lorentz_norm(f, two_star, LorentzIndex::Infinite)?;
        let bound = geometry(d).ball_volume.powf(1.0 / two_star) * sup;
        rec.push(
            WEAK_DOMINATION,
            case.clone(),
            weak,
            bound,
            weak <= bound * (1.0 + 1e-8),
        );

        for s in [1.5, 2.0, 3.0] {
            if s >= two_star {
                continue;
            }
            match radial_weight_identity_check(f, two_star, s) {
                Ok(ratio) => {
                    let expected = geometry(d).ball_volume.powf(s / two_star - 1.0);
                    rec.push(
                        RADIAL_WEIGHT,
                        format!("{case} (q, s) = ({two_star}, {s})"),
                        ratio,
                        expected,
                        (ratio / expected - 1.0).abs() <= 1e-4,
                    );
                }
                Err(Error::Unsupported(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    Ok(())
}

fn bubble_checks(rec: &mut Recorder, d: u32, p: f64) -> Result<()> {
    let df = d as f64;
    let exps = make_exponents(d, p, p * df / (df - p))?;
    for n in [1usize, 2, 4, 8] {
        let u = TrialFamily::MultiBubble { z: None }.instantiate(n as f64, &exps)?;
        let rep = evaluate(&u, &exps)?;
        let case = format!("d={d} p={p} multi_bubble N={n}");
        rec.push(
            HARDY_POSITIVITY,
            case.clone(),
            rep.h_reduced,
            -1e-8 * rep.a,
            rep.h_reduced >= -1e-8 * rep.a,
        );
        let chk = multi_bubble_rearrangement(n, &rep, &exps)?;
        rec.push(
            REARRANGEMENT,
            format!("{case} A* <= A"),
            chk.a_star,
            chk.a,
            chk.a_star <= chk.a * (1.0 + 1e-9),
        );
        rec.push(
            REARRANGEMENT,
            format!("{case} B* >= B"),
            chk.b_star,
            chk.b,
            chk.b_star >= chk.b * (1.0 - 1e-9),
        );
    }
    Ok(())
}

fn monotonicity_checks(rec: &mut Recorder, rng: &mut ChaCha8Rng, samples: usize) {
    for k in 0..samples {
        let a: f64 = rng.gen_range(0.1..100.0);
        let theta: f64 = rng.gen_range(0.01..0.99);
        let lo = (1.0 - theta) * a;
        let b1 = rng.gen_range(lo..a);
        let b2 = rng.gen_range(b1..a);
        let (f1, f2) = (reduced_product(a, b1, theta), reduced_product(a, b2, theta));
        let ok = b2 <= b1 || f2 < f1;
        rec.push(
            B_MONOTONICITY,
            format!("sample {k}: A={a} theta={theta} B={b1} -> {b2}"),
            f1,
            f2,
            ok,
        );
    }
}

/// Runs every invariant over the configured dimensions.
pub fn verify(config: &VerifyConfig) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rec = Recorder { checks: Vec::new() };
    for &d in &config.dims {
        if d < 3 {
            return Err(Error::Domain(format!("verify needs d >= 3, got {d}")));
        }
        for p in [2.0, 0.5 * (d as f64 + 2.0)] {
            for np in profiles(d, p, &mut rng, config.random_profiles)? {
                profile_checks(&mut rec, d, p, &np)?;
            }
            bubble_checks(&mut rec, d, p)?;
        }
    }
    monotonicity_checks(&mut rec, &mut rng, config.monotonicity_samples);
    Ok(VerifyReport { checks: rec.checks })
}
