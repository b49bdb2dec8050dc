//! Parameter sweeps over the counterexample families, log-log slope fits and
//! the theta bounds those slopes force.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{Exponents, LorentzIndex, ThetaWindow};
use crate::families::{default_bump, TrialFamily};
use crate::functionals::{dirichlet_energy, evaluate, hardy_term, FunctionalReport};

/// Minimum fit quality for a sweep to take part in inference.
pub const MIN_R_SQUARED: f64 = 0.99;

/// Slope resolution below which a column counts as constant.
pub const FLAT_SLOPE: f64 = 1e-3;

/// Smallest slope uncertainty credited to a fit; the swept quantities carry
/// quadrature errors far above the least-squares standard error of exact power laws.
pub const SLOPE_FLOOR: f64 = 1e-6;

/// Number of trailing sweep points a slope is fitted on.
pub const FIT_WINDOW: usize = 4;

/// Evaluates `template` at every parameter value, in parallel.
pub fn sweep(
    template: &TrialFamily,
    params: &[f64],
    exps: &Exponents,
) -> Result<Vec<FunctionalReport>> {
    check_params(params)?;
    params
        .par_iter()
        .map(|&v| {
            template
                .instantiate(v, exps)
                .and_then(|u| evaluate(&u, exps))
                .map_err(|e| Error::Sweep {
                    family: template.id().to_string(),
                    parameter: template.parameter_name().to_string(),
                    value: v,
                    source: Box::new(e),
                })
        })
        .collect()
}

fn check_params(params: &[f64]) -> Result<()> {
    if params.len() < FIT_WINDOW {
        return Err(Error::Domain(format!(
            "a sweep needs at least {FIT_WINDOW} parameter values, got {}",
            params.len()
        )));
    }
    let up = params.windows(2).all(|w| w[1] > w[0]);
    let down = params.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(Error::Domain(
            "sweep parameters must be strictly monotone".into(),
        ));
    }
    Ok(())
}

/// Least-squares line through `(log x, log y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Smallest and largest parameter value in the fit.
    pub window: (f64, f64),
    /// The data stay within a band of slope [`FLAT_SLOPE`] around a constant,
    /// where `r_squared` only measures rounding and higher-order terms.
    pub flat: bool,
}

impl ScalingFit {
    /// Good enough to infer from: `r^2 >= 0.99`, or flat.
    pub fn usable(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED || self.flat
    }

    /// Slope uncertainty used for conservative bounds, never below [`SLOPE_FLOOR`].
    pub fn slope_uncertainty(&self) -> f64 {
        let floor = if self.flat {
            0.5 * FLAT_SLOPE
        } else {
            SLOPE_FLOOR
        };
        self.stderr.max(floor)
    }
}

pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<ScalingFit> {
    if xs.len() != ys.len() {
        return Err(Error::Domain(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 3 {
        return Err(Error::Domain(format!(
            "a log-log fit needs at least 3 points, got {}",
            xs.len()
        )));
    }
    if let Some(v) = xs.iter().chain(ys).find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::Domain(format!(
            "log-log fit of the nonpositive or infinite value {v}"
        )));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Domain("log-log fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    // flat data at rounding level is a perfect fit of slope zero
    let r_squared = if ss_res <= 1e-20 * n {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    let stderr = (ss_res / (n - 2.0) / sxx).sqrt();
    let spread = |v: &[f64]| {
        v.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x))
            - v.iter().fold(f64::INFINITY, |m, x| m.min(*x))
    };
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        stderr,
        window: (lo, hi),
        flat: spread(&ly) <= FLAT_SLOPE * spread(&lx),
    })
}

/// Which end of the parameter range the sweep approaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneration {
    ToZero,
    ToInfinity,
}

/// A sweep with its label and results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSweep {
    pub label: String,
    pub family: TrialFamily,
    pub params: Vec<f64>,
    pub reports: Vec<FunctionalReport>,
}

impl LabeledSweep {
    pub fn run(
        label: &str,
        family: TrialFamily,
        params: Vec<f64>,
        exps: &Exponents,
    ) -> Result<Self> {
        let reports = sweep(&family, &params, exps)?;
        Ok(Self {
            label: label.to_string(),
            family,
            params,
            reports,
        })
    }

    pub fn direction(&self) -> Degeneration {
        if self.params[self.params.len() - 1] > self.params[0] {
            Degeneration::ToInfinity
        } else {
            Degeneration::ToZero
        }
    }

    /// Fits of `(A - c_H B, B, ||u||^p)` over the last [`FIT_WINDOW`] points.
    pub fn fits(&self, exps: &Exponents) -> Result<SweepFits> {
        let k = self.params.len().saturating_sub(FIT_WINDOW);
        let xs = &self.params[k..];
        let tail = &self.reports[k..];
        let column =
            |f: &dyn Fn(&FunctionalReport) -> f64| -> Vec<f64> { tail.iter().map(f).collect() };
        Ok(SweepFits {
            h_reduced: fit_loglog(xs, &column(&|r| r.h_reduced))?,
            b: fit_loglog(xs, &column(&|r| r.b))?,
            norm_p: fit_loglog(xs, &column(&|r| r.lorentz.powf(exps.p)))?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepFits {
    pub h_reduced: ScalingFit,
    pub b: ScalingFit,
    pub norm_p: ScalingFit,
}

impl SweepFits {
    fn all(&self) -> [&ScalingFit; 3] {
        [&self.h_reduced, &self.b, &self.norm_p]
    }
}

/// A theta bound implied by one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaBound {
    pub source: String,
    /// Bound computed from the fitted slopes.
    pub value: f64,
    /// Bound widened by two standard errors on every slope.
    pub conservative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaInference {
    pub lower_bounds: Vec<ThetaBound>,
    pub upper_bounds: Vec<ThetaBound>,
    /// Sweeps whose fits were refused, with the reason.
    pub refused: Vec<(String, String)>,
    /// Intersection of the conservative bounds with `[0, 1]`; `None` when empty.
    pub admissible: Option<ThetaWindow>,
    /// Intersection of the nominal bounds with `[0, 1]`.
    pub nominal: ThetaWindow,
}

impl ThetaInference {
    pub fn is_empty(&self) -> bool {
        self.admissible.is_none()
    }
}

enum Bound {
    Lower(f64),
    Upper(f64),
    None,
}

/// The bound on theta from `theta a + (1 - theta) b >= n` (or `<=` when `flip`).
fn slope_bound(a: f64, b: f64, n: f64, flip: bool) -> Bound {
    let gap = a - b;
    if gap == 0.0 {
        return Bound::None;
    }
    let t = (n - b) / gap;
    match (gap > 0.0) != flip {
        true => Bound::Lower(t),
        false => Bound::Upper(t),
    }
}

/// Theta bounds forced by the slopes of `A - c_H B`, `B` and `||u||^p` along each sweep.
///
/// As the parameter grows the inequality needs `theta a + (1 - theta) b >= n`;
/// as it shrinks to zero the logarithms change sign and the inequality reverses.
pub fn infer_theta_bounds(sweeps: &[LabeledSweep], exps: &Exponents) -> Result<ThetaInference> {
    let mut lower_bounds = Vec::new();
    let mut upper_bounds = Vec::new();
    let mut refused = Vec::new();
    for sw in sweeps {
        let fits = sw.fits(exps)?;
        if let Some(f) = fits.all().iter().find(|f| !f.usable()) {
            refused.push((
                sw.label.clone(),
                format!("r^2 = {} below {MIN_R_SQUARED}", f.r_squared),
            ));
            continue;
        }
        let flip = sw.direction() == Degeneration::ToZero;
        let (a, b, n) = (fits.h_reduced, fits.b, fits.norm_p);
        let nominal = slope_bound(a.slope, b.slope, n.slope, flip);
        let mut corners = Vec::with_capacity(8);
        for sa in [-2.0, 2.0] {
            for sb in [-2.0, 2.0] {
                for sn in [-2.0, 2.0] {
                    corners.push(slope_bound(
                        a.slope + sa * a.slope_uncertainty(),
                        b.slope + sb * b.slope_uncertainty(),
                        n.slope + sn * n.slope_uncertainty(),
                        flip,
                    ));
                }
            }
        }
        match nominal {
            Bound::Lower(v) => {
                let widest = corners
                    .iter()
                    .map(|c| {
                        if let Bound::Lower(t) = c {
                            *t
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .fold(f64::INFINITY, f64::min);
                lower_bounds.push(ThetaBound {
                    source: sw.label.clone(),
                    value: v,
                    conservative: widest,
                });
            }
            Bound::Upper(v) => {
                let widest = corners
                    .iter()
                    .map(|c| {
                        if let Bound::Upper(t) = c {
                            *t
                        } else {
                            f64::INFINITY
                        }
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                upper_bounds.push(ThetaBound {
                    source: sw.label.clone(),
                    value: v,
                    conservative: widest,
                });
            }
            Bound::None => {
                refused.push((
                    sw.label.clone(),
                    "slopes of A - c_H B and B coincide".into(),
                ));
            }
        }
    }
    let fold = |bounds: &[ThetaBound],
                pick: fn(&ThetaBound) -> f64,
                init: f64,
                f: fn(f64, f64) -> f64| { bounds.iter().map(pick).fold(init, f) };
    let lo = fold(&lower_bounds, |b| b.conservative, 0.0, f64::max);
    let hi = fold(&upper_bounds, |b| b.conservative, 1.0, f64::min);
    let nominal = ThetaWindow {
        lower: fold(&lower_bounds, |b| b.value, 0.0, f64::max),
        upper: fold(&upper_bounds, |b| b.value, 1.0, f64::min),
    };
    Ok(ThetaInference {
        lower_bounds,
        upper_bounds,
        refused,
        admissible: (lo <= hi).then_some(ThetaWindow {
            lower: lo,
            upper: hi,
        }),
        nominal,
    })
}

/// A sweep to run: label, family and parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub label: String,
    pub family: TrialFamily,
    pub params: Vec<f64>,
}

fn powers_of_two(from: i32, to: i32) -> Vec<f64> {
    let step = if to >= from { 1 } else { -1 };
    let mut out = Vec::new();
    let mut k = from;
    loop {
        out.push(2f64.powi(k));
        if k == to {
            return out;
        }
        k += step;
    }
}

/// The sweeps whose asymptotics decide the theta window at `exps`.
///
/// - `eps_small`: the epsilon-profile as epsilon goes to zero (always);
/// - `eps_large`: the epsilon-profile as epsilon grows (only at `r = p*`);
/// - `multi_bubble`: N separated bubbles (for `r >= p*`);
/// - `dyadic_chain`: amplitude-rescaled bubbles (for `r < p*`).
pub fn standard_battery(exps: &Exponents) -> Vec<SweepPlan> {
    let mut plans = vec![SweepPlan {
        label: "eps_small".into(),
        family: TrialFamily::PiecewisePower,
        params: powers_of_two(-1, -6),
    }];
    let r_is_critical = exps
        .r
        .finite()
        .is_some_and(|r| (r - exps.p_star).abs() <= 1e-12 * exps.p_star);
    if r_is_critical {
        plans.push(SweepPlan {
            label: "eps_large".into(),
            family: TrialFamily::PiecewisePower,
            params: powers_of_two(1, 6),
        });
    }
    let r_at_least_critical = match exps.r {
        LorentzIndex::Infinite => true,
        LorentzIndex::Finite(r) => r >= exps.p_star * (1.0 - 1e-12),
    };
    if r_at_least_critical {
        plans.push(SweepPlan {
            label: "multi_bubble".into(),
            family: TrialFamily::MultiBubble { z: None },
            params: powers_of_two(2, 7),
        });
    } else {
        plans.push(SweepPlan {
            label: "dyadic_chain".into(),
            family: TrialFamily::DyadicChain { z: None },
            params: powers_of_two(2, 7),
        });
    }
    plans
}

pub fn run_plans(plans: &[SweepPlan], exps: &Exponents) -> Result<Vec<LabeledSweep>> {
    plans
        .iter()
        .map(|pl| LabeledSweep::run(&pl.label, pl.family.clone(), pl.params.clone(), exps))
        .collect()
}

/// Runs [`standard_battery`] and infers the theta window from it.
pub fn infer_window(exps: &Exponents) -> Result<(Vec<LabeledSweep>, ThetaInference)> {
    let sweeps = run_plans(&standard_battery(exps), exps)?;
    let inference = infer_theta_bounds(&sweeps, exps)?;
    Ok((sweeps, inference))
}

/// Energies of the symmetric decreasing rearrangement of a multi-bubble next to its own.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RearrangementCheck {
    pub n: usize,
    pub a: f64,
    pub a_star: f64,
    pub b: f64,
    pub b_star: f64,
}

impl RearrangementCheck {
    /// `A* <= A` and `B* >= B`, up to a relative `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.a_star <= self.a * (1.0 + tol) && self.b_star >= self.b * (1.0 - tol)
    }
}

/// The rearrangement of `N` disjoint bumps is the bump dilated by `N^{1/d}`, whose
/// energy and origin Hardy term both scale by `N^{(d-p)/d}`.
pub fn multi_bubble_rearrangement(
    n: usize,
    report: &FunctionalReport,
    exps: &Exponents,
) -> Result<RearrangementCheck> {
    let bump = default_bump(exps.d, exps.p)?;
    let d = exps.d as f64;
    let gain = (n as f64).powf((d - exps.p) / d);
    Ok(RearrangementCheck {
        n,
        a: report.a,
        a_star: gain * dirichlet_energy(&bump, exps)?,
        b: report.b,
        b_star: gain * hardy_term(&bump, exps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::make_exponents;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn fit_of_identity_and_scaled_square() {
        let xs = [1.0, 2.0, 4.0, 8.0, 16.0];
        let f = fit_loglog(&xs, &xs).unwrap();
        assert_relative_eq!(f.slope, 1.0, epsilon = 1e-14);
        assert_eq!(f.r_squared, 1.0);
        assert_eq!(f.window, (1.0, 16.0));
        let ys: Vec<f64> = xs.iter().map(|x| 7.0 * x * x).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert_relative_eq!(f.slope, 2.0, epsilon = 1e-13);
        assert_relative_eq!(f.intercept, 7f64.ln(), epsilon = 1e-13);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_loglog(&[1.0, 2.0, 3.0], &[1.0, 0.0, 1.0]).is_err());
        assert!(fit_loglog(&[1.0, -2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_loglog(&[1.0, 2.0], &[1.0, 1.0]).is_err());
        assert!(fit_loglog(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn noisy_fit_has_low_r_squared() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 5.0, 0.5, 4.0, 1.0];
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!(f.r_squared < MIN_R_SQUARED && !f.usable());
    }

    #[test]
    fn nearly_constant_column_is_flat() {
        let xs = [16.0, 32.0, 64.0, 128.0];
        let ys: Vec<f64> = xs.iter().map(|x| 4.285 + 0.2 / (x * x)).collect();
        let f = fit_loglog(&xs, &ys).unwrap();
        assert!(f.r_squared < MIN_R_SQUARED);
        assert!(f.flat && f.usable());
        assert!(f.slope.abs() < FLAT_SLOPE);
        let steep: Vec<f64> = xs.iter().map(|x| x.powf(0.01)).collect();
        assert!(!fit_loglog(&xs, &steep).unwrap().flat);
    }

    #[test]
    fn sweep_validates_parameters() {
        let exps = make_exponents(3, 2.0, 6.0).unwrap();
        let fam = TrialFamily::PiecewisePower;
        assert!(sweep(&fam, &[1.0, 0.5, 0.25], &exps).is_err());
        assert!(sweep(&fam, &[1.0, 0.5, 0.7, 0.25], &exps).is_err());
        match sweep(&fam, &[1.0, 0.5, 0.25, -1.0], &exps) {
            Err(Error::Sweep {
                parameter, value, ..
            }) => {
                assert_eq!(parameter, "eps");
                assert_eq!(value, -1.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn eps_sweep_b_column() {
        let exps = make_exponents(3, 2.0, 6.0).unwrap();
        let params = [1.0, 0.5, 0.25, 0.125];
        let reps = sweep(&TrialFamily::PiecewisePower, &params, &exps).unwrap();
        for (r, k) in reps.iter().zip([1.0, 2.0, 4.0, 8.0]) {
            assert_relative_eq!(r.b, 4.0 * PI * k, max_relative = 1e-12);
        }
        let f = fit_loglog(&params, &reps.iter().map(|r| r.b).collect::<Vec<_>>()).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6);
    }

    #[test]
    fn multi_bubble_a_column() {
        let exps = make_exponents(3, 2.0, 6.0).unwrap();
        let reps = sweep(
            &TrialFamily::MultiBubble { z: None },
            &[4.0, 8.0, 16.0, 32.0],
            &exps,
        )
        .unwrap();
        let a_bump = dirichlet_energy(&default_bump(3, 2.0).unwrap(), &exps).unwrap();
        for (r, n) in reps.iter().zip([4.0, 8.0, 16.0, 32.0]) {
            assert_relative_eq!(r.a, a_bump * n, max_relative = 1e-12);
        }
    }

    #[test]
    fn dyadic_chain_norm_slope_is_p_over_r() {
        for r in [2.0, 4.0] {
            let exps = make_exponents(3, 2.0, r).unwrap();
            let sw = LabeledSweep::run(
                "dyadic_chain",
                TrialFamily::DyadicChain { z: None },
                powers_of_two(2, 7),
                &exps,
            )
            .unwrap();
            let fits = sw.fits(&exps).unwrap();
            assert!(
                (fits.norm_p.slope - 2.0 / r).abs() < 0.02,
                "r = {r}: {}",
                fits.norm_p.slope
            );
            assert!((fits.h_reduced.slope - 1.0).abs() < 0.02);
            assert!(fits.b.slope.abs() < 0.02);
        }
    }

    #[test]
    fn slope_bound_directions() {
        // (a, b, n) = (1, -1, 0) as the parameter shrinks: theta <= 1/2
        assert!(matches!(slope_bound(1.0, -1.0, 0.0, true), Bound::Upper(t) if t == 0.5));
        assert!(matches!(slope_bound(1.0, -1.0, 0.0, false), Bound::Lower(t) if t == 0.5));
        assert!(
            matches!(slope_bound(1.0, 0.0, 1.0 / 3.0, false), Bound::Lower(t) if t == 1.0 / 3.0)
        );
        assert!(matches!(slope_bound(-1.0, 0.0, -0.5, false), Bound::Upper(t) if t == 0.5));
        assert!(matches!(slope_bound(0.0, 0.0, 1.0, false), Bound::None));
    }

    #[test]
    fn battery_composition() {
        let labels = |r: LorentzIndex| -> Vec<String> {
            standard_battery(&make_exponents(3, 2.0, r).unwrap())
                .into_iter()
                .map(|p| p.label)
                .collect()
        };
        assert_eq!(
            labels(6.0.into()),
            ["eps_small", "eps_large", "multi_bubble"]
        );
        assert_eq!(
            labels(LorentzIndex::Infinite),
            ["eps_small", "multi_bubble"]
        );
        assert_eq!(labels(4.0.into()), ["eps_small", "dyadic_chain"]);
    }

    #[test]
    fn rearrangement_of_bubbles() {
        let exps = make_exponents(3, 2.0, 6.0).unwrap();
        for n in [1usize, 2, 4, 8] {
            let u = TrialFamily::MultiBubble { z: None }
                .instantiate(n as f64, &exps)
                .unwrap();
            let rep = evaluate(&u, &exps).unwrap();
            let chk = multi_bubble_rearrangement(n, &rep, &exps).unwrap();
            assert!(chk.holds(1e-9), "{chk:?}");
            if n == 1 {
                assert_relative_eq!(chk.a_star, chk.a, max_relative = 1e-12);
            }
        }
    }
}
