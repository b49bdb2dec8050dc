//! Every quantity on either side of the interpolation inequalities: Dirichlet
//! energy, Hardy term, Lorentz norms, Morrey seminorm and the quotient.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::exponents::{geometry, Exponents, LorentzIndex};
use crate::families::{norm, TrialFunction};
use crate::grid::simpson;
use crate::profile::{ClosedForm, RadialProfile, Shape, CLOSED_FORM_SCAN};
use crate::quadrature::{
    gauss_kronrod, gauss_kronrod_panels, integrate_between, integrate_closed_form,
    integrate_derivative_power, integrate_power, integrate_sampled_with_derivative, ln_add_exp,
    LevelSets, MeasureSource,
};

/// Log-integrands this far below their peak are dropped.
const LOG_TRIM: f64 = 60.0;
/// Geometric samples in the weak-norm scan.
const WEAK_SAMPLES: usize = 400;
/// Samples of the layer-cake log-integrand used to locate its mass.
const CAKE_SAMPLES: usize = 2001;
/// Samples per initial quadrature panel of the layer-cake integral.
const CAKE_PANEL: usize = 8;

fn check_p(profile: &RadialProfile, exps: &Exponents) -> Result<()> {
    if profile.d != exps.d || (profile.p - exps.p).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "profile built for (d, p) = ({}, {}) evaluated with ({}, {})",
            profile.d, profile.p, exps.d, exps.p
        )));
    }
    Ok(())
}

/// `int |u|^p / |x|^p dx = |S^{d-1}| int |psi|^p ds`.
pub fn hardy_term(profile: &RadialProfile, exps: &Exponents) -> Result<f64> {
    check_p(profile, exps)?;
    Ok(geometry(exps.d).sphere_area * integrate_power(profile, exps.p)?)
}

/// `int |grad u|^p dx = |S^{d-1}| int |psi' - k psi|^p ds` with `k = (d-p)/p`.
pub fn dirichlet_energy(profile: &RadialProfile, exps: &Exponents) -> Result<f64> {
    check_p(profile, exps)?;
    let area = geometry(exps.d).sphere_area;
    let k = exps.ground_state_power();
    let p = exps.p;
    if p == 2.0 {
        // cross term integrates to zero for profiles vanishing at both ends
        return Ok(area
            * (k * k * integrate_power(profile, 2.0)?
                + integrate_derivative_power(profile, 2.0)?));
    }
    let inner = match &profile.shape {
        Shape::ClosedForm(ClosedForm::PiecewisePower { eps }) => {
            ((k + eps).powf(p) + (k - eps).abs().powf(p)) / (p * eps)
        }
        Shape::ClosedForm(_) => integrate_closed_form(profile, |s| {
            (profile.dpsi(s) - k * profile.psi(s)).abs().powf(p)
        }),
        Shape::Sampled(smp) => {
            integrate_sampled_with_derivative(smp, |v, dv| (dv - k * v).abs().powf(p))
        }
    };
    ensure_finite(area * inner, "Dirichlet energy")
}

/// `int |u|^power |x|^{-alpha} dx` for the radial `u` of a profile.
pub fn weighted_power_integral(profile: &RadialProfile, power: f64, alpha: f64) -> Result<f64> {
    let d = profile.d as f64;
    let area = geometry(profile.d).sphere_area;
    let rate = d - alpha - power * profile.weight_power();
    let value = match &profile.shape {
        Shape::ClosedForm(ClosedForm::PiecewisePower { eps }) => {
            let (left, right) = (rate + power * eps, power * eps - rate);
            if !(left > 0.0 && right > 0.0) {
                return Err(Error::Divergent(format!(
                    "int |u|^{power} |x|^-{alpha} diverges for the piecewise power eps = {eps}"
                )));
            }
            1.0 / left + 1.0 / right
        }
        Shape::ClosedForm(_) => {
            let g = |s: f64| (d - alpha) * s + power * profile.ln_u(s);
            let (lo, hi) = profile.support();
            let peak = (0..=1600)
                .map(|i| g(lo + (hi - lo) * i as f64 / 1600.0))
                .fold(f64::NEG_INFINITY, f64::max);
            let at_ends = g(-CLOSED_FORM_SCAN).max(g(CLOSED_FORM_SCAN));
            if at_ends > peak - LOG_TRIM {
                return Err(Error::Divergent(format!(
                    "int |u|^{power} |x|^-{alpha} does not decay in the log variable"
                )));
            }
            integrate_closed_form(profile, |s| (g(s) - peak).exp()) * peak.exp()
        }
        Shape::Sampled(smp) => {
            let grid = smp.grid();
            let vals: Vec<f64> = grid
                .nodes()
                .map(|s| ((d - alpha) * s + power * profile.ln_u(s)).exp())
                .collect();
            simpson(&vals, grid.spacing())
        }
    };
    ensure_finite(area * value, "weighted power integral")
}

/// Distribution function of a sum of disjoint rescaled copies of one profile.
pub struct PieceMeasure<'a> {
    sets: LevelSets<'a>,
    /// `(ln a, -d ln lambda + ln multiplicity)` per distinct piece scale, heaviest first
    scales: Vec<(f64, f64)>,
    /// `ln |{phi > 0}|` when finite
    ln_full: Option<f64>,
}

impl<'a> PieceMeasure<'a> {
    pub fn new(u: &'a TrialFunction) -> Self {
        let d = u.dimension() as f64;
        let mut groups: Vec<((f64, f64), usize)> = Vec::new();
        for pc in u.pieces() {
            let key = (pc.amplitude, pc.dilation);
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, n)) => *n += 1,
                None => groups.push((key, 1)),
            }
        }
        let mut scales: Vec<(f64, f64)> = groups
            .into_iter()
            .map(|((a, lam), n)| (a.ln(), -d * lam.ln() + (n as f64).ln()))
            .collect();
        scales.sort_by(|x, y| y.1.total_cmp(&x.1));
        let sets = LevelSets::new(u.base());
        let ln_full = sets
            .bounded_support()
            .then(|| sets.ln_measure(sets.ln_value_range().0 - 1.0))
            .filter(|v| v.is_finite());
        Self {
            sets,
            scales,
            ln_full,
        }
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.sets.is_nonincreasing()
    }
}

impl MeasureSource for PieceMeasure<'_> {
    fn ln_measure(&self, ln_t: f64) -> f64 {
        let (lo, hi) = self.sets.ln_value_range();
        let mut acc = f64::NEG_INFINITY;
        for (ln_a, ln_w) in &self.scales {
            if let Some(full) = self.ln_full {
                // the remaining scales are lighter still
                if ln_w + full < acc - 40.0 {
                    break;
                }
                if ln_t - ln_a < lo {
                    acc = ln_add_exp(acc, ln_w + full);
                    continue;
                }
            }
            if ln_t - ln_a >= hi && !self.sets.unbounded_above() {
                continue;
            }
            acc = ln_add_exp(acc, ln_w + self.sets.ln_measure(ln_t - ln_a));
        }
        acc
    }

    fn ln_value_range(&self) -> (f64, f64) {
        let (lo, hi) = self.sets.ln_value_range();
        let shift = |f: fn(f64, f64) -> f64, init: f64| {
            self.scales.iter().map(|(ln_a, _)| *ln_a).fold(init, f)
        };
        (
            lo + shift(f64::min, f64::INFINITY),
            hi + shift(f64::max, f64::NEG_INFINITY),
        )
    }

    fn unbounded_above(&self) -> bool {
        self.sets.unbounded_above()
    }

    fn bounded_support(&self) -> bool {
        self.sets.bounded_support()
    }

    fn dimension(&self) -> u32 {
        self.sets.dimension()
    }
}

/// Location and value of the weak-norm supremum `sup_t t |{|u| > t}|^{1/q}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakMaximum {
    pub value: f64,
    pub level: f64,
}

/// `sup_t t |{|u| > t}|^{1/q}` from a geometric scan with golden-section refinement.
pub fn weak_norm_of(src: &impl MeasureSource, q: f64) -> Result<WeakMaximum> {
    if !(q > 1.0) {
        return Err(Error::Domain(format!(
            "Lorentz index q = {q} must exceed 1"
        )));
    }
    let (lo, hi) = src.ln_value_range();
    if !(hi.is_finite()) {
        return Ok(WeakMaximum {
            value: 0.0,
            level: 0.0,
        });
    }
    let lo = if lo.is_finite() && lo < hi {
        lo
    } else {
        hi - 1.0
    };
    let h = |tau: f64| tau + src.ln_measure(tau) / q;
    let taus: Vec<f64> = (0..WEAK_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (WEAK_SAMPLES - 1) as f64)
        .collect();
    let vals: Vec<f64> = taus.iter().map(|&t| h(t)).collect();
    let best = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Ok(WeakMaximum {
            value: 0.0,
            level: 0.0,
        });
    }
    let last = WEAK_SAMPLES - 1;
    // refine the three best brackets
    let mut order: Vec<usize> = (0..WEAK_SAMPLES).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    let mut candidates: Vec<(f64, f64)> = taus.iter().cloned().zip(vals.iter().cloned()).collect();
    for &i in order.iter().take(3) {
        let (a, b) = (taus[i.saturating_sub(1)], taus[(i + 1).min(last)]);
        let x = golden_max(&h, a, b);
        candidates.push((x, h(x)));
    }
    let top = candidates
        .iter()
        .map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-10 * top.abs().max(1.0);
    let (tau, value) = candidates
        .into_iter()
        .filter(|c| c.1 >= top - tie)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("scan is nonempty");
    let edge = 1e-6 * (hi - lo);
    if src.unbounded_above() && tau >= hi - edge {
        return Err(Error::Divergent(
            "weak norm supremum runs into the singularity".into(),
        ));
    }
    if !src.bounded_support() && tau <= lo + edge && vals[1] <= vals[0] {
        return Err(Error::Divergent(
            "weak norm supremum runs off to t -> 0".into(),
        ));
    }
    Ok(WeakMaximum {
        value: value.exp(),
        level: tau.exp(),
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a <= 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        x1
    } else {
        x2
    }
}

/// `ln ||u||_{q,s}^s = ln(q int_0^inf t^{s-1} mu(t)^{s/q} dt)` in the variable `tau = ln t`.
fn ln_layer_cake(src: &impl MeasureSource, q: f64, s: f64) -> Result<f64> {
    let (lo, hi) = src.ln_value_range();
    if !hi.is_finite() {
        return Ok(f64::NEG_INFINITY);
    }
    let lo = if lo.is_finite() && lo < hi {
        lo
    } else {
        hi - 1.0
    };
    let g = |tau: f64| s * tau + (s / q) * src.ln_measure(tau);
    let taus: Vec<f64> = (0..CAKE_SAMPLES)
        .map(|i| lo + (hi - lo) * i as f64 / (CAKE_SAMPLES - 1) as f64)
        .collect();
    let vals: Vec<f64> = taus.iter().map(|&t| g(t)).collect();
    let peak = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let last = CAKE_SAMPLES - 1;
    if src.unbounded_above() && vals[last] > peak - LOG_TRIM {
        return Err(Error::Divergent(format!(
            "layer-cake integrand for (q, s) = ({q}, {s}) does not decay at large t"
        )));
    }
    if !src.bounded_support() && vals[0] > peak - LOG_TRIM {
        return Err(Error::Divergent(format!(
            "layer-cake integrand for (q, s) = ({q}, {s}) does not decay at small t"
        )));
    }
    let first = vals.iter().position(|v| *v > peak - LOG_TRIM).unwrap_or(0);
    let end = vals
        .iter()
        .rposition(|v| *v > peak - LOG_TRIM)
        .unwrap_or(last);
    let (i0, i1) = (first.saturating_sub(1), (end + 1).min(last));
    let mut panels: Vec<f64> = (i0..i1).step_by(CAKE_PANEL).map(|i| taus[i]).collect();
    panels.push(taus[i1]);
    let mut total = gauss_kronrod_panels(|t| (g(t) - peak).exp(), &panels, 1e-11);
    if src.bounded_support() && first == 0 {
        // below the smallest value the superlevel set is the whole support
        total += (g(lo) - peak).exp() / s;
    }
    if !(total > 0.0) {
        return Err(Error::Numeric(format!(
            "layer-cake integral for (q, s) = ({q}, {s}) vanished"
        )));
    }
    Ok(q.ln() + peak + total.ln())
}

/// `||u||_{L^{q,s}}` for any distribution source; `s = inf` is the weak norm.
pub fn lorentz_norm_of(src: &impl MeasureSource, q: f64, s: LorentzIndex) -> Result<f64> {
    match s {
        LorentzIndex::Infinite => Ok(weak_norm_of(src, q)?.value),
        LorentzIndex::Finite(s) => {
            if !(q > 1.0 && s >= 1.0) {
                return Err(Error::Domain(format!(
                    "Lorentz indices need q > 1, s >= 1; got ({q}, {s})"
                )));
            }
            ensure_finite((ln_layer_cake(src, q, s)? / s).exp(), "Lorentz norm")
        }
    }
}

/// `||u||_{L^{q,s}}` of the radial function induced by `profile`.
pub fn lorentz_norm(profile: &RadialProfile, q: f64, s: impl Into<LorentzIndex>) -> Result<f64> {
    let s = s.into();
    match piecewise_power_lorentz(profile, q, s) {
        Some(v) => v,
        None => lorentz_norm_of(&LevelSets::new(profile), q, s),
    }
}

/// Exact Lorentz norm of `|x|^{-k} e^{-eps |log |x||}` for `eps < k`, where `u` is
/// decreasing with `|{u > t}| = |B| t^{-d/(k -+ eps)}` for `t` above and below 1.
fn piecewise_power_lorentz(
    profile: &RadialProfile,
    q: f64,
    s: LorentzIndex,
) -> Option<Result<f64>> {
    let Shape::ClosedForm(ClosedForm::PiecewisePower { eps }) = profile.shape else {
        return None;
    };
    let k = profile.weight_power();
    if !(eps < k) || !(q > 1.0) {
        return None;
    }
    let d = profile.d as f64;
    let ball = geometry(profile.d).ball_volume;
    // t^{1 - d/(q (k + eps))} on (0, 1) and t^{1 - d/(q (k - eps))} on (1, inf)
    let below = 1.0 - d / (q * (k + eps));
    let above = d / (q * (k - eps)) - 1.0;
    if !(below > 0.0 && above > 0.0) {
        return Some(Err(Error::Divergent(format!(
            "L^({q}, {s}) norm of the piecewise power eps = {eps} is infinite"
        ))));
    }
    Some(match s {
        LorentzIndex::Infinite => Ok(ball.powf(1.0 / q)),
        LorentzIndex::Finite(s) => {
            let total = q * ball.powf(s / q) * (1.0 / (s * below) + 1.0 / (s * above));
            ensure_finite(total.powf(1.0 / s), "Lorentz norm")
        }
    })
}

/// `||u||_{q,s}^s / int |u|^s |x|^{-alpha} dx` with `alpha = d (1 - s/q)`.
///
/// For radial nonincreasing `u` this equals `|B(0,1)|^{s/q - 1}`.
pub fn radial_weight_identity_check(profile: &RadialProfile, q: f64, s: f64) -> Result<f64> {
    let d = profile.d as f64;
    let alpha = d * (1.0 - s / q);
    if !(alpha >= 0.0 && alpha < d) {
        return Err(Error::Domain(format!(
            "alpha = {alpha} outside [0, d) for (q, s) = ({q}, {s})"
        )));
    }
    let sets = LevelSets::new(profile);
    if !sets.is_nonincreasing() {
        return Err(Error::Unsupported(
            "radial weight identity needs a nonincreasing u".into(),
        ));
    }
    let lhs = ln_layer_cake(&sets, q, s)?;
    let rhs = weighted_power_integral(profile, s, alpha)?;
    ensure_finite((lhs - rhs.ln()).exp(), "radial weight ratio")
}

/// `ln int_{B(0, e^l)} |u|^p dx - shift` for the radial `u` of a profile.
fn ln_ball_mass(profile: &RadialProfile, p: f64, ln_r: f64, shift: f64) -> f64 {
    let d = profile.d as f64;
    let area = geometry(profile.d).sphere_area;
    let g = |s: f64| (d * s + p * profile.ln_u(s) - shift).exp();
    let value = match &profile.shape {
        Shape::ClosedForm(_) => {
            let (lo, hi) = profile.support();
            let top = ln_r.min(hi);
            if top <= lo {
                return f64::NEG_INFINITY;
            }
            let breaks: Vec<f64> = profile
                .breakpoints()
                .into_iter()
                .filter(|b| *b < top)
                .collect();
            integrate_between(g, f64::NEG_INFINITY, top, &breaks, 1e-12)
        }
        Shape::Sampled(smp) => {
            let grid = smp.grid();
            let h = grid.spacing();
            let mut acc = 0.0;
            let mut prev = (grid.s_min(), g(grid.s_min()));
            for s in grid.nodes().skip(1) {
                if s >= ln_r {
                    acc += 0.5 * (ln_r - prev.0) * (prev.1 + g(ln_r));
                    break;
                }
                let gs = g(s);
                acc += 0.5 * h * (prev.1 + gs);
                prev = (s, gs);
            }
            acc
        }
    };
    (area * value).ln()
}

/// Lower bound of `sup_{x, R} R^{-p} int_{B(x,R)} |u|^p` over the piece centres.
///
/// At each centre the own piece contributes its partial ball mass and every
/// other piece counts only once its support lies inside the ball.
pub fn morrey_seminorm(u: &TrialFunction, p: f64) -> Result<f64> {
    const CELLS: usize = 800;
    let base = u.base();
    let d = base.d as f64;
    let (lo, hi) = base.support();
    let radius = base.support_radius();
    let step = (hi - lo) / CELLS as f64;
    let node = |i: usize| lo + step * i as f64;
    // running maximum of the log-integrand keeps the ball masses in range
    let integrand = |s: f64| d * s + p * base.ln_u(s);
    let mut shifts = Vec::with_capacity(CELLS + 1);
    let mut run = f64::NEG_INFINITY;
    for i in 0..=CELLS {
        run = run.max(integrand(node(i)));
        shifts.push(run);
    }
    if run == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let shift_at = |x: f64| {
        let i = (((x - lo) / step).floor().max(0.0) as usize).min(CELLS);
        shifts[i].max(integrand(x.min(hi)))
    };
    let ln_total = ln_ball_mass(base, p, hi, run) + run;
    let ln_mass = |x: f64| -> f64 {
        if radius.is_some() && x >= hi {
            return ln_total;
        }
        let sh = shift_at(x);
        if sh == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        ln_ball_mass(base, p, x, sh) + sh
    };
    let table: Vec<f64> = (0..=CELLS).map(|i| ln_mass(node(i))).collect();
    let pieces = u.pieces();
    let mut best = 0.0f64;
    for (k, own) in pieces.iter().enumerate() {
        let mut others: Vec<(f64, f64)> = pieces
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, pc)| {
                let reach = norm(&sub(&pc.center, &own.center))
                    + radius.unwrap_or(f64::INFINITY) / pc.dilation;
                (
                    reach,
                    p * pc.amplitude.ln() - d * pc.dilation.ln() + ln_total,
                )
            })
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0));
        let ln_lam = own.dilation.ln();
        let ln_own = p * own.amplitude.ln() - d * ln_lam;
        let ln_contained = |ln_r: f64| -> f64 {
            others
                .iter()
                .take_while(|(reach, _)| reach.ln() <= ln_r)
                .map(|(_, w)| *w)
                .fold(f64::NEG_INFINITY, ln_add_exp)
        };
        let combine = |ln_r: f64, own_mass: f64| {
            (ln_add_exp(ln_own + own_mass, ln_contained(ln_r)) - p * ln_r).exp()
        };
        let value = |ln_r: f64| combine(ln_r, ln_mass(ln_r + ln_lam));
        let (mut imax, mut vmax) = (0, f64::NEG_INFINITY);
        for (i, m) in table.iter().enumerate() {
            let v = combine(node(i) - ln_lam, *m);
            if v > vmax {
                imax = i;
                vmax = v;
            }
        }
        let x = golden_max(
            &value,
            node(imax.saturating_sub(1)) - ln_lam,
            node((imax + 1).min(CELLS)) - ln_lam,
        );
        best = best.max(vmax).max(value(x));
        // jumps happen where another piece becomes fully contained
        for (reach, _) in others.iter().filter(|o| o.0.is_finite()) {
            best = best.max(value(reach.ln()));
        }
    }
    ensure_finite(best, "Morrey seminorm")
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Surface area of the unit sphere in `R^{d-1}`.
fn equator_area(d: u32) -> f64 {
    geometry(d - 1).sphere_area
}

/// `int |phi(x)|^p |x - y|^{-p} dx` for a compactly supported radial `phi` and `|y| = w`.
fn offset_hardy(profile: &RadialProfile, p: f64, w: f64, radius: f64) -> f64 {
    let d = profile.d;
    let df = d as f64;
    if w == 0.0 {
        let g = |r: f64| profile.u(r).powf(p) * r.powf(df - 1.0 - p);
        return geometry(d).sphere_area * gauss_kronrod(g, 0.0, radius, 1e-11);
    }
    if w >= 1.5 * radius {
        offset_hardy_far(profile, p, w, radius)
    } else {
        offset_hardy_near(profile, p, w, radius)
    }
}

/// Polar coordinates about the bump centre; needs `w > radius`, where the kernel is smooth.
fn offset_hardy_far(profile: &RadialProfile, p: f64, w: f64, radius: f64) -> f64 {
    let d = profile.d;
    let outer = |rho: f64| {
        let k = |t: f64| {
            (rho * rho + w * w - 2.0 * rho * w * t.cos()).powf(-0.5 * p)
                * t.sin().powi(d as i32 - 2)
        };
        profile.u(rho).powf(p) * rho.powi(d as i32 - 1) * gauss_kronrod(k, 0.0, PI, 1e-12)
    };
    equator_area(d) * gauss_kronrod(outer, 0.0, radius, 1e-11)
}

/// Polar coordinates about the evaluation point.
fn offset_hardy_near(profile: &RadialProfile, p: f64, w: f64, radius: f64) -> f64 {
    let d = profile.d;
    let df = d as f64;
    let inner = |r: f64| {
        if r <= 0.0 {
            return 0.0;
        }
        // points y + r omega with angle t to y lie inside the support for t >= t_min
        let c = (radius * radius - w * w - r * r) / (2.0 * w * r);
        if c <= -1.0 {
            return 0.0;
        }
        let t_min = if c >= 1.0 { 0.0 } else { c.acos() };
        let f = |t: f64| {
            let rho2 = (w * w + r * r + 2.0 * w * r * t.cos()).max(0.0);
            profile.u(rho2.sqrt()).powf(p) * t.sin().powi(d as i32 - 2)
        };
        r.powf(df - 1.0 - p) * gauss_kronrod(f, t_min, PI, 1e-11)
    };
    let mut breaks = vec![(radius - w).abs()];
    if w < radius {
        breaks.push(radius - w);
    }
    equator_area(d) * integrate_between(inner, 0.0, w + radius, &breaks, 1e-10)
}

/// Outcome of the supremum over translations of the Hardy integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardySupremum {
    pub value: f64,
    pub point: Vec<f64>,
    /// False when the value is only a lower bound of the supremum
    /// (radial profiles that are not nonincreasing).
    pub certified: bool,
}

/// `sup_y int |u|^p / |x - y|^p dx`; candidates plus compass-search refinement for bubbles.
pub fn translation_sup_hardy(u: &TrialFunction, exps: &Exponents) -> Result<f64> {
    Ok(hardy_supremum(u, exps)?.value)
}

pub fn hardy_supremum(u: &TrialFunction, exps: &Exponents) -> Result<HardySupremum> {
    let base = u.base();
    check_p(base, exps)?;
    let d = exps.d as usize;
    let p = exps.p;
    let Some(radius) = base.support_radius() else {
        if !u.is_single_radial() {
            return Err(Error::Unsupported(
                "translated copies need a compactly supported profile".into(),
            ));
        }
        let certified = LevelSets::new(base).is_nonincreasing();
        return Ok(HardySupremum {
            value: hardy_term(base, exps)?,
            point: u.pieces()[0].center.clone(),
            certified,
        });
    };
    let pieces = u.pieces();
    let weights: Vec<f64> = pieces
        .iter()
        .map(|pc| pc.energy_weight(p, exps.d))
        .collect();
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut at = |y: &[f64]| -> f64 {
        pieces
            .iter()
            .zip(&weights)
            .map(|(pc, wt)| {
                let w = pc.dilation * norm(&sub(y, &pc.center));
                let key = w.to_bits();
                let h = *cache
                    .entry(key)
                    .or_insert_with(|| offset_hardy(base, p, w, radius));
                wt * h
            })
            .sum()
    };
    let mut best_y = pieces[0].center.clone();
    let mut best = f64::NEG_INFINITY;
    for pc in pieces {
        let v = at(&pc.center);
        if v > best {
            best = v;
            best_y = pc.center.clone();
        }
    }
    if pieces.len() > 1 {
        let own = pieces
            .iter()
            .find(|pc| pc.center == best_y)
            .map(|pc| pc.dilation)
            .unwrap_or(1.0);
        let mut step = 0.25 * radius / own;
        let stop = 1e-3 * radius / own;
        let mut evals = 0;
        while step > stop && evals < 400 {
            let mut moved = false;
            for axis in 0..d {
                for dir in [1.0, -1.0] {
                    let mut y = best_y.clone();
                    y[axis] += dir * step;
                    let v = at(&y);
                    evals += 1;
                    if v > best {
                        best = v;
                        best_y = y;
                        moved = true;
                    }
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
    }
    Ok(HardySupremum {
        value: ensure_finite(best, "Hardy supremum")?,
        point: best_y,
        certified: base.support_radius().is_some() && LevelSets::new(base).is_nonincreasing(),
    })
}

/// `(A - c_H B)^theta B^{1-theta} / ||u||_{p*,r}^p`, zero when `B = 0` and `theta < 1`.
pub fn interpolation_quotient(report: &FunctionalReport, exps: &Exponents) -> Result<f64> {
    quotient_from_parts(report.h_reduced, report.b, report.lorentz, exps)
}

fn quotient_from_parts(h: f64, b: f64, norm_value: f64, exps: &Exponents) -> Result<f64> {
    if !(norm_value > 0.0) {
        return Err(Error::Domain(
            "interpolation quotient of a function with zero norm".into(),
        ));
    }
    let theta = exps.theta;
    if b <= 0.0 && theta < 1.0 {
        return Ok(0.0);
    }
    let num = h.max(0.0).powf(theta) * b.powf(1.0 - theta);
    ensure_finite(num / norm_value.powf(exps.p), "interpolation quotient")
}

/// One entry of the Lorentz table in a report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzValue {
    pub q: f64,
    pub s: LorentzIndex,
    pub value: f64,
}

/// All functionals of one trial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    /// `int |grad u|^p`
    pub a: f64,
    /// `sup_y int |u|^p / |x - y|^p`
    pub b: f64,
    /// `A - ((d-p)/p)^p B`
    pub h_reduced: f64,
    /// `||u||_{p*, r}`
    pub lorentz: f64,
    pub lorentz_table: Vec<LorentzValue>,
    /// `||u||_{p*, inf}`
    pub weak_norm: f64,
    pub morrey: f64,
    pub quotient: f64,
    pub hardy_certified: bool,
}

/// Dirichlet energy of a trial function, summed piecewise.
pub fn trial_dirichlet_energy(u: &TrialFunction, exps: &Exponents) -> Result<f64> {
    let single = dirichlet_energy(u.base(), exps)?;
    Ok(u.pieces()
        .iter()
        .map(|pc| pc.energy_weight(exps.p, exps.d))
        .sum::<f64>()
        * single)
}

/// Evaluates every functional of `u` at the exponents `exps`.
pub fn evaluate(u: &TrialFunction, exps: &Exponents) -> Result<FunctionalReport> {
    let a = trial_dirichlet_energy(u, exps)?;
    let sup = hardy_supremum(u, exps)?;
    let b = sup.value;
    let h_reduced = a - exps.hardy_constant() * b;
    let src = PieceMeasure::new(u);
    let (weak_norm, lorentz) = if u.is_single_radial() {
        (
            lorentz_norm(u.base(), exps.p_star, LorentzIndex::Infinite)?,
            lorentz_norm(u.base(), exps.p_star, exps.r)?,
        )
    } else {
        let weak_norm = weak_norm_of(&src, exps.p_star)?.value;
        let lorentz = match exps.r {
            LorentzIndex::Infinite => weak_norm,
            r => lorentz_norm_of(&src, exps.p_star, r)?,
        };
        (weak_norm, lorentz)
    };
    let morrey = morrey_seminorm(u, exps.p)?;
    let quotient = quotient_from_parts(h_reduced, b, lorentz, exps)?;
    Ok(FunctionalReport {
        a,
        b,
        h_reduced,
        lorentz,
        lorentz_table: vec![
            LorentzValue {
                q: exps.p_star,
                s: exps.r,
                value: lorentz,
            },
            LorentzValue {
                q: exps.p_star,
                s: LorentzIndex::Infinite,
                value: weak_norm,
            },
        ],
        weak_norm,
        morrey,
        quotient,
        hardy_certified: sup.certified,
    })
}
