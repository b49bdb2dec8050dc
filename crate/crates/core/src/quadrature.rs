//! Integration and differentiation of profiles in the log variable, and the
//! distribution function `t -> |{x : |u(x)| > t}|` of the induced radial `u`.

use std::collections::BinaryHeap;

use crate::error::{ensure_finite, Error, Result};
use crate::exponents::geometry;
use crate::grid::simpson;
use crate::profile::{ClosedForm, RadialProfile, Sampled, Shape};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Bisection tolerance in `s` for level-set crossings.
pub const CROSSING_TOL: f64 = 1e-12;

/// Step of the `s`-scan used to split closed-form profiles into monotone pieces.
const SCAN_STEP: f64 = 0.05;

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let pair = f(c - x) + f(c + x);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive 15-point Gauss-Kronrod quadrature on a finite interval.
pub fn gauss_kronrod(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    gauss_kronrod_panels(f, &[a, b], rel_tol)
}

/// As [`gauss_kronrod`] over `[points[0], points[last]]`, starting from the panels
/// between consecutive `points` (increasing).
pub fn gauss_kronrod_panels(f: impl Fn(f64) -> f64, points: &[f64], rel_tol: f64) -> f64 {
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2).filter(|w| w[1] > w[0]) {
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    for _ in 0..4000 {
        if err <= rel_tol * total.abs() || err <= 1e-300 {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed the drift of the running updates
    heap.iter().map(|p| p.value).sum()
}

/// `int_a^inf f`, via `s = a + (1 - x)/x`.
fn integrate_right_tail(f: &impl Fn(f64) -> f64, a: f64, rel_tol: f64) -> f64 {
    gauss_kronrod(
        |x| {
            if x <= 0.0 {
                return 0.0;
            }
            let s = a + (1.0 - x) / x;
            let v = f(s) / (x * x);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        rel_tol,
    )
}

/// `int_{-inf}^b f`.
fn integrate_left_tail(f: &impl Fn(f64) -> f64, b: f64, rel_tol: f64) -> f64 {
    integrate_right_tail(&|s: f64| f(-s), -b, rel_tol)
}

/// Integral over an interval that may be unbounded on either side, split at `breaks`.
pub fn integrate_between(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    rel_tol: f64,
) -> f64 {
    let mut cuts: Vec<f64> = breaks
        .iter()
        .cloned()
        .filter(|b| *b > lo && *b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    // an unbounded side needs at least one finite anchor
    if cuts.is_empty() && !(lo.is_finite() && hi.is_finite()) {
        cuts.push(if lo.is_finite() {
            lo + 1.0
        } else if hi.is_finite() {
            hi - 1.0
        } else {
            0.0
        });
    }
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(lo);
    nodes.extend(cuts);
    nodes.push(hi);
    nodes
        .windows(2)
        .map(|w| match (w[0].is_finite(), w[1].is_finite()) {
            (true, true) => gauss_kronrod(&f, w[0], w[1], rel_tol),
            (false, true) => integrate_left_tail(&f, w[1], rel_tol),
            (true, false) => integrate_right_tail(&f, w[0], rel_tol),
            (false, false) => unreachable!("anchor inserted above"),
        })
        .sum()
}

/// Integral of `g(s)` over the support of a closed-form profile, split at its kinks.
pub(crate) fn integrate_closed_form(profile: &RadialProfile, g: impl Fn(f64) -> f64) -> f64 {
    let (lo, hi) = match profile.shape {
        Shape::ClosedForm(ClosedForm::Bump) => (f64::NEG_INFINITY, 0.0),
        _ => (f64::NEG_INFINITY, f64::INFINITY),
    };
    let mut breaks = profile.breakpoints();
    breaks.push(0.0);
    integrate_between(g, lo, hi, &breaks, 1e-13)
}

/// `int_R |psi(s)|^exponent ds`, i.e. `int_0^inf |f(r)|^exponent dr/r`.
pub fn integrate_power(profile: &RadialProfile, exponent: f64) -> Result<f64> {
    if !(exponent >= 1.0) {
        return Err(Error::Domain(format!(
            "power exponent {exponent} must be >= 1"
        )));
    }
    let value = match &profile.shape {
        Shape::ClosedForm(ClosedForm::PiecewisePower { eps }) => 2.0 / (exponent * eps),
        Shape::ClosedForm(_) => {
            integrate_closed_form(profile, |s| profile.psi(s).abs().powf(exponent))
        }
        Shape::Sampled(smp) => {
            let vals: Vec<f64> = smp
                .values()
                .iter()
                .map(|v| v.abs().powf(exponent))
                .collect();
            simpson(&vals, smp.grid().spacing())
        }
    };
    ensure_finite(value, "power integral")
}

/// Second-order central differences inside, first-order one-sided at the ends.
pub fn differentiate(samples: &Sampled) -> Sampled {
    let grid = *samples.grid();
    Sampled::from_signed(grid, difference_quotients(samples.values(), grid.spacing()))
}

fn difference_quotients(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    let mut out = Vec::with_capacity(n);
    out.push((v[1] - v[0]) / h);
    for i in 1..n - 1 {
        out.push((v[i + 1] - v[i - 1]) / (2.0 * h));
    }
    out.push((v[n - 1] - v[n - 2]) / h);
    out
}

/// Simpson integral of `g(psi, psi')` over a sampled profile.
///
/// When `s = 0` is an even-indexed interior node the grid is split there and
/// each half is differenced separately, so a kink at the origin is not smeared.
pub(crate) fn integrate_sampled_with_derivative(smp: &Sampled, g: impl Fn(f64, f64) -> f64) -> f64 {
    let grid = smp.grid();
    let h = grid.spacing();
    let v = smp.values();
    let n = v.len();
    let halves: Vec<&[f64]> = match grid.node_index(0.0) {
        Some(i0) if i0 >= 2 && n - 1 - i0 >= 2 && i0 % 2 == 0 => vec![&v[..=i0], &v[i0..]],
        _ => vec![v],
    };
    halves
        .into_iter()
        .map(|part| {
            let dv = difference_quotients(part, h);
            let vals: Vec<f64> = part.iter().zip(&dv).map(|(a, b)| g(*a, *b)).collect();
            simpson(&vals, h)
        })
        .sum()
}

/// `int_R |psi'(s)|^p ds`, i.e. `int_0^inf |f'(r)|^p r^{p-1} dr`.
pub fn integrate_derivative_power(profile: &RadialProfile, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::Domain(format!(
            "derivative exponent {p} must be >= 1"
        )));
    }
    let value = match &profile.shape {
        Shape::ClosedForm(ClosedForm::PiecewisePower { eps }) => 2.0 * eps.powf(p - 1.0) / p,
        Shape::ClosedForm(_) => integrate_closed_form(profile, |s| profile.dpsi(s).abs().powf(p)),
        Shape::Sampled(smp) => integrate_sampled_with_derivative(smp, |_, dv| dv.abs().powf(p)),
    };
    ensure_finite(value, "derivative integral")
}

/// `ln(e^b - e^a)` for `a < b`.
fn ln_diff_exp(b: f64, a: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        b
    } else {
        b + (-(a - b).exp()).ln_1p()
    }
}

/// `ln(e^a + e^b)`.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    }
}

/// Anything with a distribution function `t -> |{|u| > t}|`, queried in log scale.
pub trait MeasureSource {
    /// `ln |{|u| > e^{ln_t}}|`, `-inf` when the set is empty.
    fn ln_measure(&self, ln_t: f64) -> f64;

    /// `(lowest, highest)` value of `ln |u|` seen on the support.
    fn ln_value_range(&self) -> (f64, f64);

    /// True when `u` is unbounded and the value range is a truncation.
    fn unbounded_above(&self) -> bool;

    /// True when `|{|u| > 0}|` is finite, so the measure is constant below the value range.
    fn bounded_support(&self) -> bool;

    fn dimension(&self) -> u32;
}

#[derive(Debug, Clone, Copy)]
struct Monotone {
    a: f64,
    b: f64,
    la: f64,
    lb: f64,
}

/// Monotone decomposition of `s -> ln u(e^s)` for fast level-set queries.
///
/// Each query bisects the crossing inside every monotone piece that straddles
/// the level and sums the shell volumes `|B| (rho_out^d - rho_in^d)`.
#[derive(Debug, Clone)]
pub struct LevelSets<'a> {
    profile: &'a RadialProfile,
    pieces: Vec<Monotone>,
    ln_ball: f64,
    range: (f64, f64),
    unbounded: bool,
}

impl<'a> LevelSets<'a> {
    pub fn new(profile: &'a RadialProfile) -> Self {
        let (lo, hi) = profile.support();
        let mut nodes: Vec<f64> = match &profile.shape {
            Shape::Sampled(smp) => smp.grid().nodes().collect(),
            Shape::ClosedForm(_) => {
                let n = ((hi - lo) / SCAN_STEP).ceil() as usize;
                (0..=n)
                    .map(|i| lo + (hi - lo) * i as f64 / n as f64)
                    .collect()
            }
        };
        for b in profile.breakpoints() {
            if b > lo && b < hi {
                nodes.push(b);
            }
        }
        if profile.support_radius().is_some() {
            // resolve the decay of u towards the edge of its support
            nodes.extend((2..=14).map(|k| hi - 10f64.powi(-k)));
        }
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let vals: Vec<f64> = nodes.iter().map(|&s| profile.ln_u(s)).collect();

        // split at sign changes of the increments (flat stretches carry the previous sign)
        let mut cuts = vec![0usize];
        let mut dir = 0i8;
        for i in 1..nodes.len() {
            let step = vals[i] - vals[i - 1];
            let sign = if step > 0.0 {
                1
            } else if step < 0.0
                || (vals[i] == f64::NEG_INFINITY && vals[i - 1] != f64::NEG_INFINITY)
            {
                -1
            } else {
                0
            };
            if sign != 0 {
                if dir != 0 && sign != dir {
                    cuts.push(i - 1);
                }
                dir = sign;
            }
        }
        cuts.push(nodes.len() - 1);

        let ln_u = |s: f64| profile.ln_u(s);
        let mut knots: Vec<f64> = Vec::with_capacity(cuts.len());
        for (j, &c) in cuts.iter().enumerate() {
            if j == 0 || j + 1 == cuts.len() || c == 0 || c + 1 >= nodes.len() {
                knots.push(nodes[c]);
                continue;
            }
            // the true extremum lies within one scan cell of the sampled one
            let (a, b) = (nodes[c - 1], nodes[c + 1]);
            let is_max = vals[c] >= vals[c - 1];
            let x = golden_extremum(&ln_u, a, b, is_max);
            let better = if is_max {
                ln_u(x) > vals[c]
            } else {
                ln_u(x) < vals[c]
            };
            knots.push(if better { x } else { nodes[c] });
        }
        knots.dedup();
        let pieces: Vec<Monotone> = knots
            .windows(2)
            .map(|w| Monotone {
                a: w[0],
                b: w[1],
                la: ln_u(w[0]),
                lb: ln_u(w[1]),
            })
            .collect();

        let finite = vals.iter().cloned().filter(|v| v.is_finite());
        let lowest = finite.clone().fold(f64::INFINITY, f64::min);
        let highest = pieces
            .iter()
            .flat_map(|m| [m.la, m.lb])
            .fold(f64::NEG_INFINITY, f64::max);
        let unbounded = matches!(profile.shape, Shape::ClosedForm(_))
            && vals.len() > 1
            && vals[0] > vals[1]
            && vals[0] >= highest;
        let ball = geometry(profile.d).ball_volume;
        Self {
            profile,
            pieces,
            ln_ball: ball.ln(),
            range: (lowest, highest),
            unbounded,
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        self.profile
    }

    /// Whether `u(rho)` is nonincreasing in `rho` over the scanned support.
    pub fn is_nonincreasing(&self) -> bool {
        self.pieces
            .iter()
            .all(|m| m.lb <= m.la + 1e-12 * m.la.abs().max(1.0))
    }

    /// Intervals in `s` on which `ln u > ln_t`.
    pub fn superlevel_intervals(&self, ln_t: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = Vec::new();
        for m in &self.pieces {
            let (above_a, above_b) = (m.la > ln_t, m.lb > ln_t);
            let interval = match (above_a, above_b) {
                (true, true) => Some((m.a, m.b)),
                (false, false) => None,
                _ => {
                    let x = self.bisect(m, ln_t);
                    Some(if above_a { (m.a, x) } else { (x, m.b) })
                }
            };
            if let Some((lo, hi)) = interval {
                match out.last_mut() {
                    Some(last) if last.1 == lo => last.1 = hi,
                    _ => out.push((lo, hi)),
                }
            }
        }
        out
    }

    fn bisect(&self, m: &Monotone, ln_t: f64) -> f64 {
        let (mut a, mut b) = (m.a, m.b);
        let a_above = m.la > ln_t;
        while b - a > CROSSING_TOL {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if (self.profile.ln_u(mid) > ln_t) == a_above {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    /// Distribution function at level `t > 0`.
    pub fn measure(&self, t: f64) -> f64 {
        self.ln_measure(t.ln()).exp()
    }
}

impl MeasureSource for LevelSets<'_> {
    fn ln_measure(&self, ln_t: f64) -> f64 {
        let d = self.profile.d as f64;
        self.superlevel_intervals(ln_t)
            .into_iter()
            .map(|(lo, hi)| ln_diff_exp(d * hi, d * lo))
            .fold(f64::NEG_INFINITY, ln_add_exp)
            + self.ln_ball
    }

    fn ln_value_range(&self) -> (f64, f64) {
        self.range
    }

    fn unbounded_above(&self) -> bool {
        self.unbounded
    }

    fn bounded_support(&self) -> bool {
        self.profile.is_sampled() || self.profile.support_radius().is_some()
    }

    fn dimension(&self) -> u32 {
        self.profile.d
    }
}

fn golden_extremum(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (sign * f(x1), sign * f(x2));
    while b - a > CROSSING_TOL {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = sign * f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = sign * f(x2);
        }
    }
    0.5 * (a + b)
}

/// `|{x : |u(x)| > t}|` for the radial `u` induced by `profile`.
///
/// Returns 0 for `t >= ||u||_inf`.
pub fn distribution_function(profile: &RadialProfile, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!(
            "distribution level t = {t} must be positive"
        )));
    }
    Ok(LevelSets::new(profile).measure(t))
}

/// Samples `(t, |{|u| > t}|)` on a geometric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFunction {
    pub levels: Vec<f64>,
    pub measures: Vec<f64>,
}

impl DistributionFunction {
    /// `n` geometric levels from `t_min` up to the largest value of `u` on its scanned support.
    pub fn sample(profile: &RadialProfile, t_min: f64, n: usize) -> Result<Self> {
        if !(t_min > 0.0) || n < 2 {
            return Err(Error::Domain(
                "need t_min > 0 and at least two levels".into(),
            ));
        }
        let sets = LevelSets::new(profile);
        let (lo, hi) = (t_min.ln(), sets.ln_value_range().1);
        if !(hi > lo) {
            return Err(Error::Domain(format!("t_min = {t_min} is above sup u")));
        }
        let levels: Vec<f64> = (0..n)
            .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())
            .collect();
        let measures = levels.iter().map(|&t| sets.measure(t)).collect();
        Ok(Self { levels, measures })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::LogGrid;
    use crate::profile::ClosedForm;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn piecewise(eps: f64, d: u32) -> RadialProfile {
        RadialProfile::closed_form(ClosedForm::PiecewisePower { eps }, d, 2.0).unwrap()
    }

    fn terracini(eta: f64, d: u32) -> RadialProfile {
        RadialProfile::closed_form(ClosedForm::Terracini { eta }, d, 2.0).unwrap()
    }

    #[test]
    fn gauss_kronrod_basic() {
        assert_relative_eq!(
            gauss_kronrod(|x| x.sin(), 0.0, PI, 1e-13),
            2.0,
            max_relative = 1e-13
        );
        let v = integrate_between(
            |x| (-x * x).exp(),
            f64::NEG_INFINITY,
            f64::INFINITY,
            &[],
            1e-13,
        );
        assert_relative_eq!(v, PI.sqrt(), max_relative = 1e-12);
        // integrable log singularity
        let v = gauss_kronrod(|x: f64| -x.ln(), 0.0, 1.0, 1e-12);
        assert_relative_eq!(v, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn piecewise_power_integrals() {
        let f = piecewise(0.5, 3);
        assert_relative_eq!(integrate_power(&f, 2.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            integrate_power(&f, 6.0).unwrap(),
            2.0 / 3.0,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            integrate_derivative_power(&f, 2.0).unwrap(),
            0.5,
            max_relative = 1e-14
        );
    }

    #[test]
    fn terracini_integrals_match_sech_oracle() {
        // oracle: int (2 cosh s)^{-1} = pi/2, int sinh^2 (2 cosh s)^{-3} = pi/16
        let f = terracini(1.0, 3);
        assert_relative_eq!(
            integrate_power(&f, 2.0).unwrap(),
            PI / 2.0,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            integrate_derivative_power(&f, 2.0).unwrap(),
            PI / 16.0,
            max_relative = 1e-11
        );
        assert_relative_eq!(
            integrate_power(&f, 6.0).unwrap(),
            PI / 16.0,
            max_relative = 1e-11
        );
    }

    #[test]
    fn zero_profile_has_zero_integrals() {
        let g = LogGrid::new(-5.0, 5.0, 101).unwrap();
        let z = RadialProfile::sampled(Sampled::from_fn(g, |_| 0.0).unwrap(), 3, 2.0);
        assert_eq!(integrate_derivative_power(&z, 2.0).unwrap(), 0.0);
        assert_eq!(integrate_power(&z, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn sampled_kinked_profile_split_at_origin() {
        let f = RadialProfile::sampled(
            Sampled::from_fn(LogGrid::default(), |s| (-0.5 * s.abs()).exp()).unwrap(),
            3,
            2.0,
        );
        assert_relative_eq!(integrate_power(&f, 2.0).unwrap(), 2.0, max_relative = 1e-6);
        assert_relative_eq!(
            integrate_derivative_power(&f, 2.0).unwrap(),
            0.5,
            max_relative = 1e-4
        );
    }

    #[test]
    fn differentiate_examples() {
        let g = LogGrid::new(-1.0, 1.0, 21).unwrap();
        let lin = Sampled::from_signed(g, g.nodes().collect());
        for v in differentiate(&lin).values() {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let sq = Sampled::from_signed(g, g.nodes().map(|s| s * s).collect());
        assert_eq!(differentiate(&sq).values()[10], 0.0);
        let kink = Sampled::from_fn(g, |s| (-s.abs()).exp()).unwrap();
        assert_eq!(differentiate(&kink).values()[10], 0.0);
    }

    #[test]
    fn distribution_of_uc_at_one_is_unit_ball() {
        for c in [0.1, 0.3, 0.5] {
            let mu = distribution_function(&piecewise(c, 3), 1.0 - 1e-13).unwrap();
            assert_relative_eq!(mu, 4.0 * PI / 3.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn distribution_of_uc_above_critical() {
        let mu = distribution_function(&piecewise(2.0, 3), 0.5).unwrap();
        let expected = 4.0 * PI / 3.0 * (2f64.powf(1.2) - 0.25);
        assert_relative_eq!(mu, expected, max_relative = 1e-10);
    }

    #[test]
    fn distribution_vanishes_above_sup() {
        let f = terracini(1.0, 3);
        let sup = f.u(1e-300).min(1.0);
        assert_eq!(distribution_function(&f, 2.0 * sup).unwrap(), 0.0);
        assert!(distribution_function(&f, 0.0).is_err());
    }

    #[test]
    fn distribution_is_nonincreasing() {
        for prof in [terracini(1.0, 3), piecewise(2.0, 3), piecewise(0.3, 4)] {
            let df = DistributionFunction::sample(&prof, 1e-4, 100).unwrap();
            for w in df.measures.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn level_sets_detect_monotonicity() {
        assert!(LevelSets::new(&piecewise(0.3, 3)).is_nonincreasing());
        assert!(LevelSets::new(&piecewise(0.5, 3)).is_nonincreasing());
        assert!(!LevelSets::new(&piecewise(2.0, 3)).is_nonincreasing());
        assert!(LevelSets::new(&terracini(0.5, 3)).is_nonincreasing());
    }
}
