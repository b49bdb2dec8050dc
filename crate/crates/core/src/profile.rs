//! Radial functions in ground-state form.
//!
//! A radial `u` on `R^d` is stored through its log-variable profile `psi`:
//! `u(x) = |x|^{1 - d/p} f(|x|)` with `f(r) = psi(log r)`. For `p = 2` this is
//! the ground-state substitution `u = |x|^{-(d-2)/2} f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::LogGrid;

/// Half-width of the `s`-interval scanned for closed-form profiles.
pub const CLOSED_FORM_SCAN: f64 = 800.0;

/// Exponent of the default compactly supported bump `(1 - rho^2)^3`.
const BUMP_POWER: i32 = 3;

/// Closed-form profile families, parameterized in the log variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `psi(s) = (2 cosh(eta s))^{-(d-2)/2}`.
    Terracini { eta: f64 },
    /// `psi(s) = exp(-eps |s|)`, i.e. `f(r) = r^eps` on `(0,1]`, `r^-eps` beyond.
    PiecewisePower { eps: f64 },
    /// `u(rho) = (1 - rho^2)^3` on the unit ball, zero outside.
    Bump,
}

/// Samples of `psi` on a log grid; linear interpolation inside, zero outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sampled {
    grid: LogGrid,
    values: Vec<f64>,
}

impl Sampled {
    pub fn new(grid: LogGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::Domain(format!(
                "sample {i} is {v}; profiles must be finite and nonnegative"
            )));
        }
        Ok(Self { grid, values })
    }

    /// Signed samples, e.g. derivatives; skips the nonnegativity check.
    pub(crate) fn from_signed(grid: LogGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: LogGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &LogGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, s: f64) -> Option<(usize, f64)> {
        let (lo, hi) = (self.grid.s_min(), self.grid.s_max());
        if !(s >= lo && s <= hi) {
            return None;
        }
        let h = self.grid.spacing();
        let x = (s - lo) / h;
        let i = (x.floor() as usize).min(self.values.len() - 2);
        Some((i, x - i as f64))
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self.locate(s) {
            Some((i, w)) => (1.0 - w) * self.values[i] + w * self.values[i + 1],
            None => 0.0,
        }
    }

    /// Slope of the linear interpolant at `s`.
    pub fn slope(&self, s: f64) -> f64 {
        match self.locate(s) {
            Some((i, _)) => (self.values[i + 1] - self.values[i]) / self.grid.spacing(),
            None => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum Shape {
    Sampled(Sampled),
    ClosedForm(ClosedForm),
}

/// A radial function on `R^d` in the representation `u = |x|^{1-d/p} psi(log |x|)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub shape: Shape,
    pub d: u32,
    pub p: f64,
}

impl RadialProfile {
    pub fn closed_form(form: ClosedForm, d: u32, p: f64) -> Result<Self> {
        if d < 2 || !(p >= 1.0) {
            return Err(Error::Domain(format!(
                "profile needs d >= 2 and p >= 1, got d = {d}, p = {p}"
            )));
        }
        match form {
            ClosedForm::Terracini { eta } if !(eta > 0.0) => {
                return Err(Error::Domain(format!(
                    "Terracini eta = {eta} must be positive"
                )))
            }
            ClosedForm::PiecewisePower { eps } if !(eps > 0.0) => {
                return Err(Error::Domain(format!(
                    "piecewise power eps = {eps} must be positive"
                )))
            }
            _ => {}
        }
        Ok(Self {
            shape: Shape::ClosedForm(form),
            d,
            p,
        })
    }

    pub fn sampled(samples: Sampled, d: u32, p: f64) -> Self {
        Self {
            shape: Shape::Sampled(samples),
            d,
            p,
        }
    }

    /// Exponent `d/p - 1` with `u = rho^{-(d/p - 1)} psi`.
    pub fn weight_power(&self) -> f64 {
        self.d as f64 / self.p - 1.0
    }

    pub fn psi(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Sampled(smp) => smp.eval(s),
            Shape::ClosedForm(cf) => match *cf {
                ClosedForm::Terracini { eta } => {
                    let k = 0.5 * (self.d as f64 - 2.0);
                    (-k * ln_two_cosh(eta * s)).exp()
                }
                ClosedForm::PiecewisePower { eps } => (-eps * s.abs()).exp(),
                ClosedForm::Bump => {
                    if s >= 0.0 {
                        0.0
                    } else {
                        let e2 = (2.0 * s).exp();
                        (self.weight_power() * s).exp() * (1.0 - e2).powi(BUMP_POWER)
                    }
                }
            },
        }
    }

    /// `log psi(s)`, evaluated without forming `psi` where that would underflow.
    pub fn ln_psi(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Sampled(smp) => smp.eval(s).ln(),
            Shape::ClosedForm(cf) => match *cf {
                ClosedForm::Terracini { eta } => {
                    -0.5 * (self.d as f64 - 2.0) * ln_two_cosh(eta * s)
                }
                ClosedForm::PiecewisePower { eps } => -eps * s.abs(),
                ClosedForm::Bump => {
                    if s >= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        self.weight_power() * s + BUMP_POWER as f64 * (-(2.0 * s).exp()).ln_1p()
                    }
                }
            },
        }
    }

    /// `psi'(s)`; analytic for closed forms, slope of the interpolant for samples.
    ///
    /// At the kink of the piecewise power the one-sided value from the right is returned.
    pub fn dpsi(&self, s: f64) -> f64 {
        match &self.shape {
            Shape::Sampled(smp) => smp.slope(s),
            Shape::ClosedForm(cf) => match *cf {
                ClosedForm::Terracini { eta } => {
                    let k = 0.5 * (self.d as f64 - 2.0);
                    -k * eta * (eta * s).tanh() * self.psi(s)
                }
                ClosedForm::PiecewisePower { eps } => {
                    if s < 0.0 {
                        eps * self.psi(s)
                    } else {
                        -eps * self.psi(s)
                    }
                }
                ClosedForm::Bump => {
                    if s >= 0.0 {
                        0.0
                    } else {
                        let e2 = (2.0 * s).exp();
                        let kappa = self.weight_power();
                        let q = 1.0 - e2;
                        (kappa * s).exp()
                            * q.powi(BUMP_POWER - 1)
                            * (kappa * q - 2.0 * BUMP_POWER as f64 * e2)
                    }
                }
            },
        }
    }

    /// `u` at radius `rho > 0`.
    pub fn u(&self, rho: f64) -> f64 {
        if let Shape::ClosedForm(ClosedForm::Bump) = self.shape {
            return bump_value(rho);
        }
        if rho <= 0.0 {
            return f64::INFINITY;
        }
        self.ln_u(rho.ln()).exp()
    }

    /// `log u(e^s)`.
    pub fn ln_u(&self, s: f64) -> f64 {
        -self.weight_power() * s + self.ln_psi(s)
    }

    /// Points in `s` where `psi` or its derivative jumps.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Sampled(_) => Vec::new(),
            Shape::ClosedForm(ClosedForm::Terracini { .. }) => Vec::new(),
            Shape::ClosedForm(ClosedForm::PiecewisePower { .. } | ClosedForm::Bump) => vec![0.0],
        }
    }

    /// Interval of `s` outside which `psi` is treated as zero.
    pub fn support(&self) -> (f64, f64) {
        match &self.shape {
            Shape::Sampled(smp) => (smp.grid().s_min(), smp.grid().s_max()),
            Shape::ClosedForm(ClosedForm::Bump) => (-CLOSED_FORM_SCAN, 0.0),
            Shape::ClosedForm(_) => (-CLOSED_FORM_SCAN, CLOSED_FORM_SCAN),
        }
    }

    /// Radius of the support of `u`, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match &self.shape {
            Shape::ClosedForm(ClosedForm::Bump) => Some(1.0),
            _ => None,
        }
    }

    /// `||f||_inf = sup_s psi(s)`.
    pub fn sup_norm(&self) -> f64 {
        match &self.shape {
            Shape::Sampled(smp) => smp.values().iter().cloned().fold(0.0, f64::max),
            Shape::ClosedForm(cf) => match *cf {
                ClosedForm::Terracini { .. } => 2f64.powf(-0.5 * (self.d as f64 - 2.0)),
                ClosedForm::PiecewisePower { .. } => 1.0,
                ClosedForm::Bump => {
                    // psi = x^{kappa/2} (1 - x)^3 with x = e^{2s}; maximal at x = kappa/(kappa + 6)
                    let kappa = self.weight_power();
                    let x = kappa / (kappa + 2.0 * BUMP_POWER as f64);
                    x.powf(0.5 * kappa) * (1.0 - x).powi(BUMP_POWER)
                }
            },
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self.shape, Shape::Sampled(_))
    }
}

/// `log(2 cosh x)` without overflow.
pub(crate) fn ln_two_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// `u(rho) = (1 - rho^2)^3` for the default bump, as a function of the radius.
pub fn bump_value(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        (1.0 - rho * rho).powi(BUMP_POWER)
    }
}

/// Radial derivative of [`bump_value`].
pub fn bump_derivative(rho: f64) -> f64 {
    if rho >= 1.0 {
        0.0
    } else {
        -2.0 * BUMP_POWER as f64 * rho * (1.0 - rho * rho).powi(BUMP_POWER - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_rejects_negative_and_nan() {
        let g = LogGrid::new(-1.0, 1.0, 3).unwrap();
        assert!(Sampled::new(g, vec![0.0, -1.0, 0.0]).is_err());
        assert!(Sampled::new(g, vec![0.0, f64::NAN, 0.0]).is_err());
        assert!(Sampled::new(g, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn sampled_interpolates_and_vanishes_outside() {
        let g = LogGrid::new(-1.0, 1.0, 3).unwrap();
        let s = Sampled::new(g, vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.eval(-0.5), 1.0);
        assert_eq!(s.eval(0.25), 1.5);
        assert_eq!(s.eval(1.5), 0.0);
        assert_eq!(s.eval(-1.01), 0.0);
        assert_eq!(s.slope(0.5), -2.0);
    }

    #[test]
    fn terracini_psi_matches_radial_formula() {
        for d in [3u32, 4, 5] {
            for eta in [0.25, 1.0, 4.0] {
                let prof =
                    RadialProfile::closed_form(ClosedForm::Terracini { eta }, d, 2.0).unwrap();
                let k = 0.5 * (d as f64 - 2.0);
                for i in -40..=40 {
                    let s = i as f64 * 0.25;
                    let r: f64 = s.exp();
                    let f = r.powf(k) * (r.powf(1.0 - eta) * (1.0 + r.powf(2.0 * eta))).powf(-k);
                    assert!((f - prof.psi(s)).abs() <= 1e-12, "d={d} eta={eta} s={s}");
                }
            }
        }
    }

    #[test]
    fn bump_roundtrips_through_psi() {
        for (d, p) in [(3u32, 2.0), (5, 2.5), (4, 3.0)] {
            let prof = RadialProfile::closed_form(ClosedForm::Bump, d, p).unwrap();
            for rho in [0.01, 0.2, 0.5, 0.9, 0.999] {
                assert!((prof.u(rho) - bump_value(rho)).abs() < 1e-13);
            }
            assert_eq!(prof.u(1.5), 0.0);
            let h = 1e-6;
            for s in [-3.0, -1.0, -0.2] {
                let fd = (prof.psi(s + h) - prof.psi(s - h)) / (2.0 * h);
                assert!((fd - prof.dpsi(s)).abs() < 1e-8);
            }
            let max_sample = (1..4000)
                .map(|i| prof.psi(-8.0 * i as f64 / 4000.0))
                .fold(0.0, f64::max);
            assert!((prof.sup_norm() - max_sample).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_parameter_checks() {
        assert!(RadialProfile::closed_form(ClosedForm::Terracini { eta: 0.0 }, 3, 2.0).is_err());
        assert!(
            RadialProfile::closed_form(ClosedForm::PiecewisePower { eps: -1.0 }, 3, 2.0).is_err()
        );
    }
}
