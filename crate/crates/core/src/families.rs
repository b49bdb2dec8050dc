//! Closed-form trial families, bubble constructions and the Euler-Lagrange residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::Exponents;
use crate::grid::LogGrid;
use crate::profile::{ln_two_cosh, ClosedForm, RadialProfile};

/// `psi_eta(s) = (2 cosh(eta s))^{-(d-2)/2}` with `p = 2`.
pub fn terracini_profile(eta: f64, d: u32) -> Result<RadialProfile> {
    if d < 3 {
        return Err(Error::Domain(format!(
            "Terracini profiles need d >= 3, got {d}"
        )));
    }
    RadialProfile::closed_form(ClosedForm::Terracini { eta }, d, 2.0)
}

/// `u_c = |x|^{-(d-2)/2} f_c(|x|)` with `f_c(r) = min(r^c, r^-c)`.
pub fn uc_profile(c: f64, d: u32) -> Result<RadialProfile> {
    if d < 3 {
        return Err(Error::Domain(format!("u_c profiles need d >= 3, got {d}")));
    }
    RadialProfile::closed_form(ClosedForm::PiecewisePower { eps: c }, d, 2.0)
}

/// `u = |x|^{1-d/p} f_eps(|x|)` with `f_eps(r) = min(r^eps, r^-eps)`.
pub fn piecewise_power(eps: f64, d: u32, p: f64) -> Result<RadialProfile> {
    RadialProfile::closed_form(ClosedForm::PiecewisePower { eps }, d, p)
}

/// The polynomial bump `(1 - |x|^2)^3` on the unit ball.
pub fn default_bump(d: u32, p: f64) -> Result<RadialProfile> {
    RadialProfile::closed_form(ClosedForm::Bump, d, p)
}

/// One summand `a * phi(lambda (x - c))` of a trial function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub amplitude: f64,
    pub dilation: f64,
    pub center: Vec<f64>,
}

impl Piece {
    /// Weight `a^p lambda^{p-d}` of the scale-covariant functionals.
    pub fn energy_weight(&self, p: f64, d: u32) -> f64 {
        self.amplitude.powf(p) * self.dilation.powf(p - d as f64)
    }
}

/// A sum of rescaled, translated copies of one radial profile with disjoint supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFunction {
    base: RadialProfile,
    pieces: Vec<Piece>,
}

impl TrialFunction {
    /// The radial function itself, centred at the origin.
    pub fn radial(base: RadialProfile) -> Self {
        let d = base.d as usize;
        Self {
            base,
            pieces: vec![Piece {
                amplitude: 1.0,
                dilation: 1.0,
                center: vec![0.0; d],
            }],
        }
    }

    pub fn base(&self) -> &RadialProfile {
        &self.base
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn dimension(&self) -> u32 {
        self.base.d
    }

    /// A single unscaled copy of the base profile.
    pub fn is_single_radial(&self) -> bool {
        matches!(self.pieces.as_slice(), [pc] if pc.amplitude == 1.0 && pc.dilation == 1.0)
    }
}

fn check_bump(bump: &RadialProfile, z: &[f64]) -> Result<f64> {
    let radius = bump.support_radius().ok_or_else(|| {
        Error::Domain("bubble constructions need a compactly supported bump".into())
    })?;
    if z.len() != bump.d as usize {
        return Err(Error::Domain(format!(
            "displacement has {} components in dimension {}",
            z.len(),
            bump.d
        )));
    }
    if !(norm(z) > 0.0) {
        return Err(Error::Domain("displacement z must be nonzero".into()));
    }
    Ok(radius)
}

fn disjointness(n: usize, z: &[f64], max_radius: f64) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    let separation = n as f64 * norm(z);
    let required = 4.0 * max_radius;
    if separation < required {
        return Err(Error::Overlap {
            separation,
            required,
        });
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `u_N(x) = sum_{n=1}^N phi(x + n N z)`.
pub fn multi_bubble(n: usize, bump: &RadialProfile, z: &[f64]) -> Result<TrialFunction> {
    if n == 0 {
        return Err(Error::Domain("multi-bubble needs N >= 1".into()));
    }
    let radius = check_bump(bump, z)?;
    disjointness(n, z, radius)?;
    let step = n as f64;
    let pieces = (1..=n)
        .map(|k| Piece {
            amplitude: 1.0,
            dilation: 1.0,
            center: z.iter().map(|zi| -(k as f64) * step * zi).collect(),
        })
        .collect();
    Ok(TrialFunction {
        base: bump.clone(),
        pieces,
    })
}

/// `v_N(x) = sum_{j=1}^N 2^j phi(2^{p* j/d} (x + j N z))`.
///
/// Each summand has the same gradient energy and Hardy term as `phi`.
pub fn dyadic_chain(
    n: usize,
    bump: &RadialProfile,
    z: &[f64],
    exps: &Exponents,
) -> Result<TrialFunction> {
    if n == 0 {
        return Err(Error::Domain("dyadic chain needs N >= 1".into()));
    }
    let radius = check_bump(bump, z)?;
    let rate = exps.p_star / exps.d as f64;
    // the j = 1 copy has the widest support
    disjointness(n, z, radius / 2f64.powf(rate))?;
    let step = n as f64;
    let pieces = (1..=n)
        .map(|j| Piece {
            amplitude: 2f64.powi(j as i32),
            dilation: 2f64.powf(rate * j as f64),
            center: z.iter().map(|zi| -(j as f64) * step * zi).collect(),
        })
        .collect();
    Ok(TrialFunction {
        base: bump.clone(),
        pieces,
    })
}

/// Named generator of trial functions indexed by one real parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrialFamily {
    /// parameter: `eta`
    Terracini,
    /// parameter: `eps`
    PiecewisePower,
    /// parameter: `c`
    UcProfile,
    /// parameter: `N`
    MultiBubble { z: Option<Vec<f64>> },
    /// parameter: `N`
    DyadicChain { z: Option<Vec<f64>> },
}

impl TrialFamily {
    pub fn parameter_name(&self) -> &'static str {
        match self {
            TrialFamily::Terracini => "eta",
            TrialFamily::PiecewisePower => "eps",
            TrialFamily::UcProfile => "c",
            TrialFamily::MultiBubble { .. } | TrialFamily::DyadicChain { .. } => "N",
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            TrialFamily::Terracini => "terracini",
            TrialFamily::PiecewisePower => "piecewise_power",
            TrialFamily::UcProfile => "uc_profile",
            TrialFamily::MultiBubble { .. } => "multi_bubble",
            TrialFamily::DyadicChain { .. } => "dyadic_chain",
        }
    }

    /// Builds the member with the given parameter value.
    pub fn instantiate(&self, param: f64, exps: &Exponents) -> Result<TrialFunction> {
        let d = exps.d;
        let count = || -> Result<usize> {
            if param >= 1.0 && param.fract() == 0.0 {
                Ok(param as usize)
            } else {
                Err(Error::Domain(format!(
                    "N = {param} must be a positive integer"
                )))
            }
        };
        let displacement = |z: &Option<Vec<f64>>| {
            z.clone().unwrap_or_else(|| {
                let mut v = vec![0.0; d as usize];
                v[0] = 2.0;
                v
            })
        };
        let p2 = || -> Result<()> {
            if exps.p == 2.0 {
                Ok(())
            } else {
                Err(Error::Unsupported(format!(
                    "{} is defined for p = 2 only",
                    self.id()
                )))
            }
        };
        match self {
            TrialFamily::Terracini => {
                p2()?;
                Ok(TrialFunction::radial(terracini_profile(param, d)?))
            }
            TrialFamily::PiecewisePower => {
                Ok(TrialFunction::radial(piecewise_power(param, d, exps.p)?))
            }
            TrialFamily::UcProfile => {
                p2()?;
                Ok(TrialFunction::radial(uc_profile(param, d)?))
            }
            TrialFamily::MultiBubble { z } => {
                multi_bubble(count()?, &default_bump(d, exps.p)?, &displacement(z))
            }
            TrialFamily::DyadicChain { z } => {
                dyadic_chain(count()?, &default_bump(d, exps.p)?, &displacement(z), exps)
            }
        }
    }
}

/// Normalized residual of `-Delta w - ((d-2)^2/4)(1 - eta^2) w/|x|^2 = w^{2*-1}` for
/// `w = (d (d-2) eta^2)^{(d-2)/4} u_eta`, maximized over the grid radii.
pub fn el_residual(eta: f64, d: u32, grid: &LogGrid) -> Result<f64> {
    el_residual_scaled(eta, d, grid, 1.0)
}

/// As [`el_residual`] with the amplitude multiplied by `factor`.
pub fn el_residual_scaled(eta: f64, d: u32, grid: &LogGrid, factor: f64) -> Result<f64> {
    if !(eta > 0.0) || d < 3 {
        return Err(Error::Domain(format!(
            "need eta > 0 and d >= 3, got eta = {eta}, d = {d}"
        )));
    }
    let df = d as f64;
    let k = 0.5 * (df - 2.0);
    let power = (df + 2.0) / (df - 2.0);
    let ln_amp = 0.25 * (df - 2.0) * (df * (df - 2.0) * eta * eta).ln() + factor.ln();
    let eta2 = eta * eta;
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for s in grid.nodes().skip(1).take(grid.len() - 2) {
        let ln_psi = -k * ln_two_cosh(eta * s);
        let psi = ln_psi.exp();
        let x = (eta * s).abs();
        let e = (-2.0 * x).exp();
        let sech2 = 4.0 * e / ((1.0 + e) * (1.0 + e));
        // psi'' = k eta^2 psi (k tanh^2 - sech^2), with 1 - tanh^2 written as sech^2
        let linear = (ln_amp + (-k - 2.0) * s).exp() * k * eta2 * psi * (k * sech2 + sech2);
        let nonlinear = (power * (ln_amp + ln_psi) + (-k - 2.0) * s).exp();
        worst = worst.max((linear - nonlinear).abs());
        scale = scale.max(nonlinear);
    }
    if !(scale > 0.0) {
        return Err(Error::Numeric("residual scale vanished on the grid".into()));
    }
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::make_exponents;

    #[test]
    fn terracini_values() {
        let t = terracini_profile(1.0, 3).unwrap();
        assert!((t.psi(0.0) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((t.u(1.0) - 0.5f64.sqrt()).abs() < 1e-15);
        let t = terracini_profile(0.5, 4).unwrap();
        for s in [0.1, 1.0, 3.7, 20.0] {
            assert_eq!(t.psi(s) / t.psi(-s), 1.0);
        }
        assert!(terracini_profile(1.0, 2).is_err());
    }

    #[test]
    fn uc_sup_is_attained_at_one() {
        let u = uc_profile(0.5, 3).unwrap();
        assert_eq!(u.sup_norm(), 1.0);
        assert_eq!(u.psi(0.0), 1.0);
    }

    #[test]
    fn multi_bubble_layout() {
        let bump = default_bump(3, 2.0).unwrap();
        let u = multi_bubble(4, &bump, &[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(u.pieces().len(), 4);
        assert_eq!(u.pieces()[2].center, vec![-24.0, 0.0, 0.0]);
        assert!(matches!(
            multi_bubble(2, &bump, &[0.5, 0.0, 0.0]),
            Err(Error::Overlap { .. })
        ));
        assert!(multi_bubble(1, &bump, &[0.1, 0.0, 0.0]).is_ok());
        assert!(multi_bubble(3, &bump, &[0.0, 0.0, 0.0]).is_err());
        let smooth = uc_profile(0.5, 3).unwrap();
        assert!(multi_bubble(3, &smooth, &[2.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn dyadic_pieces_share_energy_weight() {
        let exps = make_exponents(3, 2.0, 2.0).unwrap();
        let bump = default_bump(3, 2.0).unwrap();
        let v = dyadic_chain(8, &bump, &[2.0, 0.0, 0.0], &exps).unwrap();
        let w: Vec<f64> = v
            .pieces()
            .iter()
            .map(|pc| pc.energy_weight(2.0, 3))
            .collect();
        for x in &w {
            assert!((x / w[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn residual_vanishes_on_terracini() {
        let g = LogGrid::default();
        for (eta, d) in [(1.0, 3), (0.5, 4), (0.5, 3), (2.0, 5), (1.0, 4)] {
            let r = el_residual(eta, d, &g).unwrap();
            assert!(r <= 1e-8, "eta {eta} d {d}: {r}");
        }
        assert!(el_residual_scaled(1.0, 3, &g, 2.0).unwrap() > 0.5);
    }

    #[test]
    fn family_instantiation() {
        let exps = make_exponents(3, 2.0, 6.0).unwrap();
        let fam = TrialFamily::MultiBubble { z: None };
        assert_eq!(fam.instantiate(8.0, &exps).unwrap().pieces().len(), 8);
        assert!(fam.instantiate(2.5, &exps).is_err());
        let f = TrialFamily::PiecewisePower.instantiate(0.5, &exps).unwrap();
        assert!(f.is_single_radial());
    }
}
