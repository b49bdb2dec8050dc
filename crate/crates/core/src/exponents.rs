//! Exponent bookkeeping and the geometric constants of the unit sphere and ball.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Secondary Lorentz index `r`, which may be infinite.
///
/// `Infinite` orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LorentzIndex {
    Finite(f64),
    Infinite,
}

impl LorentzIndex {
    pub fn is_infinite(self) -> bool {
        matches!(self, LorentzIndex::Infinite)
    }

    /// `1/r`, with `1/inf = 0`.
    pub fn recip(self) -> f64 {
        match self {
            LorentzIndex::Finite(r) => 1.0 / r,
            LorentzIndex::Infinite => 0.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            LorentzIndex::Finite(r) => Some(r),
            LorentzIndex::Infinite => None,
        }
    }

    /// `min(self, other)` where `other` is finite.
    pub fn min_with(self, other: f64) -> f64 {
        match self {
            LorentzIndex::Finite(r) => r.min(other),
            LorentzIndex::Infinite => other,
        }
    }
}

impl From<f64> for LorentzIndex {
    fn from(r: f64) -> Self {
        if r.is_infinite() && r > 0.0 {
            LorentzIndex::Infinite
        } else {
            LorentzIndex::Finite(r)
        }
    }
}

impl PartialOrd for LorentzIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use LorentzIndex::*;
        match (self, other) {
            (Infinite, Infinite) => Some(Ordering::Equal),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for LorentzIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LorentzIndex::Finite(r) => write!(f, "{r}"),
            LorentzIndex::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for LorentzIndex {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LorentzIndex::Finite(r) => serializer.serialize_f64(*r),
            LorentzIndex::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LorentzIndex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct IndexVisitor;

        impl Visitor<'_> for IndexVisitor {
            type Value = LorentzIndex;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a positive number or the string \"inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<LorentzIndex, E> {
                Ok(LorentzIndex::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<LorentzIndex, E> {
                Ok(LorentzIndex::Finite(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<LorentzIndex, E> {
                Ok(LorentzIndex::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<LorentzIndex, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(LorentzIndex::Infinite),
                    other => other
                        .parse::<f64>()
                        .map(LorentzIndex::Finite)
                        .map_err(|_| E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        deserializer.deserialize_any(IndexVisitor)
    }
}

/// Closed interval of admissible interpolation exponents; may be empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaWindow {
    pub lower: f64,
    pub upper: f64,
}

impl ThetaWindow {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn contains(&self, theta: f64) -> bool {
        !self.is_empty() && theta >= self.lower && theta <= self.upper
    }
}

/// The tuple `(d, p, p*, r, theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub d: u32,
    pub p: f64,
    pub p_star: f64,
    pub r: LorentzIndex,
    pub theta: f64,
    pub window: ThetaWindow,
}

/// Validates `(d, p, r)` and fills in `p*` and the admissible theta window.
///
/// `theta` defaults to the lower window endpoint (clamped to `[0, 1]`); use
/// [`Exponents::with_theta`] to pick another value.
pub fn make_exponents(d: u32, p: f64, r: impl Into<LorentzIndex>) -> Result<Exponents> {
    let r = r.into();
    if d < 2 {
        return Err(Error::Domain(format!("dimension d = {d} violates d >= 2")));
    }
    let df = d as f64;
    if !(p >= 2.0 && p < df) {
        return Err(Error::Domain(format!("p = {p} violates 2 <= p < d = {d}")));
    }
    match r {
        LorentzIndex::Finite(rv) if !(rv >= p) || !rv.is_finite() => {
            return Err(Error::Domain(format!("r = {rv} violates r >= p = {p}")));
        }
        _ => {}
    }
    let p_star = p * df / (df - p);
    let window = ThetaWindow {
        lower: p / r.min_with(p_star),
        // (r - p)/(p r) rounds once, so the d = 3, r = 6 window is exactly {1/3}
        upper: match r {
            LorentzIndex::Finite(rv) => (rv - p) / (p * rv),
            LorentzIndex::Infinite => 1.0 / p,
        },
    };
    Ok(Exponents {
        d,
        p,
        p_star,
        r,
        theta: window.lower.clamp(0.0, 1.0),
        window,
    })
}

impl Exponents {
    pub fn with_theta(mut self, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::Domain(format!(
                "theta = {theta} violates 0 <= theta <= 1"
            )));
        }
        self.theta = theta;
        Ok(self)
    }

    /// Sharp Hardy constant `((d - p)/p)^p`.
    pub fn hardy_constant(&self) -> f64 {
        ((self.d as f64 - self.p) / self.p).powf(self.p)
    }

    /// Exponent `(d - p)/p` of the ground-state weight `|x|^{1 - d/p}`.
    pub fn ground_state_power(&self) -> f64 {
        (self.d as f64 - self.p) / self.p
    }
}

/// Surface area of the unit sphere and volume of the unit ball in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryConstants {
    pub sphere_area: f64,
    pub ball_volume: f64,
}

/// `Gamma(d/2)` for integer `d >= 1`, from the factorial identities.
fn gamma_half_integer(d: u32) -> f64 {
    if d.is_multiple_of(2) {
        (1..d / 2).map(|k| k as f64).product()
    } else {
        // Gamma(n + 1/2) = sqrt(pi) * prod_{k=1}^{n} (k - 1/2)
        let n = d / 2;
        PI.sqrt() * (1..=n).map(|k| k as f64 - 0.5).product::<f64>()
    }
}

pub fn geometry(d: u32) -> GeometryConstants {
    let df = d as f64;
    let sphere_area = 2.0 * PI.powf(df / 2.0) / gamma_half_integer(d);
    GeometryConstants {
        sphere_area,
        ball_volume: sphere_area / df,
    }
}
