use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid in the log variable `s = log r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    s_min: f64,
    s_max: f64,
    n: usize,
}

impl LogGrid {
    /// `n` must be odd and at least 3 so composite Simpson weights apply.
    pub fn new(s_min: f64, s_max: f64, n: usize) -> Result<Self> {
        if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
            return Err(Error::Domain(format!(
                "log grid needs finite s_min < s_max, got [{s_min}, {s_max}]"
            )));
        }
        if n < 3 {
            return Err(Error::Domain(format!(
                "log grid needs n >= 3 points, got {n}"
            )));
        }
        if n.is_multiple_of(2) {
            return Err(Error::Domain(format!(
                "log grid needs an odd point count, got {n}"
            )));
        }
        Ok(Self { s_min, s_max, n })
    }

    pub fn s_min(&self) -> f64 {
        self.s_min
    }

    pub fn s_max(&self) -> f64 {
        self.s_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        (self.s_max - self.s_min) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        let i = i as f64;
        (self.s_min * (m - i) + self.s_max * i) / m
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Index of `s` if it is (to rounding) a grid node.
    pub fn node_index(&self, s: f64) -> Option<usize> {
        let x = (s - self.s_min) / self.spacing();
        let i = x.round();
        if i >= 0.0 && (i as usize) < self.n && (x - i).abs() < 1e-9 {
            Some(i as usize)
        } else {
            None
        }
    }

    /// Same interval with twice the resolution (`2n - 1` points).
    pub fn refined(&self) -> Self {
        Self {
            n: 2 * self.n - 1,
            ..*self
        }
    }

    /// Interval doubled about its midpoint, spacing preserved.
    pub fn widened(&self) -> Self {
        let mid = 0.5 * (self.s_min + self.s_max);
        let half = self.s_max - self.s_min;
        Self {
            s_min: mid - half,
            s_max: mid + half,
            n: 2 * self.n - 1,
        }
    }
}

impl Default for LogGrid {
    /// `[-40, 40]` with 16001 points: an `exp(-0.1 |s|)` tail beyond the ends
    /// carries less than 1e-3 of the mass.
    fn default() -> Self {
        Self {
            s_min: -40.0,
            s_max: 40.0,
            n: 16001,
        }
    }
}

/// Composite Simpson rule on uniformly spaced samples (odd count).
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1);
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}
