//! Uniform time grids and sampled traces.
//!
//! Everything in this crate lives on one uniform grid of step `h` whose
//! node set contains both the delay horizon `alpha` and the time horizon `T`.
//! Keeping every delayed lookup on a node means the integrators never
//! interpolate history.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};

/// Relative tolerance for "h divides L".
pub const DIVISIBILITY_RTOL: f64 = 1e-12;

/// Number of steps of size `step` in `length`, if `step` divides it.
pub fn steps_in(length: f64, step: f64) -> Option<usize> {
    if !(step > 0.0) || !step.is_finite() || !(length >= 0.0) || !length.is_finite() {
        return None;
    }
    let ratio = length / step;
    let n = ratio.round();
    if (ratio - n).abs() <= DIVISIBILITY_RTOL * ratio.max(1.0) {
        Some(n as usize)
    } else {
        None
    }
}

/// A uniform grid: `alpha = delay_steps * step`, `T = horizon_steps * step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub step: f64,
    pub delay_steps: usize,
    pub horizon_steps: usize,
}

impl Grid {
    /// Strict constructor: `step` must divide both `alpha` and `horizon`.
    pub fn new(alpha: f64, step: f64, horizon: f64) -> Result<Self> {
        let delay_steps = steps_in(alpha, step).ok_or_else(|| {
            Error::config(
                ErrorCode::GridMisaligned,
                format!("step {step} does not divide alpha {alpha}"),
            )
        })?;
        let horizon_steps = steps_in(horizon, step).ok_or_else(|| {
            Error::config(
                ErrorCode::GridMisaligned,
                format!("step {step} does not divide horizon {horizon}"),
            )
        })?;
        if horizon_steps == 0 {
            return Err(Error::config(
                ErrorCode::InvalidValue,
                "horizon must be positive",
            ));
        }
        Ok(Grid {
            step,
            delay_steps,
            horizon_steps,
        })
    }

    /// Grid whose step is the closest divisor of `alpha` not larger than
    /// `approx_step`, and whose horizon is the first node at or beyond
    /// `min_horizon`.
    pub fn fitted(alpha: f64, approx_step: f64, min_horizon: f64) -> Result<Self> {
        if !(approx_step > 0.0) || !(alpha >= 0.0) || !(min_horizon > 0.0) {
            return Err(Error::config(
                ErrorCode::InvalidValue,
                "step, alpha and horizon must be positive",
            ));
        }
        let (step, delay_steps) = if alpha == 0.0 {
            (approx_step, 0)
        } else {
            let n = (alpha / approx_step).round().max(1.0);
            let n = if alpha / n > approx_step * (1.0 + 1e-12) {
                n + 1.0
            } else {
                n
            };
            (alpha / n, n as usize)
        };
        let horizon_steps = (min_horizon / step * (1.0 - 1e-13)).ceil().max(1.0) as usize;
        Ok(Grid {
            step,
            delay_steps,
            horizon_steps,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.delay_steps as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon_steps as f64 * self.step
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    /// The same interval split into steps half as long.
    pub fn halved(&self) -> Grid {
        Grid {
            step: self.step / 2.0,
            delay_steps: 2 * self.delay_steps,
            horizon_steps: 2 * self.horizon_steps,
        }
    }

    /// Index of grid time `t` in `[0, T]`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let err = || Error::Range {
            time: t,
            horizon: self.horizon(),
        };
        let ratio = t / self.step;
        let n = ratio.round();
        if !(n >= 0.0) || (ratio - n).abs() > 1e-9 || n as usize > self.horizon_steps {
            return Err(err());
        }
        Ok(n as usize)
    }
}

/// Left limit of a trace at a node where it jumps; the node value itself is
/// the right limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub index: usize,
    pub left: f64,
}

/// Values of a real function at `0, h, 2h, ..., T`.
///
/// Node values are right limits. Jumps sitting on nodes carry their left
/// limit separately so that quadrature can treat each panel as smooth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTrace {
    pub step: f64,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub jumps: Vec<Jump>,
}

impl GridTrace {
    pub fn new(step: f64, values: Vec<f64>) -> Self {
        GridTrace {
            step,
            values,
            jumps: Vec::new(),
        }
    }

    pub fn with_jumps(step: f64, values: Vec<f64>, mut jumps: Vec<Jump>) -> Self {
        jumps.sort_by_key(|j| j.index);
        GridTrace {
            step,
            values,
            jumps,
        }
    }

    /// Samples `f` at every node of `[0, horizon_steps * step]`.
    pub fn from_fn(step: f64, horizon_steps: usize, f: impl Fn(f64) -> f64) -> Self {
        GridTrace::new(
            step,
            (0..=horizon_steps).map(|i| f(i as f64 * step)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.values.len().saturating_sub(1) as f64 * self.step
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    /// Left limit at node `index` (equal to the node value away from jumps).
    pub fn left(&self, index: usize) -> f64 {
        match self.jumps.binary_search_by_key(&index, |j| j.index) {
            Ok(k) => self.jumps[k].left,
            Err(_) => self.values[index],
        }
    }

    /// Value at grid time `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let ratio = t / self.step;
        let n = ratio.round();
        if n < 0.0 || (ratio - n).abs() > 1e-9 {
            return None;
        }
        self.values.get(n as usize).copied()
    }

    /// Applies `op` to the node values and to every stored left limit.
    pub fn map(&self, op: impl Fn(f64, f64) -> f64) -> GridTrace {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| op(self.time(i), v))
            .collect();
        let jumps = self
            .jumps
            .iter()
            .map(|j| Jump {
                index: j.index,
                left: op(self.time(j.index), j.left),
            })
            .collect();
        GridTrace {
            step: self.step,
            values,
            jumps,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .chain(self.jumps.iter().map(|j| &j.left))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_grid(&self, other: &GridTrace) -> bool {
        self.values.len() == other.values.len()
            && (self.step - other.step).abs() <= 1e-12 * self.step.max(other.step)
    }

    /// Integral over `[0, T]` by the trapezoidal rule with Euler-Maclaurin
    /// endpoint correction.
    pub fn integral(&self) -> f64 {
        crate::quadrature::integrate(self)
    }

    /// `∫₀ᵀ weight(t) * trace(t) dt`.
    pub fn weighted_integral(&self, weight: impl Fn(f64) -> f64) -> f64 {
        crate::quadrature::integrate(&self.map(|t, v| weight(t) * v))
    }
}
