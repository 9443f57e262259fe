//! Initial segments `φ` on `[-alpha, 0]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::grid::steps_in;
use crate::measure::Segment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExponentialSpec {
    Rate(f64),
    Full { rate: f64, scale: f64 },
}

/// `φ` as a named generator or as grid samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialCondition {
    /// `φ(u) = v`
    Constant(f64),
    /// `φ(u) = scale · e^{rate·u}`
    Exponential(ExponentialSpec),
    /// Values at `-alpha, -alpha + h, ..., 0`, linearly interpolated between.
    Samples(Vec<f64>),
}

impl InitialCondition {
    pub fn constant(v: f64) -> Self {
        InitialCondition::Constant(v)
    }

    pub fn exponential(rate: f64, scale: f64) -> Self {
        if scale == 1.0 {
            InitialCondition::Exponential(ExponentialSpec::Rate(rate))
        } else {
            InitialCondition::Exponential(ExponentialSpec::Full { rate, scale })
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            InitialCondition::Constant(v) => v.is_finite(),
            InitialCondition::Exponential(ExponentialSpec::Rate(r)) => r.is_finite(),
            InitialCondition::Exponential(ExponentialSpec::Full { rate, scale }) => {
                rate.is_finite() && scale.is_finite()
            }
            InitialCondition::Samples(v) => !v.is_empty() && v.iter().all(|x| x.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                ErrorCode::InvalidValue,
                "initial segment must be finite and non-empty",
            ))
        }
    }

    /// `φ(u)` for `u ∈ [-alpha, 0]`.
    pub fn eval(&self, u: f64, alpha: f64) -> f64 {
        match self {
            InitialCondition::Constant(v) => *v,
            InitialCondition::Exponential(ExponentialSpec::Rate(r)) => (r * u).exp(),
            InitialCondition::Exponential(ExponentialSpec::Full { rate, scale }) => {
                scale * (rate * u).exp()
            }
            InitialCondition::Samples(v) => {
                if v.len() == 1 || alpha == 0.0 {
                    return v[v.len() - 1];
                }
                let pos =
                    ((u + alpha) / alpha * (v.len() - 1) as f64).clamp(0.0, (v.len() - 1) as f64);
                let k = (pos.floor() as usize).min(v.len() - 2);
                let w = pos - k as f64;
                (1.0 - w) * v[k] + w * v[k + 1]
            }
        }
    }

    /// Samples on the grid of step `h`. Sample inputs must already be on it.
    pub fn to_segment(&self, alpha: f64, h: f64) -> Result<Segment> {
        match self {
            InitialCondition::Samples(v) => {
                let n = steps_in(alpha, h).unwrap_or(usize::MAX);
                if v.len() != n.wrapping_add(1) {
                    return Err(Error::config(
                        ErrorCode::GridMisaligned,
                        format!("phi has {} samples but the grid needs alpha/h + 1", v.len()),
                    ));
                }
                Segment::new(alpha, h, v.clone())
            }
            _ => Segment::from_fn(alpha, h, |u| self.eval(u, alpha)),
        }
    }
}
