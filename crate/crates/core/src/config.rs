//! Problem configuration: JSON schema, validation with field paths, and
//! serialization back to the same schema.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ErrorCode, Result};
use crate::grid::{steps_in, Grid};
use crate::initial::InitialCondition;
use crate::measure::{DiscreteFunctional, SignedMeasure};
use crate::montecarlo::SimulationConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    density: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    paths: usize,
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerical {
    h: f64,
    #[serde(rename = "T")]
    horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    band: Option<f64>,
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    extrapolate: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mc: Option<RawMonteCarlo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    alpha: f64,
    mu: RawMeasure,
    nu: RawMeasure,
    phi: InitialCondition,
    numerical: RawNumerical,
}

fn default_true() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

/// Monte Carlo section of a problem. `h` and `T` default to the
/// deterministic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloConfig {
    pub paths: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericalConfig {
    pub step: f64,
    pub horizon: f64,
    /// Half-width of the critical band; default depends on the truncation error.
    pub band: Option<f64>,
    pub extrapolate: bool,
    pub mc: Option<MonteCarloConfig>,
}

/// A validated problem `dX = F(X_t) dt + G(X_t) dW`, `X_0 = φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub alpha: f64,
    pub mu: SignedMeasure,
    pub nu: SignedMeasure,
    pub phi: InitialCondition,
    pub numerical: NumericalConfig,
}

fn at(path: &str, err: Error) -> Error {
    match err {
        Error::Config { code, message } => Error::config(code, format!("{path}: {message}")),
        Error::Alignment {
            location,
            weight,
            step,
        } => Error::config(
            ErrorCode::AtomMisaligned,
            format!("{path}: atom at u = {location} (weight {weight}) is not on the grid of step {step}"),
        ),
        other => other,
    }
}

fn invalid(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::config(ErrorCode::InvalidValue, format!("{path}: {msg}"))
}

fn build_measure(name: &str, alpha: f64, raw: &RawMeasure) -> Result<SignedMeasure> {
    let atoms = raw.atoms.iter().map(|a| (a[0], a[1])).collect();
    let density = raw.density.iter().map(|a| (a[0], a[1])).collect();
    SignedMeasure::new(alpha, atoms, density).map_err(|e| at(name, e))
}

fn check_grid(path: &str, alpha: f64, h: f64, horizon: f64, horizon_path: &str) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(invalid(path, format!("step must be positive, got {h}")));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(invalid(
            horizon_path,
            format!("horizon must be positive, got {horizon}"),
        ));
    }
    if steps_in(alpha, h).is_none() {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            format!("{path}: step {h} does not divide alpha {alpha}"),
        ));
    }
    if steps_in(horizon, h).is_none() {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            format!("{path}: step {h} does not divide {horizon_path} = {horizon}"),
        ));
    }
    Ok(())
}

fn check_atoms(name: &str, m: &SignedMeasure, h: f64) -> Result<()> {
    DiscreteFunctional::new(m, h)
        .map(|_| ())
        .map_err(|e| at(name, e))
}

impl ProblemSpec {
    fn from_raw(raw: RawProblem) -> Result<Self> {
        let alpha = raw.alpha;
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid(
                "alpha",
                format!("must be finite and non-negative, got {alpha}"),
            ));
        }
        let mu = build_measure("mu", alpha, &raw.mu)?;
        let nu = build_measure("nu", alpha, &raw.nu)?;
        raw.phi.validate().map_err(|e| at("phi", e))?;
        let n = &raw.numerical;
        check_grid("numerical.h", alpha, n.h, n.horizon, "numerical.T")?;
        check_atoms("mu.atoms", &mu, n.h)?;
        check_atoms("nu.atoms", &nu, n.h)?;
        if let InitialCondition::Samples(_) = raw.phi {
            raw.phi
                .to_segment(alpha, n.h)
                .map_err(|e| at("phi.samples", e))?;
        }
        if let Some(band) = n.band {
            if !(band >= 0.0) || !band.is_finite() {
                return Err(invalid(
                    "numerical.band",
                    format!("must be non-negative, got {band}"),
                ));
            }
        }
        let mc = match &n.mc {
            None => None,
            Some(m) => {
                if m.paths < 2 {
                    return Err(invalid("numerical.mc.paths", "at least 2 paths are needed"));
                }
                if m.workers == Some(0) {
                    return Err(invalid("numerical.mc.workers", "must be positive"));
                }
                let h = m.h.unwrap_or(n.h);
                let horizon = m.horizon.unwrap_or(n.horizon);
                check_grid("numerical.mc.h", alpha, h, horizon, "numerical.mc.T")?;
                check_atoms("mu.atoms", &mu, h)?;
                check_atoms("nu.atoms", &nu, h)?;
                Some(MonteCarloConfig {
                    paths: m.paths,
                    seed: m.seed,
                    workers: m.workers,
                    step: m.h,
                    horizon: m.horizon,
                })
            }
        };
        Ok(ProblemSpec {
            alpha,
            mu,
            nu,
            phi: raw.phi,
            numerical: NumericalConfig {
                step: n.h,
                horizon: n.horizon,
                band: n.band,
                extrapolate: n.extrapolate,
                mc,
            },
        })
    }

    fn to_raw(&self) -> RawProblem {
        let raw_measure = |m: &SignedMeasure| RawMeasure {
            atoms: m.atoms().iter().map(|&(u, w)| [u, w]).collect(),
            density: m.density().iter().map(|&(u, v)| [u, v]).collect(),
        };
        let n = &self.numerical;
        RawProblem {
            alpha: self.alpha,
            mu: raw_measure(&self.mu),
            nu: raw_measure(&self.nu),
            phi: self.phi.clone(),
            numerical: RawNumerical {
                h: n.step,
                horizon: n.horizon,
                band: n.band,
                extrapolate: n.extrapolate,
                mc: n.mc.as_ref().map(|m| RawMonteCarlo {
                    paths: m.paths,
                    seed: m.seed,
                    workers: m.workers,
                    h: m.step,
                    horizon: m.horizon,
                }),
            },
        }
    }

    /// Re-validates after programmatic edits (e.g. command-line overrides).
    pub fn validated(self) -> Result<Self> {
        ProblemSpec::from_raw(self.to_raw())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.alpha, self.numerical.step, self.numerical.horizon)
    }

    /// Monte Carlo settings, falling back to defaults for a missing section.
    pub fn simulation(&self) -> SimulationConfig {
        let n = &self.numerical;
        let mc = n.mc.clone().unwrap_or(MonteCarloConfig {
            paths: SimulationConfig::DEFAULT_PATHS,
            seed: 0,
            workers: None,
            step: None,
            horizon: None,
        });
        SimulationConfig {
            step: mc.step.unwrap_or(n.step),
            horizon: mc.horizon.unwrap_or(n.horizon),
            paths: mc.paths,
            seed: mc.seed,
            workers: mc.workers,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("problem spec serializes")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(&self.to_raw()).expect("problem spec serializes");
        Sha256::digest(&canonical)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl Serialize for ProblemSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_raw().serialize(s)
    }
}

/// Parses and validates a JSON problem description.
pub fn parse_config(text: &str) -> Result<ProblemSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawProblem = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(
            ErrorCode::SchemaViolation,
            format!("{path}: {}", e.into_inner()),
        )
    })?;
    ProblemSpec::from_raw(raw)
}
