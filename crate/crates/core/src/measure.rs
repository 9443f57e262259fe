//! Signed measures on `[-alpha, 0]` and the linear functionals they induce
//! on sampled history segments.
//!
//! A measure is a finite list of point masses plus a continuous
//! piecewise-linear density. Against a segment sampled on a grid of step
//! `h`, point masses are evaluated exactly (they must sit on grid nodes) and
//! the density part is integrated with the trapezoidal rule after resampling
//! the density onto the same nodes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::grid::steps_in;

/// Atoms must lie within `ATOM_TOLERANCE * h` of a grid node.
pub const ATOM_TOLERANCE: f64 = 1e-9;

const LOCATION_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasure {
    alpha: f64,
    atoms: Vec<(f64, f64)>,
    density: Vec<(f64, f64)>,
}

impl SignedMeasure {
    /// Builds and validates a measure. `atoms` and `density` are
    /// `(location, weight)` and `(location, value)` pairs.
    pub fn new(alpha: f64, atoms: Vec<(f64, f64)>, density: Vec<(f64, f64)>) -> Result<Self> {
        let invalid = |msg: String| Err(Error::config(ErrorCode::InvalidMeasure, msg));
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return invalid(format!(
                "alpha must be finite and non-negative, got {alpha}"
            ));
        }
        let slack = LOCATION_SLACK * alpha.max(1.0);
        let in_range = |u: f64| u.is_finite() && u >= -alpha - slack && u <= slack;
        for (i, &(u, w)) in atoms.iter().enumerate() {
            if !in_range(u) {
                return invalid(format!("atom {i} at u = {u} lies outside [-{alpha}, 0]"));
            }
            if !w.is_finite() {
                return invalid(format!("atom {i} has non-finite weight"));
            }
        }
        let mut locs: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        locs.sort_by(|a, b| a.total_cmp(b));
        if let Some(w) = locs.windows(2).find(|w| (w[1] - w[0]).abs() <= slack) {
            return invalid(format!("two atoms share the location u = {}", w[0]));
        }
        for (i, &(u, v)) in density.iter().enumerate() {
            if !in_range(u) {
                return invalid(format!(
                    "density knot {i} at u = {u} lies outside [-{alpha}, 0]"
                ));
            }
            if !v.is_finite() {
                return invalid(format!("density knot {i} has non-finite value"));
            }
        }
        if density.windows(2).any(|w| w[1].0 <= w[0].0) {
            return invalid("density knot locations must be strictly increasing".into());
        }
        Ok(SignedMeasure {
            alpha,
            atoms,
            density,
        })
    }

    pub fn zero(alpha: f64) -> Self {
        SignedMeasure {
            alpha,
            atoms: Vec::new(),
            density: Vec::new(),
        }
    }

    /// Atom-only measure.
    pub fn from_atoms(alpha: f64, atoms: &[(f64, f64)]) -> Result<Self> {
        SignedMeasure::new(alpha, atoms.to_vec(), Vec::new())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn density(&self) -> &[(f64, f64)] {
        &self.density
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|a| a.1 == 0.0) && self.density.iter().all(|k| k.1 == 0.0)
    }

    /// Density value at `u`; zero outside the knot range.
    pub fn density_at(&self, u: f64) -> f64 {
        let d = &self.density;
        if d.len() < 2 || u < d[0].0 || u > d[d.len() - 1].0 {
            return 0.0;
        }
        let k = d.partition_point(|p| p.0 <= u).clamp(1, d.len() - 1);
        let (u0, v0) = d[k - 1];
        let (u1, v1) = d[k];
        v0 + (v1 - v0) * (u - u0) / (u1 - u0)
    }

    /// `λ · m`.
    pub fn scaled(&self, factor: f64) -> SignedMeasure {
        SignedMeasure {
            alpha: self.alpha,
            atoms: self.atoms.iter().map(|&(u, w)| (u, factor * w)).collect(),
            density: self.density.iter().map(|&(u, v)| (u, factor * v)).collect(),
        }
    }

    /// `m1 + m2`: atoms merged by location, densities added on the union of knots.
    pub fn try_add(&self, other: &SignedMeasure) -> Result<SignedMeasure> {
        if !same_alpha(self.alpha, other.alpha) {
            return Err(Error::config(
                ErrorCode::AlphaMismatch,
                format!(
                    "cannot add measures on [-{}, 0] and [-{}, 0]",
                    self.alpha, other.alpha
                ),
            ));
        }
        let slack = LOCATION_SLACK * self.alpha.max(1.0);
        let mut atoms = self.atoms.clone();
        for &(u, w) in &other.atoms {
            match atoms.iter_mut().find(|a| (a.0 - u).abs() <= slack) {
                Some(a) => a.1 += w,
                None => atoms.push((u, w)),
            }
        }
        let mut knots: Vec<f64> = self
            .density
            .iter()
            .chain(other.density.iter())
            .map(|k| k.0)
            .collect();
        knots.sort_by(|a, b| a.total_cmp(b));
        knots.dedup_by(|a, b| (*a - *b).abs() <= slack);
        // The sum of two densities with different supports is only continuous
        // if each one vanishes where its own support ends early.
        if knots.len() >= 2 {
            let (lo, hi) = (knots[0], knots[knots.len() - 1]);
            for d in [&self.density, &other.density] {
                if d.len() < 2 {
                    continue;
                }
                let (first, last) = (d[0], d[d.len() - 1]);
                if (first.0 > lo + slack && first.1 != 0.0)
                    || (last.0 < hi - slack && last.1 != 0.0)
                {
                    return Err(Error::config(
                        ErrorCode::InvalidMeasure,
                        "sum of densities would be discontinuous inside its support",
                    ));
                }
            }
        }
        let density = if knots.len() < 2 {
            Vec::new()
        } else {
            knots
                .iter()
                .map(|&u| (u, self.density_at(u) + other.density_at(u)))
                .collect()
        };
        SignedMeasure::new(self.alpha, atoms, density)
    }
}

/// `Σ|weights| + ∫|density|`, the density part integrated exactly.
pub fn total_variation(m: &SignedMeasure) -> f64 {
    let atoms: f64 = m.atoms.iter().map(|a| a.1.abs()).sum();
    let density: f64 = m
        .density
        .windows(2)
        .map(|w| {
            let ((u0, v0), (u1, v1)) = (w[0], w[1]);
            let len = u1 - u0;
            if v0 * v1 >= 0.0 {
                0.5 * len * (v0.abs() + v1.abs())
            } else {
                // sign change inside the panel: two triangles
                0.5 * len * (v0 * v0 + v1 * v1) / (v0.abs() + v1.abs())
            }
        })
        .sum();
    atoms + density
}

/// Values of a function on the grid `-alpha, -alpha + h, ..., 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    alpha: f64,
    step: f64,
    values: Vec<f64>,
}

impl Segment {
    pub fn new(alpha: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        let n = steps_in(alpha, step).ok_or_else(|| {
            Error::config(
                ErrorCode::GridMisaligned,
                format!("step {step} does not divide alpha {alpha}"),
            )
        })?;
        if values.len() != n + 1 {
            return Err(Error::config(
                ErrorCode::InvalidValue,
                format!("segment needs {} values, got {}", n + 1, values.len()),
            ));
        }
        Ok(Segment {
            alpha,
            step,
            values,
        })
    }

    /// Samples `f(u)` at the grid points of `[-alpha, 0]`.
    pub fn from_fn(alpha: f64, step: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let n = steps_in(alpha, step).ok_or_else(|| {
            Error::config(
                ErrorCode::GridMisaligned,
                format!("step {step} does not divide alpha {alpha}"),
            )
        })?;
        let values = (0..=n).map(|i| f(-alpha + i as f64 * step)).collect();
        Segment::new(alpha, step, values)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Number of steps `N = alpha / h`.
    pub fn steps(&self) -> usize {
        self.values.len() - 1
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &Segment, b: f64) -> Result<Segment> {
        if self.values.len() != other.values.len() || !same_alpha(self.alpha, other.alpha) {
            return Err(Error::config(
                ErrorCode::AlphaMismatch,
                "segments live on different grids",
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(Segment {
            alpha: self.alpha,
            step: self.step,
            values,
        })
    }
}

pub(crate) fn same_alpha(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

/// `∫ ψ dm` for a segment `ψ` sampled on the grid.
pub fn apply_functional(m: &SignedMeasure, s: &Segment) -> Result<f64> {
    if !same_alpha(m.alpha, s.alpha) {
        return Err(Error::config(
            ErrorCode::AlphaMismatch,
            format!(
                "measure lives on [-{}, 0], segment on [-{}, 0]",
                m.alpha, s.alpha
            ),
        ));
    }
    let f = DiscreteFunctional::new(m, s.step)?;
    Ok(f.eval(&s.values))
}

/// A measure resolved onto the nodes of a segment grid: position `i`
/// corresponds to `u = -alpha + i h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunctional {
    steps: usize,
    atom: Vec<f64>,
    dens: Vec<f64>,
    terms: Vec<(usize, f64)>,
}

impl DiscreteFunctional {
    pub fn new(m: &SignedMeasure, step: f64) -> Result<Self> {
        let n = steps_in(m.alpha, step).ok_or_else(|| {
            Error::config(
                ErrorCode::GridMisaligned,
                format!("step {step} does not divide alpha {}", m.alpha),
            )
        })?;
        let mut atom = vec![0.0; n + 1];
        for &(u, w) in &m.atoms {
            let pos = (u + m.alpha) / step;
            let idx = pos.round();
            if (pos - idx).abs() > ATOM_TOLERANCE || idx < 0.0 || idx as usize > n {
                return Err(Error::Alignment {
                    location: u,
                    weight: w,
                    step,
                });
            }
            atom[idx as usize] += w;
        }
        let mut dens = vec![0.0; n + 1];
        if n > 0 && m.density.len() >= 2 {
            for (i, d) in dens.iter_mut().enumerate() {
                let u = if i == n {
                    0.0
                } else {
                    -m.alpha + i as f64 * step
                };
                let edge = if i == 0 || i == n { 0.5 } else { 1.0 };
                *d = edge * step * m.density_at(u);
            }
        }
        let terms = atom
            .iter()
            .zip(&dens)
            .enumerate()
            .filter(|(_, (a, d))| **a != 0.0 || **d != 0.0)
            .map(|(i, (a, d))| (i, a + d))
            .collect();
        Ok(DiscreteFunctional {
            steps: n,
            atom,
            dens,
            terms,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Point-mass weight at position `pos`.
    pub fn atom_weight(&self, pos: usize) -> f64 {
        self.atom[pos]
    }

    /// Density quadrature weight at position `pos`.
    pub fn density_weight(&self, pos: usize) -> f64 {
        self.dens[pos]
    }

    /// Evaluates against `N + 1` segment values.
    #[inline]
    pub fn eval(&self, segment: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, w)| w * segment[i]).sum()
    }

    /// Evaluates against the window `buf[start ..= start + N]`.
    #[inline]
    pub fn eval_window(&self, buf: &[f64], start: usize) -> f64 {
        let mut acc = 0.0;
        for &(i, w) in &self.terms {
            acc += w * buf[start + i];
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn seg(alpha: f64, h: f64, f: impl Fn(f64) -> f64) -> Segment {
        Segment::from_fn(alpha, h, f).unwrap()
    }

    #[test]
    fn point_mass_at_zero() {
        let m = SignedMeasure::from_atoms(1.0, &[(0.0, -0.7)]).unwrap();
        let v = apply_functional(&m, &seg(1.0, 0.01, |_| 1.0)).unwrap();
        assert_eq!(v, -0.7);
    }

    #[test]
    fn annihilating_pair_on_exponential() {
        let m = SignedMeasure::from_atoms(1.0, &[(0.0, -E), (-1.0, 1.0)]).unwrap();
        let v = apply_functional(&m, &seg(1.0, 0.001, |u| (-u).exp())).unwrap();
        assert!(v.abs() < 1e-14, "{v}");
    }

    #[test]
    fn unit_density_against_identity() {
        let m = SignedMeasure::new(1.0, vec![], vec![(-1.0, 1.0), (0.0, 1.0)]).unwrap();
        let v = apply_functional(&m, &seg(1.0, 0.01, |u| u)).unwrap();
        // trapezoid is exact for a linear integrand
        assert!((v + 0.5).abs() < 1e-13, "{v}");
    }

    #[test]
    fn density_quadrature_is_second_order() {
        let m = SignedMeasure::new(1.0, vec![], vec![(-1.0, 2.0), (0.0, -1.0)]).unwrap();
        // ∫_{-1}^0 (-1 - 3u) e^{u} du = e^{-1}·(−1 + 3 + ... ) computed by parts
        let exact = {
            // ∫(-1-3u)e^u = (-1-3u)e^u + 3e^u = (2 - 3u) e^u
            let f = |u: f64| (2.0 - 3.0 * u) * u.exp();
            f(0.0) - f(-1.0)
        };
        let err = |h: f64| (apply_functional(&m, &seg(1.0, h, f64::exp)).unwrap() - exact).abs();
        let ratio = err(0.02) / err(0.01);
        assert!((3.8..4.2).contains(&ratio), "{ratio}");
    }

    #[test]
    fn total_variation_cases() {
        let m = SignedMeasure::from_atoms(1.0, &[(0.0, -E), (-1.0, 1.0)]).unwrap();
        assert!((total_variation(&m) - (E + 1.0)).abs() < 1e-15);
        assert_eq!(total_variation(&SignedMeasure::zero(2.0)), 0.0);
        let d = SignedMeasure::new(1.0, vec![], vec![(-1.0, -2.0), (0.0, 2.0)]).unwrap();
        assert!((total_variation(&d) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_variation_of_sign_changing_density_is_exact() {
        // |density| from -1 at u=-1 to 3 at u=0: zero at u=-3/4
        let d = SignedMeasure::new(1.0, vec![], vec![(-1.0, -1.0), (0.0, 3.0)]).unwrap();
        let exact = 0.5 * 0.25 * 1.0 + 0.5 * 0.75 * 3.0;
        assert!((total_variation(&d) - exact).abs() < 1e-15);
    }

    #[test]
    fn alignment_errors_name_the_atom() {
        let m = SignedMeasure::from_atoms(1.0, &[(-0.3333, 1.0)]).unwrap();
        let err = apply_functional(&m, &seg(1.0, 0.01, |_| 1.0)).unwrap_err();
        match err {
            Error::Alignment { location, .. } => assert_eq!(location, -0.3333),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn alpha_mismatch_is_a_config_error() {
        let m = SignedMeasure::from_atoms(1.0, &[(0.0, 1.0)]).unwrap();
        let err = apply_functional(&m, &seg(2.0, 0.01, |_| 1.0)).unwrap_err();
        assert_eq!(err.code(), Some(ErrorCode::AlphaMismatch));
    }

    #[test]
    fn invalid_measures_are_rejected() {
        assert!(SignedMeasure::from_atoms(1.0, &[(0.5, 1.0)]).is_err());
        assert!(SignedMeasure::from_atoms(1.0, &[(-1.5, 1.0)]).is_err());
        assert!(SignedMeasure::from_atoms(1.0, &[(-0.5, 1.0), (-0.5, 2.0)]).is_err());
        assert!(SignedMeasure::new(1.0, vec![], vec![(0.0, 1.0), (-1.0, 1.0)]).is_err());
        assert!(SignedMeasure::new(1.0, vec![], vec![]).is_ok());
    }

    #[test]
    fn zero_delay_segments_have_one_point() {
        let m = SignedMeasure::from_atoms(0.0, &[(0.0, 3.0)]).unwrap();
        let s = Segment::new(0.0, 0.1, vec![2.0]).unwrap();
        assert_eq!(apply_functional(&m, &s).unwrap(), 6.0);
    }

    #[test]
    fn segment_length_is_checked() {
        assert!(Segment::new(1.0, 0.1, vec![0.0; 10]).is_err());
        assert!(Segment::new(1.0, 0.3, vec![0.0; 4]).is_err());
        assert!(Segment::new(1.0, 0.1, vec![0.0; 11]).is_ok());
    }
}
