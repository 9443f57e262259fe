//! Renewal equation `y(t) = f(t) + ∫₀ᵗ y(t-s) g(s) ds` for the second
//! moment of `Y(t) = G(X_t)`, and the reconstruction
//! `E|X(t)|² = x(t)² + ∫₀ᵗ r²(t-s) y(s) ds`.
//!
//! Both convolutions use trapezoidal product quadrature; the unknown
//! `y(t_n)` enters the sum only through the diagonal weight `h g(0)/2`, so
//! each step is a scalar division.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::grid::GridTrace;
use crate::resolvent::ResolventTable;

/// Tolerated negative round-off in a second moment.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalProblem {
    /// Forcing `f(t) = G(x_t)²`.
    pub f: GridTrace,
    /// Kernel density `g(t) = G(r_t)²`.
    pub g: GridTrace,
}

impl RenewalProblem {
    pub fn new(f: GridTrace, g: GridTrace) -> Result<Self> {
        if !f.same_grid(&g) {
            return Err(Error::config(
                ErrorCode::GridMisaligned,
                "forcing and kernel live on different grids",
            ));
        }
        let negative = |tr: &GridTrace| {
            tr.values
                .iter()
                .chain(tr.jumps.iter().map(|j| &j.left))
                .any(|&v| v < 0.0 || v.is_nan())
        };
        if negative(&f) || negative(&g) {
            return Err(Error::config(
                ErrorCode::InvalidValue,
                "forcing and kernel must be non-negative",
            ));
        }
        Ok(RenewalProblem { f, g })
    }
}

/// Marches the renewal equation forward on the shared grid.
pub fn solve_renewal(p: &RenewalProblem) -> Result<GridTrace> {
    let h = p.g.step;
    let n = p.g.len();
    if n == 0 {
        return Ok(GridTrace::new(h, Vec::new()));
    }
    let diag = 0.5 * h * p.g.values[0];
    if diag >= 1.0 {
        return Err(Error::StepSize { weight: diag });
    }
    // Coefficient of y(t_n - t_j) for 0 < j < n: both panels meeting at t_j.
    let interior: Vec<f64> = (0..n)
        .map(|j| 0.5 * h * (p.g.values[j] + p.g.left(j)))
        .collect();
    let mut y = vec![0.0; n];
    y[0] = p.f.values[0];
    for m in 1..n {
        let mut acc = 0.5 * h * p.g.left(m) * y[0];
        for j in 1..m {
            acc += interior[j] * y[m - j];
        }
        let v = (p.f.values[m] + acc) / (1.0 - diag);
        if v < -NEGATIVITY_TOLERANCE || !v.is_finite() {
            return Err(Error::Numerical(format!(
                "renewal solution became {v} at t = {}; refine the grid",
                p.g.time(m)
            )));
        }
        y[m] = v;
    }
    Ok(GridTrace::new(h, y))
}

/// `x(t)² + ∫₀ᵗ r²(t-s) y(s) ds` on the shared grid.
pub fn mean_square_trace(x: &GridTrace, r: &ResolventTable, y: &GridTrace) -> Result<GridTrace> {
    if !x.same_grid(&r.trace) || !x.same_grid(y) {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            "deterministic solution, resolvent and renewal solution must share a grid",
        ));
    }
    let h = x.step;
    let r2: Vec<f64> = r.trace.values.iter().map(|v| v * v).collect();
    let values = (0..x.len())
        .map(|n| {
            let mut conv = 0.0;
            if n > 0 {
                conv = 0.5 * (r2[n] * y.values[0] + r2[0] * y.values[n]);
                for j in 1..n {
                    conv += r2[n - j] * y.values[j];
                }
                conv *= h;
            }
            x.values[n] * x.values[n] + conv
        })
        .collect();
    Ok(GridTrace::new(h, values))
}
