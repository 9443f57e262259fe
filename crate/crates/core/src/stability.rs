//! Mean-square trichotomy.
//!
//! The second moment `y(t) = E|G(X_t)|²` solves a renewal equation with
//! kernel density `g(s) = G(r_s)²`. Its total mass `‖G(r_•)‖²` decides
//! whether `E|X(t)|²` decays exponentially (mass < 1), converges to a
//! positive constant (mass = 1) or grows like `e^{κt}` (mass > 1). This
//! module computes the mass, the exponents that tilt the kernel to unit
//! mass, and the limit constants of the last two regimes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridTrace, Jump};
use crate::initial::InitialCondition;
use crate::measure::{same_alpha, total_variation, DiscreteFunctional, SignedMeasure};
use crate::resolvent::{
    compute_resolvent_extrapolated, compute_resolvent_on, decay_rate_estimate,
    deterministic_solution, deterministic_solution_extrapolated, l2_norm_sq_tail, ResolventTable,
    SolutionTrace,
};

/// Smallest half-width of the band classified as critical.
pub const MIN_BAND: f64 = 1e-3;
/// Relative tolerance of the degeneracy test.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;
/// Fraction of `2ρ` searched for the subcritical exponent.
pub const THETA_CAP: f64 = 0.95;

const BISECTION_RTOL: f64 = 1e-10;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// `‖G(r_•)‖² < 1`: exponential decay.
    Subcritical,
    /// `‖G(r_•)‖² = 1` within the band: finite positive limit.
    Critical,
    /// `‖G(r_•)‖² > 1`: exponential growth at rate `κ`.
    Supercritical,
    /// `G(x_t) ≡ 0`: the deterministic solution solves the stochastic equation.
    Degenerate,
    /// The resolvent shows no numerical decay; the trichotomy does not apply.
    Uncertified,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Subcritical => "SUBCRITICAL",
            Classification::Critical => "CRITICAL",
            Classification::Supercritical => "SUPERCRITICAL",
            Classification::Degenerate => "DEGENERATE",
            Classification::Uncertified => "UNCERTIFIED",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub norm_sq_gr: f64,
    pub truncation_error: f64,
    pub band: f64,
    pub classification: Classification,
    pub theta: Option<f64>,
    pub kappa: Option<f64>,
    pub m_zeta: Option<f64>,
    pub m_kappa_zeta: Option<f64>,
    pub limit_constant: Option<f64>,
    pub rate_bound: Option<f64>,
    /// Decay rate `ρ` of the resolvent envelope.
    pub decay_rate: f64,
    pub resolvent_l2_sq: f64,
    pub degenerate: bool,
    /// `x(T)²`, reported in place of a limit constant for degenerate inputs.
    pub deterministic_mean_square_end: Option<f64>,
}

/// `s ↦ G(r_s)`, with left limits where an atom of `ν` crosses the jump of
/// `r` at time 0.
pub fn g_of_r_trace(r: &ResolventTable, nu: &SignedMeasure) -> Result<GridTrace> {
    if !same_alpha(r.alpha, nu.alpha()) {
        return Err(Error::config(
            crate::ErrorCode::AlphaMismatch,
            "resolvent and diffusion measure use different delays",
        ));
    }
    let g = DiscreteFunctional::new(nu, r.trace.step)?;
    let big_n = g.steps();
    let mut buf = vec![0.0; big_n];
    buf.extend_from_slice(&r.trace.values);
    let one = r.trace.values[0];
    let mut values = Vec::with_capacity(r.trace.len());
    let mut jumps = Vec::new();
    for n in 0..r.trace.len() {
        let mut v = g.eval_window(&buf, n);
        if n > 0 && n < big_n {
            v -= 0.5 * g.density_weight(big_n - n) * one;
        }
        if n >= 1 && n <= big_n {
            let atom = g.atom_weight(big_n - n);
            if atom != 0.0 {
                jumps.push(Jump {
                    index: n,
                    left: v - atom * one,
                });
            }
        }
        values.push(v);
    }
    Ok(GridTrace::with_jumps(r.trace.step, values, jumps))
}

/// `t ↦ G(x_t)` along a deterministic solution.
pub fn forcing_trace(x: &SolutionTrace, nu: &SignedMeasure) -> Result<GridTrace> {
    let g = DiscreteFunctional::new(nu, x.trace.step)?;
    let mut buf = x.history.clone();
    buf.extend_from_slice(&x.trace.values[1..]);
    let values = (0..x.trace.len()).map(|n| g.eval_window(&buf, n)).collect();
    Ok(GridTrace::new(x.trace.step, values))
}

/// `(‖G(r_•)‖², truncation error)` for the trace `s ↦ G(r_s)`.
pub fn norm_sq_gr(gr: &GridTrace) -> (f64, f64) {
    l2_norm_sq_tail(gr)
}

pub fn default_band(truncation_error: f64) -> f64 {
    MIN_BAND.max(3.0 * truncation_error)
}

/// Trichotomy decision for the kernel mass `norm_sq`.
pub fn classify(norm_sq: f64, truncation_error: f64, band: f64) -> Classification {
    if !truncation_error.is_finite() || !norm_sq.is_finite() {
        return Classification::Uncertified;
    }
    if norm_sq < 1.0 - band {
        Classification::Subcritical
    } else if norm_sq > 1.0 + band {
        Classification::Supercritical
    } else {
        Classification::Critical
    }
}

fn laplace(g: &GridTrace, rate: f64) -> f64 {
    g.weighted_integral(|s| (-rate * s).exp())
}

/// `κ > 0` with `∫₀ᵀ e^{-κs} g(s) ds = 1`, for a kernel of mass above one.
pub fn solve_kappa_supercritical(g: &GridTrace) -> Result<f64> {
    let mass = laplace(g, 0.0);
    if !(mass > 1.0) {
        return Err(Error::Domain(format!(
            "kernel mass {mass} is not above 1; no positive growth exponent"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut doublings = 0;
    while laplace(g, hi) >= 1.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_ITERATIONS {
            return Err(Error::Numerical(
                "could not bracket the growth exponent".into(),
            ));
        }
    }
    Ok(bisect(lo, hi, |k| laplace(g, k) >= 1.0))
}

/// `θ > 0` with `∫₀ᵀ e^{θs} g(s) ds = 1`, searched on `(0, 0.95·2ρ]`.
/// `None` when the tilted mass stays below one on that range.
pub fn solve_theta_subcritical(g: &GridTrace, rho: f64) -> Option<f64> {
    if !(rho > 0.0) {
        return None;
    }
    let cap = if rho.is_finite() {
        THETA_CAP * 2.0 * rho
    } else {
        1.0 / g.step
    };
    let tilted = |theta: f64| laplace(g, -theta);
    if tilted(0.0) >= 1.0 || tilted(cap) < 1.0 {
        return None;
    }
    Some(bisect(0.0, cap, |th| tilted(th) < 1.0))
}

/// Exponential rate guaranteed for the subcritical mean square, `min(2ρ, θ)`.
pub fn subcritical_rate_bound(theta: Option<f64>, rho: f64) -> f64 {
    match theta {
        Some(th) => th.min(2.0 * rho),
        None => THETA_CAP * 2.0 * rho,
    }
}

/// Bisection keeping `below(lo) == true`, `below(hi) == false`.
fn bisect(mut lo: f64, mut hi: f64, below: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if below(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_RTOL * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `m(ζ) = ∫ s g(s) ds`.
pub fn kernel_first_moment(g: &GridTrace, kappa: f64) -> f64 {
    g.weighted_integral(|s| s * (-kappa * s).exp())
}

/// `(∫ f)(∫ r²) / ∫ s g(s) ds`.
pub fn limit_constant_critical(f: &GridTrace, r_sq_int: f64, g: &GridTrace) -> Result<f64> {
    let m = kernel_first_moment(g, 0.0);
    if !(m > 0.0) {
        return Err(Error::Numerical(format!(
            "kernel first moment {m} is not positive"
        )));
    }
    Ok(f.integral() * r_sq_int / m)
}

/// `(∫ e^{-κs} f)(∫ e^{-κs} r²) / ∫ s e^{-κs} g(s) ds`.
pub fn limit_constant_supercritical(
    f: &GridTrace,
    r: &ResolventTable,
    g: &GridTrace,
    kappa: f64,
) -> Result<f64> {
    let m = kernel_first_moment(g, kappa);
    if !(m > 0.0) {
        return Err(Error::Numerical(format!(
            "tilted kernel first moment {m} is not positive"
        )));
    }
    let tilt = |s: f64| (-kappa * s).exp();
    let r2 = r.trace.map(|_, v| v * v);
    Ok(f.weighted_integral(tilt) * r2.weighted_integral(tilt) / m)
}

fn degenerate_scale(nu: &SignedMeasure, x: &SolutionTrace) -> f64 {
    let max_x = x
        .history
        .iter()
        .chain(&x.trace.values)
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    DEGENERACY_TOLERANCE * (total_variation(nu) * max_x + f64::MIN_POSITIVE)
}

fn is_degenerate(nu: &SignedMeasure, x: &SolutionTrace, forcing: &GridTrace) -> bool {
    let scale = degenerate_scale(nu, x);
    forcing.values.iter().all(|v| v.abs() <= scale)
}

/// True iff `G(x_t(·, φ)) = 0` on the whole grid, i.e. the deterministic
/// solution also solves the stochastic equation.
pub fn detect_degenerate(
    mu: &SignedMeasure,
    nu: &SignedMeasure,
    phi: &InitialCondition,
    grid: &Grid,
) -> Result<bool> {
    let alpha = grid.alpha();
    let seg = phi.to_segment(alpha, grid.step)?;
    let g = DiscreteFunctional::new(nu, grid.step)?;
    let g_phi = g.eval(seg.values());
    let max_phi = seg.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if g_phi.abs() > DEGENERACY_TOLERANCE * (total_variation(nu) * max_phi + f64::MIN_POSITIVE) {
        return Ok(false);
    }
    let x = deterministic_solution_extrapolated(mu, |u| phi.eval(u, alpha), grid)?;
    let forcing = forcing_trace(&x, nu)?;
    Ok(is_degenerate(nu, &x, &forcing))
}

/// `(c² + d² + 2cd e^{bα}) / (-2b)`: `‖G(r_•)‖²` for `μ = b δ₀`,
/// `ν = c δ₀ + d δ_{-α}`.
pub fn example_norm_formula(b: f64, c: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(b < 0.0) {
        return Err(Error::Domain(format!("need b < 0, got {b}")));
    }
    Ok((c * c + d * d + 2.0 * c * d * (b * alpha).exp()) / (-2.0 * b))
}

/// Largest non-positive root `b₀` of `c² + d² + 2cd e^{b₀α} + 2b₀ = 0`:
/// for `b < b₀` the two-atom example is mean-square stable.
pub fn solve_b0(c: f64, d: f64, alpha: f64) -> Result<f64> {
    if c == 0.0 && d == 0.0 {
        return Err(Error::Domain("c and d cannot both vanish".into()));
    }
    let q = |b: f64| c * c + d * d + 2.0 * c * d * (b * alpha).exp() + 2.0 * b;
    if q(0.0) <= 0.0 {
        return Ok(0.0);
    }
    // q(lower) <= 0 since |2cd e^{bα}| <= 2|cd| for b <= 0
    let lower = -0.5 * (c * c + d * d) - (c * d).abs();
    let scan_steps = 4096;
    let dx = -lower / scan_steps as f64;
    let mut right = 0.0;
    for k in 1..=scan_steps {
        let left = -(k as f64) * dx;
        if q(left) <= 0.0 {
            return Ok(bisect_root(left, right, q));
        }
        right = left;
    }
    Err(Error::Numerical(format!(
        "no real root of the boundary equation in [{lower}, 0]"
    )))
}

fn bisect_root(mut lo: f64, mut hi: f64, q: impl Fn(f64) -> f64) -> f64 {
    // q(lo) <= 0 < q(hi)
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if q(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Inputs of a full stability analysis.
#[derive(Debug, Clone)]
pub struct StabilityInputs<'a> {
    pub mu: &'a SignedMeasure,
    pub nu: &'a SignedMeasure,
    pub phi: &'a InitialCondition,
    pub grid: Grid,
    /// Half-width of the critical band; `None` for [`default_band`].
    pub band: Option<f64>,
    /// Richardson-extrapolate the resolvent and deterministic solution.
    pub extrapolate: bool,
}

/// Every trace computed along the way, plus the report.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub resolvent: ResolventTable,
    pub solution: SolutionTrace,
    /// `s ↦ G(r_s)`
    pub gr: GridTrace,
    /// `g = G(r_•)²`
    pub kernel: GridTrace,
    /// `f = G(x_•)²`
    pub forcing: GridTrace,
    pub report: StabilityReport,
}

pub fn analyze(inputs: &StabilityInputs<'_>) -> Result<Analysis> {
    let StabilityInputs {
        mu,
        nu,
        phi,
        grid,
        band,
        extrapolate,
    } = *inputs;
    let alpha = grid.alpha();
    let resolvent = if extrapolate {
        compute_resolvent_extrapolated(mu, &grid)?
    } else {
        compute_resolvent_on(mu, &grid)?
    };
    let solution = if extrapolate {
        deterministic_solution_extrapolated(mu, |u| phi.eval(u, alpha), &grid)?
    } else {
        let seg = phi.to_segment(alpha, grid.step)?;
        deterministic_solution(mu, &seg, grid.step, grid.horizon())?
    };
    let rho = decay_rate_estimate(&resolvent.trace);
    let (resolvent_l2_sq, _) = l2_norm_sq_tail(&resolvent.trace);
    let gr = g_of_r_trace(&resolvent, nu)?;
    let (norm_sq, truncation_error) = norm_sq_gr(&gr);
    let kernel = gr.map(|_, v| v * v);
    let g_x = forcing_trace(&solution, nu)?;
    let forcing = g_x.map(|_, v| v * v);
    let band = band.unwrap_or_else(|| default_band(truncation_error));
    let degenerate = is_degenerate(nu, &solution, &g_x);

    let mut report = StabilityReport {
        norm_sq_gr: norm_sq,
        truncation_error,
        band,
        classification: Classification::Uncertified,
        theta: None,
        kappa: None,
        m_zeta: None,
        m_kappa_zeta: None,
        limit_constant: None,
        rate_bound: None,
        decay_rate: rho,
        resolvent_l2_sq,
        degenerate,
        deterministic_mean_square_end: None,
    };
    if !(rho > 0.0) || !truncation_error.is_finite() {
        return Ok(Analysis {
            resolvent,
            solution,
            gr,
            kernel,
            forcing,
            report,
        });
    }
    if degenerate {
        report.classification = Classification::Degenerate;
        report.limit_constant = Some(0.0);
        let end = *solution.trace.values.last().unwrap_or(&0.0);
        report.deterministic_mean_square_end = Some(end * end);
    } else {
        report.classification = classify(norm_sq, truncation_error, band);
        match report.classification {
            Classification::Subcritical => {
                report.theta = solve_theta_subcritical(&kernel, rho);
                report.rate_bound = Some(subcritical_rate_bound(report.theta, rho));
            }
            Classification::Critical => {
                report.m_zeta = Some(kernel_first_moment(&kernel, 0.0));
                report.limit_constant =
                    Some(limit_constant_critical(&forcing, resolvent_l2_sq, &kernel)?);
            }
            Classification::Supercritical => {
                let kappa = solve_kappa_supercritical(&kernel)?;
                report.kappa = Some(kappa);
                report.m_kappa_zeta = Some(kernel_first_moment(&kernel, kappa));
                report.limit_constant = Some(limit_constant_supercritical(
                    &forcing, &resolvent, &kernel, kappa,
                )?);
            }
            Classification::Degenerate | Classification::Uncertified => {}
        }
    }
    Ok(Analysis {
        resolvent,
        solution,
        gr,
        kernel,
        forcing,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resolvent::compute_resolvent;
    use std::f64::consts::{E, LN_2, SQRT_2};

    fn atoms(alpha: f64, a: &[(f64, f64)]) -> SignedMeasure {
        SignedMeasure::from_atoms(alpha, a).unwrap()
    }

    fn kernel(h: f64, k: usize, f: impl Fn(f64) -> f64) -> GridTrace {
        GridTrace::from_fn(h, k, f)
    }

    #[test]
    fn gr_of_scalar_resolvent() {
        let r = compute_resolvent(&atoms(1.0, &[(0.0, -1.0)]), 1e-3, 5.0).unwrap();
        let gr = g_of_r_trace(&r, &atoms(1.0, &[(0.0, 1.0)])).unwrap();
        for (i, v) in gr.values.iter().enumerate() {
            assert!((v - (-gr.time(i)).exp()).abs() < 1e-6);
        }
        assert!(gr.jumps.is_empty());
    }

    #[test]
    fn delayed_atom_sees_zero_extension() {
        let r = compute_resolvent(&atoms(1.0, &[(0.0, -2.0)]), 0.01, 3.0).unwrap();
        let gr = g_of_r_trace(&r, &atoms(1.0, &[(-1.0, 0.7)])).unwrap();
        assert!(gr.values[..100].iter().all(|&v| v == 0.0));
        assert_eq!(gr.values[100], 0.7);
        assert_eq!(
            gr.jumps,
            vec![Jump {
                index: 100,
                left: 0.0
            }]
        );
    }

    #[test]
    fn degenerate_pair_annihilates_resolvent_after_delay() {
        let r = compute_resolvent(&atoms(1.0, &[(0.0, -1.0)]), 1e-3, 4.0).unwrap();
        let gr = g_of_r_trace(&r, &atoms(1.0, &[(0.0, -E), (-1.0, 1.0)])).unwrap();
        for v in &gr.values[1000..] {
            assert!(v.abs() < 1e-6, "{v}");
        }
    }

    fn norm_of(b: f64, c: f64, d: f64, alpha: f64) -> f64 {
        let grid = Grid::fitted(alpha, 1e-3, 20.0).unwrap();
        let mu = atoms(grid.alpha(), &[(0.0, b)]);
        let nu = atoms(grid.alpha(), &[(0.0, c), (-grid.alpha(), d)]);
        let r = compute_resolvent_extrapolated(&mu, &grid).unwrap();
        norm_sq_gr(&g_of_r_trace(&r, &nu).unwrap()).0
    }

    #[test]
    fn norm_matches_closed_form_examples() {
        assert!((norm_of(-1.0, 1.0, 0.0, 1.0) - 0.5).abs() < 1e-6);
        assert!((norm_of(-1.0, 0.0, 1.0, 1.0) - 0.5).abs() < 1e-6);
        assert!((norm_of(-1.0, 1.0, 1.0, LN_2) - 1.5).abs() < 1e-6);
    }

    #[test]
    fn classification_bands() {
        assert_eq!(classify(0.5, 1e-9, 1e-3), Classification::Subcritical);
        assert_eq!(classify(1.0, 1e-9, 1e-3), Classification::Critical);
        assert_eq!(classify(1.5, 1e-9, 1e-3), Classification::Supercritical);
        assert_eq!(
            classify(1.5, f64::INFINITY, 1e-3),
            Classification::Uncertified
        );
        assert_eq!(default_band(1e-9), 1e-3);
        assert_eq!(default_band(1.0), 3.0);
    }

    #[test]
    fn kappa_for_geometric_brownian_motion() {
        let g = kernel(1e-3, 20_000, |s| 4.0 * (-2.0 * s).exp());
        let k = solve_kappa_supercritical(&g).unwrap();
        assert!((k - 2.0).abs() < 1e-8, "{k}");
        assert!((laplace(&g, k) - 1.0).abs() < 1e-9);
        let g3 = kernel(1e-3, 20_000, |s| 3.0 * (-2.0 * s).exp());
        assert!((solve_kappa_supercritical(&g3).unwrap() - 1.0).abs() < 1e-8);
        assert!(solve_kappa_supercritical(&kernel(1e-3, 100, |_| 0.0)).is_err());
    }

    #[test]
    fn theta_for_geometric_brownian_motion() {
        let g = kernel(1e-3, 20_000, |s| (-2.0 * s).exp());
        let th = solve_theta_subcritical(&g, 1.0).unwrap();
        assert!((th - 1.0).abs() < 1e-8, "{th}");
        assert!((laplace(&g, -th) - 1.0).abs() < 1e-9);
        let half = kernel(1e-3, 60_000, |s| 0.5 * (-2.0 * s).exp());
        assert!((solve_theta_subcritical(&half, 1.0).unwrap() - 1.5).abs() < 1e-8);
        assert_eq!(
            solve_theta_subcritical(&kernel(1e-3, 100, |_| 0.0), 1.0),
            None
        );
        assert_eq!(subcritical_rate_bound(Some(1.5), 1.0), 1.5);
        assert_eq!(subcritical_rate_bound(Some(2.5), 1.0), 2.0);
    }

    #[test]
    fn critical_limit_constants() {
        // b = -1, c = √2: f = 2 φ(0)² e^{-2s}, r² = e^{-2s}, g = 2 e^{-2s}
        let h = 1e-3;
        let g = kernel(h, 20_000, |s| 2.0 * (-2.0 * s).exp());
        for phi0 in [1.0_f64, 2.0] {
            let f = kernel(h, 20_000, |s| 2.0 * phi0 * phi0 * (-2.0 * s).exp());
            let l = limit_constant_critical(&f, 0.5, &g).unwrap();
            assert!((l - phi0 * phi0).abs() < 1e-8, "{l}");
        }
        let zero = kernel(h, 20_000, |_| 0.0);
        assert_eq!(limit_constant_critical(&zero, 0.5, &g).unwrap(), 0.0);
        assert!(limit_constant_critical(&zero, 0.5, &zero).is_err());
    }

    #[test]
    fn supercritical_limit_constants() {
        let grid = Grid::new(0.0, 1e-3, 20.0).unwrap();
        let r = compute_resolvent_extrapolated(&atoms(0.0, &[(0.0, -1.0)]), &grid).unwrap();
        let g = r.trace.map(|_, v| 4.0 * v * v);
        for phi0 in [1.0_f64, 3.0] {
            let f = g.map(|_, v| phi0 * phi0 * v);
            let l = limit_constant_supercritical(&f, &r, &g, 2.0).unwrap();
            assert!((l - phi0 * phi0).abs() < 1e-7, "{l}");
        }
        let zero = g.map(|_, _| 0.0);
        assert_eq!(
            limit_constant_supercritical(&zero, &r, &g, 2.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn degeneracy_detection() {
        let grid = Grid::new(1.0, 1e-3, 10.0).unwrap();
        let mu = atoms(1.0, &[(0.0, -1.0)]);
        let nu = atoms(1.0, &[(0.0, -E), (-1.0, 1.0)]);
        let phi = InitialCondition::exponential(-1.0, 1.0);
        assert!(detect_degenerate(&mu, &nu, &phi, &grid).unwrap());
        let any = InitialCondition::constant(1.0);
        assert!(detect_degenerate(&mu, &SignedMeasure::zero(1.0), &any, &grid).unwrap());
        let gbm = atoms(1.0, &[(0.0, 1.0)]);
        assert!(!detect_degenerate(&mu, &gbm, &any, &grid).unwrap());
    }

    #[test]
    fn norm_formula_examples() {
        assert_eq!(example_norm_formula(-1.0, 1.0, 0.0, 1.0).unwrap(), 0.5);
        assert_eq!(example_norm_formula(-1.0, 0.0, 1.0, 1.0).unwrap(), 0.5);
        assert!((example_norm_formula(-1.0, 1.0, 1.0, LN_2).unwrap() - 1.5).abs() < 1e-15);
        assert!(example_norm_formula(0.0, 1.0, 1.0, 1.0).is_err());
        // degenerate instance: (e² - 1) / 2
        let v = example_norm_formula(-1.0, -E, 1.0, 1.0).unwrap();
        assert!((v - (E * E - 1.0) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn boundary_roots() {
        assert!((solve_b0(1.0, 0.0, 3.0).unwrap() + 0.5).abs() < 1e-10);
        assert!((solve_b0(0.0, 2.0, 0.7).unwrap() + 2.0).abs() < 1e-10);
        // independent bracket on 1 + 2^b + b = 0
        let oracle = {
            let (mut lo, mut hi) = (-3.0_f64, 0.0_f64);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if 1.0 + 2.0_f64.powf(mid) + mid < 0.0 {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            lo
        };
        let b0 = solve_b0(1.0, 1.0, LN_2).unwrap();
        assert!((b0 - oracle).abs() < 1e-10);
        assert!((b0 + 1.383).abs() < 0.01, "{b0}");
        assert!(solve_b0(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn analysis_of_geometric_brownian_motion() {
        let grid = Grid::new(1.0, 1e-3, 20.0).unwrap();
        let mu = atoms(1.0, &[(0.0, -1.0)]);
        let phi = InitialCondition::constant(1.0);
        for (c, class) in [
            (1.0, Classification::Subcritical),
            (SQRT_2, Classification::Critical),
            (2.0, Classification::Supercritical),
        ] {
            let nu = atoms(1.0, &[(0.0, c)]);
            let a = analyze(&StabilityInputs {
                mu: &mu,
                nu: &nu,
                phi: &phi,
                grid,
                band: None,
                extrapolate: true,
            })
            .unwrap();
            let rep = &a.report;
            assert_eq!(rep.classification, class);
            assert!((rep.norm_sq_gr - c * c / 2.0).abs() < 1e-8);
            match class {
                Classification::Subcritical => assert!((rep.theta.unwrap() - 1.0).abs() < 1e-7),
                Classification::Critical => {
                    assert!((rep.limit_constant.unwrap() - 1.0).abs() < 1e-6)
                }
                _ => {
                    assert!((rep.kappa.unwrap() - 2.0).abs() < 1e-8);
                    assert!((rep.limit_constant.unwrap() - 1.0).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn non_decaying_resolvent_is_uncertified() {
        let grid = Grid::new(1.0, 1e-2, 20.0).unwrap();
        let mu = atoms(1.0, &[(0.0, 0.1)]);
        let nu = atoms(1.0, &[(0.0, 0.1)]);
        let phi = InitialCondition::constant(1.0);
        let a = analyze(&StabilityInputs {
            mu: &mu,
            nu: &nu,
            phi: &phi,
            grid,
            band: None,
            extrapolate: false,
        })
        .unwrap();
        assert_eq!(a.report.classification, Classification::Uncertified);
        assert!(a.report.decay_rate < 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn scaling_nu_scales_norm_quadratically(
                b in -3.0f64..-0.3,
                c in -2.0f64..2.0,
                d in -2.0f64..2.0,
                lambda in 0.1f64..3.0,
            ) {
                let grid = Grid::new(0.5, 0.01, 15.0).unwrap();
                let mu = atoms(0.5, &[(0.0, b)]);
                let nu = atoms(0.5, &[(0.0, c), (-0.5, d)]);
                let r = compute_resolvent_on(&mu, &grid).unwrap();
                let base = norm_sq_gr(&g_of_r_trace(&r, &nu).unwrap()).0;
                let scaled = norm_sq_gr(&g_of_r_trace(&r, &nu.scaled(lambda)).unwrap()).0;
                prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-12 * scaled.abs().max(1.0));
            }

            #[test]
            fn norm_formula_is_symmetric(
                b in -5.0f64..-0.01,
                c in -3.0f64..3.0,
                d in -3.0f64..3.0,
                alpha in 0.0f64..4.0,
            ) {
                prop_assert_eq!(
                    example_norm_formula(b, c, d, alpha).unwrap(),
                    example_norm_formula(b, d, c, alpha).unwrap()
                );
            }

            #[test]
            fn tilted_kernel_has_unit_mass(mass in 1.05f64..6.0, decay in 0.5f64..3.0) {
                let g = kernel(1e-3, (30.0 / decay * 1000.0) as usize, |s| mass * decay * (-decay * s).exp());
                let k = solve_kappa_supercritical(&g).unwrap();
                prop_assert!((laplace(&g, k) - 1.0).abs() < 1e-9);
            }
        }
    }
}
