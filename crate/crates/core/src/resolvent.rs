//! Fundamental solution and deterministic solutions of the linear delay
//! equation `x'(t) = ∫ x(t+u) μ(du)` by the method of steps.
//!
//! The integrator is explicit Heun on a grid whose step divides the delay,
//! so every delayed lookup is a stored node value. The fundamental solution
//! is zero before time 0 and one at time 0; that jump is handled with
//! one-sided limits so it does not spoil the second-order accuracy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorCode, Result};
use crate::grid::{Grid, GridTrace};
use crate::measure::{same_alpha, DiscreteFunctional, Segment, SignedMeasure};
use crate::quadrature;

/// The fundamental solution `r` on `[0, T]`, with `r = 0` on `[-alpha, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolventTable {
    pub trace: GridTrace,
    pub alpha: f64,
    pub delay_steps: usize,
}

/// A solution `x(·, φ)`: the initial segment on `[-alpha, 0]` and the
/// computed values on `[0, T]`. `history[N] == trace.values[0] == φ(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub history: Vec<f64>,
    pub trace: GridTrace,
    pub alpha: f64,
}

/// Anything whose segment `u ↦ x(t + u)` can be read off the grid.
pub trait SegmentSource {
    fn step(&self) -> f64;
    fn alpha(&self) -> f64;
    fn horizon_steps(&self) -> usize;
    /// Value at absolute grid index `k` (negative for history).
    fn value_at(&self, k: isize) -> f64;

    fn delay_steps(&self) -> usize {
        (self.alpha() / self.step()).round() as usize
    }

    fn segment_at_index(&self, n: usize) -> Result<Segment> {
        if n > self.horizon_steps() {
            return Err(Error::Range {
                time: n as f64 * self.step(),
                horizon: self.horizon_steps() as f64 * self.step(),
            });
        }
        let big_n = self.delay_steps() as isize;
        let values = (0..=big_n)
            .map(|i| self.value_at(n as isize - big_n + i))
            .collect();
        Segment::new(self.alpha(), self.step(), values)
    }
}

impl SegmentSource for ResolventTable {
    fn step(&self) -> f64 {
        self.trace.step
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn horizon_steps(&self) -> usize {
        self.trace.len() - 1
    }
    fn value_at(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.trace.values[k as usize]
        }
    }
    fn delay_steps(&self) -> usize {
        self.delay_steps
    }
}

impl SegmentSource for SolutionTrace {
    fn step(&self) -> f64 {
        self.trace.step
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
    fn horizon_steps(&self) -> usize {
        self.trace.len() - 1
    }
    fn value_at(&self, k: isize) -> f64 {
        if k < 0 {
            self.history[(self.history.len() as isize - 1 + k) as usize]
        } else {
            self.trace.values[k as usize]
        }
    }
    fn delay_steps(&self) -> usize {
        self.history.len() - 1
    }
}

/// The segment `u ↦ x(t + u)` at grid time `t`.
pub fn extract_segment<S: SegmentSource>(source: &S, t: f64) -> Result<Segment> {
    let h = source.step();
    let ratio = t / h;
    let n = ratio.round();
    if !(n >= 0.0) || (ratio - n).abs() > 1e-9 {
        return Err(Error::Range {
            time: t,
            horizon: source.horizon_steps() as f64 * h,
        });
    }
    source.segment_at_index(n as usize)
}

fn check_measure(mu: &SignedMeasure, grid: &Grid) -> Result<()> {
    if !same_alpha(mu.alpha(), grid.alpha()) {
        return Err(Error::config(
            ErrorCode::AlphaMismatch,
            format!(
                "measure delay {} differs from grid delay {}",
                mu.alpha(),
                grid.alpha()
            ),
        ));
    }
    if grid.horizon_steps < grid.delay_steps {
        return Err(Error::config(
            ErrorCode::InvalidValue,
            "horizon must be at least the delay",
        ));
    }
    Ok(())
}

/// Heun integration of `x' = F(x_t)` in place. `buf` holds the history in
/// `buf[..=N]` (absolute time `-alpha ..= 0`) and receives `K` new values.
///
/// With `impulse` set, `buf[N]` is a unit jump from a zero history: panels
/// touching absolute time 0 from the left see the left limit 0.
fn heun(f: &DiscreteFunctional, buf: &mut [f64], steps: usize, h: f64, impulse: bool) {
    let big_n = f.steps();
    debug_assert_eq!(buf.len(), big_n + steps + 1);
    let jump = if impulse { buf[big_n] } else { 0.0 };
    // right limit of F(x_t) at grid time n
    let rhs_right = |buf: &[f64], n: usize| {
        let mut v = f.eval_window(buf, n);
        if impulse && n < big_n && n > 0 {
            let pos = big_n - n;
            v -= 0.5 * f.density_weight(pos) * jump;
        }
        v
    };
    let rhs_left = |buf: &[f64], n: usize| {
        let mut v = rhs_right(buf, n);
        if impulse && n >= 1 && n <= big_n {
            v -= f.atom_weight(big_n - n) * jump;
        }
        v
    };
    for n in 0..steps {
        let now = big_n + n;
        let d_right = rhs_right(buf, n);
        buf[now + 1] = buf[now] + h * d_right;
        let d_left = rhs_left(buf, n + 1);
        buf[now + 1] = buf[now] + 0.5 * h * (d_right + d_left);
    }
}

fn resolvent_on(mu: &SignedMeasure, grid: &Grid) -> Result<Vec<f64>> {
    check_measure(mu, grid)?;
    let f = DiscreteFunctional::new(mu, grid.step)?;
    let big_n = grid.delay_steps;
    let mut buf = vec![0.0; big_n + grid.horizon_steps + 1];
    buf[big_n] = 1.0;
    heun(&f, &mut buf, grid.horizon_steps, grid.step, true);
    Ok(buf.split_off(big_n))
}

/// Fundamental solution on `[0, T]` by Heun's method with step `h`.
pub fn compute_resolvent(mu: &SignedMeasure, h: f64, horizon: f64) -> Result<ResolventTable> {
    let grid = Grid::new(mu.alpha(), h, horizon)?;
    compute_resolvent_on(mu, &grid)
}

pub fn compute_resolvent_on(mu: &SignedMeasure, grid: &Grid) -> Result<ResolventTable> {
    let values = resolvent_on(mu, grid)?;
    Ok(ResolventTable {
        trace: GridTrace::new(grid.step, values),
        alpha: grid.alpha(),
        delay_steps: grid.delay_steps,
    })
}

/// Fundamental solution with one Richardson extrapolation step: Heun on
/// `h` and `h/2`, combined at the coarse nodes as `(4 r_{h/2} - r_h) / 3`.
pub fn compute_resolvent_extrapolated(mu: &SignedMeasure, grid: &Grid) -> Result<ResolventTable> {
    let coarse = resolvent_on(mu, grid)?;
    let fine = resolvent_on(mu, &grid.halved())?;
    Ok(ResolventTable {
        trace: GridTrace::new(grid.step, richardson(&coarse, &fine)),
        alpha: grid.alpha(),
        delay_steps: grid.delay_steps,
    })
}

fn richardson(coarse: &[f64], fine: &[f64]) -> Vec<f64> {
    coarse
        .iter()
        .enumerate()
        .map(|(i, &c)| (4.0 * fine[2 * i] - c) / 3.0)
        .collect()
}

fn solution_on(mu: &SignedMeasure, history: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    check_measure(mu, grid)?;
    if history.len() != grid.delay_steps + 1 {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            "initial segment is not sampled on the solution grid",
        ));
    }
    let f = DiscreteFunctional::new(mu, grid.step)?;
    let mut buf = Vec::with_capacity(history.len() + grid.horizon_steps);
    buf.extend_from_slice(history);
    buf.resize(history.len() + grid.horizon_steps, 0.0);
    heun(&f, &mut buf, grid.horizon_steps, grid.step, false);
    Ok(buf)
}

/// Solution `x(·, φ)` on `[0, T]` for an initial segment sampled with step `h`.
pub fn deterministic_solution(
    mu: &SignedMeasure,
    phi: &Segment,
    h: f64,
    horizon: f64,
) -> Result<SolutionTrace> {
    if (phi.step() - h).abs() > 1e-12 * h || !same_alpha(phi.alpha(), mu.alpha()) {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            "initial segment is not sampled on the solution grid",
        ));
    }
    let grid = Grid::new(mu.alpha(), h, horizon)?;
    let buf = solution_on(mu, phi.values(), &grid)?;
    let big_n = grid.delay_steps;
    Ok(SolutionTrace {
        history: buf[..=big_n].to_vec(),
        trace: GridTrace::new(h, buf[big_n..].to_vec()),
        alpha: grid.alpha(),
    })
}

/// Richardson-extrapolated solution; `phi` is sampled on both grids.
pub fn deterministic_solution_extrapolated(
    mu: &SignedMeasure,
    phi: impl Fn(f64) -> f64,
    grid: &Grid,
) -> Result<SolutionTrace> {
    let fine_grid = grid.halved();
    let sample = |g: &Grid| -> Vec<f64> {
        (0..=g.delay_steps)
            .map(|i| {
                if i == g.delay_steps {
                    phi(0.0)
                } else {
                    phi(-g.alpha() + g.time(i))
                }
            })
            .collect()
    };
    let coarse_hist = sample(grid);
    let coarse = solution_on(mu, &coarse_hist, grid)?;
    let fine = solution_on(mu, &sample(&fine_grid), &fine_grid)?;
    let big_n = grid.delay_steps;
    let values = richardson(&coarse[big_n..], &fine[2 * big_n..]);
    Ok(SolutionTrace {
        history: coarse_hist,
        trace: GridTrace::new(grid.step, values),
        alpha: grid.alpha(),
    })
}

/// `(∫₀ᵀ trace² dt, tail estimate for ∫_T^∞)`. The tail is `envelope(T)² / (2ρ)`
/// with `ρ` from [`decay_rate_estimate`], infinite when no decay is detected.
pub fn l2_norm_sq_tail(trace: &GridTrace) -> (f64, f64) {
    let squared = trace.map(|_, v| v * v);
    let value = quadrature::integrate(&squared);
    let end = trace.values.last().map_or(0.0, |v| v.abs());
    if end == 0.0 {
        return (value, 0.0);
    }
    let rho = decay_rate_estimate(trace);
    let tail = if rho > 0.0 {
        end * end / (2.0 * rho)
    } else {
        f64::INFINITY
    };
    (value, tail)
}

/// Exponential decay rate of `|trace|` over the last quarter of the window.
///
/// Fits a line to the log of the envelope `max_{s ≥ t} |trace(s)|`; a
/// negative slope is returned negated. A flat right envelope means the
/// trace is not decaying, and the slope of the left envelope
/// `max_{start ≤ s ≤ t} |trace(s)|` is returned negated instead (`≤ 0`).
pub fn decay_rate_estimate(trace: &GridTrace) -> f64 {
    let n = trace.values.len();
    if n < 8 {
        return 0.0;
    }
    let start = 3 * (n - 1) / 4;
    let window = &trace.values[start..];
    let mut right = vec![0.0; window.len()];
    let mut running = 0.0_f64;
    for (i, v) in window.iter().enumerate().rev() {
        running = running.max(v.abs());
        right[i] = running;
    }
    if right[0] == 0.0 {
        // identically zero at the end of the window
        return f64::INFINITY;
    }
    let times = |i: usize| trace.time(start + i);
    let slope_right = log_slope(right.iter().enumerate().map(|(i, &e)| (times(i), e)));
    if slope_right < 0.0 {
        return -slope_right;
    }
    let mut running = 0.0_f64;
    let left = window.iter().enumerate().map(|(i, v)| {
        running = running.max(v.abs());
        (times(i), running)
    });
    -log_slope(left)
}

fn log_slope(points: impl Iterator<Item = (f64, f64)>) -> f64 {
    let pts: Vec<(f64, f64)> = points
        .filter(|p| p.1 > 0.0)
        .map(|(t, e)| (t, e.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let m = pts.len() as f64;
    let (st, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (tbar, ybar) = (st / m, sy / m);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| {
        let dt = p.0 - tbar;
        (a.0 + dt * (p.1 - ybar), a.1 + dt * dt)
    });
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}
