//! Euler-Maruyama simulation of `dX(t) = F(X_t) dt + G(X_t) dW(t)` and
//! Monte Carlo estimates of `E|X(t)|²`.
//!
//! Path `i` draws its Brownian increments from ChaCha8 stream `i` of the
//! master seed, so a path is a pure function of `(seed, i)`. Paths are
//! grouped in fixed blocks; per-block moments are merged in block order,
//! which makes every estimate independent of the number of worker threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::config::ProblemSpec;
use crate::error::{Error, ErrorCode, Result};
use crate::grid::{Grid, GridTrace};
use crate::measure::DiscreteFunctional;
use crate::resolvent::{compute_resolvent_extrapolated, deterministic_solution_extrapolated};

/// Paths with `|X| > DIVERGENCE_THRESHOLD` are counted as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e150;
/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SDDE_MEANSQ_THREADS";

const BLOCK_PATHS: usize = 64;
const BLOCKS_PER_WAVE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub step: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Requested worker threads; `None` uses all cores. Never affects results.
    pub workers: Option<usize>,
}

impl SimulationConfig {
    pub const DEFAULT_PATHS: usize = 10_000;

    pub fn grid(&self, alpha: f64) -> Result<Grid> {
        if self.paths < 2 {
            return Err(Error::config(
                ErrorCode::InvalidValue,
                "at least 2 paths are needed",
            ));
        }
        Grid::new(alpha, self.step, self.horizon)
    }

    /// Worker count after applying the `SDDE_MEANSQ_THREADS` cap.
    pub fn effective_workers(&self) -> usize {
        let requested = self
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let cap = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0);
        cap.map_or(requested, |c| requested.min(c)).max(1)
    }
}

/// Sample moments of `X(t)` and `|X(t)|²` on the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean_sq: GridTrace,
    /// Standard error of `mean_sq`: sample standard deviation of `|X(t)|²` over `√M`.
    pub stderr: GridTrace,
    pub mean: GridTrace,
    /// Sample variance of `X(t)`.
    pub variance: GridTrace,
    pub paths: usize,
    pub diverged: usize,
    pub seed: u64,
}

impl MomentEstimate {
    /// False if any path diverged; the moments then cover surviving paths only.
    pub fn is_valid(&self) -> bool {
        self.diverged == 0
    }

    pub fn used_paths(&self) -> usize {
        self.paths - self.diverged
    }
}

/// Sidecar written next to a Monte Carlo CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub seed: u64,
    pub paths: usize,
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub diverged: usize,
    pub valid: bool,
}

impl SimulationMetadata {
    pub fn new(cfg: &SimulationConfig, est: &MomentEstimate) -> Self {
        SimulationMetadata {
            seed: cfg.seed,
            paths: est.paths,
            h: cfg.step,
            horizon: cfg.horizon,
            diverged: est.diverged,
            valid: est.is_valid(),
        }
    }
}

/// Standard normal variates from one path's substream, by inverse CDF.
pub struct NormalStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NormalStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        NormalStream {
            rng,
            normal: Normal::standard(),
        }
    }

    #[inline]
    pub fn sample(&mut self) -> f64 {
        // midpoint of one of 2^53 equal cells, never 0 or 1
        let u = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        self.normal.inverse_cdf(u)
    }
}

/// Brownian increments over `count` steps of size `step` for one path.
pub fn brownian_increments(seed: u64, path_index: u64, step: f64, count: usize) -> Vec<f64> {
    let mut s = NormalStream::new(seed, path_index);
    let scale = step.sqrt();
    (0..count).map(|_| scale * s.sample()).collect()
}

/// Increments on the grid of twice the step: sums of consecutive pairs.
pub fn coarsen_increments(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|p| p[0] + p[1]).collect()
}

/// One simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    /// `X(t_n)` on `[0, T]`.
    pub x: GridTrace,
    /// `G(X_{t_n})` for `n < K`.
    pub diffusion: Vec<f64>,
    pub increments: Vec<f64>,
    pub diverged: bool,
}

struct Engine {
    drift: DiscreteFunctional,
    diffusion: DiscreteFunctional,
    history: Vec<f64>,
    grid: Grid,
}

impl Engine {
    fn new(problem: &ProblemSpec, grid: Grid) -> Result<Self> {
        let h = grid.step;
        let alpha = grid.alpha();
        let history = problem.phi.to_segment(alpha, h)?.into_values();
        Ok(Engine {
            drift: DiscreteFunctional::new(&problem.mu, h)?,
            diffusion: DiscreteFunctional::new(&problem.nu, h)?,
            history,
            grid,
        })
    }

    fn buffer(&self) -> Vec<f64> {
        let mut buf = self.history.clone();
        buf.resize(self.history.len() + self.grid.horizon_steps, 0.0);
        buf
    }

    /// Fills `buf[N..]`; returns false on divergence.
    #[inline]
    fn run(
        &self,
        buf: &mut [f64],
        mut increment: impl FnMut(usize) -> f64,
        mut record: impl FnMut(f64),
    ) -> bool {
        let big_n = self.grid.delay_steps;
        let h = self.grid.step;
        for n in 0..self.grid.horizon_steps {
            let x = buf[big_n + n];
            let f = self.drift.eval_window(buf, n);
            let g = self.diffusion.eval_window(buf, n);
            record(g);
            let next = x + h * f + g * increment(n);
            if !(next.abs() <= DIVERGENCE_THRESHOLD) {
                return false;
            }
            buf[big_n + n + 1] = next;
        }
        true
    }
}

/// Runs one path with the given increments.
pub fn simulate_path_with_increments(
    problem: &ProblemSpec,
    grid: Grid,
    increments: &[f64],
) -> Result<PathRecord> {
    if increments.len() != grid.horizon_steps {
        return Err(Error::config(
            ErrorCode::GridMisaligned,
            format!(
                "{} increments supplied for {} steps",
                increments.len(),
                grid.horizon_steps
            ),
        ));
    }
    let engine = Engine::new(problem, grid)?;
    let mut buf = engine.buffer();
    let mut diffusion = Vec::with_capacity(grid.horizon_steps);
    let ok = engine.run(&mut buf, |n| increments[n], |g| diffusion.push(g));
    let x = buf.split_off(grid.delay_steps);
    Ok(PathRecord {
        x: GridTrace::new(grid.step, x),
        diffusion,
        increments: increments.to_vec(),
        diverged: !ok,
    })
}

/// Path `path_index` of the ensemble described by `cfg`.
pub fn simulate_path(
    problem: &ProblemSpec,
    cfg: &SimulationConfig,
    path_index: u64,
) -> Result<PathRecord> {
    let grid = cfg.grid(problem.alpha)?;
    let dw = brownian_increments(cfg.seed, path_index, grid.step, grid.horizon_steps);
    simulate_path_with_increments(problem, grid, &dw)
}

/// Welford accumulators per time node for `X` and `X²`.
#[derive(Clone)]
struct Moments {
    count: usize,
    mean_sq: Vec<f64>,
    m2_sq: Vec<f64>,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(len: usize) -> Self {
        Moments {
            count: 0,
            mean_sq: vec![0.0; len],
            m2_sq: vec![0.0; len],
            mean: vec![0.0; len],
            m2: vec![0.0; len],
        }
    }

    fn push(&mut self, path: &[f64]) {
        self.count += 1;
        let n = self.count as f64;
        for (i, &x) in path.iter().enumerate() {
            let sq = x * x;
            let d = sq - self.mean_sq[i];
            self.mean_sq[i] += d / n;
            self.m2_sq[i] += d * (sq - self.mean_sq[i]);
            let d = x - self.mean[i];
            self.mean[i] += d / n;
            self.m2[i] += d * (x - self.mean[i]);
        }
    }

    fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other.clone();
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let combine = |mean: &mut [f64], m2: &mut [f64], om: &[f64], om2: &[f64]| {
            for i in 0..mean.len() {
                let delta = om[i] - mean[i];
                mean[i] += delta * nb / n;
                m2[i] += om2[i] + delta * delta * na * nb / n;
            }
        };
        combine(
            &mut self.mean_sq,
            &mut self.m2_sq,
            &other.mean_sq,
            &other.m2_sq,
        );
        combine(&mut self.mean, &mut self.m2, &other.mean, &other.m2);
        self.count += other.count;
    }
}

fn run_block(engine: &Engine, seed: u64, start: usize, end: usize) -> (Moments, usize) {
    let big_n = engine.grid.delay_steps;
    let scale = engine.grid.step.sqrt();
    let mut acc = Moments::new(engine.grid.horizon_steps + 1);
    let mut buf = engine.buffer();
    let mut diverged = 0;
    for path in start..end {
        let mut normals = NormalStream::new(seed, path as u64);
        let ok = engine.run(&mut buf, |_| scale * normals.sample(), |_| {});
        if ok {
            acc.push(&buf[big_n..]);
        } else {
            diverged += 1;
        }
    }
    (acc, diverged)
}

/// Monte Carlo estimate of `E|X(t)|²` on the simulation grid.
pub fn simulate_mean_square(
    problem: &ProblemSpec,
    cfg: &SimulationConfig,
) -> Result<MomentEstimate> {
    let grid = cfg.grid(problem.alpha)?;
    let engine = Engine::new(problem, grid)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.effective_workers())
        .build()
        .map_err(|e| Error::Numerical(format!("cannot start worker threads: {e}")))?;
    let blocks = cfg.paths.div_ceil(BLOCK_PATHS);
    let mut total = Moments::new(grid.horizon_steps + 1);
    let mut diverged = 0;
    for wave in (0..blocks).step_by(BLOCKS_PER_WAVE) {
        let last = (wave + BLOCKS_PER_WAVE).min(blocks);
        let results: Vec<(Moments, usize)> = pool.install(|| {
            (wave..last)
                .into_par_iter()
                .map(|b| {
                    let start = b * BLOCK_PATHS;
                    run_block(
                        &engine,
                        cfg.seed,
                        start,
                        (start + BLOCK_PATHS).min(cfg.paths),
                    )
                })
                .collect()
        });
        for (m, d) in &results {
            total.merge(m);
            diverged += d;
        }
    }
    let used = total.count;
    let h = grid.step;
    let sample_var = |m2: &[f64]| -> Vec<f64> {
        m2.iter()
            .map(|&v| {
                if used > 1 {
                    (v / (used - 1) as f64).max(0.0)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let var_sq = sample_var(&total.m2_sq);
    let root_m = (used.max(1) as f64).sqrt();
    let stderr = var_sq.iter().map(|v| v.sqrt() / root_m).collect();
    Ok(MomentEstimate {
        mean_sq: GridTrace::new(h, total.mean_sq),
        stderr: GridTrace::new(h, stderr),
        mean: GridTrace::new(h, total.mean),
        variance: GridTrace::new(h, sample_var(&total.m2)),
        paths: cfg.paths,
        diverged,
        seed: cfg.seed,
    })
}

/// `max_n |X(t_n) - x(t_n) - Σ_{j<n} r(t_n - t_j) G(X_{t_j}) ΔW_j|` for one
/// path driven by the given increments.
pub fn variation_of_constants_residual(
    problem: &ProblemSpec,
    grid: Grid,
    increments: &[f64],
) -> Result<f64> {
    let path = simulate_path_with_increments(problem, grid, increments)?;
    if path.diverged {
        return Err(Error::Numerical("path diverged".into()));
    }
    let r = compute_resolvent_extrapolated(&problem.mu, &grid)?;
    let alpha = grid.alpha();
    let x =
        deterministic_solution_extrapolated(&problem.mu, |u| problem.phi.eval(u, alpha), &grid)?;
    let noise: Vec<f64> = path
        .diffusion
        .iter()
        .zip(&path.increments)
        .map(|(g, dw)| g * dw)
        .collect();
    let rv = &r.trace.values;
    let mut worst = 0.0_f64;
    for n in 0..path.x.len() {
        let conv: f64 = (0..n).map(|j| rv[n - j] * noise[j]).sum();
        worst = worst.max((path.x.values[n] - x.trace.values[n] - conv).abs());
    }
    Ok(worst)
}

/// Residual for path `path_index` of the ensemble described by `cfg`.
pub fn verify_variation_of_constants(
    problem: &ProblemSpec,
    cfg: &SimulationConfig,
    path_index: u64,
) -> Result<f64> {
    let grid = cfg.grid(problem.alpha)?;
    let dw = brownian_increments(cfg.seed, path_index, grid.step, grid.horizon_steps);
    variation_of_constants_residual(problem, grid, &dw)
}

/// Residuals at `h, h/2, ..., h/2^(levels-1)` driven by one Brownian path
/// sampled on the finest grid and summed onto the coarser ones.
/// Entries are `(step, residual)`, coarsest first.
pub fn refinement_residuals(
    problem: &ProblemSpec,
    cfg: &SimulationConfig,
    path_index: u64,
    levels: usize,
) -> Result<Vec<(f64, f64)>> {
    let coarse = cfg.grid(problem.alpha)?;
    let mut grids = vec![coarse];
    for _ in 1..levels {
        let g = grids[grids.len() - 1].halved();
        grids.push(g);
    }
    let finest = grids[grids.len() - 1];
    let mut dw = brownian_increments(cfg.seed, path_index, finest.step, finest.horizon_steps);
    let mut out = Vec::with_capacity(levels);
    for grid in grids.iter().rev() {
        out.push((
            grid.step,
            variation_of_constants_residual(problem, *grid, &dw)?,
        ));
        dw = coarsen_increments(&dw);
    }
    out.reverse();
    Ok(out)
}
