//! End-to-end runs: resolvent, classification, renewal mean square, Monte
//! Carlo and their comparison, written as CSV and JSON artifacts.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ProblemSpec;
use crate::error::{Error, Result};
use crate::grid::GridTrace;
use crate::montecarlo::{simulate_mean_square, MomentEstimate, SimulationMetadata};
use crate::renewal::{mean_square_trace, solve_renewal, RenewalProblem};
use crate::stability::{analyze, Analysis, Classification, StabilityInputs, StabilityReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Resolvent,
    MeanSquare,
    Simulate,
    Compare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Resolvent => "resolvent",
            Command::MeanSquare => "meansquare",
            Command::Simulate => "simulate",
            Command::Compare => "compare",
        }
    }
}

/// Command-line overrides of configuration fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    /// Replaces `h` of both the deterministic and the Monte Carlo grid.
    pub step: Option<f64>,
    /// Replaces `T` of both the deterministic and the Monte Carlo grid.
    pub horizon: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, mut spec: ProblemSpec) -> Result<ProblemSpec> {
        if *self == Overrides::default() {
            return Ok(spec);
        }
        let n = &mut spec.numerical;
        if let Some(h) = self.step {
            n.step = h;
        }
        if let Some(t) = self.horizon {
            n.horizon = t;
        }
        if self.seed.is_some() || self.paths.is_some() || n.mc.is_some() {
            let mut mc = n.mc.take().unwrap_or(crate::config::MonteCarloConfig {
                paths: crate::montecarlo::SimulationConfig::DEFAULT_PATHS,
                seed: 0,
                workers: None,
                step: None,
                horizon: None,
            });
            if let Some(seed) = self.seed {
                mc.seed = seed;
            }
            if let Some(paths) = self.paths {
                mc.paths = paths;
            }
            if self.step.is_some() {
                mc.step = None;
            }
            if self.horizon.is_some() {
                mc.horizon = None;
            }
            n.mc = Some(mc);
        }
        spec.validated()
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    pub classification: Option<Classification>,
}

/// `report.json`: the stability report plus provenance of the inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ReportFile<'a> {
    #[serde(flatten)]
    pub report: &'a StabilityReport,
    pub inputs_hash: String,
    pub numerical: ReportNumerics,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportNumerics {
    pub h: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub band: f64,
    pub extrapolate: bool,
}

/// Writes `header` and rows `t, columns[0][i], columns[1][i], ...`.
/// Numbers use 17 significant digits; lines end in LF.
pub fn write_csv<W: Write>(
    out: W,
    header: &[&str],
    times: &[f64],
    columns: &[&[f64]],
) -> io::Result<()> {
    if columns.iter().any(|c| c.len() != times.len()) || header.len() != columns.len() + 1 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidInput,
            "CSV columns must share the time grid",
        ));
    }
    let mut w = BufWriter::new(out);
    w.write_all(header.join(",").as_bytes())?;
    w.write_all(b"\n")?;
    for (i, t) in times.iter().enumerate() {
        write!(w, "{t:.16e}")?;
        for c in columns {
            write!(w, ",{:.16e}", c[i])?;
        }
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Writes one or more traces sharing a grid to `path`.
pub fn emit_csv(path: &Path, header: &[&str], traces: &[&GridTrace]) -> Result<()> {
    let len = traces.first().map_or(0, |t| t.len());
    if traces
        .iter()
        .any(|t| t.len() != len || !t.same_grid(traces[0]))
    {
        return Err(Error::Numerical(
            "traces written together must share a grid".into(),
        ));
    }
    let times: Vec<f64> = traces
        .first()
        .map_or(Vec::new(), |t| (0..len).map(|i| t.time(i)).collect());
    let columns: Vec<&[f64]> = traces.iter().map(|t| t.values.as_slice()).collect();
    write_csv(fs::File::create(path)?, header, &times, &columns)?;
    Ok(())
}

/// Files written so far; removed again unless the run completes.
struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
    done: bool,
}

impl Artifacts {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            done: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Numerical(format!("cannot serialize {name}: {e}")))?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], traces: &[&GridTrace]) -> Result<()> {
        let p = self.path(name);
        emit_csv(&p, header, traces)
    }

    fn finish(mut self) -> Vec<PathBuf> {
        self.done = true;
        std::mem::take(&mut self.written)
    }
}

impl Drop for Artifacts {
    fn drop(&mut self) {
        if !self.done {
            for p in &self.written {
                let _ = fs::remove_file(p);
            }
        }
    }
}

fn analysis(spec: &ProblemSpec) -> Result<Analysis> {
    analyze(&StabilityInputs {
        mu: &spec.mu,
        nu: &spec.nu,
        phi: &spec.phi,
        grid: spec.grid()?,
        band: spec.numerical.band,
        extrapolate: spec.numerical.extrapolate,
    })
}

/// `E|X(t)|²` from the renewal equation on the deterministic grid. A
/// degenerate initial segment contributes no forcing at all, so the result
/// is `x(t)²`; its round-off residue would otherwise be amplified by an
/// excessive kernel.
pub fn renewal_mean_square(a: &Analysis) -> Result<GridTrace> {
    let forcing = if a.report.degenerate {
        a.forcing.map(|_, _| 0.0)
    } else {
        a.forcing.clone()
    };
    let y = solve_renewal(&RenewalProblem::new(forcing, a.kernel.clone())?)?;
    mean_square_trace(&a.solution.trace, &a.resolvent, &y)
}

/// `(mc - renewal) / stderr`, signed infinity for a noiseless mismatch.
pub fn z_score(renewal: f64, mc: f64, stderr: f64) -> f64 {
    let diff = mc - renewal;
    if stderr > 0.0 {
        diff / stderr
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Renewal values at the Monte Carlo grid times, with z-scores.
pub fn compare_traces(renewal: &GridTrace, mc: &MomentEstimate) -> Result<[GridTrace; 4]> {
    let mut r = Vec::with_capacity(mc.mean_sq.len());
    for i in 0..mc.mean_sq.len() {
        let t = mc.mean_sq.time(i);
        r.push(renewal.at(t).ok_or(Error::Range {
            time: t,
            horizon: renewal.horizon(),
        })?);
    }
    let h = mc.mean_sq.step;
    let z = r
        .iter()
        .zip(mc.mean_sq.values.iter().zip(&mc.stderr.values))
        .map(|(&r, (&m, &s))| z_score(r, m, s))
        .collect();
    Ok([
        GridTrace::new(h, r),
        mc.mean_sq.clone(),
        mc.stderr.clone(),
        GridTrace::new(h, z),
    ])
}

/// Runs `command` on `spec`, writing artifacts into `out_dir`.
pub fn run_pipeline(spec: &ProblemSpec, command: Command, out_dir: &Path) -> Result<Outcome> {
    let mut files = Artifacts::new(out_dir)?;
    let mut classification = None;
    match command {
        Command::Classify => {
            let a = analysis(spec)?;
            let n = &spec.numerical;
            files.json(
                "report.json",
                &ReportFile {
                    report: &a.report,
                    inputs_hash: spec.hash(),
                    numerical: ReportNumerics {
                        h: n.step,
                        horizon: n.horizon,
                        band: a.report.band,
                        extrapolate: n.extrapolate,
                    },
                },
            )?;
            classification = Some(a.report.classification);
        }
        Command::Resolvent => {
            let grid = spec.grid()?;
            let r = if spec.numerical.extrapolate {
                crate::resolvent::compute_resolvent_extrapolated(&spec.mu, &grid)?
            } else {
                crate::resolvent::compute_resolvent_on(&spec.mu, &grid)?
            };
            files.csv("resolvent.csv", &["t", "value"], &[&r.trace])?;
        }
        Command::MeanSquare => {
            let ms = renewal_mean_square(&analysis(spec)?)?;
            files.csv("meansq_renewal.csv", &["t", "value"], &[&ms])?;
        }
        Command::Simulate => {
            let cfg = spec.simulation();
            let est = simulate_mean_square(spec, &cfg)?;
            files.csv(
                "meansq_mc.csv",
                &["t", "mean_sq", "stderr"],
                &[&est.mean_sq, &est.stderr],
            )?;
            files.json("meansq_mc.json", &SimulationMetadata::new(&cfg, &est))?;
        }
        Command::Compare => {
            let renewal = renewal_mean_square(&analysis(spec)?)?;
            let cfg = spec.simulation();
            let est = simulate_mean_square(spec, &cfg)?;
            let [r, m, s, z] = compare_traces(&renewal, &est)?;
            files.csv(
                "compare.csv",
                &["t", "meansq_renewal", "meansq_mc", "mc_stderr", "z"],
                &[&r, &m, &s, &z],
            )?;
            files.json("compare.json", &SimulationMetadata::new(&cfg, &est))?;
        }
    }
    Ok(Outcome {
        artifacts: files.finish(),
        classification,
    })
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_UNCERTIFIED: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.classification == Some(Classification::Uncertified) => EXIT_UNCERTIFIED,
        Ok(_) => EXIT_OK,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Numerical(_) | Error::StepSize { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}
