//! Monte Carlo reference path: surrogate load ensembles integrated by
//! Newmark's method, with pooled moments, crossing counts, RMS values and
//! convergence traces.
//!
//! Realizations are processed in fixed chunks of consecutive indices and
//! reduced in index order, so results do not depend on the thread count.

pub mod newmark;
pub mod trace;

use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::generator::{realization_rng, sample_count};
use crate::load::{LoadGenerator, LoadModel};
use crate::measures::SampleMoments;
use crate::model::{CrowdLayout, DofLabel, StructuralModel};
use crate::statespace::SchurForm;

pub use newmark::{newmark_integrate, Newmark, Response};

const CHUNK: usize = 8;

/// Ensemble settings. `duration` is the statistics window; each record is
/// simulated for `burn_in + duration` from the static deflection under the
/// initial load and the burn-in is dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_realizations: usize,
    pub duration: f64,
    pub step: f64,
    pub seed: u64,
    /// Seconds discarded before statistics; `None` picks [`auto_burn_in`].
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Displacement levels (m) for up-crossing counts; signed.
    #[serde(default)]
    pub levels: Vec<f64>,
    /// Dofs whose statistics are kept; empty means all dofs.
    #[serde(default)]
    pub dofs: Vec<usize>,
    /// Optional binary file receiving every displacement history of the tracked dofs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_path: Option<PathBuf>,
}

impl McConfig {
    pub fn new(n_realizations: usize, duration: f64, step: f64, seed: u64) -> Self {
        Self {
            n_realizations,
            duration,
            step,
            seed,
            burn_in: None,
            levels: Vec::new(),
            dofs: Vec::new(),
            trace_path: None,
        }
    }

    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_dofs(mut self, dofs: Vec<usize>) -> Self {
        self.dofs = dofs;
        self
    }

    pub fn with_burn_in(mut self, burn_in: f64) -> Self {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn validate(&self, f_bar: f64) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter("at least one realization is required".into()));
        }
        if !(self.step > 0.0 && self.step <= 0.01 + 1e-12) {
            return Err(Error::InvalidParameter(format!("step must lie in (0, 0.01] s, got {}", self.step)));
        }
        if !(self.duration >= 20.0 / f_bar) {
            return Err(Error::InvalidParameter(format!(
                "statistics window {} s is shorter than 20 load periods ({:.2} s)",
                self.duration,
                20.0 / f_bar
            )));
        }
        if let Some(b) = self.burn_in {
            if !(b >= 0.0 && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("burn-in must be non-negative, got {b}")));
            }
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("crossing levels must be finite".into()));
        }
        Ok(())
    }
}

/// `max(10 s, 5 / decay)` where `decay` is the slowest decay rate of the
/// structure (including passive spectators).
pub fn auto_burn_in(model: &StructuralModel) -> Result<f64> {
    let n = model.n_dof();
    let chol = model.mass().clone().cholesky().ok_or_else(|| Error::Assembly("mass matrix is singular".into()))?;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }
    a.view_mut((n, 0), (n, n)).copy_from(&(-chol.solve(model.stiffness())));
    a.view_mut((n, n), (n, n)).copy_from(&(-chol.solve(model.damping())));
    let schur = SchurForm::new(&a)?;
    schur.check_hurwitz()?;
    let decay = -schur.max_real_eigenvalue();
    Ok((5.0 / decay).max(10.0))
}

/// Crossing count statistics for one level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub level: f64,
    pub mean: f64,
    /// Standard error of the mean over realizations.
    pub std_error: f64,
}

/// Per-realization summary of one dof over the statistics window.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    /// Power sums `Σ d^p`, p = 1..4, of the displacement deviation from the exact mean.
    pub displacement_sums: [f64; 4],
    pub velocity_square: f64,
    pub acceleration_sums: [f64; 4],
    /// Time averages of `x²` and `a²` (raw, mean included).
    pub displacement_mean_square: f64,
    pub acceleration_mean_square: f64,
    pub crossings: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DofStats {
    pub dof: usize,
    pub label: DofLabel,
    /// Ensemble mean of the displacement over the statistics window.
    pub mean_trajectory: Vec<f64>,
    /// Exact mean `E[G] x_det(t)` from integrating the mean load.
    pub deterministic_mean: Vec<f64>,
    /// Pooled moments of the displacement about its exact mean.
    pub displacement: SampleMoments,
    pub velocity_variance: f64,
    pub acceleration: SampleMoments,
    pub displacement_rms: f64,
    pub acceleration_rms: f64,
    pub crossings: Vec<LevelCount>,
    pub realizations: Vec<RealizationRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub config: McConfig,
    pub burn_in: f64,
    /// Samples per record inside the statistics window.
    pub window_samples: usize,
    pub dofs: Vec<DofStats>,
}

impl EnsembleStats {
    pub fn dof(&self, dof: usize) -> Option<&DofStats> {
        self.dofs.iter().find(|d| d.dof == dof)
    }
}

/// Quantities with a running estimate over the realization count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Functional {
    DisplacementVariance,
    AccelerationVariance,
    DisplacementRms,
    AccelerationRms,
    Crossings { level: f64 },
}

impl FromStr for Functional {
    type Err = Error;

    /// `variance`, `acceleration_variance`, `rms`, `acceleration_rms` or `crossings@<level>`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variance" => Ok(Self::DisplacementVariance),
            "acceleration_variance" => Ok(Self::AccelerationVariance),
            "rms" => Ok(Self::DisplacementRms),
            "acceleration_rms" => Ok(Self::AccelerationRms),
            _ => match s.strip_prefix("crossings@").map(str::parse::<f64>) {
                Some(Ok(level)) => Ok(Self::Crossings { level }),
                _ => Err(Error::InvalidRequest(format!("unknown functional '{s}'"))),
            },
        }
    }
}

impl std::fmt::Display for Functional {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::DisplacementVariance => write!(f, "variance"),
            Self::AccelerationVariance => write!(f, "acceleration_variance"),
            Self::DisplacementRms => write!(f, "rms"),
            Self::AccelerationRms => write!(f, "acceleration_rms"),
            Self::Crossings { level } => write!(f, "crossings@{level}"),
        }
    }
}

/// Running estimate of `functional` at `dof` after 1, 2, …, N realizations.
pub fn convergence_trace(stats: &EnsembleStats, functional: Functional, dof: usize) -> Result<Vec<f64>> {
    let d = stats
        .dof(dof)
        .ok_or_else(|| Error::InvalidRequest(format!("dof {dof} was not tracked")))?;
    let samples = stats.window_samples as f64;
    let per: Vec<f64> = match functional {
        Functional::DisplacementVariance => d.realizations.iter().map(|r| r.displacement_sums[1] / samples).collect(),
        Functional::AccelerationVariance => d.realizations.iter().map(|r| r.acceleration_sums[1] / samples).collect(),
        Functional::DisplacementRms | Functional::AccelerationRms => {
            let acc = matches!(functional, Functional::AccelerationRms);
            let ms: Vec<f64> = d
                .realizations
                .iter()
                .map(|r| if acc { r.acceleration_mean_square } else { r.displacement_mean_square })
                .collect();
            return Ok(running_mean(&ms).into_iter().map(f64::sqrt).collect());
        }
        Functional::Crossings { level } => {
            let idx = stats
                .config
                .levels
                .iter()
                .position(|l| (l - level).abs() <= 1e-12 * level.abs().max(1e-300))
                .ok_or_else(|| Error::InvalidRequest(format!("level {level} was not counted")))?;
            d.realizations.iter().map(|r| r.crossings[idx] as f64).collect()
        }
    };
    Ok(running_mean(&per))
}

pub fn running_mean(values: &[f64]) -> Vec<f64> {
    let mut sum = 0.0;
    values
        .iter()
        .enumerate()
        .map(|(k, v)| {
            sum += v;
            sum / (k + 1) as f64
        })
        .collect()
}

struct Plan<'a> {
    seats: &'a [usize],
    generator: LoadGenerator,
    newmark: Newmark,
    tracked: Vec<usize>,
    levels: &'a [f64],
    total: usize,
    start: usize,
    det_u: DMatrix<f64>,
    det_v: DMatrix<f64>,
    det_a: DMatrix<f64>,
}

struct ChunkResult {
    records: Vec<Vec<RealizationRecord>>,
    mean_sum: Vec<Vec<f64>>,
    traces: Vec<(u64, DMatrix<f64>)>,
}

impl Plan<'_> {
    fn run_chunk(&self, indices: std::ops::Range<usize>, seed: u64, keep_traces: bool) -> ChunkResult {
        let window = self.total - self.start;
        let nt = self.tracked.len();
        let mut out = ChunkResult {
            records: vec![Vec::with_capacity(indices.len()); nt],
            mean_sum: vec![vec![0.0; window]; nt],
            traces: Vec::new(),
        };
        let mut loads = vec![vec![0.0; self.total]; self.seats.len()];
        for idx in indices {
            let mut rng = realization_rng(seed, idx as u64);
            for l in loads.iter_mut() {
                self.generator.fill(&mut rng, l);
            }
            let mut recs: Vec<RealizationRecord> = (0..nt)
                .map(|_| RealizationRecord {
                    crossings: vec![0; self.levels.len()],
                    ..Default::default()
                })
                .collect();
            let mut prev = vec![0.0; nt];
            let mut trace = if keep_traces { Some(DMatrix::zeros(window, nt)) } else { None };
            self.newmark.run_from_static(
                self.total,
                |k, f| {
                    for (s, l) in self.seats.iter().zip(&loads) {
                        f[*s] += l[k];
                    }
                },
                |k, s| {
                    if k < self.start {
                        if k + 1 == self.start {
                            for (t, &d) in self.tracked.iter().enumerate() {
                                prev[t] = s.u[d];
                            }
                        }
                        return;
                    }
                    let w = k - self.start;
                    for (t, &d) in self.tracked.iter().enumerate() {
                        let (u, v, a) = (s.u[d], s.v[d], s.a[d]);
                        let r = &mut recs[t];
                        let du = u - self.det_u[(w, t)];
                        let dv = v - self.det_v[(w, t)];
                        let da = a - self.det_a[(w, t)];
                        let (du2, da2) = (du * du, da * da);
                        r.displacement_sums[0] += du;
                        r.displacement_sums[1] += du2;
                        r.displacement_sums[2] += du2 * du;
                        r.displacement_sums[3] += du2 * du2;
                        r.velocity_square += dv * dv;
                        r.acceleration_sums[0] += da;
                        r.acceleration_sums[1] += da2;
                        r.acceleration_sums[2] += da2 * da;
                        r.acceleration_sums[3] += da2 * da2;
                        r.displacement_mean_square += u * u;
                        r.acceleration_mean_square += a * a;
                        if w > 0 || self.start > 0 {
                            for (c, &level) in r.crossings.iter_mut().zip(self.levels) {
                                if prev[t] < level && u >= level {
                                    *c += 1;
                                }
                            }
                        }
                        prev[t] = u;
                        out.mean_sum[t][w] += u;
                        if let Some(tr) = trace.as_mut() {
                            tr[(w, t)] = u;
                        }
                    }
                },
            );
            for (t, mut r) in recs.into_iter().enumerate() {
                r.displacement_mean_square /= window as f64;
                r.acceleration_mean_square /= window as f64;
                out.records[t].push(r);
            }
            if let Some(tr) = trace {
                out.traces.push((idx as u64, tr));
            }
        }
        out
    }
}

/// Runs the ensemble. Each realization draws one weight per active
/// spectator and independent filter noise from the stream `(seed, index)`.
pub fn run_ensemble(model: &StructuralModel, load: &LoadModel, layout: &CrowdLayout, cfg: &McConfig) -> Result<EnsembleStats> {
    cfg.validate(load.mean.f_bar)?;
    layout.validate(model)?;
    if layout.passive.len() != model.n_passive() {
        return Err(Error::InvalidLayout("attach the passive spectators before running the ensemble".into()));
    }
    let n = model.n_dof();
    let tracked: Vec<usize> = if cfg.dofs.is_empty() { (0..n).collect() } else { cfg.dofs.clone() };
    if let Some(&bad) = tracked.iter().find(|&&d| d >= n) {
        return Err(Error::InvalidRequest(format!("dof {bad} does not exist")));
    }
    let burn_in = match cfg.burn_in {
        Some(b) => b,
        None => auto_burn_in(model)?,
    };
    let h = cfg.step;
    let start = (burn_in / h).round() as usize;
    let total = sample_count(burn_in + cfg.duration, h);
    let window = total - start;

    let newmark = Newmark::new(model, h)?;
    // exact mean: E[G] times the response to the mean load at every seat
    let mut det_u = DMatrix::zeros(window, tracked.len());
    let mut det_v = det_u.clone();
    let mut det_a = det_u.clone();
    let scale = load.weight.mean;
    newmark.run_from_static(
        total,
        |k, f| {
            let m = scale * load.mean.value(k as f64 * h);
            for &s in &layout.active {
                f[s] += m;
            }
        },
        |k, s| {
            if k >= start {
                for (t, &d) in tracked.iter().enumerate() {
                    det_u[(k - start, t)] = s.u[d];
                    det_v[(k - start, t)] = s.v[d];
                    det_a[(k - start, t)] = s.a[d];
                }
            }
        },
    );

    let plan = Plan {
        seats: &layout.active,
        generator: LoadGenerator::new(load, h)?,
        newmark,
        tracked: tracked.clone(),
        levels: &cfg.levels,
        total,
        start,
        det_u,
        det_v,
        det_a,
    };
    let mut writer = match &cfg.trace_path {
        Some(p) => Some(trace::TraceWriter::create(p, tracked.len(), h, window)?),
        None => None,
    };
    let chunks: Vec<std::ops::Range<usize>> = (0..cfg.n_realizations)
        .step_by(CHUNK)
        .map(|s| s..(s + CHUNK).min(cfg.n_realizations))
        .collect();
    let batch = (rayon::current_num_threads() * 2).max(1);
    let mut records: Vec<Vec<RealizationRecord>> = vec![Vec::with_capacity(cfg.n_realizations); tracked.len()];
    let mut mean_sum = vec![vec![0.0; window]; tracked.len()];
    for group in chunks.chunks(batch) {
        let results: Vec<ChunkResult> = group
            .par_iter()
            .map(|r| plan.run_chunk(r.clone(), cfg.seed, writer.is_some()))
            .collect();
        for res in results {
            for t in 0..tracked.len() {
                records[t].extend(res.records[t].iter().cloned());
                for (m, s) in mean_sum[t].iter_mut().zip(&res.mean_sum[t]) {
                    *m += s;
                }
            }
            if let Some(w) = writer.as_mut() {
                for (idx, tr) in &res.traces {
                    w.write_frame(*idx, tr)?;
                }
            }
        }
    }
    if let Some(w) = writer {
        w.finish()?;
    }

    let nr = cfg.n_realizations as f64;
    let mut dofs = Vec::with_capacity(tracked.len());
    for (t, &d) in tracked.iter().enumerate() {
        let recs = std::mem::take(&mut records[t]);
        let count = (window * cfg.n_realizations) as f64;
        let pooled = |pick: fn(&RealizationRecord) -> [f64; 4]| {
            let mut s = [0.0; 4];
            for r in &recs {
                for (a, b) in s.iter_mut().zip(pick(r)) {
                    *a += b;
                }
            }
            moments_from_sums(s, count)
        };
        let displacement = pooled(|r| r.displacement_sums);
        let acceleration = pooled(|r| r.acceleration_sums);
        let velocity_variance = recs.iter().map(|r| r.velocity_square).sum::<f64>() / count;
        let displacement_rms = (recs.iter().map(|r| r.displacement_mean_square).sum::<f64>() / nr).sqrt();
        let acceleration_rms = (recs.iter().map(|r| r.acceleration_mean_square).sum::<f64>() / nr).sqrt();
        let crossings = cfg
            .levels
            .iter()
            .enumerate()
            .map(|(i, &level)| {
                let c: Vec<f64> = recs.iter().map(|r| r.crossings[i] as f64).collect();
                let mean = c.iter().sum::<f64>() / nr;
                let var = if c.len() > 1 {
                    c.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nr - 1.0)
                } else {
                    0.0
                };
                LevelCount {
                    level,
                    mean,
                    std_error: (var / nr).sqrt(),
                }
            })
            .collect();
        dofs.push(DofStats {
            dof: d,
            label: model.label(d),
            mean_trajectory: mean_sum[t].iter().map(|s| s / nr).collect(),
            deterministic_mean: plan.det_u.column(t).iter().copied().collect(),
            displacement,
            velocity_variance,
            acceleration,
            displacement_rms,
            acceleration_rms,
            crossings,
            realizations: recs,
        });
    }
    Ok(EnsembleStats {
        config: cfg.clone(),
        burn_in,
        window_samples: window,
        dofs,
    })
}

/// Moments about the exact mean: `variance` is the mean square of the
/// deviation, skewness and kurtosis are central about the pooled mean.
fn moments_from_sums(s: [f64; 4], count: f64) -> SampleMoments {
    let m = s[0] / count;
    let e2 = s[1] / count;
    let c2 = e2 - m * m;
    let c3 = s[2] / count - 3.0 * m * e2 + 2.0 * m.powi(3);
    let c4 = s[3] / count - 4.0 * m * s[2] / count + 6.0 * m * m * e2 - 3.0 * m.powi(4);
    let (skewness, kurtosis) = if c2 > 0.0 { (c3 / c2.powf(1.5), c4 / (c2 * c2)) } else { (f64::NAN, f64::NAN) };
    SampleMoments {
        count: count as usize,
        mean: m,
        variance: e2,
        skewness,
        kurtosis,
    }
}
