//! Load identification from recorded realizations: mean fit, spectral
//! estimate and filter bank fit.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::read_labeled_matrix;
use crate::load::identify::{fit_bank_spectral, fit_bank_variance, initial_guess, probe_variance, quadrature_probe_variance, FitResult};
use crate::load::psd::{estimate_psd, sampling_step};
use crate::load::{fit_mean, LoadModel, PsdEstimate, WeightMoments};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Spectral,
    Variance,
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "variance" => Ok(Self::Variance),
            other => Err(Error::InvalidParameter(format!("unknown objective `{other}` (expected spectral or variance)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentifyOptions {
    pub objective: Objective,
    /// Harmonics in the mean.
    pub order: usize,
    pub filters: usize,
    /// Jump frequency, Hz; estimated from the ensemble mean when absent.
    pub f_bar: Option<f64>,
    /// Lag window truncation, s.
    pub lag: Option<f64>,
    /// Fit range for the spectral objective, Hz.
    pub range: [f64; 2],
    /// Probe oscillator frequencies for the variance objective, Hz.
    pub probes: Vec<f64>,
    pub probe_damping: f64,
    pub weight: WeightMoments,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        Self {
            objective: Objective::Spectral,
            order: 4,
            filters: 6,
            f_bar: None,
            lag: None,
            range: [0.0, 10.0],
            probes: (0..=38).map(|i| 0.5 + 0.25 * i as f64).collect(),
            probe_damping: 0.05,
            weight: WeightMoments::unit(),
        }
    }
}

/// Fit quality written next to the identified model.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub objective: Objective,
    pub objective_value: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub f_bar: f64,
    /// Variance of the centered records from the spectral estimate.
    pub target_variance: f64,
    /// Closed-form variance of the fitted bank.
    pub bank_variance: f64,
    /// Largest and RMS relative error of probe oscillator variances.
    pub probe_max_relative_error: f64,
    pub probe_rms_relative_error: f64,
}

#[derive(Clone, Debug)]
pub struct Identified {
    pub load: LoadModel,
    pub psd: PsdEstimate,
    pub fit: FitResult,
    pub summary: FitSummary,
}

/// Records CSV: a time column followed by one column per realization.
pub fn read_records(path: &Path) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (header, m) = read_labeled_matrix(path)?;
    if header.len() < 2 || m.nrows() < 16 {
        return Err(Error::InvalidInput(format!(
            "{}: need a time column, at least one realization and 16 samples",
            path.display()
        )));
    }
    let times = m.column(0).iter().copied().collect();
    let records = (1..m.ncols()).map(|j| m.column(j).iter().copied().collect()).collect();
    Ok((times, records))
}

/// Frequency of the strongest component of `mean`, refined by golden
/// section on the single-frequency periodogram.
pub fn dominant_frequency(times: &[f64], mean: &[f64]) -> Result<f64> {
    let dt = sampling_step(times)?;
    let span = dt * mean.len() as f64;
    let avg = mean.iter().sum::<f64>() / mean.len() as f64;
    let power = |f: f64| {
        let w = 2.0 * PI * f;
        let (mut c, mut s) = (0.0, 0.0);
        for (t, y) in times.iter().zip(mean) {
            c += (y - avg) * (w * t).cos();
            s += (y - avg) * (w * t).sin();
        }
        c * c + s * s
    };
    let df = 0.25 / span;
    let nyquist = 0.5 / dt;
    let (mut best, mut best_p) = (df, 0.0);
    let mut f = 2.0 * df;
    while f < nyquist {
        let p = power(f);
        if p > best_p {
            best = f;
            best_p = p;
        }
        f += df;
    }
    let (mut a, mut b) = (best - df, best + df);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if power(x1) > power(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    Ok(0.5 * (a + b))
}

pub fn identify(times: &[f64], records: &[Vec<f64>], opts: &IdentifyOptions) -> Result<Identified> {
    if records.is_empty() || records.iter().any(|r| r.len() != times.len()) {
        return Err(Error::InvalidInput("records must share the time column's length".into()));
    }
    let dt = sampling_step(times)?;
    let n = records.len() as f64;
    let ensemble_mean: Vec<f64> = (0..times.len()).map(|k| records.iter().map(|r| r[k]).sum::<f64>() / n).collect();
    let f_bar = match opts.f_bar {
        Some(f) => f,
        None => dominant_frequency(times, &ensemble_mean)?,
    };
    let mean = fit_mean(times, &ensemble_mean, f_bar, opts.order)?;
    let centered: Vec<Vec<f64>> = records
        .iter()
        .map(|r| r.iter().zip(times).map(|(y, &t)| y - mean.value(t)).collect())
        .collect();
    let psd = estimate_psd(&centered, dt, opts.lag)?;
    let init = initial_guess(&psd, f_bar, opts.filters)?;
    let fit = match opts.objective {
        Objective::Spectral => fit_bank_spectral(&psd, opts.filters, &init, opts.range)?,
        Objective::Variance => fit_bank_variance(&psd, opts.filters, &init, &opts.probes, opts.probe_damping)?,
    };
    let mut errs = Vec::with_capacity(opts.probes.len());
    for &f in &opts.probes {
        let target = quadrature_probe_variance(&psd, f, opts.probe_damping);
        errs.push(probe_variance(&fit.bank, f, opts.probe_damping)? / target - 1.0);
    }
    let summary = FitSummary {
        objective: opts.objective,
        objective_value: fit.objective,
        initial_objective: fit.initial_objective,
        iterations: fit.iterations,
        f_bar,
        target_variance: psd.variance(),
        bank_variance: fit.bank.total_variance(),
        probe_max_relative_error: errs.iter().fold(0.0, |m: f64, e| m.max(e.abs())),
        probe_rms_relative_error: (errs.iter().map(|e| e * e).sum::<f64>() / errs.len().max(1) as f64).sqrt(),
    };
    let load = LoadModel::new(mean, fit.bank.clone(), opts.weight)?;
    Ok(Identified { load, psd, fit, summary })
}

/// Reads `records`, identifies the load and writes `load_model.json`,
/// `fit_summary.json` and `psd_estimate.csv` to `out_dir`. When the
/// optimizer fails the best coefficients go to `fit_failure.json` before
/// the error is returned.
pub fn identify_to_dir(records: &Path, opts: &IdentifyOptions, out_dir: &Path) -> Result<Identified> {
    let (times, recs) = read_records(records)?;
    std::fs::create_dir_all(out_dir)?;
    match identify(&times, &recs, opts) {
        Ok(id) => {
            std::fs::write(out_dir.join("load_model.json"), serde_json::to_string_pretty(&id.load)?)?;
            std::fs::write(out_dir.join("fit_summary.json"), serde_json::to_string_pretty(&id.summary)?)?;
            id.psd.write_csv(&out_dir.join("psd_estimate.csv"))?;
            Ok(id)
        }
        Err(Error::Identification { message, best, objective }) => {
            let dump = serde_json::json!({ "message": message, "best_coefficients": best, "objective": objective });
            std::fs::write(out_dir.join("fit_failure.json"), serde_json::to_string_pretty(&dump)?)?;
            Err(Error::Identification { message, best, objective })
        }
        Err(e) => Err(e),
    }
}
