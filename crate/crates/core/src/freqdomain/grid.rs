//! Non-uniform frequency grids clustered around structural resonances and
//! filter peaks.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_columns;
use crate::load::LoadModel;
use crate::model::{generalized_modes, modal_damping_ratio, StructuralModel};

/// Node count required inside each peak's half-power band.
pub const MIN_PEAK_NODES: usize = 7;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PeakSource {
    Mode,
    Filter,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPeak {
    pub frequency: f64,
    pub damping_ratio: f64,
    pub source: PeakSource,
    /// Nodes inside `[f(1 − ζ), f(1 + ζ)]`.
    pub nodes_in_band: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrequencyGrid {
    /// Ascending angular frequencies, rad/s.
    pub nodes: Vec<f64>,
    pub peaks: Vec<GridPeak>,
    pub warnings: Vec<String>,
}

impl FrequencyGrid {
    /// Uniform grid on `[lo, hi]` Hz.
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo) || n < 2 {
            return Err(Error::InvalidParameter(format!("invalid uniform grid [{lo}, {hi}] Hz with {n} nodes")));
        }
        Ok(Self {
            nodes: (0..n).map(|i| 2.0 * PI * (lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect(),
            peaks: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let hz: Vec<f64> = self.nodes.iter().map(|w| w / (2.0 * PI)).collect();
        write_columns(path, &["omega_rad_s", "frequency_hz"], &[&self.nodes, &hz])
    }
}

/// Nodes `f_p + b tan θ` with θ uniform; half of them or more fall inside
/// the half-power band `f_p ± b` and the spacing follows the peak's width.
fn cluster(fp: f64, b: f64, lo: f64, hi: f64, m: usize) -> impl Iterator<Item = f64> {
    let t0 = ((lo - fp) / b).atan();
    let t1 = ((hi - fp) / b).atan();
    (0..m).map(move |i| {
        let t = t0 + (t1 - t0) * (i as f64 + 0.5) / m as f64;
        (fp + b * t.tan()).clamp(lo, hi)
    })
}

/// Union of a coarse uniform grid over `range` (Hz) and a cluster around
/// every structural resonance and filter peak inside the range.
pub fn build_grid(model: &StructuralModel, load: &LoadModel, range: [f64; 2], budget: usize) -> Result<FrequencyGrid> {
    let [lo, hi] = range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid frequency range [{lo}, {hi}] Hz")));
    }
    if budget < 50 {
        return Err(Error::InvalidParameter(format!("grid budget must be at least 50 nodes, got {budget}")));
    }
    let mut warnings = Vec::new();
    let mut peaks: Vec<(f64, f64, PeakSource)> = Vec::new();
    for mode in generalized_modes(model.stiffness(), model.mass(), model.n_dof())? {
        if mode.frequency >= lo && mode.frequency <= hi {
            peaks.push((mode.frequency, modal_damping_ratio(model, &mode), PeakSource::Mode));
        }
    }
    for f in load.bank.iter() {
        let fp = f.peak_frequency();
        if fp < lo || fp > hi {
            warnings.push(format!("filter peak at {fp:.3} Hz lies outside the grid range [{lo}, {hi}] Hz"));
        } else {
            peaks.push((fp, f.damping_ratio(), PeakSource::Filter));
        }
    }
    // drop duplicates with nearly equal frequency and width
    peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut unique: Vec<(f64, f64, PeakSource)> = Vec::new();
    for p in peaks {
        let dup = unique.iter().any(|q| (q.0 - p.0).abs() < 0.1 * q.0 * q.1.min(p.1).max(1e-6) && (q.1 - p.1).abs() < 0.1 * q.1);
        if !dup {
            unique.push(p);
        }
    }

    let n_uniform = (budget / 4).max(20);
    let per_peak = if unique.is_empty() { 0 } else { (budget - n_uniform) / unique.len() };
    let mut hz: Vec<f64> = (0..n_uniform).map(|i| lo + (hi - lo) * i as f64 / (n_uniform - 1) as f64).collect();
    for &(fp, zeta, _) in &unique {
        let b = fp * zeta.clamp(1e-5, 1.0);
        hz.extend(cluster(fp, b, lo, hi, per_peak));
    }
    hz.sort_by(f64::total_cmp);
    hz.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * hi);

    let mut out_peaks = Vec::with_capacity(unique.len());
    for &(fp, zeta, source) in &unique {
        let band = fp * zeta;
        let inside = hz.iter().filter(|&&f| f >= fp - band && f <= fp + band).count();
        if inside < MIN_PEAK_NODES {
            warnings.push(format!(
                "only {inside} nodes within the half-power band of the peak at {fp:.3} Hz; raise the grid budget"
            ));
        }
        out_peaks.push(GridPeak {
            frequency: fp,
            damping_ratio: zeta,
            source,
            nodes_in_band: inside,
        });
    }
    Ok(FrequencyGrid {
        nodes: hz.into_iter().map(|f| 2.0 * PI * f).collect(),
        peaks: out_peaks,
        warnings,
    })
}
