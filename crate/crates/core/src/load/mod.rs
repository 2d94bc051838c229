//! Jumping-crowd load model: periodic mean, a bank of independent
//! second-order filters driven by white noise, and a random spectator weight.
//!
//! White noise carries the two-sided spectral density `1/2π`, so a filter
//! `c2 S'' + c3 S' + c1 S = W'` has density `(1/2π) / |c1 - c2 ω² + i c3 ω|²`
//! and variance `1/(2 c1 c3)`.

pub mod generator;
pub mod identify;
pub mod psd;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use generator::LoadGenerator;
pub use identify::{fit_bank_spectral, fit_bank_variance, initial_guess, FitResult};
pub use psd::{estimate_psd, PsdEstimate};

/// Periodic mean `α0 + Σ αk cos(k ω̄ t) + βk sin(k ω̄ t)` with `ω̄ = 2π f̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSeries {
    pub f_bar: f64,
    pub alpha0: f64,
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default)]
    pub betas: Vec<f64>,
}

impl MeanSeries {
    pub fn new(f_bar: f64, alpha0: f64, alphas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        let s = Self { f_bar, alpha0, alphas, betas };
        s.validate()?;
        Ok(s)
    }

    /// Constant mean with a nominal jumping frequency (used for the period).
    pub fn constant(alpha0: f64, f_bar: f64) -> Self {
        Self {
            f_bar,
            alpha0,
            alphas: Vec::new(),
            betas: Vec::new(),
        }
    }

    /// Four-harmonic jumping mean at 2.67 Hz.
    pub fn reference_jumping() -> Self {
        Self {
            f_bar: 2.67,
            alpha0: 0.9958,
            alphas: vec![0.2939, -0.2471, -0.0037, -0.0008],
            betas: vec![1.1170, 0.0984, -0.0153, -0.0001],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_bar > 0.0 && self.f_bar.is_finite()) {
            return Err(Error::InvalidParameter(format!("jump frequency must be positive, got {}", self.f_bar)));
        }
        if self.alphas.len() != self.betas.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cosine but {} sine coefficients",
                self.alphas.len(),
                self.betas.len()
            )));
        }
        if !self.alpha0.is_finite() || self.alphas.iter().chain(&self.betas).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("mean coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    pub fn period(&self) -> f64 {
        1.0 / self.f_bar
    }

    /// Angular frequency of harmonic `k` (1-based).
    pub fn harmonic_omega(&self, k: usize) -> f64 {
        2.0 * PI * self.f_bar * k as f64
    }

    pub fn value(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.f_bar;
        self.alpha0
            + self
                .alphas
                .iter()
                .zip(&self.betas)
                .enumerate()
                .map(|(k, (a, b))| {
                    let x = (k + 1) as f64 * w * t;
                    a * x.cos() + b * x.sin()
                })
                .sum::<f64>()
    }

    /// Time derivative of [`value`](Self::value).
    pub fn rate(&self, t: f64) -> f64 {
        let w = 2.0 * PI * self.f_bar;
        self.alphas
            .iter()
            .zip(&self.betas)
            .enumerate()
            .map(|(k, (a, b))| {
                let wk = (k + 1) as f64 * w;
                wk * (b * (wk * t).cos() - a * (wk * t).sin())
            })
            .sum()
    }

    /// Time average of the squared series over one period.
    pub fn mean_square(&self) -> f64 {
        self.alpha0 * self.alpha0 + 0.5 * self.alphas.iter().chain(&self.betas).map(|v| v * v).sum::<f64>()
    }
}

pub fn mean_value(mean: &MeanSeries, t: f64) -> f64 {
    mean.value(t)
}

/// Least-squares fit of a `p`-harmonic series to samples `(t, μ)`.
pub fn fit_mean(times: &[f64], samples: &[f64], f_bar: f64, p: usize) -> Result<MeanSeries> {
    if times.len() != samples.len() {
        return Err(Error::InvalidInput(format!("{} times for {} samples", times.len(), samples.len())));
    }
    if !(f_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("jump frequency must be positive, got {f_bar}")));
    }
    let n = samples.len();
    let cols = 2 * p + 1;
    if n < cols {
        return Err(Error::SingularDesign(format!("{n} samples cannot determine {cols} coefficients")));
    }
    let w = 2.0 * PI * f_bar;
    let phi = DMatrix::from_fn(n, cols, |i, j| {
        if j == 0 {
            1.0
        } else {
            let k = ((j + 1) / 2) as f64;
            if j % 2 == 1 {
                (k * w * times[i]).cos()
            } else {
                (k * w * times[i]).sin()
            }
        }
    });
    let svd = phi.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-10 * smax) {
        return Err(Error::SingularDesign(format!(
            "regressors are linearly dependent (singular value ratio {:e}); the sampling grid aliases the jump frequency",
            smin / smax
        )));
    }
    let coef = svd
        .solve(&DVector::from_column_slice(samples), 0.0)
        .map_err(|e| Error::SingularDesign(e.to_string()))?;
    let alphas = (0..p).map(|k| coef[1 + 2 * k]).collect();
    let betas = (0..p).map(|k| coef[2 + 2 * k]).collect();
    MeanSeries::new(f_bar, coef[0], alphas, betas)
}

/// Second-order shaping filter `c2 S'' + c3 S' + c1 S = W'`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ar2Filter {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Ar2Filter {
    pub fn new(c1: f64, c2: f64, c3: f64) -> Result<Self> {
        let f = Self { c1, c2, c3 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("c3", self.c3)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("filter coefficient {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// `c1/c2`, the squared undamped frequency of the first-order form.
    pub fn a2(&self) -> f64 {
        self.c1 / self.c2
    }

    /// `c3/c2`.
    pub fn a1(&self) -> f64 {
        self.c3 / self.c2
    }

    /// `1/c2`, the noise gain on the second state.
    pub fn a0(&self) -> f64 {
        1.0 / self.c2
    }

    /// Undamped peak frequency in Hz.
    pub fn peak_frequency(&self) -> f64 {
        self.a2().sqrt() / (2.0 * PI)
    }

    pub fn damping_ratio(&self) -> f64 {
        self.c3 / (2.0 * (self.c1 * self.c2).sqrt())
    }

    /// Stationary variance of the output, `1/(2 c1 c3)`.
    pub fn variance(&self) -> f64 {
        1.0 / (2.0 * self.c1 * self.c3)
    }

    /// Two-sided spectral density of the output.
    pub fn psd(&self, omega: f64) -> f64 {
        let re = self.c1 - self.c2 * omega * omega;
        let im = omega * self.c3;
        1.0 / (2.0 * PI * (re * re + im * im))
    }

    /// Drift of the state `(S, S')`.
    pub fn drift(&self) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, -self.a2(), -self.a1())
    }

    /// Stationary covariance of `(S, S')`; the two states are uncorrelated.
    pub fn state_covariance(&self) -> Matrix2<f64> {
        Matrix2::new(self.variance(), 0.0, 0.0, self.a0() * self.a0() / (2.0 * self.a1()))
    }
}

pub fn filter_variance(filter: &Ar2Filter) -> f64 {
    filter.variance()
}

/// Independent filters whose outputs sum to the centered load.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FilterBank {
    pub filters: Vec<Ar2Filter>,
}

impl FilterBank {
    pub fn new(filters: Vec<Ar2Filter>) -> Result<Self> {
        for f in &filters {
            f.validate()?;
        }
        Ok(Self { filters })
    }

    /// Flat `(c1, c2, c3)` per filter.
    pub fn from_coefficients(c: &[f64]) -> Result<Self> {
        if c.len() % 3 != 0 {
            return Err(Error::InvalidParameter(format!("{} coefficients is not a multiple of 3", c.len())));
        }
        Self::new(c.chunks(3).map(|t| Ar2Filter { c1: t[0], c2: t[1], c3: t[2] }).collect())
    }

    pub fn coefficients(&self) -> Vec<f64> {
        self.filters.iter().flat_map(|f| [f.c1, f.c2, f.c3]).collect()
    }

    /// Filters fitted to the spectral density of jumping at 2.67 Hz.
    pub fn reference_spectral() -> Self {
        Self::from_table(&[
            (90.8657, 0.3227, 0.0148),
            (35.9464, 0.1276, 0.1167),
            (283.6701, 0.2520, 0.0118),
            (74.1544, 0.0661, 0.0737),
            (913.9890, 1.1120, 21.5186),
            (228.5270, 0.0907, 0.1576),
        ])
    }

    /// Filters fitted to the response variance of probe oscillators.
    pub fn reference_variance() -> Self {
        Self::from_table(&[
            (91.0909, 0.3237, 0.0076),
            (40.3066, 0.1430, 0.0804),
            (281.0462, 0.2490, 0.0209),
            (83.7399, 0.0746, 0.0573),
            (914.0015, 0.9376, 21.6921),
            (228.7642, 0.0908, 0.1552),
        ])
    }

    fn from_table(rows: &[(f64, f64, f64)]) -> Self {
        Self {
            filters: rows.iter().map(|&(c1, c2, c3)| Ar2Filter { c1, c2, c3 }).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Ar2Filter> {
        self.filters.iter()
    }

    pub fn psd(&self, omega: f64) -> f64 {
        self.filters.iter().map(|f| f.psd(omega)).sum()
    }

    pub fn total_variance(&self) -> f64 {
        self.filters.iter().map(Ar2Filter::variance).sum()
    }
}

pub fn bank_psd(bank: &FilterBank, omega: f64) -> f64 {
    bank.psd(omega)
}

/// First two moments of the spectator weight multiplying the load.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMoments {
    pub mean: f64,
    #[serde(rename = "var")]
    pub variance: f64,
}

impl WeightMoments {
    pub fn new(mean: f64, variance: f64) -> Result<Self> {
        let w = Self { mean, variance };
        w.validate()?;
        Ok(w)
    }

    pub fn unit() -> Self {
        Self { mean: 1.0, variance: 0.0 }
    }

    /// Weight of a seated spectator in kN, `N(0.7709, 0.0167)`.
    pub fn reference_spectator() -> Self {
        Self { mean: 0.7709, variance: 0.0167 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !(self.variance >= 0.0 && self.variance.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight needs a finite mean and non-negative variance, got ({}, {})",
                self.mean, self.variance
            )));
        }
        Ok(())
    }

    /// `E[G²]`, the multiplier of response variances.
    pub fn second_moment(&self) -> f64 {
        self.variance + self.mean * self.mean
    }
}

/// Scales a unit-weight response: mean by `E[G]`, variance by `E[G²]`.
pub fn scale_by_weight(variance: f64, mean: &[f64], weight: &WeightMoments) -> (Vec<f64>, f64) {
    (mean.iter().map(|m| m * weight.mean).collect(), variance * weight.second_moment())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadModel {
    pub mean: MeanSeries,
    pub bank: FilterBank,
    pub weight: WeightMoments,
}

impl LoadModel {
    pub fn new(mean: MeanSeries, bank: FilterBank, weight: WeightMoments) -> Result<Self> {
        let l = Self { mean, bank, weight };
        l.validate()?;
        Ok(l)
    }

    /// Jumping at 2.67 Hz with the spectrally fitted bank and unit weight.
    pub fn reference_jumping() -> Self {
        Self {
            mean: MeanSeries::reference_jumping(),
            bank: FilterBank::reference_spectral(),
            weight: WeightMoments::unit(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mean.validate()?;
        for f in self.bank.iter() {
            f.validate()?;
        }
        self.weight.validate()
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let l: Self = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        l.validate()?;
        Ok(l)
    }

    pub fn with_weight(mut self, weight: WeightMoments) -> Self {
        self.weight = weight;
        self
    }

    /// Same bank and weight with a zero mean.
    pub fn centered(&self) -> Self {
        Self {
            mean: MeanSeries::constant(0.0, self.mean.f_bar),
            ..self.clone()
        }
    }
}
