//! Smoothed-periodogram spectral density estimates.

use std::f64::consts::PI;
use std::path::Path;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_columns, write_columns};

/// Two-sided density on a grid of non-negative angular frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Ascending angular frequencies, rad/s.
    pub omega: Vec<f64>,
    pub density: Vec<f64>,
    pub window: String,
    /// Lag-window truncation in seconds.
    pub lag_truncation: f64,
    pub ensemble: usize,
}

impl PsdEstimate {
    /// Wraps tabulated values, e.g. an analytic density.
    pub fn from_values(omega: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if omega.len() != density.len() || omega.len() < 2 {
            return Err(Error::InvalidInput("density needs at least two points and one value per frequency".into()));
        }
        if omega.windows(2).any(|w| !(w[1] > w[0])) || omega[0] < 0.0 {
            return Err(Error::InvalidInput("frequency grid must be non-negative and strictly increasing".into()));
        }
        if density.iter().any(|d| !(*d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput("density values must be finite and non-negative".into()));
        }
        Ok(Self {
            omega,
            density,
            window: "tabulated".into(),
            lag_truncation: f64::NAN,
            ensemble: 0,
        })
    }

    pub fn from_fn(omega: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let density = omega.iter().map(|&w| f(w)).collect();
        Self::from_values(omega, density)
    }

    /// Integral over the whole real line, using even symmetry.
    pub fn variance(&self) -> f64 {
        2.0 * trapezoid(&self.omega, &self.density)
    }

    /// Frequency (Hz) of the largest density value.
    pub fn peak_frequency(&self) -> f64 {
        let (i, _) = self
            .density
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
        self.omega[i] / (2.0 * PI)
    }

    /// Linear interpolation; zero outside the grid.
    pub fn interpolate(&self, omega: f64) -> f64 {
        let w = omega.abs();
        if w < self.omega[0] || w > *self.omega.last().expect("non-empty grid") {
            return 0.0;
        }
        let j = self.omega.partition_point(|&x| x <= w).clamp(1, self.omega.len() - 1);
        let (x0, x1) = (self.omega[j - 1], self.omega[j]);
        let t = (w - x0) / (x1 - x0);
        self.density[j - 1] * (1.0 - t) + self.density[j] * t
    }

    /// Restriction to `[lo, hi]` rad/s.
    pub fn band(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.omega
            .iter()
            .zip(&self.density)
            .filter(move |(w, _)| **w >= lo && **w <= hi)
            .map(|(w, d)| (*w, *d))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_columns(path, &["omega_rad_s", "density"], &[&self.omega, &self.density])
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let (_, cols) = read_columns(path)?;
        if cols.len() != 2 {
            return Err(Error::InvalidInput(format!("{}: expected 2 columns (omega_rad_s, density)", path.display())));
        }
        let mut cols = cols.into_iter();
        Self::from_values(cols.next().expect("two columns"), cols.next().expect("two columns"))
    }
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum()
}

/// Parzen lag window on `u ∈ [-1, 1]`.
pub fn parzen(u: f64) -> f64 {
    let u = u.abs();
    if u <= 0.5 {
        1.0 - 6.0 * u * u + 6.0 * u * u * u
    } else if u <= 1.0 {
        2.0 * (1.0 - u).powi(3)
    } else {
        0.0
    }
}

/// Common step of a uniform time grid.
pub fn sampling_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InvalidInput("need at least two time samples".into()));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::InvalidInput("time samples must increase".into()));
    }
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-6 * dt {
            return Err(Error::InvalidInput(format!(
                "non-uniform sampling: step {} differs from mean step {dt}",
                w[1] - w[0]
            )));
        }
    }
    Ok(dt)
}

/// Ensemble-averaged periodogram smoothed by a Parzen lag window.
///
/// The input series must be centered and share one length. `lag` is the
/// window truncation in seconds and defaults to a quarter of the record.
/// The estimate is `(Δt/2π) Σ w(τ/L) r(τ) e^{-iωτ}` with the biased
/// ensemble autocovariance `r`, evaluated up to the Nyquist frequency.
pub fn estimate_psd(realizations: &[Vec<f64>], dt: f64, lag: Option<f64>) -> Result<PsdEstimate> {
    if realizations.is_empty() {
        return Err(Error::InvalidInput("no realizations".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("sampling step must be positive, got {dt}")));
    }
    let n = realizations[0].len();
    if n < 4 || realizations.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidInput("realizations must share one length of at least 4 samples".into()));
    }
    if realizations.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("realizations contain non-finite values".into()));
    }
    let record = n as f64 * dt;
    let lag = lag.unwrap_or(record / 4.0);
    if !(lag > 0.0) {
        return Err(Error::InvalidParameter(format!("lag truncation must be positive, got {lag}")));
    }
    let m = ((lag / dt).round() as usize).clamp(1, n - 1);

    let nfft = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(nfft);
    let inverse = planner.plan_fft_inverse(nfft);
    let mut power = vec![0.0; nfft];
    let mut buf = vec![Complex::new(0.0, 0.0); nfft];
    for r in realizations {
        for (b, v) in buf.iter_mut().zip(r.iter().chain(std::iter::repeat(&0.0))) {
            *b = Complex::new(*v, 0.0);
        }
        forward.process(&mut buf);
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }
    for (b, p) in buf.iter_mut().zip(&power) {
        *b = Complex::new(*p, 0.0);
    }
    inverse.process(&mut buf);
    let scale = 1.0 / (nfft as f64 * n as f64 * realizations.len() as f64);
    let autocov: Vec<f64> = buf[..=m].iter().map(|c| c.re * scale).collect();

    // windowed autocovariance, symmetric in the lag, transformed on an nfft grid
    for b in buf.iter_mut() {
        *b = Complex::new(0.0, 0.0);
    }
    buf[0] = Complex::new(autocov[0], 0.0);
    for k in 1..=m {
        let v = parzen(k as f64 / m as f64) * autocov[k];
        buf[k] = Complex::new(v, 0.0);
        buf[nfft - k] = Complex::new(v, 0.0);
    }
    forward.process(&mut buf);
    let half = nfft / 2;
    let d_omega = 2.0 * PI / (nfft as f64 * dt);
    let omega = (0..=half).map(|j| j as f64 * d_omega).collect();
    // the Parzen transform is non-negative; clip round-off
    let density = buf[..=half].iter().map(|c| (c.re * dt / (2.0 * PI)).max(0.0)).collect();
    Ok(PsdEstimate {
        omega,
        density,
        window: "parzen".into(),
        lag_truncation: m as f64 * dt,
        ensemble: realizations.len(),
    })
}
