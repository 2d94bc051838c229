//! Level up-crossings, RMS and sample moments of Gaussian response
//! processes with a periodic mean.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::MeanSeries;

/// A periodic function with an analytic time derivative.
pub trait PeriodicMean {
    fn value(&self, t: f64) -> f64;
    fn rate(&self, t: f64) -> f64;
    fn period(&self) -> f64;

    /// Time average of `value²` over one period.
    fn mean_square(&self) -> f64 {
        let p = self.period();
        adaptive_simpson(&|t| self.value(t).powi(2), 0.0, p, 1e-12) / p
    }
}

impl PeriodicMean for MeanSeries {
    fn value(&self, t: f64) -> f64 {
        MeanSeries::value(self, t)
    }

    fn rate(&self, t: f64) -> f64 {
        MeanSeries::rate(self, t)
    }

    fn period(&self) -> f64 {
        MeanSeries::period(self)
    }

    fn mean_square(&self) -> f64 {
        MeanSeries::mean_square(self)
    }
}

/// `c + Σ a_k cos(k ω t) + b_k sin(k ω t)` with `ω = 2π / period`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub period: f64,
    pub constant: f64,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl FourierSeries {
    pub fn constant(value: f64, period: f64) -> Self {
        Self {
            period,
            constant: value,
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn derivative(&self) -> Self {
        let w = self.omega();
        let (cos, sin) = self
            .cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let wk = (k + 1) as f64 * w;
                (wk * b, -wk * a)
            })
            .unzip();
        Self {
            period: self.period,
            constant: 0.0,
            cos,
            sin,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            period: self.period,
            constant: self.constant * factor,
            cos: self.cos.iter().map(|v| v * factor).collect(),
            sin: self.sin.iter().map(|v| v * factor).collect(),
        }
    }

    /// Largest and smallest value over one period, from dense sampling
    /// refined by golden-section search.
    pub fn extremes(&self) -> (f64, f64) {
        let n = 64 * (self.cos.len() + 1);
        let h = self.period / n as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let t = i as f64 * h;
            let refine = |sign: f64| {
                let (mut a, mut b) = (t - h, t + h);
                let g = 0.5 * (5f64.sqrt() - 1.0);
                for _ in 0..60 {
                    let c = b - g * (b - a);
                    let d = a + g * (b - a);
                    if sign * self.value(c) > sign * self.value(d) {
                        b = d;
                    } else {
                        a = c;
                    }
                }
                self.value(0.5 * (a + b))
            };
            let v = self.value(t);
            if v >= self.value(t - h) && v >= self.value(t + h) {
                hi = hi.max(refine(1.0));
            }
            if v <= self.value(t - h) && v <= self.value(t + h) {
                lo = lo.min(refine(-1.0));
            }
            hi = hi.max(v);
            lo = lo.min(v);
        }
        (lo, hi)
    }
}

impl PeriodicMean for FourierSeries {
    fn value(&self, t: f64) -> f64 {
        let w = self.omega();
        self.constant
            + self
                .cos
                .iter()
                .zip(&self.sin)
                .enumerate()
                .map(|(k, (a, b))| {
                    let x = (k + 1) as f64 * w * t;
                    a * x.cos() + b * x.sin()
                })
                .sum::<f64>()
    }

    fn rate(&self, t: f64) -> f64 {
        let w = self.omega();
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(k, (a, b))| {
                let wk = (k + 1) as f64 * w;
                wk * (b * (wk * t).cos() - a * (wk * t).sin())
            })
            .sum()
    }

    fn period(&self) -> f64 {
        self.period
    }

    fn mean_square(&self) -> f64 {
        self.constant * self.constant + 0.5 * self.cos.iter().chain(&self.sin).map(|v| v * v).sum::<f64>()
    }
}

/// Gaussian process with periodic mean and stationary fluctuation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessSummary {
    pub mean: FourierSeries,
    /// Standard deviation of the process.
    pub sigma: f64,
    /// Standard deviation of its time derivative.
    pub sigma_dot: f64,
}

impl ProcessSummary {
    pub fn new(mean: FourierSeries, sigma: f64, sigma_dot: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma_dot > 0.0 && sigma.is_finite() && sigma_dot.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "crossing rates need positive standard deviations, got σ = {sigma}, σ' = {sigma_dot}"
            )));
        }
        if !(mean.period > 0.0) {
            return Err(Error::InvalidParameter("mean period must be positive".into()));
        }
        Ok(Self { mean, sigma, sigma_dot })
    }

    /// Zero-mean stationary process.
    pub fn stationary(sigma: f64, sigma_dot: f64) -> Result<Self> {
        Self::new(FourierSeries::constant(0.0, 1.0), sigma, sigma_dot)
    }
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Mean rate of up-crossings of level `x` at time `t`.
pub fn upcrossing_rate(s: &ProcessSummary, x: f64, t: f64) -> f64 {
    let r = s.mean.rate(t) / s.sigma_dot;
    let z = (x - s.mean.value(t)) / s.sigma;
    let rate = s.sigma_dot / s.sigma * (normal_pdf(r) + r * normal_cdf(r)) * normal_pdf(z);
    rate.max(0.0)
}

/// Expected number of up-crossings of `x` on `[0, horizon]`.
pub fn total_upcrossings(s: &ProcessSummary, x: f64, horizon: f64) -> f64 {
    if !(horizon > 0.0) {
        return 0.0;
    }
    let p = s.mean.period;
    let full = (horizon / p).floor();
    let rest = horizon - full * p;
    let f = |t: f64| upcrossing_rate(s, x, t);
    let mut total = 0.0;
    if full > 0.0 {
        total += full * integrate_split(&f, &crossing_times(&s.mean, x, 0.0, p), 0.0, p);
    }
    if rest > 1e-12 * p {
        total += integrate_split(&f, &crossing_times(&s.mean, x, 0.0, rest), 0.0, rest);
    }
    total
}

/// Times where the mean meets `x`; the rate spikes there when σ is small.
fn crossing_times(mean: &FourierSeries, x: f64, a: f64, b: f64) -> Vec<f64> {
    let n = 128 * (mean.cos.len() + 1);
    let h = (b - a) / n as f64;
    let g = |t: f64| mean.value(t) - x;
    let mut roots = Vec::new();
    for i in 0..n {
        let (mut lo, mut hi) = (a + i as f64 * h, a + (i + 1) as f64 * h);
        let (glo, ghi) = (g(lo), g(hi));
        if glo == 0.0 {
            roots.push(lo);
            continue;
        }
        if glo * ghi < 0.0 {
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if g(lo) * g(mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
    }
    roots
}

fn integrate_split(f: &dyn Fn(f64) -> f64, splits: &[f64], a: f64, b: f64) -> f64 {
    let mut points = vec![a];
    points.extend(splits.iter().copied().filter(|&t| t > a && t < b));
    points.push(b);
    // a coarse pass fixes the absolute tolerance
    let coarse: f64 = points.windows(2).map(|w| simpson(f, w[0], w[1], 64)).sum();
    let peak = points.iter().map(|&t| f(t).abs() * (b - a)).fold(0.0, f64::max);
    let tol = 1e-9 * coarse.abs().max(1e-3 * peak).max(f64::MIN_POSITIVE);
    let share = tol / (points.len() - 1) as f64;
    points.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], share)).sum()
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / (2 * n) as f64;
    let mut s = f(a) + f(b);
    for i in 1..2 * n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    // subdivide once up front so that symmetric integrands cannot fool the first test
    let m = 0.5 * (a + b);
    let (flm, frm) = (f(0.5 * (a + m)), f(0.5 * (m + b)));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    step(f, a, m, fa, flm, fm, left, 0.5 * tol, 48) + step(f, m, b, fm, frm, fb, right, 0.5 * tol, 48)
}

/// `sqrt((1/T) ∫₀ᵀ μ² dt + σ²)`.
pub fn rms<M: PeriodicMean + ?Sized>(mean: &M, variance: f64, horizon: f64) -> f64 {
    let p = mean.period();
    let full = (horizon / p).floor();
    let rest = horizon - full * p;
    let mut integral = full * p * mean.mean_square();
    if rest > 1e-6 * p {
        integral += adaptive_simpson(&|t| mean.value(t).powi(2), 0.0, rest, 1e-12 * p);
    }
    (integral / horizon + variance).sqrt()
}

/// Pooled central-moment summary; kurtosis is non-excess.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMoments {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n - 1) variance.
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn sample_moments(data: &[f64]) -> Result<SampleMoments> {
    pooled_moments(std::iter::once(data))
}

/// Moments of all samples of several series taken together.
pub fn pooled_moments<'a>(series: impl IntoIterator<Item = &'a [f64]> + Clone) -> Result<SampleMoments> {
    let (mut n, mut sum) = (0usize, 0.0);
    for s in series.clone() {
        n += s.len();
        sum += s.iter().sum::<f64>();
    }
    if n < 2 {
        return Err(Error::InvalidInput(format!("moments need at least 2 samples, got {n}")));
    }
    let mean = sum / n as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for s in series {
        for &x in s {
            let d = x - mean;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
    }
    let nf = n as f64;
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if !(m2 > 0.0) {
        return Err(Error::UndefinedMoments("zero variance: skewness and kurtosis are undefined".into()));
    }
    Ok(SampleMoments {
        count: n,
        mean,
        variance: m2 * nf / (nf - 1.0),
        skewness: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2),
    })
}

/// Rate samples over one period together with the total count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub level: f64,
    pub horizon: f64,
    pub total: f64,
    /// `(t, rate)` over one period of the mean.
    pub rate_samples: Vec<(f64, f64)>,
}

pub fn crossing_report(s: &ProcessSummary, level: f64, horizon: f64, n_samples: usize) -> CrossingReport {
    let p = s.mean.period;
    let rate_samples = (0..n_samples)
        .map(|i| {
            let t = p * i as f64 / n_samples as f64;
            (t, upcrossing_rate(s, level, t))
        })
        .collect();
    CrossingReport {
        level,
        horizon,
        total: total_upcrossings(s, level, horizon),
        rate_samples,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Exp1, StandardNormal};

    fn sine(amplitude: f64, f: f64) -> FourierSeries {
        FourierSeries {
            period: 1.0 / f,
            constant: 0.0,
            cos: vec![0.0],
            sin: vec![amplitude],
        }
    }

    #[test]
    fn rice_rate_closed_forms() {
        let s = ProcessSummary::stationary(1.0, 1.0).unwrap();
        assert_relative_eq!(upcrossing_rate(&s, 0.0, 0.3), 1.0 / (2.0 * PI), max_relative = 1e-14);
        let s = ProcessSummary::stationary(0.3, 2.0).unwrap();
        for x in [-0.5f64, 0.0, 0.2, 1.0] {
            let rice = 2.0 / (2.0 * PI * 0.3) * (-x * x / (2.0 * 0.09)).exp();
            assert_relative_eq!(upcrossing_rate(&s, x, 0.0), rice, max_relative = 1e-12);
        }
        assert!(upcrossing_rate(&s, 100.0, 0.0) < 1e-300);
    }

    #[test]
    fn constant_rate_total() {
        let s = ProcessSummary::stationary(0.5, 3.0).unwrap();
        let nu = upcrossing_rate(&s, 0.2, 0.0);
        assert_relative_eq!(total_upcrossings(&s, 0.2, 37.3), nu * 37.3, max_relative = 1e-9);
    }

    #[test]
    fn deterministic_limit_counts_periods() {
        let f = 2.67;
        let amp = 1.0;
        let eps = 1e-5;
        let s = ProcessSummary::new(sine(amp, f), eps * amp, eps * amp * 2.0 * PI * f).unwrap();
        let n = total_upcrossings(&s, 0.3, 160.0);
        assert!((n - 160.0 * f).abs() < 1.0, "{n}");
        let (lo, hi) = s.mean.extremes();
        assert_relative_eq!(hi, amp, max_relative = 1e-10);
        assert_relative_eq!(lo, -amp, max_relative = 1e-10);
    }

    #[test]
    fn far_tail_is_negligible() {
        let s = ProcessSummary::new(sine(1.0, 2.0), 0.1, 1.0).unwrap();
        assert!(total_upcrossings(&s, 1.0 + 8.0 * 0.1 + 0.01, 160.0) < 1e-6);
    }

    #[test]
    fn scaling_invariance() {
        let s = ProcessSummary::new(sine(1.0, 2.0), 0.4, 3.0).unwrap();
        let c = 7.5;
        let scaled = ProcessSummary::new(s.mean.scaled(c), s.sigma * c, s.sigma_dot * c).unwrap();
        assert_relative_eq!(total_upcrossings(&s, 0.7, 20.0), total_upcrossings(&scaled, 0.7 * c, 20.0), max_relative = 1e-8);
    }

    #[test]
    fn rms_cases() {
        let zero = FourierSeries::constant(0.0, 1.0);
        assert_relative_eq!(rms(&zero, 4.0, 10.0), 2.0);
        let c = FourierSeries::constant(3.0, 1.0);
        assert_relative_eq!(rms(&c, 16.0, 10.3), 5.0, max_relative = 1e-12);
        assert_relative_eq!(rms(&sine(2.0, 1.0), 0.0, 10.0), 2.0 / 2f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(rms(&sine(2.0, 1.0), 0.0, 10.37), 2.0 / 2f64.sqrt(), max_relative = 5e-3);
    }

    #[test]
    fn derivative_of_series() {
        let m = FourierSeries { period: 0.4, constant: 1.0, cos: vec![0.3, -0.2], sin: vec![0.5, 0.1] };
        let d = m.derivative();
        for t in [0.0, 0.11, 0.29] {
            assert_relative_eq!(d.value(t), m.rate(t), max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_and_exponential_moments() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let g: Vec<f64> = (0..1_000_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = sample_moments(&g).unwrap();
        assert!(m.skewness.abs() < 0.02);
        assert!((m.kurtosis - 3.0).abs() < 0.03);
        let shifted: Vec<f64> = g.iter().map(|v| v + 1234.5).collect();
        let ms = sample_moments(&shifted).unwrap();
        assert!((ms.skewness - m.skewness).abs() < 1e-10);
        assert!((ms.kurtosis - m.kurtosis).abs() < 1e-10);
        let e: Vec<f64> = (0..1_000_000).map(|_| Exp1.sample(&mut rng)).collect();
        assert!((sample_moments(&e).unwrap().skewness - 2.0).abs() < 0.05);
        assert!(matches!(sample_moments(&[1.0, 1.0, 1.0]), Err(Error::UndefinedMoments(_))));
        assert!(sample_moments(&[1.0]).is_err());
    }
}
