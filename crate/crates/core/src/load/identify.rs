//! Identification of an AR(2) filter bank from a spectral density estimate,
//! either by matching the density itself or by matching the response
//! variance of lightly damped probe oscillators.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::psd::trapezoid;
use super::{Ar2Filter, FilterBank, PsdEstimate};
use crate::error::{Error, Result};

/// Outcome of a bank fit. `trace` holds the objective after every accepted step.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitResult {
    pub bank: FilterBank,
    pub objective: f64,
    pub initial_objective: f64,
    pub trace: Vec<f64>,
    pub iterations: usize,
}

/// Shape of the starting bank: `(multiple of f̄, damping ratio, share of the local density)`.
const TEMPLATE: [(f64, f64, f64); 6] = [
    (1.0, 0.02, 0.8),
    (1.0, 0.15, 0.2),
    (2.0, 0.03, 0.8),
    (2.0, 0.15, 0.2),
    (1.7, 0.9, 0.3),
    (3.0, 0.05, 0.8),
];

/// Starting coefficients: narrow and broad filters at the first two jump
/// harmonics, one broadband filter and one at the third harmonic. Each
/// filter's peak density is set to a share of the target at its frequency.
/// More than six filters continue with narrow peaks at higher harmonics.
pub fn initial_guess(target: &PsdEstimate, f_bar: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("filter count must be at least 1".into()));
    }
    if !(f_bar > 0.0) {
        return Err(Error::InvalidParameter(format!("jump frequency must be positive, got {f_bar}")));
    }
    let floor = target.density.iter().cloned().fold(0.0, f64::max) * 1e-6;
    let mut out = Vec::with_capacity(3 * n);
    for i in 0..n {
        let (mult, zeta, share) = TEMPLATE.get(i).copied().unwrap_or_else(|| ((i - 2) as f64, 0.05, 0.8));
        let wp = 2.0 * PI * f_bar * mult;
        let local = (target.interpolate(wp) * share).max(floor).max(f64::MIN_POSITIVE);
        let c2 = 1.0 / (2.0 * zeta * wp * wp * (2.0 * PI * local).sqrt());
        out.extend([c2 * wp * wp, c2, 2.0 * zeta * c2 * wp]);
    }
    Ok(out)
}

fn check_init(n: usize, init: &[f64]) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("filter count must be at least 1".into()));
    }
    if init.len() != 3 * n {
        return Err(Error::InvalidParameter(format!("initial vector has {} entries, expected {}", init.len(), 3 * n)));
    }
    if init.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::InvalidParameter("initial coefficients must be positive".into()));
    }
    Ok(())
}

fn bank_from_log(theta: &DVector<f64>) -> FilterBank {
    FilterBank {
        filters: theta
            .as_slice()
            .chunks(3)
            .map(|t| Ar2Filter { c1: t[0].exp(), c2: t[1].exp(), c3: t[2].exp() })
            .collect(),
    }
}

/// Log-barrier rows keeping each filter's damping ratio at most one and its
/// peak inside `[w_lo, w_hi]` rad/s. Both are linear in log-coefficients,
/// so the rows are zero inside the box and grow linearly outside it.
struct Admissible {
    w_lo: f64,
    w_hi: f64,
    weight: f64,
}

impl Admissible {
    const ROWS: usize = 3;

    fn rows(&self, n: usize) -> usize {
        Self::ROWS * n
    }

    fn fill(&self, theta: &DVector<f64>, r: &mut [f64], jac: Option<(&mut DMatrix<f64>, usize)>) {
        let mut jac = jac;
        for (i, t) in theta.as_slice().chunks(3).enumerate() {
            // ln ζ = ln c3 - (ln c1 + ln c2)/2 - ln 2, ln ωp = (ln c1 - ln c2)/2
            let ln_zeta = t[2] - 0.5 * (t[0] + t[1]) - 2f64.ln();
            let ln_wp = 0.5 * (t[0] - t[1]);
            let terms = [
                (ln_zeta, [-0.5, -0.5, 1.0]),
                (self.w_lo.ln() - ln_wp, [-0.5, 0.5, 0.0]),
                (ln_wp - self.w_hi.ln(), [0.5, -0.5, 0.0]),
            ];
            for (k, (excess, grad)) in terms.iter().enumerate() {
                let row = Self::ROWS * i + k;
                let active = *excess > 0.0;
                r[row] = if active { self.weight * excess } else { 0.0 };
                if let Some((j, offset)) = jac.as_mut() {
                    for c in 0..3 {
                        j[(*offset + row, 3 * i + c)] = if active { self.weight * grad[c] } else { 0.0 };
                    }
                }
            }
        }
    }
}

/// Fits `n` filters to the target density over `freq_range` (Hz) by
/// minimizing the trapezoid-weighted squared density error.
pub fn fit_bank_spectral(target: &PsdEstimate, n: usize, init: &[f64], freq_range: [f64; 2]) -> Result<FitResult> {
    check_init(n, init)?;
    let [lo, hi] = freq_range;
    if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid frequency range [{lo}, {hi}] Hz")));
    }
    // the zero-frequency ordinate is left out: after mean removal it
    // carries leakage, and a filter can park its whole variance there
    let points: Vec<(f64, f64)> = target.band(2.0 * PI * lo, 2.0 * PI * hi).filter(|p| p.0 > 0.0).collect();
    if points.len() < 3 * n {
        return Err(Error::InvalidInput(format!(
            "only {} density values in [{lo}, {hi}] Hz for {} coefficients",
            points.len(),
            3 * n
        )));
    }
    let omega: Vec<f64> = points.iter().map(|p| p.0).collect();
    let weights: Vec<f64> = (0..omega.len())
        .map(|k| {
            let left = if k > 0 { omega[k] - omega[k - 1] } else { 0.0 };
            let right = if k + 1 < omega.len() { omega[k + 1] - omega[k] } else { 0.0 };
            (0.5 * (left + right)).sqrt()
        })
        .collect();
    let m = omega.len();
    let bounds = Admissible {
        w_lo: omega[0].max(2.0 * PI * 0.1),
        w_hi: 2.0 * PI * hi,
        weight: 1e-2 * spectral_scale(&points, &weights),
    };
    let problem = |theta: &DVector<f64>, jac: Option<&mut DMatrix<f64>>| {
        let bank = bank_from_log(theta);
        let mut r = DVector::zeros(m + bounds.rows(n));
        for (k, ((&w, p), sw)) in omega.iter().zip(&points).zip(&weights).enumerate() {
            r[k] = sw * (bank.psd(w) - p.1);
        }
        if let Some(jac) = jac {
            bounds.fill(theta, &mut r.as_mut_slice()[m..], Some((&mut *jac, m)));
            for (k, &w) in omega.iter().enumerate() {
                for (i, f) in bank.filters.iter().enumerate() {
                    let re = f.c1 - f.c2 * w * w;
                    let im = w * f.c3;
                    let d = re * re + im * im;
                    let g = -weights[k] / (PI * d * d);
                    jac[(k, 3 * i)] = g * re * f.c1;
                    jac[(k, 3 * i + 1)] = -g * re * w * w * f.c2;
                    jac[(k, 3 * i + 2)] = g * im * w * f.c3;
                }
            }
        } else {
            bounds.fill(theta, &mut r.as_mut_slice()[m..], None);
        }
        r
    };
    levenberg_marquardt(init, m + bounds.rows(n), problem)
}

/// Root of the weighted target energy, the size of the density residual.
fn spectral_scale(points: &[(f64, f64)], weights: &[f64]) -> f64 {
    points.iter().zip(weights).map(|(p, w)| (w * p.1).powi(2)).sum::<f64>().sqrt()
}

/// Stationary displacement variance of a unit-mass oscillator at `f_hz`
/// with damping ratio `zeta` under the bank. Each filter and the
/// oscillator form a fourth-order all-pole system whose output variance
/// follows from its Hurwitz determinants.
pub fn probe_variance(bank: &FilterBank, f_hz: f64, zeta: f64) -> Result<f64> {
    if !(f_hz > 0.0 && zeta > 0.0) {
        return Err(Error::InvalidParameter(format!("probe needs positive frequency and damping, got {f_hz} Hz, ζ = {zeta}")));
    }
    let w = 2.0 * PI * f_hz;
    let (p1, p0) = (2.0 * zeta * w, w * w);
    let mut total = 0.0;
    for f in bank.iter() {
        // coefficients normalized to order one; the variance scales as 1/s²
        let s = f.c1.max(f.c2).max(f.c3);
        let (c1, c2, c3) = (f.c1 / s, f.c2 / s, f.c3 / s);
        // (s² + p1 s + p0)(c2 s² + c3 s + c1) = a4 s⁴ + a3 s³ + a2 s² + a1 s + a0
        let a4 = c2;
        let a3 = c3 + p1 * c2;
        let a2 = c1 + p1 * c3 + p0 * c2;
        let a1 = p1 * c1 + p0 * c3;
        let a0 = p0 * c1;
        let hurwitz = a1 * a2 * a3 - a0 * a3 * a3 - a1 * a1 * a4;
        let v = (a2 * a3 - a1 * a4) / (2.0 * a0 * hurwitz) / s / s;
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Unstable { max_real: 0.0 });
        }
        total += v;
    }
    Ok(total)
}

/// The same variance from quadrature of `|H|² S` over the density grid.
pub fn quadrature_probe_variance(target: &PsdEstimate, f_hz: f64, zeta: f64) -> f64 {
    let w0 = 2.0 * PI * f_hz;
    let y: Vec<f64> = target
        .omega
        .iter()
        .zip(&target.density)
        .map(|(&w, &s)| {
            let re = w0 * w0 - w * w;
            let im = 2.0 * zeta * w0 * w;
            s / (re * re + im * im)
        })
        .collect();
    2.0 * trapezoid(&target.omega, &y)
}

/// Fits `n` filters so that probe oscillators at `eigen_grid` (Hz) with
/// damping `zeta_probe` have the response variance implied by the target
/// density. Residuals are relative per probe.
pub fn fit_bank_variance(target: &PsdEstimate, n: usize, init: &[f64], eigen_grid: &[f64], zeta_probe: f64) -> Result<FitResult> {
    check_init(n, init)?;
    if eigen_grid.is_empty() {
        return Err(Error::InvalidInput("probe grid is empty".into()));
    }
    if eigen_grid.iter().any(|f| !(*f > 0.0 && f.is_finite())) {
        return Err(Error::InvalidParameter("probe frequencies must be positive".into()));
    }
    if !(zeta_probe > 0.0 && zeta_probe < 1.0) {
        return Err(Error::InvalidParameter(format!("probe damping ratio must lie in (0, 1), got {zeta_probe}")));
    }
    let targets: Vec<f64> = eigen_grid.iter().map(|&f| quadrature_probe_variance(target, f, zeta_probe)).collect();
    if targets.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidInput("target density gives zero response variance at some probe".into()));
    }
    let m = eigen_grid.len();
    let (f_lo, f_hi) = eigen_grid.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &f| (a.min(f), b.max(f)));
    let bounds = Admissible {
        w_lo: 2.0 * PI * 0.5 * f_lo,
        w_hi: 2.0 * PI * 1.5 * f_hi,
        weight: (m as f64).sqrt(),
    };
    let residuals = |theta: &DVector<f64>| -> DVector<f64> {
        let bank = bank_from_log(theta);
        let mut r = DVector::zeros(m + bounds.rows(n));
        for (k, (&f, &v)) in eigen_grid.iter().zip(&targets).enumerate() {
            r[k] = match probe_variance(&bank, f, zeta_probe) {
                Ok(p) => p / v - 1.0,
                Err(_) => f64::INFINITY,
            };
        }
        bounds.fill(theta, &mut r.as_mut_slice()[m..], None);
        r
    };
    let problem = |theta: &DVector<f64>, jac: Option<&mut DMatrix<f64>>| {
        let r = residuals(theta);
        if let Some(jac) = jac {
            let h = 1e-6;
            for j in 0..theta.len() {
                let mut tp = theta.clone();
                tp[j] += h;
                let mut tm = theta.clone();
                tm[j] -= h;
                let col = (residuals(&tp) - residuals(&tm)) / (2.0 * h);
                jac.set_column(j, &col);
            }
        }
        r
    };
    levenberg_marquardt(init, m + bounds.rows(n), problem)
}

const MAX_ITERATIONS: usize = 400;

/// Levenberg–Marquardt in log-coefficients with Marquardt's diagonal scaling.
/// Only steps that lower the objective are accepted.
fn levenberg_marquardt<F>(init: &[f64], m: usize, mut problem: F) -> Result<FitResult>
where
    F: FnMut(&DVector<f64>, Option<&mut DMatrix<f64>>) -> DVector<f64>,
{
    let p = init.len();
    let mut theta = DVector::from_iterator(p, init.iter().map(|c| c.ln()));
    let mut jac = DMatrix::zeros(m, p);
    let mut r = problem(&theta, Some(&mut jac));
    let mut obj = r.norm_squared();
    if !obj.is_finite() {
        return Err(Error::Identification {
            message: "objective is not finite at the initial vector".into(),
            best: init.to_vec(),
            objective: obj,
        });
    }
    let initial_objective = obj;
    let mut trace = vec![obj];
    let mut lambda = 1e-3;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && obj > 1e-300 {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if g.amax() <= 1e-15 * obj.sqrt().max(1e-300) {
            break;
        }
        let mut accepted = false;
        while lambda < 1e16 {
            let mut lhs = jtj.clone();
            for i in 0..p {
                lhs[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * jtj.diagonal().amax());
            }
            let step = lhs.cholesky().map(|c| c.solve(&(-&g)));
            if let Some(step) = step {
                let cand = &theta + &step;
                let rc = problem(&cand, None);
                let oc = rc.norm_squared();
                if oc.is_finite() && oc < obj {
                    let small = obj - oc <= 1e-14 * obj && step.amax() < 1e-10;
                    theta = cand;
                    r = problem(&theta, Some(&mut jac));
                    obj = r.norm_squared();
                    trace.push(obj);
                    lambda = (lambda / 3.0).max(1e-12);
                    accepted = !small;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let best: Vec<f64> = theta.iter().map(|t| t.exp()).collect();
    if best.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(Error::Identification {
            message: "coefficients left the admissible range".into(),
            best,
            objective: obj,
        });
    }
    Ok(FitResult {
        bank: FilterBank::from_coefficients(&best)?,
        objective: obj,
        initial_objective,
        trace,
        iterations,
    })
}
