//! Frequency-domain path: frequency response, periodic mean response,
//! response spectral densities and their spectral moments.

pub mod grid;

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_columns;
use crate::load::{LoadModel, MeanSeries};
use crate::measures::FourierSeries;
use crate::model::{CrowdLayout, StructuralModel};

pub use grid::{build_grid, FrequencyGrid};

/// Dynamic flexibility `H(ω) = [K − ω²M + iωC]⁻¹`.
#[derive(Clone, Debug)]
pub struct Frf {
    pub omega: f64,
    pub h: DMatrix<Complex64>,
}

fn dynamic_stiffness(model: &StructuralModel, omega: f64) -> DMatrix<Complex64> {
    let n = model.n_dof();
    let (m, c, k) = (model.mass(), model.damping(), model.stiffness());
    DMatrix::from_fn(n, n, |i, j| Complex64::new(k[(i, j)] - omega * omega * m[(i, j)], omega * c[(i, j)]))
}

/// Solves `D(ω) X = rhs`, refusing a numerically singular `D`.
pub fn solve_dynamic(model: &StructuralModel, omega: f64, rhs: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let d = dynamic_stiffness(model, omega);
    let scale = d.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lu = d.lu();
    let min_pivot = lu.u().diagonal().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::SingularFrf { omega });
    }
    lu.solve(rhs).ok_or(Error::SingularFrf { omega })
}

pub fn frf(model: &StructuralModel, omega: f64) -> Result<Frf> {
    let n = model.n_dof();
    let h = solve_dynamic(model, omega, &DMatrix::identity(n, n))?;
    Ok(Frf { omega, h })
}

fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Periodic mean response `μ_Z(t) = u_0 + Σ Re[u_k e^{i k ω̄ t}]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicMean {
    pub period: f64,
    /// `k ω̄`, rad/s, ascending.
    pub omega: Vec<f64>,
    pub static_term: Vec<f64>,
    /// Complex amplitude `u_k` per harmonic, stored as (re, im) per dof.
    pub amplitudes: Vec<Vec<(f64, f64)>>,
}

impl HarmonicMean {
    pub fn n_dof(&self) -> usize {
        self.static_term.len()
    }

    /// Amplitude `|u_k|` of harmonic `k` (1-based) at `dof`.
    pub fn amplitude(&self, k: usize, dof: usize) -> f64 {
        let (re, im) = self.amplitudes[k - 1][dof];
        re.hypot(im)
    }

    /// Phase `arg u_k`, so the harmonic reads `|u_k| cos(k ω̄ t + φ_k)`.
    pub fn phase(&self, k: usize, dof: usize) -> f64 {
        let (re, im) = self.amplitudes[k - 1][dof];
        im.atan2(re)
    }

    /// Displacement mean at `dof` as a real Fourier series.
    pub fn series(&self, dof: usize) -> FourierSeries {
        FourierSeries {
            period: self.period,
            constant: self.static_term[dof],
            cos: self.amplitudes.iter().map(|u| u[dof].0).collect(),
            sin: self.amplitudes.iter().map(|u| -u[dof].1).collect(),
        }
    }

    /// Mean acceleration at `dof`.
    pub fn acceleration_series(&self, dof: usize) -> FourierSeries {
        self.series(dof).derivative().derivative()
    }

    /// All amplitudes multiplied by `factor`, e.g. `E[G]`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            period: self.period,
            omega: self.omega.clone(),
            static_term: self.static_term.iter().map(|v| v * factor).collect(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|u| u.iter().map(|(a, b)| (a * factor, b * factor)).collect())
                .collect(),
        }
    }
}

/// Mean response to the periodic load of every active spectator, unit weight.
/// Harmonics are solved exactly at `k ω̄`; nothing is discretized.
pub fn mean_response(model: &StructuralModel, mean: &MeanSeries, layout: &CrowdLayout) -> Result<HarmonicMean> {
    layout.validate(model)?;
    mean.validate()?;
    let n = model.n_dof();
    let mut load = DMatrix::zeros(n, 1);
    for &seat in &layout.active {
        load[(seat, 0)] += 1.0;
    }
    let load = complex(&load);
    let stat = solve_dynamic(model, 0.0, &load)?;
    let mut omega = Vec::new();
    let mut amplitudes = Vec::new();
    for k in 1..=mean.order() {
        let w = mean.harmonic_omega(k);
        let coeff = Complex64::new(mean.alphas[k - 1], -mean.betas[k - 1]);
        let u = solve_dynamic(model, w, &(&load * coeff))?;
        omega.push(w);
        amplitudes.push(u.column(0).iter().map(|z| (z.re, z.im)).collect());
    }
    Ok(HarmonicMean {
        period: mean.period(),
        omega,
        static_term: stat.column(0).iter().map(|z| z.re * mean.alpha0).collect(),
        amplitudes,
    })
}

/// Diagonal of the displacement spectral density matrix on a grid.
#[derive(Clone, Debug)]
pub struct ResponsePsd {
    pub omega: Vec<f64>,
    /// `density[(i, d)]` at `omega[i]` for dof `d`.
    pub density: DMatrix<f64>,
}

impl ResponsePsd {
    pub fn column(&self, dof: usize) -> Vec<f64> {
        self.density.column(dof).iter().copied().collect()
    }

    /// `ω^(2p) S(ω)`: density of the p-th time derivative.
    pub fn derivative_column(&self, dof: usize, p: i32) -> Vec<f64> {
        self.omega.iter().zip(self.density.column(dof).iter()).map(|(w, s)| w.powi(2 * p) * s).collect()
    }

    /// Writes `omega_rad_s` and the displacement, velocity and acceleration
    /// densities of `dof` (m²·s, m²/s, m²/s³).
    pub fn write_csv(&self, path: &Path, dof: usize) -> Result<()> {
        let d = self.column(dof);
        let v = self.derivative_column(dof, 1);
        let a = self.derivative_column(dof, 2);
        write_columns(
            path,
            &["omega_rad_s", "displacement_m2s", "velocity_m2_per_s", "acceleration_m2_per_s3"],
            &[&self.omega, &d, &v, &a],
        )
    }
}

/// `S_ZZ(ω) = diag(H G S_YY Gᵀ H†)` for independent input channels whose
/// densities are `input(channel, ω)`. Grid nodes are solved in parallel and
/// collected in order.
pub fn response_psd(
    model: &StructuralModel,
    layout: &CrowdLayout,
    input: &(dyn Fn(usize, f64) -> f64 + Sync),
    grid: &[f64],
) -> Result<ResponsePsd> {
    layout.validate(model)?;
    let n = model.n_dof();
    let g = complex(&model.input_for(&layout.active));
    let rows: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&w| {
            let hg = solve_dynamic(model, w, &g)?;
            let s: Vec<f64> = (0..layout.n_active()).map(|j| input(j, w)).collect();
            Ok((0..n)
                .map(|d| (0..layout.n_active()).map(|j| hg[(d, j)].norm_sqr() * s[j]).sum())
                .collect())
        })
        .collect::<Result<_>>()?;
    let density = DMatrix::from_fn(grid.len(), n, |i, d| rows[i][d]);
    Ok(ResponsePsd { omega: grid.to_vec(), density })
}

/// Full Hermitian spectral density matrix `H G S_YY Gᵀ H†` at one frequency.
pub fn response_cross_spectrum(
    model: &StructuralModel,
    layout: &CrowdLayout,
    input: &dyn Fn(usize, f64) -> f64,
    omega: f64,
) -> Result<DMatrix<Complex64>> {
    layout.validate(model)?;
    let g = complex(&model.input_for(&layout.active));
    let hg = solve_dynamic(model, omega, &g)?;
    let s = DMatrix::from_diagonal(&DVector::from_fn(layout.n_active(), |j, _| Complex64::new(input(j, omega), 0.0)));
    Ok(&hg * s * hg.adjoint())
}

/// Spectral moment together with a note when the grid misses tail mass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMoment {
    pub value: f64,
    pub tail_warning: Option<String>,
}

/// `∫ ω^order f(ω) dω` over the real line, as twice the trapezoid rule on
/// the non-negative grid. Warns when the integrand at the upper end (or at a
/// positive lower end) exceeds 1e-6 of its peak.
pub fn spectral_moment(omega: &[f64], density: &[f64], order: u32) -> Result<SpectralMoment> {
    if !matches!(order, 0 | 2 | 4) {
        return Err(Error::InvalidParameter(format!("spectral moment order must be 0, 2 or 4, got {order}")));
    }
    if omega.len() != density.len() || omega.len() < 2 {
        return Err(Error::InvalidInput("density grid needs at least two nodes and one value per node".into()));
    }
    let f: Vec<f64> = omega.iter().zip(density).map(|(w, s)| w.powi(order as i32) * s).collect();
    let value = 2.0 * crate::load::psd::trapezoid(omega, &f);
    let peak = f.iter().cloned().fold(0.0, f64::max);
    let mut tail_warning = None;
    if peak > 0.0 {
        let hi = *f.last().expect("non-empty");
        let lo = if omega[0] > 0.0 { f[0] } else { 0.0 };
        if hi > 1e-6 * peak || lo > 1e-6 * peak {
            tail_warning = Some(format!(
                "order-{order} integrand at the grid ends is {:.1e} of its peak; widen the range",
                hi.max(lo) / peak
            ));
        }
    }
    Ok(SpectralMoment { value, tail_warning })
}

/// Displacement, velocity and acceleration variances per dof from the
/// response density under the filter bank (unit weight).
#[derive(Clone, Debug)]
pub struct SpectralVariances {
    pub displacement: Vec<f64>,
    pub velocity: Vec<f64>,
    pub acceleration: Vec<f64>,
    pub warnings: Vec<String>,
    pub psd: ResponsePsd,
}

pub fn spectral_variances(model: &StructuralModel, load: &LoadModel, layout: &CrowdLayout, grid: &FrequencyGrid) -> Result<SpectralVariances> {
    let bank = &load.bank;
    let psd = response_psd(model, layout, &|_, w| bank.psd(w), &grid.nodes)?;
    let n = model.n_dof();
    let mut out = SpectralVariances {
        displacement: Vec::with_capacity(n),
        velocity: Vec::with_capacity(n),
        acceleration: Vec::with_capacity(n),
        warnings: grid.warnings.clone(),
        psd,
    };
    for d in 0..n {
        let col = out.psd.column(d);
        for (order, target) in [(0, &mut out.displacement), (2, &mut out.velocity), (4, &mut out.acceleration)] {
            let m = spectral_moment(&out.psd.omega, &col, order)?;
            if let Some(w) = m.tail_warning {
                if !out.warnings.contains(&w) {
                    out.warnings.push(w);
                }
            }
            target.push(m.value);
        }
    }
    Ok(out)
}

/// Frequency in Hz to rad/s.
pub fn hz(f: f64) -> f64 {
    2.0 * PI * f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::Ar2Filter;
    use crate::model::build_sdof;
    use approx::assert_relative_eq;

    #[test]
    fn static_limit_and_resonance() {
        let model = build_sdof(2.0, 800.0, 0.05).unwrap();
        assert_relative_eq!(frf(&model, 0.0).unwrap().h[(0, 0)].re, 1.0 / 800.0, max_relative = 1e-14);
        let w0 = 20.0;
        let c = model.damping()[(0, 0)];
        assert_relative_eq!(frf(&model, w0).unwrap().h[(0, 0)].norm(), 1.0 / (c * w0), max_relative = 1e-12);
        let a = frf(&model, 7.3).unwrap().h[(0, 0)];
        let b = frf(&model, -7.3).unwrap().h[(0, 0)];
        assert!((a - b.conj()).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn undamped_resonance_is_singular() {
        let model = build_sdof(1.0, 4.0, 0.0).unwrap();
        assert!(matches!(frf(&model, 2.0), Err(Error::SingularFrf { .. })));
    }

    #[test]
    fn static_mean_deflection() {
        let model = build_sdof(1.0, 400.0, 0.05).unwrap();
        let mean = MeanSeries::constant(2.0, 2.67);
        let hm = mean_response(&model, &mean, &CrowdLayout::active_only(vec![0, 0])).unwrap();
        assert_relative_eq!(hm.static_term[0], 4.0 / 400.0, max_relative = 1e-14);
        assert!(hm.amplitudes.is_empty());
    }

    #[test]
    fn mean_velocity_averages_to_zero() {
        let model = build_sdof(1.0, (2.0 * PI * 5.0f64).powi(2), 0.07).unwrap();
        let hm = mean_response(&model, &MeanSeries::reference_jumping(), &CrowdLayout::active_only(vec![0])).unwrap();
        let v = hm.series(0).derivative();
        assert_eq!(v.constant, 0.0);
        let p = hm.period;
        let avg = crate::measures::adaptive_simpson(&|t| crate::measures::PeriodicMean::value(&v, t), 0.0, p, 1e-12) / p;
        assert!(avg.abs() < 1e-10);
    }

    #[test]
    fn scalar_psd_and_superposition() {
        let (m, k, z) = (1.5, 900.0, 0.04);
        let model = build_sdof(m, k, z).unwrap();
        let c = model.damping()[(0, 0)];
        let f = Ar2Filter::new(90.0, 0.3, 0.2).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| i as f64 * 0.7).collect();
        let one = response_psd(&model, &CrowdLayout::active_only(vec![0]), &|_, w| f.psd(w), &grid).unwrap();
        let two = response_psd(&model, &CrowdLayout::active_only(vec![0, 0]), &|_, w| f.psd(w), &grid).unwrap();
        let zero = response_psd(&model, &CrowdLayout::active_only(vec![0]), &|_, _| 0.0, &grid).unwrap();
        for (i, &w) in grid.iter().enumerate() {
            let exact = f.psd(w) / ((k - m * w * w).powi(2) + (c * w).powi(2));
            assert_relative_eq!(one.density[(i, 0)], exact, max_relative = 1e-12);
            assert_relative_eq!(two.density[(i, 0)], 2.0 * exact, max_relative = 1e-12);
            assert_eq!(zero.density[(i, 0)], 0.0);
        }
    }

    #[test]
    fn flat_density_moments() {
        let a = 3.0;
        let c = 0.5;
        let omega: Vec<f64> = (0..=3000).map(|i| i as f64 * a / 3000.0).collect();
        let flat = vec![c; omega.len()];
        assert_relative_eq!(spectral_moment(&omega, &flat, 0).unwrap().value, 2.0 * a * c, max_relative = 1e-12);
        assert_relative_eq!(spectral_moment(&omega, &flat, 2).unwrap().value, 2.0 * c * a.powi(3) / 3.0, max_relative = 1e-6);
        assert!(spectral_moment(&omega, &flat, 0).unwrap().tail_warning.is_some());
        assert!(spectral_moment(&omega, &flat, 1).is_err());
    }

    #[test]
    fn order_two_equals_velocity_density() {
        let model = build_sdof(1.0, 100.0, 0.05).unwrap();
        let grid: Vec<f64> = (0..400).map(|i| i as f64 * 0.1).collect();
        let f = Ar2Filter::new(30.0, 0.2, 0.3).unwrap();
        let psd = response_psd(&model, &CrowdLayout::active_only(vec![0]), &|_, w| f.psd(w), &grid).unwrap();
        let m2 = spectral_moment(&psd.omega, &psd.column(0), 2).unwrap().value;
        let vel = spectral_moment(&psd.omega, &psd.derivative_column(0, 1), 0).unwrap().value;
        assert_eq!(m2, vel);
    }

    #[test]
    fn cross_spectrum_is_hermitian() {
        let model = crate::model::benchmarks::beam_4seat().unwrap().model;
        let lay = CrowdLayout::active_only(vec![3, 10]);
        let s = response_cross_spectrum(&model, &lay, &|_, _| 1.0, 30.0).unwrap();
        assert!((&s - s.adjoint()).norm() < 1e-12 * s.norm());
        let diag = response_psd(&model, &lay, &|_, _| 1.0, &[30.0]).unwrap();
        for d in 0..model.n_dof() {
            assert_relative_eq!(s[(d, d)].re, diag.density[(0, d)], max_relative = 1e-10);
        }
    }
}
