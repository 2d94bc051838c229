//! Gaussian surrogate load realizations with exact filter discretization.

use nalgebra::{DMatrix, Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Ar2Filter, LoadModel};
use crate::error::{Error, Result};

/// Random stream for realization `index` of an ensemble seeded by `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Number of samples on `[0, duration]` at step `dt`, both ends included.
pub fn sample_count(duration: f64, dt: f64) -> usize {
    (duration / dt).round() as usize + 1
}

#[derive(Clone, Debug)]
struct DiscreteFilter {
    transition: Matrix2<f64>,
    /// Lower Cholesky factor of the one-step noise covariance.
    noise: Matrix2<f64>,
    /// Lower Cholesky factor of the stationary covariance.
    stationary: Matrix2<f64>,
}

/// Samples `Y(t_k) = G (μ(t_k) + Σ S_i(t_k))` on a uniform grid, with each
/// filter started from its stationary distribution and advanced by its
/// exact transition.
#[derive(Clone, Debug)]
pub struct LoadGenerator {
    load: LoadModel,
    dt: f64,
    filters: Vec<DiscreteFilter>,
}

impl LoadGenerator {
    pub fn new(load: &LoadModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        load.validate()?;
        let filters = load.bank.iter().map(|f| discretize(f, dt)).collect::<Result<_>>()?;
        Ok(Self { load: load.clone(), dt, filters })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn load(&self) -> &LoadModel {
        &self.load
    }

    /// Draws one spectator weight.
    pub fn draw_weight<R: Rng>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.load.weight.mean + self.load.weight.variance.sqrt() * z
    }

    /// Fills `out[k] = Y(k·dt)` for one spectator, drawing the weight and all
    /// noise from `rng`.
    pub fn fill<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        let weight = self.draw_weight(rng);
        for (k, y) in out.iter_mut().enumerate() {
            *y = self.load.mean.value(k as f64 * self.dt);
        }
        for f in &self.filters {
            let mut x = f.stationary * normal2(rng);
            for y in out.iter_mut() {
                *y += x[0];
                x = f.transition * x + f.noise * normal2(rng);
            }
        }
        for y in out.iter_mut() {
            *y *= weight;
        }
    }

    /// Deterministic realization `index` of the ensemble `seed` on `[0, duration]`.
    pub fn generate(&self, duration: f64, seed: u64, index: u64) -> Result<Vec<f64>> {
        if !(duration > 0.0) {
            return Err(Error::InvalidParameter(format!("duration must be positive, got {duration}")));
        }
        let mut out = vec![0.0; sample_count(duration, self.dt)];
        self.fill(&mut realization_rng(seed, index), &mut out);
        Ok(out)
    }
}

/// Single realization, see [`LoadGenerator`].
pub fn generate_realization(load: &LoadModel, duration: f64, dt: f64, seed: u64) -> Result<Vec<f64>> {
    LoadGenerator::new(load, dt)?.generate(duration, seed, 0)
}

fn normal2<R: Rng>(rng: &mut R) -> Vector2<f64> {
    Vector2::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Transition and noise covariance over `dt` by Van Loan's block exponential.
fn discretize(f: &Ar2Filter, dt: f64) -> Result<DiscreteFilter> {
    let a = f.drift();
    let q = f.a0() * f.a0();
    let mut block = DMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            block[(i, j)] = -a[(i, j)] * dt;
            block[(i + 2, j + 2)] = a[(j, i)] * dt;
        }
    }
    block[(1, 3)] = q * dt;
    let e = block.exp();
    let transition = Matrix2::new(e[(2, 2)], e[(3, 2)], e[(2, 3)], e[(3, 3)]);
    let upper = Matrix2::new(e[(0, 2)], e[(0, 3)], e[(1, 2)], e[(1, 3)]);
    let mut cov = transition * upper;
    cov = (cov + cov.transpose()) * 0.5;
    Ok(DiscreteFilter {
        transition,
        noise: cholesky2(&cov)?,
        stationary: cholesky2(&f.state_covariance())?,
    })
}

/// Cholesky factor of a 2×2 positive semidefinite matrix.
fn cholesky2(c: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let tol = 1e-14 * c.amax();
    if c[(0, 0)] < -tol || c[(1, 1)] < -tol {
        return Err(Error::Numeric {
            message: "noise covariance is not positive semidefinite".into(),
            residual: c[(0, 0)].min(c[(1, 1)]),
        });
    }
    let l11 = c[(0, 0)].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { c[(1, 0)] / l11 } else { 0.0 };
    let l22 = (c[(1, 1)] - l21 * l21).max(0.0).sqrt();
    Ok(Matrix2::new(l11, 0.0, l21, l22))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::{FilterBank, MeanSeries, WeightMoments};
    use crate::measures::sample_moments;

    fn single_filter_load() -> LoadModel {
        LoadModel::new(
            MeanSeries::constant(0.0, 2.67),
            FilterBank::new(vec![Ar2Filter::new(90.8657, 0.3227, 0.0148).unwrap()]).unwrap(),
            WeightMoments::unit(),
        )
        .unwrap()
    }

    #[test]
    fn discretization_matches_stationary_balance() {
        // stationarity: P = Φ P Φᵀ + Q
        for f in FilterBank::reference_spectral().iter() {
            let d = discretize(f, 0.01).unwrap();
            let p = f.state_covariance();
            let q = d.noise * d.noise.transpose();
            let lhs = d.transition * p * d.transition.transpose() + q;
            assert!((lhs - p).amax() < 1e-10 * p.amax(), "{f:?}");
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let g = LoadGenerator::new(&LoadModel::reference_jumping(), 0.01).unwrap();
        let a = g.generate(10.0, 11, 3).unwrap();
        let b = g.generate(10.0, 11, 3).unwrap();
        let c = g.generate(10.0, 11, 4).unwrap();
        assert_eq!(a.len(), 1001);
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn empty_bank_gives_mean_series() {
        let mut load = LoadModel::reference_jumping();
        load.bank = FilterBank::default();
        let y = generate_realization(&load, 2.0, 0.01, 1).unwrap();
        for (k, v) in y.iter().enumerate() {
            assert_eq!(*v, load.mean.value(k as f64 * 0.01));
        }
        assert!(generate_realization(&load, 2.0, 0.0, 1).is_err());
    }

    #[test]
    fn filter_state_moments() {
        let load = single_filter_load();
        let f = load.bank.filters[0];
        let d = discretize(&f, 0.01).unwrap();
        let (mut s11, mut s22, mut s12, mut count) = (0.0, 0.0, 0.0, 0.0);
        for r in 0..1000u64 {
            let mut rng = realization_rng(5, r);
            let mut x = d.stationary * normal2(&mut rng);
            for _ in 0..20_000 {
                s11 += x[0] * x[0];
                s22 += x[1] * x[1];
                s12 += x[0] * x[1];
                count += 1.0;
                x = d.transition * x + d.noise * normal2(&mut rng);
            }
        }
        let (v1, v2, c) = (s11 / count, s22 / count, s12 / count);
        let p = f.state_covariance();
        assert!((v1 - p[(0, 0)]).abs() / p[(0, 0)] < 0.05, "{v1}");
        assert!((v2 - p[(1, 1)]).abs() / p[(1, 1)] < 0.05, "{v2}");
        assert!(c.abs() < 0.05 * (v1 * v2).sqrt());
    }

    #[test]
    fn surrogate_mean_variance_and_gaussianity() {
        let load = LoadModel::reference_jumping();
        let g = LoadGenerator::new(&load, 0.01).unwrap();
        let mut pooled = Vec::new();
        let mut total = 0.0;
        let mut count = 0.0;
        // a narrow filter has a 40 s correlation time; 400 records keep the
        // variance estimate's spread near 1.5%
        for r in 0..400 {
            let y = g.generate(160.0, 21, r).unwrap();
            for (k, v) in y.iter().enumerate() {
                total += v;
                count += 1.0;
                pooled.push(v - load.mean.value(k as f64 * 0.01));
            }
        }
        assert!((total / count - 0.9958).abs() / 0.9958 < 0.02);
        let m = sample_moments(&pooled).unwrap();
        let v = load.bank.total_variance();
        assert!((m.variance - v).abs() / v < 0.05, "{} vs {v}", m.variance);
        assert!(m.skewness.abs() < 0.1);
        assert!((m.kurtosis - 3.0).abs() < 0.2);
    }
}
