use std::f64::consts::PI;

use nalgebra::DMatrix;
use proptest::prelude::*;

use grandstand::load::identify::probe_variance;
use grandstand::load::{Ar2Filter, FilterBank, LoadModel, MeanSeries, WeightMoments};
use grandstand::measures::{adaptive_simpson, sample_moments, upcrossing_rate, ProcessSummary};
use grandstand::model::{build_sdof, CrowdLayout};
use grandstand::statespace::lyapunov::{balancing_scales, lyapunov_residual};
use grandstand::statespace::{solve_full, solve_lyapunov};

/// Hurwitz matrix with negative definite symmetric part plus a skew part,
/// and a PSD right-hand side.
fn stable_system() -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1usize..=8).prop_flat_map(|n| {
        let entries = prop::collection::vec(-1.0f64..1.0, n * n);
        (entries.clone(), entries.clone(), entries, 0.01f64..2.0, 0.1f64..30.0).prop_map(move |(g, w, b, shift, skew)| {
            let g = DMatrix::from_vec(n, n, g);
            let w = DMatrix::from_vec(n, n, w);
            let b = DMatrix::from_vec(n, n, b);
            let a = -(&g * g.transpose()) / n as f64 - DMatrix::identity(n, n) * shift + (&w - w.transpose()) * skew;
            (a, &b * b.transpose())
        })
    })
}

fn filter() -> impl Strategy<Value = Ar2Filter> {
    (0.5f64..5.0, 0.02f64..0.9, 1.0f64..1e3).prop_map(|(f, zeta, c2)| {
        let w = 2.0 * PI * f;
        Ar2Filter::new(c2 * w * w, c2, 2.0 * zeta * w * c2).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lyapunov_solution_is_symmetric_psd((a, q) in stable_system()) {
        let sol = solve_lyapunov(&a, &q).unwrap();
        let x = &sol.x;
        let scale = x.amax().max(f64::MIN_POSITIVE);
        prop_assert!((x - x.transpose()).amax() <= 1e-12 * scale);
        let eig = x.clone().symmetric_eigen().eigenvalues;
        prop_assert!(eig.min() >= -1e-10 * scale, "min eigenvalue {}", eig.min());
        prop_assert!(sol.residual < 1e-12, "residual {}", sol.residual);
        prop_assert!((lyapunov_residual(&a, x, &q) - sol.residual).abs() < 1e-15);
    }

    #[test]
    fn balancing_uses_powers_of_two((a, _q) in stable_system()) {
        for d in balancing_scales(&a) {
            prop_assert!(d > 0.0 && d.log2().fract() == 0.0, "scale {d}");
        }
    }

    #[test]
    fn filter_psd_integrates_to_variance(flt in filter()) {
        // ω = tan θ maps the half line onto [0, π/2)
        let g = |th: f64| {
            let c = th.cos();
            if c <= 0.0 { 0.0 } else { flt.psd(th.tan()) / (c * c) }
        };
        let v = 2.0 * adaptive_simpson(&g, 0.0, 0.5 * PI, 1e-12 * flt.variance());
        prop_assert!((v / flt.variance() - 1.0).abs() < 1e-6, "{v} vs {}", flt.variance());
    }

    #[test]
    fn oscillator_variance_matches_state_space(flt in filter(), f in 0.5f64..12.0, zeta in 0.001f64..0.2) {
        let bank = FilterBank::new(vec![flt]).unwrap();
        let model = build_sdof(1.0, (2.0 * PI * f).powi(2), zeta).unwrap();
        let load = LoadModel::new(MeanSeries::constant(0.0, 2.0), bank.clone(), WeightMoments::unit()).unwrap();
        let full = solve_full(&model, &load, &CrowdLayout::active_only(vec![0])).unwrap().displacement_variance(0);
        let closed = probe_variance(&bank, f, zeta).unwrap();
        prop_assert!((full / closed - 1.0).abs() < 1e-8, "{full} vs {closed}");
    }

    #[test]
    fn stationary_crossing_rate_is_even_and_peaks_at_the_mean(sigma in 1e-4f64..1.0, ratio in 1.0f64..100.0, x in 0.0f64..5.0) {
        let s = ProcessSummary::stationary(sigma, ratio * sigma).unwrap();
        let up = upcrossing_rate(&s, x * sigma, 0.0);
        let down = upcrossing_rate(&s, -x * sigma, 0.0);
        let peak = upcrossing_rate(&s, 0.0, 0.0);
        prop_assert!((up - down).abs() <= 1e-14 * peak);
        prop_assert!(up <= peak * (1.0 + 1e-14));
        prop_assert!((peak - ratio / (2.0 * PI)).abs() <= 1e-12 * peak);
    }

    #[test]
    fn moments_follow_affine_maps(data in prop::collection::vec(-10.0f64..10.0, 3..200), shift in -50.0f64..50.0, scale in 0.1f64..10.0) {
        let a = sample_moments(&data).unwrap();
        prop_assume!(a.variance > 1e-6);
        let mapped: Vec<f64> = data.iter().map(|v| scale * v + shift).collect();
        let b = sample_moments(&mapped).unwrap();
        prop_assert_eq!(a.count, b.count);
        prop_assert!((b.mean - (scale * a.mean + shift)).abs() < 1e-9 * (1.0 + b.mean.abs()));
        prop_assert!((b.variance / (scale * scale * a.variance) - 1.0).abs() < 1e-8);
        prop_assert!((b.skewness - a.skewness).abs() < 1e-6);
        prop_assert!((b.kurtosis - a.kurtosis).abs() < 1e-6);
        prop_assert!(a.variance >= 0.0 && a.kurtosis >= 1.0 - 1e-12);
    }
}
