//! Monte Carlo ensembles of Newmark integrations on a single oscillator,
//! at three time steps.

use std::f64::consts::PI;

use grandstand::load::LoadModel;
use grandstand::model::{build_sdof, CrowdLayout};
use grandstand::montecarlo::{run_ensemble, McConfig};
use grandstand::statespace::solve_full;

fn main() -> grandstand::Result<()> {
    let model = build_sdof(1.0, (2.0 * PI * 5.0).powi(2), 0.05)?;
    // the random part only, so ensemble variances compare with the Lyapunov ones
    let load = LoadModel::reference_jumping().centered();
    let layout = CrowdLayout::active_only(vec![0]);

    let exact = solve_full(&model, &load, &layout)?;
    let (sx, sa) = (exact.displacement_variance(0).sqrt(), exact.acceleration_variance(0).unwrap_or(f64::NAN).sqrt());
    println!("exact: sigma_x {sx:.4e} m, sigma_a {sa:.4} m/s^2");

    for h in [0.01, 0.005, 0.0025] {
        let cfg = McConfig::new(200, 160.0, h, 7).with_levels(vec![0.0, 0.004]);
        let st = run_ensemble(&model, &load, &layout, &cfg)?;
        let d = &st.dofs[0];
        println!(
            "h = {h}: sigma_x {:.4} of exact, sigma_a {:.4}, kurtosis {:.3}, upcrossings of 0 / 4 mm: {:.1} / {:.1} per record",
            d.displacement.variance.sqrt() / sx,
            d.acceleration.variance.sqrt() / sa,
            d.displacement.kurtosis,
            d.crossings[0].mean,
            d.crossings[1].mean
        );
    }
    Ok(())
}
