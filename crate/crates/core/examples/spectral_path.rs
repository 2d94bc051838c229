//! Frequency-domain variances on an adaptive grid, compared with the
//! state-space result for a lightly damped oscillator.

use std::f64::consts::PI;

use grandstand::freqdomain::{build_grid, spectral_variances};
use grandstand::load::LoadModel;
use grandstand::model::{build_sdof, CrowdLayout};
use grandstand::statespace::solve_full;

fn main() -> grandstand::Result<()> {
    let load = LoadModel::reference_jumping();
    let layout = CrowdLayout::active_only(vec![0]);
    for (f, zeta) in [(2.67, 0.01), (5.0, 0.02), (8.0, 0.05)] {
        let model = build_sdof(1.0, (2.0 * PI * f).powi(2), zeta)?;
        let grid = build_grid(&model, &load, [0.0, 30.0], 2000)?;
        let sv = spectral_variances(&model, &load, &layout, &grid)?;
        let ss = solve_full(&model, &load, &layout)?;
        println!(
            "{f:.2} Hz, zeta {zeta}: {} nodes, sigma_x freq {:.5e} vs time {:.5e}, sigma_a freq {:.4} vs time {:.4}",
            grid.nodes.len(),
            sv.displacement[0].sqrt(),
            ss.displacement_variance(0).sqrt(),
            sv.acceleration[0].sqrt(),
            ss.acceleration_variance(0).unwrap_or(f64::NAN).sqrt()
        );
        for w in &sv.warnings {
            println!("  warning: {w}");
        }
    }
    Ok(())
}
