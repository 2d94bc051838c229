//! Expected upcrossings and RMS from the Rice formula with a periodic mean.

use std::f64::consts::PI;

use grandstand::freqdomain::mean_response;
use grandstand::load::LoadModel;
use grandstand::measures::{rms, total_upcrossings, upcrossing_rate, ProcessSummary};
use grandstand::model::{build_sdof, CrowdLayout};
use grandstand::statespace::solve_full;

fn main() -> grandstand::Result<()> {
    let model = build_sdof(1.0, (2.0 * PI * 2.67).powi(2), 0.07)?;
    let load = LoadModel::reference_jumping();
    let layout = CrowdLayout::active_only(vec![0]);
    let horizon = 160.0;

    let m = solve_full(&model, &load, &layout)?;
    let mean = mean_response(&model, &load.mean, &layout)?;
    let (sigma, sigma_dot) = (m.displacement_variance(0).sqrt(), m.velocity_variance(0).sqrt());
    let s = ProcessSummary::new(mean.series(0), sigma, sigma_dot)?;

    println!("sigma_x = {sigma:.4e} m, mean amplitude {:.4e} m", mean.amplitude(1, 0));
    println!("rms displacement {:.4e} m", rms(&mean.series(0), sigma * sigma, horizon));
    println!("rms acceleration {:.4} m/s^2", rms(&mean.acceleration_series(0), m.acceleration_variance(0).unwrap_or(0.0), horizon));
    for level in [-0.02, -0.01, 0.0, 0.01, 0.02, 0.03] {
        println!(
            "level {level:+.3} m: rate at t=0 {:.4} /s, {:.2} upcrossings in {horizon} s",
            upcrossing_rate(&s, level, 0.0),
            total_upcrossings(&s, level, horizon)
        );
    }
    Ok(())
}
