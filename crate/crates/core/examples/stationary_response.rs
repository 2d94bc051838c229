//! Stationary response of the beam benchmark by the Lyapunov equation,
//! with all spectators jumping and with half of them passive.

use grandstand::load::LoadModel;
use grandstand::model::benchmarks::beam_4seat;
use grandstand::model::{attach_passive_crowd, BiodynamicModel};
use grandstand::statespace::solve_full;

fn main() -> grandstand::Result<()> {
    let beam = beam_4seat()?;
    let load = LoadModel::reference_jumping();
    let d = beam.label_dof;

    let active = solve_full(&beam.model, &load, &beam.active_layout())?;
    let mixed_model = attach_passive_crowd(beam.model.clone(), &beam.mixed, &BiodynamicModel::coermann())?;
    let mixed = solve_full(&mixed_model, &load, &beam.mixed)?;

    for (name, m) in [("active", &active), ("mixed", &mixed)] {
        println!(
            "{name:>6}: sigma_x = {:.4e} m, sigma_v = {:.4e} m/s, sigma_a = {:.4} m/s^2",
            m.displacement_variance(d).sqrt(),
            m.velocity_variance(d).sqrt(),
            m.acceleration_variance(d).unwrap_or(f64::NAN).sqrt()
        );
    }
    Ok(())
}
