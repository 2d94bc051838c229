//! Partial modal reduction of the 72-seat stand against the full solve.

use std::time::Instant;

use grandstand::load::LoadModel;
use grandstand::model::benchmarks::stand_72seat;
use grandstand::model::{attach_passive_crowd, BiodynamicModel};
use grandstand::statespace::{reduce_partial_modal, reduced_stationary_covariance, solve_full};

fn main() -> grandstand::Result<()> {
    let stand = stand_72seat()?;
    let load = LoadModel::reference_jumping();
    let model = attach_passive_crowd(stand.model.clone(), &stand.mixed, &BiodynamicModel::coermann())?;
    let d = stand.label_dof;

    let t = Instant::now();
    let full = solve_full(&model, &load, &stand.mixed)?;
    println!("full: {} dofs, sigma_x = {:.4e} m ({:.2} s)", model.n_dof(), full.displacement_variance(d).sqrt(), t.elapsed().as_secs_f64());

    for n in [4, 8, 12, 24] {
        let t = Instant::now();
        let basis = reduce_partial_modal(&model, n)?;
        let red = reduced_stationary_covariance(&basis, &model, &load, &stand.mixed)?;
        let err = red.displacement_variance(d).sqrt() / full.displacement_variance(d).sqrt() - 1.0;
        println!(
            "{n:>3} modes (to {:.2} Hz): sigma_x = {:.4e} m, error {:+.3}% ({:.3} s)",
            basis.f_eig,
            red.displacement_variance(d).sqrt(),
            100.0 * err,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
