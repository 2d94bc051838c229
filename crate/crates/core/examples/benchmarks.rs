//! Builtin structures and their lowest vertical modes.

use grandstand::model::benchmarks::{benchmark, BENCHMARK_NAMES};
use grandstand::model::{modal_damping_ratio, vertical_modes};

fn main() -> grandstand::Result<()> {
    for name in BENCHMARK_NAMES {
        let b = benchmark(name)?;
        println!("{name}: {} ({} dofs, {} seats)", b.description, b.model.n_dof(), b.seats.len());
        for (i, mode) in vertical_modes(&b.model, 4.min(b.model.n_dof()))?.iter().enumerate() {
            println!("  mode {}: {:.3} Hz, damping {:.4}", i + 1, mode.frequency, modal_damping_ratio(&b.model, mode));
        }
    }
    Ok(())
}
