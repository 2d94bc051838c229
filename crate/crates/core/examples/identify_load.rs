//! Identifies a load model from synthetic records and compares the fitted
//! filter bank with the one that generated them.

use grandstand::cli::identify::{identify, IdentifyOptions, Objective};
use grandstand::load::generator::LoadGenerator;
use grandstand::load::identify::probe_variance;
use grandstand::load::LoadModel;

fn main() -> grandstand::Result<()> {
    let truth = LoadModel::reference_jumping();
    let dt = 0.01;
    let gen = LoadGenerator::new(&truth, dt)?;
    let records: Vec<Vec<f64>> = (0..60).map(|i| gen.generate(120.0, 3, i)).collect::<grandstand::Result<_>>()?;
    let times: Vec<f64> = (0..records[0].len()).map(|k| k as f64 * dt).collect();

    for objective in [Objective::Spectral, Objective::Variance] {
        let opts = IdentifyOptions { objective, ..Default::default() };
        let id = identify(&times, &records, &opts)?;
        let s = &id.summary;
        println!(
            "{objective:?}: f_bar {:.3} Hz, bank variance {:.4} (true {:.4}), probe error max {:.2}%",
            s.f_bar,
            s.bank_variance,
            truth.bank.total_variance(),
            100.0 * s.probe_max_relative_error
        );
        for f in [2.0, 2.67, 4.0, 5.34] {
            let fit = probe_variance(&id.load.bank, f, 0.05)?;
            let want = probe_variance(&truth.bank, f, 0.05)?;
            println!("  probe {f:.2} Hz: {:+.2}% against the generating bank", 100.0 * (fit / want - 1.0));
        }
    }
    Ok(())
}
