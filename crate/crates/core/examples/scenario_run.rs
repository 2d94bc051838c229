//! Runs a scenario through the same entry point as `stand run` and prints
//! where the outputs went.

use grandstand::cli::{run_scenario, Scenario};

fn main() -> grandstand::Result<()> {
    let s: Scenario = serde_json::from_value(serde_json::json!({
        "model": { "builtin": "beam_4seat" },
        "load": { "builtin": "jumping" },
        "crowd": "mixed",
        "methods": ["time", "freq", "mc"],
        "levels": [0.0, 0.001, 0.002],
        "frequency": { "range": [0.0, 150.0] },
        "mc": { "realizations": 50, "step": 0.005, "seed": 1 }
    }))?;
    let out = std::env::temp_dir().join("grandstand_scenario_run");
    let outcome = run_scenario(&s, &out)?;
    for (name, m) in &outcome.report.methods {
        for (dof, cell) in &m.dofs {
            println!("{name:>4} {dof}: sigma_x {:?} m, rms_a {:?} m/s^2", cell.displacement_sigma, cell.acceleration_rms);
        }
        for w in &m.warnings {
            println!("{name:>4} warning: {w}");
        }
    }
    for w in &outcome.report.warnings {
        println!("warning: {w}");
    }
    println!("exit code {}, outputs in {}", outcome.exit_code, outcome.out_dir.display());
    Ok(())
}
