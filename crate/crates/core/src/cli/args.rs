//! Command-line flags of `stand`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use super::identify::{identify_to_dir, IdentifyOptions, Objective};
use super::{exit_code, list_benchmarks, run_scenario, Method, Scenario, EXIT_OK, EXIT_VALIDATION};
use crate::error::{Error, Result};
use crate::load::WeightMoments;

#[derive(Debug, Parser)]
#[command(name = "stand", version, about = "Stochastic response of grandstands under jumping crowds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and write report.json plus CSV data.
    Run(RunArgs),
    /// Identify a load model from recorded realizations.
    Identify(IdentifyArgs),
    /// List the builtin benchmark structures.
    List,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Comma-separated subset of time,freq,mc.
    #[arg(long)]
    pub methods: Option<String>,
    /// Comma-separated displacement levels, m.
    #[arg(long, allow_hyphen_values = true)]
    pub levels: Option<String>,
    /// Horizon for crossing counts and RMS, s.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory; defaults to the scenario's `output` or `./stand_out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// CSV with a time column and one column per realization.
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value = "spectral")]
    pub objective: String,
    /// Harmonics of the mean.
    #[arg(long, default_value_t = 4)]
    pub order: usize,
    #[arg(long, default_value_t = 6)]
    pub filters: usize,
    /// Jump frequency, Hz; estimated when omitted.
    #[arg(long)]
    pub f_bar: Option<f64>,
    /// Lag window truncation, s.
    #[arg(long)]
    pub lag: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub weight_mean: f64,
    #[arg(long, default_value_t = 0.0)]
    pub weight_var: f64,
    #[arg(long, default_value = "identified")]
    pub out: PathBuf,
}

fn parse_levels(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("levels: `{t}` is not a number"))))
        .collect()
}

/// Scenario with the command-line overrides applied.
pub fn apply_overrides(mut s: Scenario, a: &RunArgs) -> Result<Scenario> {
    if let Some(m) = &a.methods {
        s.methods = Method::parse_list(m)?;
    }
    if let Some(l) = &a.levels {
        s.levels = parse_levels(l)?;
    }
    if let Some(h) = a.horizon {
        s.horizon = h;
    }
    if let Some(seed) = a.seed {
        s.mc.seed = seed;
    }
    if let Some(out) = &a.out {
        s.output = Some(out.clone());
    }
    Ok(s)
}

fn run(a: &RunArgs) -> Result<i32> {
    if let Some(n) = a.threads {
        if n == 0 {
            return Err(Error::InvalidParameter("threads: must be at least 1".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let s = apply_overrides(Scenario::from_path(&a.config)?, a)?;
    let out = s.output.clone().unwrap_or_else(|| PathBuf::from("stand_out"));
    let outcome = run_scenario(&s, &out)?;
    for (name, m) in &outcome.report.methods {
        for (dof, cell) in &m.dofs {
            match (&cell.error, cell.displacement_sigma, cell.acceleration_rms) {
                (None, Some(sd), Some(ar)) => println!("{name:>4} {dof:>10}  sigma_x = {sd:.4e} m  rms_a = {ar:.4} m/s^2  ({:.2} s)", m.seconds),
                (Some(e), _, _) => println!("{name:>4} {dof:>10}  error: {e}"),
                _ => {}
            }
        }
    }
    println!("report written to {}", out.join("report.json").display());
    Ok(outcome.exit_code)
}

fn identify(a: &IdentifyArgs) -> Result<i32> {
    let opts = IdentifyOptions {
        objective: a.objective.parse::<Objective>()?,
        order: a.order,
        filters: a.filters,
        f_bar: a.f_bar,
        lag: a.lag,
        weight: WeightMoments::new(a.weight_mean, a.weight_var)?,
        ..Default::default()
    };
    let id = identify_to_dir(&a.records, &opts, &a.out)?;
    let s = &id.summary;
    println!(
        "f_bar = {:.4} Hz, objective = {:.4e}, bank variance = {:.4} (target {:.4}), probe error max {:.2}%",
        s.f_bar,
        s.objective_value,
        s.bank_variance,
        s.target_variance,
        100.0 * s.probe_max_relative_error
    );
    println!("load model written to {}", a.out.join("load_model.json").display());
    Ok(EXIT_OK)
}

fn list() -> Result<i32> {
    println!("{:<14} {:>6} {:>6} {:>10}  description", "name", "dofs", "seats", "f1 [Hz]");
    for b in list_benchmarks()? {
        println!("{:<14} {:>6} {:>6} {:>10.3}  {}", b.name, b.n_dof, b.seats, b.first_frequency_hz, b.description);
    }
    Ok(EXIT_OK)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Identify(a) => identify(a),
        Command::List => list(),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
