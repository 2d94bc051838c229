//! Scenario runner and the `stand` command line (`run`, `identify`, `list`).
//!
//! Exit codes: 0 on success, 2 on validation errors, 3 on numerical failure.

pub mod args;
pub mod identify;
pub mod report;
pub mod scenario;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};

use crate::error::{Error, Result};
use crate::freqdomain::{build_grid, mean_response, spectral_variances, HarmonicMean, ResponsePsd};
use crate::io::write_columns;
use crate::measures::{rms, total_upcrossings, FourierSeries, PeriodicMean, ProcessSummary};
use crate::model::benchmarks::{benchmark, BENCHMARK_NAMES};
use crate::model::{generalized_modes, StructuralModel};
use crate::montecarlo::{convergence_trace, run_ensemble, EnsembleStats, Functional, McConfig};
use crate::statespace::{reduce_partial_modal, reduced_stationary_covariance, solve_full};
pub use report::{file_tag, validate_report, CrossingCell, DofCell, MeanSummary, MethodReport, ScenarioReport, StructureInfo, ToolInfo};
pub use scenario::{prepare, CrowdChoice, LoadSource, McSettings, Method, ModelSource, Prepared, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_NUMERIC
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub report: ScenarioReport,
    pub exit_code: i32,
    pub out_dir: PathBuf,
}

/// Unit-weight variances of one analytic path.
struct Variances {
    displacement: Vec<f64>,
    velocity: Vec<f64>,
    acceleration: Vec<f64>,
}

struct Context<'a> {
    p: &'a Prepared,
    s: &'a Scenario,
    mean: Option<HarmonicMean>,
    levels: Vec<f64>,
}

impl Context<'_> {
    fn label(&self, dof: usize) -> String {
        self.p.model.label(dof).to_string()
    }

    fn mean_series(&self, dof: usize) -> FourierSeries {
        match &self.mean {
            Some(m) => m.series(dof),
            None => FourierSeries::constant(0.0, self.p.load.mean.period()),
        }
    }

    fn analytic_cell(&self, dof: usize, v: &Variances) -> DofCell {
        let g2 = self.p.load.weight.second_moment();
        let (vd, vv, va) = (v.displacement[dof] * g2, v.velocity[dof] * g2, v.acceleration[dof] * g2);
        let ms = self.mean_series(dof);
        let acc = ms.derivative().derivative();
        let mut cell = DofCell {
            displacement_sigma: Some(vd.sqrt()),
            velocity_sigma: Some(vv.sqrt()),
            acceleration_sigma: Some(va.sqrt()),
            displacement_rms: Some(rms(&ms, vd, self.s.horizon)),
            acceleration_rms: Some(rms(&acc, va, self.s.horizon)),
            ..Default::default()
        };
        match ProcessSummary::new(ms, vd.sqrt(), vv.sqrt()) {
            Ok(ps) => {
                cell.crossings = self
                    .levels
                    .iter()
                    .map(|&level| CrossingCell {
                        level,
                        count: total_upcrossings(&ps, level, self.s.horizon),
                        std_error: None,
                    })
                    .collect()
            }
            Err(e) if !self.levels.is_empty() => cell.error = Some(format!("crossings: {e}")),
            Err(_) => {}
        }
        cell
    }

    fn method_report(&self, seconds: f64, cells: impl Fn(usize) -> DofCell) -> MethodReport {
        MethodReport {
            status: "ok".into(),
            seconds,
            error: None,
            dofs: self.p.dofs.iter().map(|&d| (self.label(d), cells(d))).collect(),
            details: Default::default(),
            warnings: Vec::new(),
        }
    }

    fn failed(&self, seconds: f64, e: &Error) -> MethodReport {
        MethodReport {
            status: "error".into(),
            seconds,
            error: Some(e.to_string()),
            dofs: self.p.dofs.iter().map(|&d| (self.label(d), DofCell::failed(e.to_string()))).collect(),
            details: Default::default(),
            warnings: Vec::new(),
        }
    }
}

/// Monte Carlo settings implied by a scenario; the horizon is the
/// statistics window.
pub fn mc_config(s: &Scenario, p: &Prepared, out_dir: &Path) -> McConfig {
    let mut cfg = McConfig::new(s.mc.realizations, s.horizon, s.mc.step, s.mc.seed)
        .with_levels(s.levels.clone())
        .with_dofs(p.dofs.clone());
    cfg.burn_in = s.mc.burn_in;
    if s.mc.traces {
        cfg.trace_path = Some(out_dir.join("traces.bin"));
    }
    cfg
}

fn json_details(pairs: Vec<(&str, serde_json::Value)>) -> serde_json::Map<String, serde_json::Value> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn run_time(ctx: &Context) -> Result<MethodReport> {
    let t = Instant::now();
    let p = ctx.p;
    let (moments, details) = match ctx.s.reduction {
        Some(k) => {
            let basis = reduce_partial_modal(&p.model, k.min(p.model.n_structure()))?;
            let m = reduced_stationary_covariance(&basis, &p.model, &p.load, &p.layout)?;
            let d = json_details(vec![
                ("retained_modes", basis.n_eig.into()),
                ("highest_retained_hz", basis.f_eig.into()),
                ("residual", m.residual.into()),
            ]);
            (m, d)
        }
        None => {
            let m = solve_full(&p.model, &p.load, &p.layout)?;
            let d = json_details(vec![("residual", m.residual.into())]);
            (m, d)
        }
    };
    let n = p.model.n_dof();
    let acc = moments
        .acceleration_covariance
        .as_ref()
        .ok_or_else(|| Error::InvalidRequest("acceleration covariance missing".into()))?;
    let v = Variances {
        displacement: (0..n).map(|d| moments.displacement_variance(d)).collect(),
        velocity: (0..n).map(|d| moments.velocity_variance(d)).collect(),
        acceleration: (0..n).map(|d| acc[(d, d)]).collect(),
    };
    let mut r = ctx.method_report(t.elapsed().as_secs_f64(), |d| ctx.analytic_cell(d, &v));
    r.details = details;
    r.seconds = t.elapsed().as_secs_f64();
    Ok(r)
}

fn run_freq(ctx: &Context) -> Result<(MethodReport, ResponsePsd)> {
    let t = Instant::now();
    let p = ctx.p;
    let fs = &ctx.s.frequency;
    let grid = build_grid(&p.model, &p.load, fs.range, fs.budget)?;
    let sv = spectral_variances(&p.model, &p.load, &p.layout, &grid)?;
    let v = Variances {
        displacement: sv.displacement.clone(),
        velocity: sv.velocity.clone(),
        acceleration: sv.acceleration.clone(),
    };
    let mut r = ctx.method_report(0.0, |d| ctx.analytic_cell(d, &v));
    r.details = json_details(vec![
        ("grid_nodes", grid.len().into()),
        ("resolved_peaks", grid.peaks.len().into()),
        ("range_hz", serde_json::json!(fs.range)),
    ]);
    r.warnings = sv.warnings.clone();
    r.seconds = t.elapsed().as_secs_f64();
    let mut psd = sv.psd;
    psd.density *= p.load.weight.second_moment();
    Ok((r, psd))
}

fn run_mc(ctx: &Context, cfg: &McConfig) -> Result<(MethodReport, EnsembleStats)> {
    let t = Instant::now();
    let p = ctx.p;
    let stats = run_ensemble(&p.model, &p.load, &p.layout, cfg)?;
    let mut r = ctx.method_report(0.0, |d| {
        let st = stats.dof(d).expect("tracked dof");
        DofCell {
            displacement_sigma: Some(st.displacement.variance.sqrt()),
            velocity_sigma: Some(st.velocity_variance.sqrt()),
            acceleration_sigma: Some(st.acceleration.variance.sqrt()),
            displacement_rms: Some(st.displacement_rms),
            acceleration_rms: Some(st.acceleration_rms),
            crossings: st
                .crossings
                .iter()
                .map(|c| CrossingCell {
                    level: c.level,
                    count: c.mean,
                    std_error: Some(c.std_error),
                })
                .collect(),
            skewness: Some(st.displacement.skewness),
            kurtosis: Some(st.displacement.kurtosis),
            error: None,
        }
    });
    for &d in &p.dofs {
        let st = stats.dof(d).expect("tracked dof");
        for c in &st.crossings {
            // rare levels: few events per record and a wide spread
            if c.mean < 5.0 || c.std_error > 0.2 * c.mean {
                r.warnings.push(format!(
                    "{} crossings at {} m: {:.3} ± {:.3} per record after {} realizations; unconverged, read as a lower bound",
                    ctx.label(d),
                    c.level,
                    c.mean,
                    c.std_error,
                    cfg.n_realizations
                ));
            }
        }
    }
    r.details = json_details(vec![
        ("realizations", cfg.n_realizations.into()),
        ("step", cfg.step.into()),
        ("burn_in", stats.burn_in.into()),
        ("window_samples", stats.window_samples.into()),
        ("seed", cfg.seed.into()),
    ]);
    r.seconds = t.elapsed().as_secs_f64();
    Ok((r, stats))
}

fn mean_summary(mean: &HarmonicMean, dof: usize, factor: f64) -> MeanSummary {
    let m = mean.scaled(factor);
    let series = m.series(dof);
    MeanSummary {
        period: m.period,
        static_term: m.static_term[dof],
        amplitudes: (1..=m.omega.len()).map(|k| m.amplitude(k, dof)).collect(),
        phases: (1..=m.omega.len()).map(|k| m.phase(k, dof)).collect(),
        samples: (0..32).map(|i| series.value(m.period * i as f64 / 32.0)).collect(),
    }
}

fn first_frequency(model: &StructuralModel) -> f64 {
    generalized_modes(model.stiffness(), model.mass(), 1)
        .ok()
        .and_then(|m| m.first().map(|m| m.frequency))
        .unwrap_or(f64::NAN)
}

/// Runs every requested method, writes the report and CSV files to
/// `out_dir` and returns the exit code. Validation problems are returned
/// as errors before anything is written; method failures are recorded in
/// the report and give exit code 3.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<RunOutcome> {
    let p = prepare(s)?;
    let mut methods = s.methods.clone();
    methods.sort();
    methods.dedup();
    let cfg = mc_config(s, &p, out_dir);
    if methods.contains(&Method::Mc) {
        cfg.validate(p.load.mean.f_bar)?;
    }
    std::fs::create_dir_all(out_dir)?;

    let mut warnings = Vec::new();
    let mean = match mean_response(&p.model, &p.load.mean, &p.layout) {
        Ok(m) => Some(m),
        Err(e) => {
            warnings.push(format!("mean response: {e}"));
            None
        }
    };
    let n_filters = p.load.bank.len();
    let structure = StructureInfo {
        n_dof: p.model.n_dof(),
        n_structure: p.model.n_structure(),
        n_active: p.layout.n_active(),
        n_passive: p.layout.n_passive(),
        mass_ratio: p.layout.mass_ratio(&p.model, &p.biodynamic),
        augmented_dimension: 2 * p.model.n_dof() + 2 * n_filters * p.layout.n_active(),
        first_frequency_hz: first_frequency(&p.model),
    };
    let ctx = Context {
        p: &p,
        s,
        mean,
        levels: s.levels.clone(),
    };

    let mut reports = BTreeMap::new();
    let mut code = EXIT_OK;
    let mut psd = None;
    let mut stats = None;
    for m in &methods {
        info!("running {} method", m.name());
        let t = Instant::now();
        let result = match m {
            Method::Time => run_time(&ctx),
            Method::Freq => run_freq(&ctx).map(|(r, d)| {
                psd = Some(d);
                r
            }),
            Method::Mc => run_mc(&ctx, &cfg).map(|(r, st)| {
                stats = Some(st);
                r
            }),
        };
        let r = match result {
            Ok(r) => r,
            Err(e) => {
                warn!("{} method failed: {e}", m.name());
                code = code.max(exit_code(&e));
                ctx.failed(t.elapsed().as_secs_f64(), &e)
            }
        };
        reports.insert(m.name().to_string(), r);
    }

    let g_mean = p.load.weight.mean;
    let mut mean_map = BTreeMap::new();
    for &d in &p.dofs {
        let label = ctx.label(d);
        let tag = file_tag(&label);
        if let Some(m) = &ctx.mean {
            mean_map.insert(label.clone(), mean_summary(m, d, g_mean));
        }
        write_crossings(out_dir, &tag, &label, &ctx.levels, &reports)?;
        if let Some(psd) = &psd {
            psd.write_csv(&out_dir.join(format!("psd_{tag}.csv")), d)?;
        }
        write_mean(out_dir, &tag, &ctx, d, stats.as_ref(), s)?;
    }
    if let Some(st) = &stats {
        write_convergence(out_dir, s, &ctx, st)?;
    }

    let report = ScenarioReport {
        tool: ToolInfo::default(),
        scenario: s.clone(),
        structure,
        methods: reports,
        mean: mean_map,
        warnings,
    };
    let value = serde_json::to_value(&report)?;
    validate_report(&value)?;
    std::fs::write(out_dir.join("report.json"), serde_json::to_string_pretty(&value)?)?;
    Ok(RunOutcome {
        report,
        exit_code: code,
        out_dir: out_dir.to_path_buf(),
    })
}

fn write_crossings(dir: &Path, tag: &str, label: &str, levels: &[f64], reports: &BTreeMap<String, MethodReport>) -> Result<()> {
    let mut header = vec!["level_m".to_string()];
    let mut cols: Vec<Vec<f64>> = vec![levels.to_vec()];
    for (name, r) in reports {
        let Some(cell) = r.dofs.get(label) else { continue };
        if cell.crossings.len() != levels.len() {
            continue;
        }
        header.push(format!("{name}_count"));
        cols.push(cell.crossings.iter().map(|c| c.count).collect());
        if cell.crossings.iter().all(|c| c.std_error.is_some()) {
            header.push(format!("{name}_std_error"));
            cols.push(cell.crossings.iter().map(|c| c.std_error.unwrap_or(0.0)).collect());
        }
    }
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let c: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    write_columns(&dir.join(format!("crossings_{tag}.csv")), &h, &c)
}

fn write_mean(dir: &Path, tag: &str, ctx: &Context, dof: usize, stats: Option<&EnsembleStats>, s: &Scenario) -> Result<()> {
    let g = ctx.p.load.weight.mean;
    let series = ctx.mean_series(dof).scaled(g);
    let path = dir.join(format!("mean_{tag}.csv"));
    match stats.and_then(|st| st.dof(dof).map(|d| (st, d))) {
        Some((st, d)) => {
            let h = st.config.step;
            let start = (st.burn_in / h).round();
            let t: Vec<f64> = (0..d.mean_trajectory.len()).map(|k| (start + k as f64) * h).collect();
            let analytic: Vec<f64> = t.iter().map(|&t| series.value(t)).collect();
            write_columns(
                &path,
                &["time_s", "analytic_mean_m", "mc_mean_m", "exact_discrete_mean_m"],
                &[&t, &analytic, &d.mean_trajectory, &d.deterministic_mean],
            )
        }
        None => {
            let n = (s.horizon / 0.01).round() as usize + 1;
            let t: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
            let analytic: Vec<f64> = t.iter().map(|&t| series.value(t)).collect();
            write_columns(&path, &["time_s", "analytic_mean_m"], &[&t, &analytic])
        }
    }
}

/// Functionals traced for a scenario: variance, acceleration RMS, one
/// crossing count per level and any extra names from the settings.
pub fn scenario_functionals(s: &Scenario) -> Result<Vec<Functional>> {
    let mut out = vec![Functional::DisplacementVariance, Functional::AccelerationRms];
    out.extend(s.levels.iter().map(|&level| Functional::Crossings { level }));
    for name in &s.mc.functionals {
        let f: Functional = name.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    Ok(out)
}

fn write_convergence(dir: &Path, s: &Scenario, ctx: &Context, st: &EnsembleStats) -> Result<()> {
    for f in scenario_functionals(s)? {
        let mut header = vec!["realizations".to_string()];
        let mut cols = vec![(1..=st.config.n_realizations).map(|k| k as f64).collect::<Vec<f64>>()];
        for &d in &ctx.p.dofs {
            header.push(ctx.label(d));
            cols.push(convergence_trace(st, f, d)?);
        }
        let h: Vec<&str> = header.iter().map(String::as_str).collect();
        let c: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        write_columns(&dir.join(format!("convergence_{}.csv", file_tag(&f.to_string()))), &h, &c)?;
    }
    Ok(())
}

/// One row of the benchmark listing.
#[derive(Clone, Debug, serde::Serialize)]
pub struct BenchmarkInfo {
    pub name: &'static str,
    pub n_dof: usize,
    pub seats: usize,
    pub first_frequency_hz: f64,
    pub description: &'static str,
}

pub fn list_benchmarks() -> Result<Vec<BenchmarkInfo>> {
    BENCHMARK_NAMES
        .iter()
        .map(|name| {
            let b = benchmark(name)?;
            Ok(BenchmarkInfo {
                name: b.name,
                n_dof: b.model.n_dof(),
                seats: b.seats.len(),
                first_frequency_hz: first_frequency(&b.model),
                description: b.description,
            })
        })
        .collect()
}
