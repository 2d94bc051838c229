//! Scenario files: structure, load, crowd and the requested methods.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::load::{FilterBank, LoadModel, MeanSeries};
use crate::model::benchmarks::benchmark;
use crate::model::io::{import_matrices, ModelFile};
use crate::model::{attach_passive_crowd, BiodynamicModel, CrowdLayout, DofLabel, StructuralModel};
use crate::montecarlo::Functional;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Time,
    Freq,
    Mc,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Time => "time",
            Method::Freq => "freq",
            Method::Mc => "mc",
        }
    }

    /// Comma-separated list such as `time,freq,mc`.
    pub fn parse_list(s: &str) -> Result<Vec<Method>> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| match t {
                "time" => Ok(Method::Time),
                "freq" => Ok(Method::Freq),
                "mc" => Ok(Method::Mc),
                other => Err(Error::InvalidParameter(format!("unknown method `{other}` (expected time, freq or mc)"))),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSource {
    Builtin(String),
    File(PathBuf),
    Matrices {
        mass: PathBuf,
        damping: PathBuf,
        stiffness: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSource {
    /// `jumping` (spectrally fitted bank) or `jumping_variance`.
    Builtin(String),
    File(PathBuf),
}

/// Which seats carry active and passive spectators.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum CrowdChoice {
    /// Builtins: every seat active. Model files: the crowd listed in the file.
    #[default]
    Default,
    /// Builtins only: half of the seats passive.
    Mixed,
    Explicit {
        #[serde(default)]
        active: Vec<DofLabel>,
        #[serde(default)]
        passive: Vec<DofLabel>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySettings {
    /// Hz.
    #[serde(default = "default_range")]
    pub range: [f64; 2],
    #[serde(default = "default_budget")]
    pub budget: usize,
}

impl Default for FrequencySettings {
    fn default() -> Self {
        Self {
            range: default_range(),
            budget: default_budget(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub burn_in: Option<f64>,
    /// Extra convergence traces; variance, acceleration RMS and one crossing
    /// count per level are always written.
    #[serde(default)]
    pub functionals: Vec<String>,
    /// Stream every realization to `traces.bin` in the output directory.
    #[serde(default)]
    pub traces: bool,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            realizations: default_realizations(),
            step: default_step(),
            seed: 0,
            burn_in: None,
            functionals: Vec::new(),
            traces: false,
        }
    }
}

fn default_range() -> [f64; 2] {
    [0.0, 30.0]
}
fn default_budget() -> usize {
    2000
}
fn default_realizations() -> usize {
    1000
}
fn default_step() -> f64 {
    0.01
}
fn default_methods() -> Vec<Method> {
    vec![Method::Time, Method::Freq]
}
fn default_levels() -> Vec<f64> {
    vec![0.002, 0.005]
}
fn default_horizon() -> f64 {
    160.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub model: ModelSource,
    pub load: LoadSource,
    #[serde(default)]
    pub crowd: CrowdChoice,
    /// Passive spectator model; defaults to the model file's or Coermann's.
    #[serde(default)]
    pub biodynamic: Option<BiodynamicModel>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Displacement levels, m.
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    /// s.
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Reported dofs; defaults to the model's labeled dof.
    #[serde(default)]
    pub dofs: Vec<DofLabel>,
    /// Retained structural modes for the time path; full solve when absent.
    #[serde(default)]
    pub reduction: Option<usize>,
    #[serde(default)]
    pub frequency: FrequencySettings,
    #[serde(default)]
    pub mc: McSettings,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        let mut s: Self = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        s.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(s)
    }

    /// Relative file references are taken relative to the scenario file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.model {
            ModelSource::File(p) => fix(p),
            ModelSource::Matrices { mass, damping, stiffness } => {
                fix(mass);
                fix(damping);
                fix(stiffness);
            }
            ModelSource::Builtin(_) => {}
        }
        if let LoadSource::File(p) = &mut self.load {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("methods: at least one of time, freq, mc is required".into()));
        }
        if self.levels.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("levels: every level must be finite".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon: must be positive, got {}", self.horizon)));
        }
        if self.reduction == Some(0) {
            return Err(Error::InvalidParameter("reduction: retain at least one mode".into()));
        }
        for f in &self.mc.functionals {
            f.parse::<Functional>()?;
        }
        Ok(())
    }
}

/// Structure with passive spectators attached, crowd, load and report dofs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: StructuralModel,
    pub layout: CrowdLayout,
    pub load: LoadModel,
    pub dofs: Vec<usize>,
    pub biodynamic: BiodynamicModel,
}

pub fn load_source(src: &LoadSource) -> Result<LoadModel> {
    match src {
        LoadSource::Builtin(name) => match name.as_str() {
            "jumping" => Ok(LoadModel::reference_jumping()),
            "jumping_variance" => LoadModel::new(MeanSeries::reference_jumping(), FilterBank::reference_variance(), crate::load::WeightMoments::unit()),
            other => Err(Error::InvalidParameter(format!("load: unknown builtin `{other}` (available: jumping, jumping_variance)"))),
        },
        LoadSource::File(p) => LoadModel::from_path(p),
    }
}

fn dofs_of(model: &StructuralModel, labels: &[DofLabel], what: &str) -> Result<Vec<usize>> {
    labels
        .iter()
        .map(|l| {
            model
                .dof_index(l)
                .ok_or_else(|| Error::InvalidParameter(format!("{what}: dof {l} does not exist")))
        })
        .collect()
}

pub fn prepare(s: &Scenario) -> Result<Prepared> {
    s.validate()?;
    let load = load_source(&s.load)?;
    let (empty, default_layout, label_dof, file_bio, mixed) = match &s.model {
        ModelSource::Builtin(name) => {
            let b = benchmark(name)?;
            (b.model.clone(), Some(b.active_layout()), b.label_dof, None, Some(b.mixed))
        }
        ModelSource::File(p) => {
            let lm = ModelFile::from_path(p)?.build()?;
            (lm.model, Some(lm.layout), lm.label_dof.unwrap_or(0), Some(lm.biodynamic), None)
        }
        ModelSource::Matrices { mass, damping, stiffness } => {
            let m = import_matrices(mass, damping, stiffness, None)?;
            if m.n_passive() > 0 {
                return Err(Error::InvalidParameter(
                    "model: imported matrices must describe the empty structure; list passive seats under crowd".into(),
                ));
            }
            (m, None, 0, None, None)
        }
    };
    let layout = match &s.crowd {
        CrowdChoice::Default => default_layout
            .ok_or_else(|| Error::InvalidParameter("crowd: matrix models need an explicit crowd".into()))?,
        CrowdChoice::Mixed => mixed.ok_or_else(|| Error::InvalidParameter("crowd: `mixed` is only defined for builtin models".into()))?,
        CrowdChoice::Explicit { active, passive } => {
            CrowdLayout::new(dofs_of(&empty, active, "crowd.active")?, dofs_of(&empty, passive, "crowd.passive")?)
        }
    };
    layout.validate(&empty)?;
    let biodynamic = s.biodynamic.or(file_bio).unwrap_or_else(BiodynamicModel::coermann);
    let model = attach_passive_crowd(empty, &layout, &biodynamic)?;
    let dofs = if s.dofs.is_empty() { vec![label_dof] } else { dofs_of(&model, &s.dofs, "dofs")? };
    Ok(Prepared {
        model,
        layout,
        load,
        dofs,
        biodynamic,
    })
}
