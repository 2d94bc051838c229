//! Structural models: mass, damping, stiffness and input-distribution
//! matrices with a structure/passive-crowd partition.
//!
//! Units are any consistent set. The shipped benchmarks use tonnes, kN,
//! metres and seconds so that crowd loads given in kN apply directly.

pub mod benchmarks;
pub mod fe;
pub mod io;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fe::{build_beam, build_grillage, BeamSupports, Grillage, GrillageElement, GrillageNode, GrillageSupport};

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Vertical translation.
    Uz,
    /// Slope/rotation about the x axis.
    Rx,
    /// Slope/rotation about the y axis (the in-plane rotation of a 2D beam).
    Ry,
    /// Vertical translation of an attached passive spectator.
    Human,
}

impl Direction {
    fn tag(self) -> &'static str {
        match self {
            Direction::Uz => "uz",
            Direction::Rx => "rx",
            Direction::Ry => "ry",
            Direction::Human => "h",
        }
    }
}

/// `(node, direction)` tag of a degree of freedom, written `n<node>:<dir>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DofLabel {
    pub node: usize,
    pub direction: Direction,
}

impl DofLabel {
    pub fn new(node: usize, direction: Direction) -> Self {
        Self { node, direction }
    }
}

impl fmt::Display for DofLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}:{}", self.node, self.direction.tag())
    }
}

impl FromStr for DofLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("malformed dof label `{s}` (expected n<node>:<uz|rx|ry|h>)"));
        let (node, dir) = s.trim().split_once(':').ok_or_else(bad)?;
        let node = node.strip_prefix('n').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let direction = match dir {
            "uz" => Direction::Uz,
            "rx" => Direction::Rx,
            "ry" => Direction::Ry,
            "h" => Direction::Human,
            _ => return Err(bad()),
        };
        Ok(Self { node, direction })
    }
}

impl Serialize for DofLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DofLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Linear structural model `M z'' + C z' + K z = G y`.
///
/// Degrees of freedom `0..n_structure` form the structure partition S; the
/// remaining ones are passive spectators (partition H), one per spectator.
#[derive(Clone, Debug)]
pub struct StructuralModel {
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    input: DMatrix<f64>,
    labels: Vec<DofLabel>,
    n_structure: usize,
    structure_mass: f64,
}

impl StructuralModel {
    /// Builds a model with no passive dofs and no load channels.
    pub fn new(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        labels: Vec<DofLabel>,
        structure_mass: f64,
    ) -> Result<Self> {
        let n = mass.nrows();
        let model = Self {
            input: DMatrix::zeros(n, 0),
            n_structure: n,
            mass,
            damping,
            stiffness,
            labels,
            structure_mass,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model with an explicit partition and input matrix, e.g. from imported matrices.
    pub fn from_parts(
        mass: DMatrix<f64>,
        damping: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        input: DMatrix<f64>,
        labels: Vec<DofLabel>,
        n_structure: usize,
        structure_mass: f64,
    ) -> Result<Self> {
        let model = Self {
            mass,
            damping,
            stiffness,
            input,
            labels,
            n_structure,
            structure_mass,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn n_dof(&self) -> usize {
        self.mass.nrows()
    }

    pub fn n_structure(&self) -> usize {
        self.n_structure
    }

    pub fn n_passive(&self) -> usize {
        self.n_dof() - self.n_structure
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn damping(&self) -> &DMatrix<f64> {
        &self.damping
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Input distribution matrix G (n_dof × load channels).
    pub fn input(&self) -> &DMatrix<f64> {
        &self.input
    }

    pub fn labels(&self) -> &[DofLabel] {
        &self.labels
    }

    pub fn label(&self, dof: usize) -> DofLabel {
        self.labels[dof]
    }

    pub fn dof_index(&self, label: &DofLabel) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Total mass of the empty structure.
    pub fn structure_mass(&self) -> f64 {
        self.structure_mass
    }

    /// Total mass of the attached passive spectators.
    pub fn passive_mass(&self) -> f64 {
        (self.n_structure..self.n_dof()).map(|i| self.mass[(i, i)]).sum()
    }

    pub fn is_vertical_structure_dof(&self, dof: usize) -> bool {
        dof < self.n_structure && self.labels[dof].direction == Direction::Uz
    }

    /// Replaces the damping matrix.
    pub fn with_damping(mut self, damping: DMatrix<f64>) -> Result<Self> {
        self.damping = damping;
        self.validate()?;
        Ok(self)
    }

    /// Input matrix with one unit column per active position.
    pub fn input_for(&self, active: &[usize]) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.n_dof(), active.len());
        for (j, &dof) in active.iter().enumerate() {
            g[(dof, j)] = 1.0;
        }
        g
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.mass.nrows();
        for (name, m) in [("mass", &self.mass), ("damping", &self.damping), ("stiffness", &self.stiffness)] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::InvalidParameter(format!(
                    "{name} matrix is {}x{}, expected {n}x{n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} matrix has non-finite entries")));
            }
            let asym = relative_asymmetry(m);
            if asym > SYMMETRY_TOL {
                return Err(Error::InvalidParameter(format!("{name} matrix is not symmetric (relative asymmetry {asym:e})")));
            }
        }
        if self.labels.len() != n {
            return Err(Error::InvalidParameter(format!("{} dof labels for {n} dofs", self.labels.len())));
        }
        if self.n_structure > n {
            return Err(Error::InvalidParameter("structure partition exceeds model size".into()));
        }
        if self.input.nrows() != n {
            return Err(Error::InvalidParameter("input matrix row count differs from dof count".into()));
        }
        for (j, col) in self.input.column_iter().enumerate() {
            let nonzero = col.iter().filter(|v| **v != 0.0).count();
            if nonzero != 1 {
                return Err(Error::InvalidParameter(format!("input column {j} has {nonzero} nonzero entries, expected exactly one")));
            }
        }
        for (name, m) in [("mass", &self.mass), ("damping", &self.damping), ("stiffness", &self.stiffness)] {
            for i in self.n_structure..n {
                for j in self.n_structure..n {
                    if i != j && m[(i, j)] != 0.0 {
                        return Err(Error::InvalidParameter(format!("passive block of the {name} matrix is not diagonal")));
                    }
                }
            }
        }
        if self.mass.clone().cholesky().is_none() {
            return Err(Error::InvalidParameter("mass matrix is not positive definite".into()));
        }
        if self.stiffness.clone().cholesky().is_none() {
            return Err(Error::SingularStiffness("stiffness matrix is not positive definite (unrestrained rigid-body mode?)".into()));
        }
        Ok(())
    }
}

/// `max|A - Aᵀ| / max|A|`.
pub fn relative_asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).amax() / scale
}

/// Single-dof biodynamic model of a passive spectator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiodynamicModel {
    #[serde(rename = "m")]
    pub mass: f64,
    #[serde(rename = "k")]
    pub stiffness: f64,
    #[serde(rename = "c")]
    pub damping: f64,
}

impl BiodynamicModel {
    pub fn new(mass: f64, stiffness: f64, damping: f64) -> Result<Self> {
        let bio = Self { mass, stiffness, damping };
        bio.validate()?;
        Ok(bio)
    }

    /// Coermann's seated-spectator model in tonnes, kN/m and kN·s/m
    /// (86.2 kg, 85.25 kN/m, 1.72 kN·s/m).
    pub fn coermann() -> Self {
        Self {
            mass: 0.0862,
            stiffness: 85.25,
            damping: 1.72,
        }
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness / self.mass).sqrt() / (2.0 * std::f64::consts::PI)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mass", self.mass), ("stiffness", self.stiffness), ("damping", self.damping)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("biodynamic {name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Default for BiodynamicModel {
    fn default() -> Self {
        Self::coermann()
    }
}

/// Seat assignment of the crowd: dof indices of active (force) and passive
/// (attached oscillator) spectators. Several active spectators may share a seat dof.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrowdLayout {
    pub active: Vec<usize>,
    pub passive: Vec<usize>,
}

impl CrowdLayout {
    pub fn new(active: Vec<usize>, passive: Vec<usize>) -> Self {
        Self { active, passive }
    }

    pub fn active_only(active: Vec<usize>) -> Self {
        Self { active, passive: Vec::new() }
    }

    /// Resolves node ids to the vertical dofs of `model`.
    pub fn from_nodes(model: &StructuralModel, active: &[usize], passive: &[usize]) -> Result<Self> {
        let resolve = |node: usize| {
            model
                .dof_index(&DofLabel::new(node, Direction::Uz))
                .filter(|&d| d < model.n_structure())
                .ok_or_else(|| Error::InvalidLayout(format!("node {node} has no free vertical dof (constrained or missing)")))
        };
        Ok(Self {
            active: active.iter().map(|&n| resolve(n)).collect::<Result<_>>()?,
            passive: passive.iter().map(|&n| resolve(n)).collect::<Result<_>>()?,
        })
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    pub fn n_passive(&self) -> usize {
        self.passive.len()
    }

    /// Checks positions against the structure partition of `model`.
    pub fn validate(&self, model: &StructuralModel) -> Result<()> {
        for &d in self.active.iter().chain(&self.passive) {
            if d >= model.n_structure() {
                return Err(Error::InvalidLayout(format!("position {d} is not a structure dof")));
            }
        }
        for &d in &self.passive {
            if !model.is_vertical_structure_dof(d) {
                return Err(Error::InvalidLayout(format!("passive position {} is not a vertical translation", model.label(d))));
            }
            if self.active.contains(&d) {
                return Err(Error::InvalidLayout(format!("dof {d} is both active and passive")));
            }
        }
        let mut seen = self.passive.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidLayout("a seat carries more than one passive spectator".into()));
        }
        Ok(())
    }

    /// Mass ratio γ = total passive mass / structure mass.
    pub fn mass_ratio(&self, model: &StructuralModel, bio: &BiodynamicModel) -> f64 {
        self.passive.len() as f64 * bio.mass / model.structure_mass()
    }
}

/// Single-dof oscillator with damping `2ζ√(km)`.
pub fn build_sdof(mass: f64, stiffness: f64, damping_ratio: f64) -> Result<StructuralModel> {
    if !(mass > 0.0 && mass.is_finite()) || !(stiffness > 0.0 && stiffness.is_finite()) {
        return Err(Error::InvalidParameter(format!("sdof needs positive mass and stiffness, got m={mass}, k={stiffness}")));
    }
    if !(damping_ratio >= 0.0 && damping_ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("damping ratio must be non-negative, got {damping_ratio}")));
    }
    let c = 2.0 * damping_ratio * (stiffness * mass).sqrt();
    StructuralModel::new(
        DMatrix::from_element(1, 1, mass),
        DMatrix::from_element(1, 1, c),
        DMatrix::from_element(1, 1, stiffness),
        vec![DofLabel::new(0, Direction::Uz)],
        mass,
    )
}

/// Undamped mode: natural frequency and mass-normalized shape.
#[derive(Clone, Debug)]
pub struct Mode {
    pub frequency: f64,
    pub omega: f64,
    pub shape: DVector<f64>,
}

/// Lowest `n_modes` eigenpairs of `(K, M)`, ascending, shapes mass-normalized.
pub fn vertical_modes(model: &StructuralModel, n_modes: usize) -> Result<Vec<Mode>> {
    generalized_modes(model.stiffness(), model.mass(), n_modes)
}

/// Generalized symmetric eigenproblem `K v = ω² M v`, solved as the
/// flexibility problem `L⁻¹ M L⁻ᵀ y = ω⁻² y` with `K = L Lᵀ` so that the
/// lowest modes keep full relative accuracy on stiff systems.
pub fn generalized_modes(k: &DMatrix<f64>, m: &DMatrix<f64>, n_modes: usize) -> Result<Vec<Mode>> {
    let n = k.nrows();
    if n_modes > n {
        return Err(Error::InvalidParameter(format!("{n_modes} modes requested from a {n}-dof model")));
    }
    let tri_fail = || Error::Numeric { message: "triangular solve failed".into(), residual: f64::NAN };
    let l = k
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularStiffness("stiffness matrix is not positive definite".into()))?
        .l();
    let x = l.solve_lower_triangular(m).ok_or_else(tri_fail)?;
    let mut a = l.solve_lower_triangular(&x.transpose()).ok_or_else(tri_fail)?;
    a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let lt = l.transpose();
    let mut modes = Vec::with_capacity(n_modes);
    for &idx in order.iter().take(n_modes) {
        let flex = eig.eigenvalues[idx];
        if flex <= 0.0 {
            return Err(Error::InvalidParameter(format!("mass matrix is not positive definite (eigenvalue {flex:e})")));
        }
        let y = eig.eigenvectors.column(idx).into_owned();
        let mut v = lt.solve_upper_triangular(&y).ok_or_else(tri_fail)?;
        let mm = (v.transpose() * m * &v)[(0, 0)];
        v /= mm.sqrt();
        let mut lambda = 1.0 / flex;
        let mut residual = eigen_residual(k, m, &v, lambda);
        // stiff attachments leave small eigenvector components inaccurate;
        // shifted inverse iteration restores them
        for _ in 0..3 {
            if residual < 1e-12 {
                break;
            }
            let Some(w) = (k - m * lambda).lu().solve(&(m * &v)) else { break };
            let mw = (w.transpose() * m * &w)[(0, 0)];
            if !(mw.is_finite() && mw > 0.0) {
                break;
            }
            let candidate = w / mw.sqrt();
            let candidate_lambda = (candidate.transpose() * k * &candidate)[(0, 0)];
            let r = eigen_residual(k, m, &candidate, candidate_lambda);
            if r >= residual {
                break;
            }
            v = candidate;
            lambda = candidate_lambda;
            residual = r;
        }
        if !(residual < 1e-8) {
            return Err(Error::Numeric {
                message: format!("eigenpair {} did not converge", modes.len()),
                residual,
            });
        }
        let omega = lambda.sqrt();
        modes.push(Mode {
            frequency: omega / (2.0 * std::f64::consts::PI),
            omega,
            shape: v,
        });
    }
    Ok(modes)
}

fn eigen_residual(k: &DMatrix<f64>, m: &DMatrix<f64>, v: &DVector<f64>, lambda: f64) -> f64 {
    let kv = k * v;
    (&kv - m * v * lambda).norm() / kv.norm()
}

/// Modal damping ratio `vᵀ C v / (2ω)` of a mass-normalized mode.
pub fn modal_damping_ratio(model: &StructuralModel, mode: &Mode) -> f64 {
    (mode.shape.transpose() * model.damping() * &mode.shape)[(0, 0)] / (2.0 * mode.omega)
}

/// Replaces the damping with `αM + βK` so that modes `mode_i` and `mode_j`
/// (0-based, ascending frequency) get damping ratios `zeta_i` and `zeta_j`.
pub fn apply_rayleigh_damping(
    model: StructuralModel,
    zeta_i: f64,
    zeta_j: f64,
    mode_i: usize,
    mode_j: usize,
) -> Result<StructuralModel> {
    if mode_i == mode_j {
        return Err(Error::IllConditioned(format!("Rayleigh fit needs two distinct modes, got {mode_i} twice")));
    }
    if model.n_passive() > 0 {
        return Err(Error::InvalidParameter("apply Rayleigh damping before attaching passive spectators".into()));
    }
    let needed = mode_i.max(mode_j) + 1;
    if needed > model.n_dof() {
        return Err(Error::IllConditioned(format!(
            "Rayleigh fit needs mode {} but the model has {} dofs",
            needed - 1,
            model.n_dof()
        )));
    }
    let modes = vertical_modes(&model, needed)?;
    let (wi, wj) = (modes[mode_i].omega, modes[mode_j].omega);
    let (alpha, beta) = rayleigh_coefficients(zeta_i, zeta_j, wi, wj)?;
    let damping = model.mass() * alpha + model.stiffness() * beta;
    model.with_damping(damping)
}

/// Solves `ζ = α/(2ω) + βω/2` at two circular frequencies.
pub fn rayleigh_coefficients(zeta_i: f64, zeta_j: f64, wi: f64, wj: f64) -> Result<(f64, f64)> {
    if (wi - wj).abs() <= 1e-9 * wi.abs().max(wj.abs()) {
        return Err(Error::IllConditioned(format!("coincident target frequencies {wi} and {wj} rad/s")));
    }
    let det = 0.25 * (wj / wi - wi / wj);
    let alpha = (zeta_i * wj / 2.0 - zeta_j * wi / 2.0) / det;
    let beta = (zeta_j / (2.0 * wi) - zeta_i / (2.0 * wj)) / det;
    Ok((alpha, beta))
}

/// Adds one dof per passive spectator, coupled to its seat by the
/// biodynamic spring and damper, and sets the input matrix from the active
/// positions.
pub fn attach_passive_crowd(model: StructuralModel, layout: &CrowdLayout, bio: &BiodynamicModel) -> Result<StructuralModel> {
    layout.validate(&model)?;
    bio.validate()?;
    if model.n_passive() > 0 && !layout.passive.is_empty() {
        return Err(Error::InvalidLayout("model already carries passive spectators".into()));
    }
    let n = model.n_dof();
    let np = layout.passive.len();
    let total = n + np;
    let grow = |a: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(total, total);
        out.view_mut((0, 0), (n, n)).copy_from(a);
        out
    };
    let mut mass = grow(&model.mass);
    let mut damping = grow(&model.damping);
    let mut stiffness = grow(&model.stiffness);
    let mut labels = model.labels.clone();
    for (p, &seat) in layout.passive.iter().enumerate() {
        let h = n + p;
        mass[(h, h)] = bio.mass;
        for (mat, v) in [(&mut stiffness, bio.stiffness), (&mut damping, bio.damping)] {
            mat[(seat, seat)] += v;
            mat[(h, h)] += v;
            mat[(seat, h)] -= v;
            mat[(h, seat)] -= v;
        }
        labels.push(DofLabel::new(model.labels[seat].node, Direction::Human));
    }
    let mut out = StructuralModel {
        mass,
        damping,
        stiffness,
        input: DMatrix::zeros(total, 0),
        labels,
        n_structure: model.n_structure,
        structure_mass: model.structure_mass,
    };
    out.input = out.input_for(&layout.active);
    out.validate()?;
    Ok(out)
}
