//! Augmented Itô system of structure and load filters, its stationary
//! covariance, acceleration and lagged covariances, transient moments and
//! the partially modal-reduced solution path.
//!
//! All covariances here are for unit spectator weight; multiply by
//! `E[G²]` for a random weight.

pub mod lyapunov;
pub mod reduced;

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_labeled_matrix;
use crate::load::LoadModel;
use crate::model::{CrowdLayout, DofLabel, StructuralModel};

pub use lyapunov::{solve_lyapunov, solve_lyapunov_schur, solve_sylvester_small, LyapunovSolution, SchurForm};
pub use reduced::{reduce_partial_modal, reduced_stationary_covariance, ReducedBasis};

/// Meaning of one component of the augmented state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateLabel {
    StructureDisplacement(usize),
    StructureVelocity(usize),
    PassiveDisplacement(usize),
    PassiveVelocity(usize),
    /// State 1 (output) or 2 (its rate) of filter `filter` of active spectator `spectator`.
    Filter { spectator: usize, filter: usize, state: u8 },
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateLabel::StructureDisplacement(d) => write!(f, "z{d}"),
            StateLabel::StructureVelocity(d) => write!(f, "v{d}"),
            StateLabel::PassiveDisplacement(d) => write!(f, "zh{d}"),
            StateLabel::PassiveVelocity(d) => write!(f, "vh{d}"),
            StateLabel::Filter { spectator, filter, state } => write!(f, "s{spectator}.{filter}.{state}"),
        }
    }
}

/// `dX = a X dt + b dB` with the structure and all filter states.
#[derive(Clone, Debug)]
pub struct AugmentedSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    pub states: Vec<StateLabel>,
    pub dof_labels: Vec<DofLabel>,
    pub n_dof: usize,
    pub n_active: usize,
    pub n_filters: usize,
}

impl AugmentedSystem {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// `b bᵀ`.
    pub fn noise_intensity(&self) -> DMatrix<f64> {
        &self.diffusion * self.diffusion.transpose()
    }

    /// Writes `drift.csv` and `diffusion.csv` with state labels as headers.
    pub fn dump_csv(&self, dir: &Path) -> Result<()> {
        let labels: Vec<String> = self.states.iter().map(|s| s.to_string()).collect();
        write_labeled_matrix(std::fs::File::create(dir.join("drift.csv"))?, &labels, &self.drift)?;
        let channels: Vec<String> = (0..self.diffusion.ncols()).map(|j| format!("w{j}")).collect();
        write_labeled_matrix(std::fs::File::create(dir.join("diffusion.csv"))?, &channels, &self.diffusion)?;
        Ok(())
    }
}

fn check_layout(model: &StructuralModel, layout: &CrowdLayout) -> Result<()> {
    layout.validate(model)?;
    if layout.passive.len() != model.n_passive() {
        return Err(Error::InvalidLayout(format!(
            "layout lists {} passive spectators but the model carries {}; attach them first",
            layout.passive.len(),
            model.n_passive()
        )));
    }
    Ok(())
}

pub(crate) fn inverse_mass(model: &StructuralModel) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    model
        .mass()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Assembly("mass matrix is singular".into()))
}

/// Couples the structure (with any attached passive spectators) to one
/// filter bank per active spectator.
pub fn augment(model: &StructuralModel, load: &LoadModel, layout: &CrowdLayout) -> Result<AugmentedSystem> {
    check_layout(model, layout)?;
    if load.bank.is_empty() {
        return Err(Error::InvalidParameter("filter bank is empty".into()));
    }
    let n = model.n_dof();
    let nf = load.bank.len();
    let na = layout.n_active();
    let nl = 2 * n + 2 * nf * na;
    let chol = inverse_mass(model)?;
    let mk = chol.solve(model.stiffness());
    let mc = chol.solve(model.damping());

    let mut a = DMatrix::zeros(nl, nl);
    let mut b = DMatrix::zeros(nl, nf * na);
    for i in 0..n {
        a[(i, n + i)] = 1.0;
    }
    a.view_mut((n, 0), (n, n)).copy_from(&(-&mk));
    a.view_mut((n, n), (n, n)).copy_from(&(-&mc));

    let mut states = Vec::with_capacity(nl);
    let passive = |d: usize| d >= model.n_structure();
    for d in 0..n {
        states.push(if passive(d) { StateLabel::PassiveDisplacement(d) } else { StateLabel::StructureDisplacement(d) });
    }
    for d in 0..n {
        states.push(if passive(d) { StateLabel::PassiveVelocity(d) } else { StateLabel::StructureVelocity(d) });
    }
    for (j, &seat) in layout.active.iter().enumerate() {
        let mut e = DVector::zeros(n);
        e[seat] = 1.0;
        let minv_e = chol.solve(&e);
        for (i, f) in load.bank.iter().enumerate() {
            let s1 = 2 * n + 2 * (j * nf + i);
            a.view_mut((n, s1), (n, 1)).copy_from(&minv_e);
            a[(s1, s1 + 1)] = 1.0;
            a[(s1 + 1, s1)] = -f.a2();
            a[(s1 + 1, s1 + 1)] = -f.a1();
            b[(s1 + 1, j * nf + i)] = f.a0();
            states.push(StateLabel::Filter { spectator: j, filter: i, state: 1 });
            states.push(StateLabel::Filter { spectator: j, filter: i, state: 2 });
        }
    }
    Ok(AugmentedSystem {
        drift: a,
        diffusion: b,
        states,
        dof_labels: model.labels().to_vec(),
        n_dof: n,
        n_active: na,
        n_filters: nf,
    })
}

/// Stationary second moments of displacement, velocity and acceleration.
#[derive(Clone, Debug)]
pub struct StationaryMoments {
    pub dof_labels: Vec<DofLabel>,
    /// Covariance of `(Z, Z')`, `2n × 2n`.
    pub state_covariance: DMatrix<f64>,
    /// Covariance of `Z''`, `n × n`, once computed.
    pub acceleration_covariance: Option<DMatrix<f64>>,
    /// Whole augmented covariance when the full system was solved.
    pub full: Option<DMatrix<f64>>,
    /// Relative residual of the Lyapunov equation.
    pub residual: f64,
}

impl StationaryMoments {
    pub fn n_dof(&self) -> usize {
        self.dof_labels.len()
    }

    pub fn displacement_covariance(&self) -> DMatrix<f64> {
        let n = self.n_dof();
        self.state_covariance.view((0, 0), (n, n)).clone_owned()
    }

    pub fn velocity_covariance(&self) -> DMatrix<f64> {
        let n = self.n_dof();
        self.state_covariance.view((n, n), (n, n)).clone_owned()
    }

    /// `cov(Z, Z')`.
    pub fn displacement_velocity_covariance(&self) -> DMatrix<f64> {
        let n = self.n_dof();
        self.state_covariance.view((0, n), (n, n)).clone_owned()
    }

    pub fn displacement_variance(&self, dof: usize) -> f64 {
        self.state_covariance[(dof, dof)]
    }

    pub fn velocity_variance(&self, dof: usize) -> f64 {
        let n = self.n_dof();
        self.state_covariance[(n + dof, n + dof)]
    }

    pub fn acceleration_variance(&self, dof: usize) -> Option<f64> {
        self.acceleration_covariance.as_ref().map(|c| c[(dof, dof)])
    }

    /// All covariances multiplied by `factor`, e.g. `E[G²]`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dof_labels: self.dof_labels.clone(),
            state_covariance: &self.state_covariance * factor,
            acceleration_covariance: self.acceleration_covariance.as_ref().map(|c| c * factor),
            full: self.full.as_ref().map(|c| c * factor),
            residual: self.residual,
        }
    }

    /// Writes the displacement covariance with dof labels as header.
    pub fn write_displacement_csv(&self, path: &Path) -> Result<()> {
        let labels: Vec<String> = self.dof_labels.iter().map(|l| l.to_string()).collect();
        write_labeled_matrix(std::fs::File::create(path)?, &labels, &self.displacement_covariance())
    }
}

pub(crate) const RESIDUAL_LIMIT: f64 = 1e-8;

pub(crate) fn check_residual(residual: f64) -> Result<()> {
    if !(residual < RESIDUAL_LIMIT) {
        return Err(Error::Numeric {
            message: "Lyapunov residual above tolerance".into(),
            residual,
        });
    }
    Ok(())
}

/// Solves `a c + c aᵀ + b bᵀ = 0` for the stationary covariance.
pub fn stationary_covariance(sys: &AugmentedSystem) -> Result<StationaryMoments> {
    let sol = solve_lyapunov(&sys.drift, &sys.noise_intensity())?;
    check_residual(sol.residual)?;
    let n2 = 2 * sys.n_dof;
    Ok(StationaryMoments {
        dof_labels: sys.dof_labels.clone(),
        state_covariance: sol.x.view((0, 0), (n2, n2)).clone_owned(),
        acceleration_covariance: None,
        full: Some(sol.x),
        residual: sol.residual,
    })
}

/// Adds the acceleration covariance `a_v c a_vᵀ`, where `a_v` are the
/// velocity rows of the drift; this is the structural block of `-a² c`.
pub fn acceleration_covariance(sys: &AugmentedSystem, moments: &StationaryMoments) -> Result<StationaryMoments> {
    let c = moments
        .full
        .as_ref()
        .ok_or_else(|| Error::InvalidRequest("acceleration covariance needs the full augmented covariance".into()))?;
    let n = sys.n_dof;
    let av = sys.drift.rows(n, n);
    let acc = &av * c * av.transpose();
    let mut out = moments.clone();
    out.acceleration_covariance = Some((&acc + acc.transpose()) * 0.5);
    Ok(out)
}

/// Structure, load and crowd to displacement, velocity and acceleration covariances.
pub fn solve_full(model: &StructuralModel, load: &LoadModel, layout: &CrowdLayout) -> Result<StationaryMoments> {
    if layout.active.is_empty() {
        return Ok(zero_moments(model));
    }
    let sys = augment(model, load, layout)?;
    let m = stationary_covariance(&sys)?;
    acceleration_covariance(&sys, &m)
}

pub(crate) fn zero_moments(model: &StructuralModel) -> StationaryMoments {
    let n = model.n_dof();
    StationaryMoments {
        dof_labels: model.labels().to_vec(),
        state_covariance: DMatrix::zeros(2 * n, 2 * n),
        acceleration_covariance: Some(DMatrix::zeros(n, n)),
        full: None,
        residual: 0.0,
    }
}

/// `E[X(t + τ) X(t)ᵀ] = exp(a τ) c`.
pub fn lagged_covariance(sys: &AugmentedSystem, moments: &StationaryMoments, lag: f64) -> Result<DMatrix<f64>> {
    if !(lag >= 0.0) {
        return Err(Error::InvalidParameter(format!("lag must be non-negative, got {lag}")));
    }
    let c = moments
        .full
        .as_ref()
        .ok_or_else(|| Error::InvalidRequest("lagged covariance needs the full augmented covariance".into()))?;
    if lag == 0.0 {
        return Ok(c.clone());
    }
    Ok((&sys.drift * lag).exp() * c)
}

/// Mean and covariance sampled on a uniform time grid.
#[derive(Clone, Debug)]
pub struct TransientMoments {
    pub times: Vec<f64>,
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

/// Integrates `μ' = a μ` and `c' = a c + c aᵀ + b bᵀ` by classical Runge–Kutta.
pub fn transient_moments(
    sys: &AugmentedSystem,
    c0: &DMatrix<f64>,
    mu0: Option<&DVector<f64>>,
    horizon: f64,
    dt: f64,
) -> Result<TransientMoments> {
    let n = sys.dim();
    if c0.nrows() != n || c0.ncols() != n {
        return Err(Error::InvalidParameter(format!("initial covariance must be {n}x{n}")));
    }
    if !(dt > 0.0 && horizon >= 0.0) {
        return Err(Error::InvalidParameter("time step must be positive and horizon non-negative".into()));
    }
    let a = &sys.drift;
    let q = sys.noise_intensity();
    let f = |c: &DMatrix<f64>| {
        let ac = a * c;
        &ac + ac.transpose() + &q
    };
    let steps = (horizon / dt).round() as usize;
    let mut c = c0.clone();
    let mut mu = mu0.cloned().unwrap_or_else(|| DVector::zeros(n));
    let mut out = TransientMoments {
        times: vec![0.0],
        means: vec![mu.clone()],
        covariances: vec![c.clone()],
    };
    for k in 1..=steps {
        let k1 = f(&c);
        let k2 = f(&(&c + &k1 * (0.5 * dt)));
        let k3 = f(&(&c + &k2 * (0.5 * dt)));
        let k4 = f(&(&c + &k3 * dt));
        c += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        let m1 = a * &mu;
        let m2 = a * (&mu + &m1 * (0.5 * dt));
        let m3 = a * (&mu + &m2 * (0.5 * dt));
        let m4 = a * (&mu + &m3 * dt);
        mu += (m1 + m2 * 2.0 + m3 * 2.0 + m4) * (dt / 6.0);
        let scale = c.amax();
        if !scale.is_finite() || (&c - c.transpose()).amax() > 1e-6 * scale || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::StepSize(format!("covariance integration lost symmetry or diverged at t = {}", k as f64 * dt)));
        }
        out.times.push(k as f64 * dt);
        out.means.push(mu.clone());
        out.covariances.push(c.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load::{Ar2Filter, FilterBank, MeanSeries, WeightMoments};
    use crate::model::build_sdof;
    use approx::assert_relative_eq;

    fn sdof_system(bank: FilterBank) -> (StructuralModel, LoadModel, CrowdLayout) {
        let model = build_sdof(1.0, (2.0 * std::f64::consts::PI * 5.0).powi(2), 0.07).unwrap();
        let load = LoadModel::new(MeanSeries::reference_jumping(), bank, WeightMoments::unit()).unwrap();
        (model, load, CrowdLayout::active_only(vec![0]))
    }

    #[test]
    fn dimension_accounting() {
        let (m, l, lay) = sdof_system(FilterBank::reference_spectral());
        let sys = augment(&m, &l, &lay).unwrap();
        assert_eq!(sys.dim(), 14);
        // diffusion only on filter rate rows
        for (i, s) in sys.states.iter().enumerate() {
            let nonzero = sys.diffusion.row(i).iter().any(|v| *v != 0.0);
            assert_eq!(nonzero, matches!(s, StateLabel::Filter { state: 2, .. }));
        }
    }

    #[test]
    fn isolated_filter_block() {
        let f = Ar2Filter::new(90.8657, 0.3227, 0.0148).unwrap();
        let (m, l, lay) = sdof_system(FilterBank::new(vec![f]).unwrap());
        let sys = augment(&m, &l, &lay).unwrap();
        let c = stationary_covariance(&sys).unwrap().full.unwrap();
        let (a0, a1, a2) = (f.a0(), f.a1(), f.a2());
        assert_relative_eq!(c[(2, 2)], a0 * a0 / (2.0 * a1 * a2), max_relative = 1e-10);
        assert_relative_eq!(c[(3, 3)], a0 * a0 / (2.0 * a1), max_relative = 1e-10);
        assert!(c[(2, 3)].abs() < 1e-10 * c[(2, 2)]);
    }

    #[test]
    fn acceleration_matches_drift_square() {
        let (m, l, lay) = sdof_system(FilterBank::reference_spectral());
        let sys = augment(&m, &l, &lay).unwrap();
        let mom = acceleration_covariance(&sys, &stationary_covariance(&sys).unwrap()).unwrap();
        let c = mom.full.as_ref().unwrap();
        let a2c = -(&sys.drift * &sys.drift * c);
        assert_relative_eq!(a2c[(1, 1)], mom.acceleration_covariance.as_ref().unwrap()[(0, 0)], max_relative = 1e-8);
        assert_relative_eq!(a2c[(0, 0)], mom.velocity_variance(0), max_relative = 1e-8);
        // stationary: displacement and velocity of one dof are uncorrelated
        let zv = mom.displacement_velocity_covariance()[(0, 0)];
        assert!(zv.abs() < 1e-8 * (mom.displacement_variance(0) * mom.velocity_variance(0)).sqrt());
    }

    #[test]
    fn undamped_structure_is_unstable() {
        let model = build_sdof(1.0, 100.0, 0.0).unwrap();
        let load = LoadModel::reference_jumping();
        let sys = augment(&model, &load, &CrowdLayout::active_only(vec![0])).unwrap();
        assert!(matches!(stationary_covariance(&sys), Err(Error::Unstable { .. })));
    }

    #[test]
    fn stiff_filter_suppresses_response() {
        let soft = FilterBank::new(vec![Ar2Filter::new(100.0, 0.1, 1.0).unwrap()]).unwrap();
        let stiff = FilterBank::new(vec![Ar2Filter::new(1e8, 0.1, 1.0).unwrap()]).unwrap();
        let (m, l, lay) = sdof_system(soft);
        let v_soft = solve_full(&m, &l, &lay).unwrap().displacement_variance(0);
        let (m, l, lay) = sdof_system(stiff);
        let v_stiff = solve_full(&m, &l, &lay).unwrap().displacement_variance(0);
        assert!(v_stiff < 1e-8 * v_soft);
    }

    #[test]
    fn lagged_limits() {
        let (m, l, lay) = sdof_system(FilterBank::reference_spectral());
        let sys = augment(&m, &l, &lay).unwrap();
        let mom = stationary_covariance(&sys).unwrap();
        let c = mom.full.as_ref().unwrap();
        assert_eq!(&lagged_covariance(&sys, &mom, 0.0).unwrap(), c);
        assert!(lagged_covariance(&sys, &mom, 2000.0).unwrap().norm() < 1e-6 * c.norm());
    }

    #[test]
    fn scalar_ou_lag() {
        let (alpha, beta) = (1.5, 0.4);
        let sys = AugmentedSystem {
            drift: DMatrix::from_element(1, 1, -alpha),
            diffusion: DMatrix::from_element(1, 1, beta),
            states: vec![StateLabel::Filter { spectator: 0, filter: 0, state: 1 }],
            dof_labels: Vec::new(),
            n_dof: 0,
            n_active: 0,
            n_filters: 1,
        };
        let mom = stationary_covariance(&sys).unwrap();
        let c = lagged_covariance(&sys, &mom, 0.7).unwrap()[(0, 0)];
        assert_relative_eq!(c, (-alpha * 0.7f64).exp() * beta * beta / (2.0 * alpha), max_relative = 1e-10);
    }

    #[test]
    fn transient_fixed_point_and_convergence() {
        let f = Ar2Filter::new(30.0, 0.1, 0.5).unwrap();
        let (m, l, lay) = sdof_system(FilterBank::new(vec![f]).unwrap());
        let sys = augment(&m, &l, &lay).unwrap();
        let stat = stationary_covariance(&sys).unwrap().full.unwrap();
        let tr = transient_moments(&sys, &stat, None, 1.0, 1e-3).unwrap();
        assert!((tr.covariances.last().unwrap() - &stat).norm() < 1e-8 * stat.norm());

        let schur = SchurForm::new(&sys.drift).unwrap();
        let slowest = -schur.max_real_eigenvalue();
        let horizon = 10.0 / slowest;
        let mu0 = DVector::from_element(sys.dim(), 1.0);
        let tr = transient_moments(&sys, &DMatrix::zeros(4, 4), Some(&mu0), horizon, 2e-3).unwrap();
        let traces: Vec<f64> = tr.covariances.iter().map(|c| c.trace()).collect();
        let last = *traces.last().unwrap();
        assert!((last - stat.trace()).abs() / stat.trace() < 0.01);
        assert!(tr.means.last().unwrap().norm() < 1e-3 * mu0.norm());
    }

    #[test]
    fn transient_homogeneous_case() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -4.0, -0.4]);
        let sys = AugmentedSystem {
            drift: a.clone(),
            diffusion: DMatrix::zeros(2, 1),
            states: vec![StateLabel::StructureDisplacement(0), StateLabel::StructureVelocity(0)],
            dof_labels: Vec::new(),
            n_dof: 1,
            n_active: 0,
            n_filters: 0,
        };
        let c0 = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 3.0]);
        let tr = transient_moments(&sys, &c0, None, 1.5, 1e-3).unwrap();
        let theta = (a * 1.5).exp();
        let exact = &theta * &c0 * theta.transpose();
        assert!((tr.covariances.last().unwrap() - exact).norm() < 1e-9 * c0.norm());
    }

    #[test]
    fn transient_step_too_large() {
        let (m, l, lay) = sdof_system(FilterBank::reference_spectral());
        let sys = augment(&m, &l, &lay).unwrap();
        let err = transient_moments(&sys, &DMatrix::identity(14, 14), None, 50.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::StepSize(_)));
    }
}
