//! Partial modal reduction: structural dofs are projected on the lowest
//! undamped modes while passive-spectator dofs stay physical. The filter
//! block of the covariance is known in closed form, so only a Sylvester
//! equation per filter and one reduced Lyapunov equation remain.

use nalgebra::{DMatrix, DVector};

use super::{check_layout, check_residual, zero_moments, StationaryMoments};
use crate::error::{Error, Result};
use crate::load::LoadModel;
use crate::model::{generalized_modes, CrowdLayout, StructuralModel};
use crate::statespace::lyapunov::{lyapunov_residual, solve_lyapunov_schur, solve_sylvester_small, SchurForm};

/// Truncated modal basis of the structural block.
#[derive(Clone, Debug)]
pub struct ReducedBasis {
    /// Mass-normalized structural modes, `n_structure × n_eig`.
    pub modes: DMatrix<f64>,
    /// `blockdiag(modes, I)` acting on structure plus passive dofs.
    pub transform: DMatrix<f64>,
    pub frequencies: Vec<f64>,
    pub n_eig: usize,
    /// Highest retained frequency, Hz.
    pub f_eig: f64,
}

impl ReducedBasis {
    /// Reduced coordinate count, `n_eig + n_passive`.
    pub fn dim(&self) -> usize {
        self.transform.ncols()
    }
}

/// Lowest `n_eig` modes of `(K_SS, M_SS)`, the structural blocks of the
/// model including the seat springs of any attached spectators.
pub fn reduce_partial_modal(model: &StructuralModel, n_eig: usize) -> Result<ReducedBasis> {
    let ns = model.n_structure();
    if n_eig == 0 || n_eig > ns {
        return Err(Error::InvalidParameter(format!("retained mode count {n_eig} outside 1..={ns}")));
    }
    let kss = model.stiffness().view((0, 0), (ns, ns)).clone_owned();
    let mss = model.mass().view((0, 0), (ns, ns)).clone_owned();
    let modes = generalized_modes(&kss, &mss, n_eig)?;
    let mut vt = DMatrix::zeros(ns, n_eig);
    for (j, m) in modes.iter().enumerate() {
        vt.set_column(j, &m.shape);
    }
    let n = model.n_dof();
    let nh = model.n_passive();
    let mut v = DMatrix::zeros(n, n_eig + nh);
    v.view_mut((0, 0), (ns, n_eig)).copy_from(&vt);
    for h in 0..nh {
        v[(ns + h, n_eig + h)] = 1.0;
    }
    let frequencies: Vec<f64> = modes.iter().map(|m| m.frequency).collect();
    Ok(ReducedBasis {
        modes: vt,
        transform: v,
        f_eig: *frequencies.last().expect("at least one mode"),
        frequencies,
        n_eig,
    })
}

/// Stationary covariances through the reduced coordinates, mapped back to
/// the nodal dofs.
pub fn reduced_stationary_covariance(
    basis: &ReducedBasis,
    model: &StructuralModel,
    load: &LoadModel,
    layout: &CrowdLayout,
) -> Result<StationaryMoments> {
    check_layout(model, layout)?;
    if basis.transform.nrows() != model.n_dof() {
        return Err(Error::InvalidParameter("reduced basis does not match the model".into()));
    }
    if load.bank.is_empty() {
        return Err(Error::InvalidParameter("filter bank is empty".into()));
    }
    if layout.active.is_empty() {
        return Ok(zero_moments(model));
    }
    let v = &basis.transform;
    let r = basis.dim();
    let mr = v.transpose() * model.mass() * v;
    let cr = v.transpose() * model.damping() * v;
    let kr = v.transpose() * model.stiffness() * v;
    let chol = mr.clone().cholesky().ok_or_else(|| Error::Assembly("reduced mass matrix is singular".into()))?;

    let mut a11 = DMatrix::zeros(2 * r, 2 * r);
    for i in 0..r {
        a11[(i, r + i)] = 1.0;
    }
    a11.view_mut((r, 0), (r, r)).copy_from(&(-chol.solve(&kr)));
    a11.view_mut((r, r), (r, r)).copy_from(&(-chol.solve(&cr)));

    // displacement coordinates scaled by their natural frequency so the
    // stiff modes do not dominate the norm of the drift
    let d: Vec<f64> = (0..2 * r)
        .map(|i| {
            if i < r && kr[(i, i)] > 0.0 {
                (mr[(i, i)] / kr[(i, i)]).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(2 * r, 2 * r, |i, j| a11[(i, j)] * d[j] / d[i]);
    let schur = SchurForm::new(&scaled)?;
    schur.check_hurwitz()?;

    // load direction in the velocity rows, one per active spectator
    let g: Vec<DVector<f64>> = layout
        .active
        .iter()
        .map(|&seat| chol.solve(&v.row(seat).transpose()))
        .collect();

    // c12 per filter from a11 Y + Y A_iᵀ + a12 c22 = 0; only the column
    // of Y paired with the filter output couples back into c11
    let mut w = vec![DVector::zeros(2 * r); g.len()];
    for (j, gj) in g.iter().enumerate() {
        for f in load.bank.iter() {
            let fa = f.drift();
            let ai = DMatrix::from_row_slice(2, 2, &[fa[(0, 0)], fa[(0, 1)], fa[(1, 0)], fa[(1, 1)]]);
            let mut c = DMatrix::zeros(2 * r, 2);
            c.view_mut((r, 0), (r, 1)).copy_from(&(gj * f.variance()));
            let y = solve_sylvester_small(&schur, &ai, &c)?;
            w[j] += y.column(0);
        }
    }
    let mut q = DMatrix::zeros(2 * r, 2 * r);
    for (gj, wj) in g.iter().zip(&w) {
        let mut col = q.view_mut((r, 0), (r, 2 * r));
        col.ger(1.0, gj, wj, 1.0);
    }
    q = &q + q.transpose();
    let sol = solve_lyapunov_schur(&schur, &scaled, &q)?;
    let residual = lyapunov_residual(&scaled, &sol.x, &q);
    check_residual(residual)?;
    let c11 = DMatrix::from_fn(2 * r, 2 * r, |i, j| sol.x[(i, j)] * d[i] * d[j]);
    for wj in w.iter_mut() {
        for (x, s) in wj.iter_mut().zip(&d) {
            *x *= s;
        }
    }

    // Z'' = a1v X1 + Σ g_j S_j
    let a1v = a11.rows(r, r).clone_owned();
    let mut acc = &a1v * &c11 * a1v.transpose();
    let mut cross = DMatrix::zeros(r, r);
    for (gj, wj) in g.iter().zip(&w) {
        let aw = &a1v * wj;
        cross.ger(1.0, &aw, gj, 1.0);
    }
    acc += &cross + cross.transpose();
    let total = load.bank.total_variance();
    for gj in &g {
        acc.ger(total, gj, gj, 1.0);
    }

    let n = model.n_dof();
    let mut vv = DMatrix::zeros(2 * n, 2 * r);
    vv.view_mut((0, 0), (n, r)).copy_from(v);
    vv.view_mut((n, r), (n, r)).copy_from(v);
    let state = &vv * &c11 * vv.transpose();
    let acc_nodal = v * acc * v.transpose();
    Ok(StationaryMoments {
        dof_labels: model.labels().to_vec(),
        state_covariance: (&state + state.transpose()) * 0.5,
        acceleration_covariance: Some((&acc_nodal + acc_nodal.transpose()) * 0.5),
        full: None,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_sdof;
    use crate::statespace::solve_full;

    #[test]
    fn single_mode_on_sdof_is_identity() {
        let m = build_sdof(2.0, 50.0, 0.05).unwrap();
        let b = reduce_partial_modal(&m, 1).unwrap();
        assert!((b.transform[(0, 0)] - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        let load = LoadModel::reference_jumping();
        let lay = CrowdLayout::active_only(vec![0]);
        let full = solve_full(&m, &load, &lay).unwrap();
        let red = reduced_stationary_covariance(&b, &m, &load, &lay).unwrap();
        let rel = (&full.state_covariance - &red.state_covariance).norm() / red.state_covariance.norm();
        assert!(rel < 1e-8, "{rel}");
        let (fa, ra) = (full.acceleration_covariance.unwrap(), red.acceleration_covariance.unwrap());
        assert!((&fa - &ra).norm() < 1e-8 * fa.norm());
    }

    #[test]
    fn rejects_bad_mode_count() {
        let m = build_sdof(1.0, 1.0, 0.1).unwrap();
        assert!(reduce_partial_modal(&m, 0).is_err());
        assert!(reduce_partial_modal(&m, 2).is_err());
    }

    #[test]
    fn no_active_spectators_gives_zero() {
        let m = build_sdof(1.0, 100.0, 0.05).unwrap();
        let b = reduce_partial_modal(&m, 1).unwrap();
        let out = reduced_stationary_covariance(&b, &m, &LoadModel::reference_jumping(), &CrowdLayout::default()).unwrap();
        assert_eq!(out.state_covariance.norm(), 0.0);
    }
}
