//! Average-acceleration Newmark integration (γ = 1/2, β = 1/4).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::StructuralModel;

/// Integrator with the effective stiffness `K + (2/h) C + (4/h²) M`
/// inverted once and reused for every step.
#[derive(Clone, Debug)]
pub struct Newmark {
    h: f64,
    mass: DMatrix<f64>,
    damping: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    effective_inverse: DMatrix<f64>,
    mass_chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    /// Absent for unsupported structures.
    stiffness_chol: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

/// Displacement, velocity and acceleration of every dof at one step.
#[derive(Clone, Debug)]
pub struct State {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub a: DVector<f64>,
}

struct Work {
    pm: DVector<f64>,
    pc: DVector<f64>,
    rhs: DVector<f64>,
    un: DVector<f64>,
}

impl Newmark {
    pub fn new(model: &StructuralModel, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {h}")));
        }
        let eff = model.stiffness() + model.damping() * (2.0 / h) + model.mass() * (4.0 / (h * h));
        let effective_inverse = eff
            .cholesky()
            .ok_or_else(|| Error::Numeric {
                message: "effective stiffness is not positive definite".into(),
                residual: f64::NAN,
            })?
            .inverse();
        let mass_chol = model.mass().clone().cholesky().ok_or_else(|| Error::Assembly("mass matrix is singular".into()))?;
        Ok(Self {
            h,
            stiffness_chol: model.stiffness().clone().cholesky(),
            mass: model.mass().clone(),
            damping: model.damping().clone(),
            stiffness: model.stiffness().clone(),
            effective_inverse,
            mass_chol,
        })
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn n_dof(&self) -> usize {
        self.mass.nrows()
    }

    /// State at `t = 0` consistent with the equation of motion.
    pub fn initial_state(&self, u0: DVector<f64>, v0: DVector<f64>, f0: &DVector<f64>) -> State {
        let r = f0 - &self.damping * &v0 - &self.stiffness * &u0;
        let a = self.mass_chol.solve(&r);
        State { u: u0, v: v0, a }
    }

    /// Runs `n_steps` steps. `force(k, f)` writes the load at step `k`
    /// (`k = 0` is the initial time) and `observe(k, state)` sees every state.
    pub fn run(
        &self,
        u0: DVector<f64>,
        v0: DVector<f64>,
        n_steps: usize,
        mut force: impl FnMut(usize, &mut DVector<f64>),
        mut observe: impl FnMut(usize, &State),
    ) {
        let n = self.n_dof();
        let mut f = DVector::zeros(n);
        force(0, &mut f);
        let mut s = self.initial_state(u0, v0, &f);
        observe(0, &s);
        let mut w = Work {
            pm: DVector::zeros(n),
            pc: DVector::zeros(n),
            rhs: DVector::zeros(n),
            un: DVector::zeros(n),
        };
        for k in 1..n_steps {
            f.fill(0.0);
            force(k, &mut f);
            self.step(&f, &mut s, &mut w);
            observe(k, &s);
        }
    }

    /// Like [`Newmark::run`], starting from the static deflection under the
    /// load at `k = 0` with zero velocity, or from rest when `K` is singular.
    ///
    /// The trapezoidal rule barely damps modes with `ω h ≫ 1`; a start from
    /// rest gives them an initial acceleration `M⁻¹ f₀` that then rings
    /// through any practical burn-in.
    pub fn run_from_static(
        &self,
        n_steps: usize,
        mut force: impl FnMut(usize, &mut DVector<f64>),
        observe: impl FnMut(usize, &State),
    ) {
        let n = self.n_dof();
        let mut f0 = DVector::zeros(n);
        force(0, &mut f0);
        let u0 = match &self.stiffness_chol {
            Some(c) => c.solve(&f0),
            None => DVector::zeros(n),
        };
        self.run(u0, DVector::zeros(n), n_steps, force, observe);
    }

    fn step(&self, f: &DVector<f64>, s: &mut State, w: &mut Work) {
        let h = self.h;
        let (c0, c1, c2, c3) = (4.0 / (h * h), 4.0 / h, 2.0 / h, 0.5 * h);
        for i in 0..s.u.len() {
            w.pm[i] = c0 * s.u[i] + c1 * s.v[i] + s.a[i];
            w.pc[i] = c2 * s.u[i] + s.v[i];
        }
        w.rhs.copy_from(f);
        w.rhs.gemv(1.0, &self.mass, &w.pm, 1.0);
        w.rhs.gemv(1.0, &self.damping, &w.pc, 1.0);
        w.un.gemv(1.0, &self.effective_inverse, &w.rhs, 0.0);
        for i in 0..s.u.len() {
            let an = c0 * (w.un[i] - s.u[i]) - c1 * s.v[i] - s.a[i];
            s.v[i] += c3 * (s.a[i] + an);
            s.a[i] = an;
            s.u[i] = w.un[i];
        }
    }
}

/// Time histories, one row per step.
#[derive(Clone, Debug)]
pub struct Response {
    pub displacement: DMatrix<f64>,
    pub velocity: DMatrix<f64>,
    pub acceleration: DMatrix<f64>,
}

/// Integrates from rest under point loads: `loads[j][k]` acts on dof
/// `seats[j]` at step `k`.
pub fn newmark_integrate(model: &StructuralModel, seats: &[usize], loads: &[Vec<f64>], h: f64) -> Result<Response> {
    if seats.len() != loads.len() {
        return Err(Error::InvalidInput(format!("{} load series for {} seats", loads.len(), seats.len())));
    }
    let n = model.n_dof();
    if let Some(&bad) = seats.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidInput(format!("seat dof {bad} out of range")));
    }
    let steps = loads.first().map_or(0, |l| l.len());
    if loads.iter().any(|l| l.len() != steps) || steps == 0 {
        return Err(Error::InvalidInput("load series must be non-empty and share one length".into()));
    }
    let nm = Newmark::new(model, h)?;
    let mut out = Response {
        displacement: DMatrix::zeros(steps, n),
        velocity: DMatrix::zeros(steps, n),
        acceleration: DMatrix::zeros(steps, n),
    };
    nm.run(
        DVector::zeros(n),
        DVector::zeros(n),
        steps,
        |k, f| {
            for (s, l) in seats.iter().zip(loads) {
                f[*s] += l[k];
            }
        },
        |k, s| {
            out.displacement.set_row(k, &s.u.transpose());
            out.velocity.set_row(k, &s.v.transpose());
            out.acceleration.set_row(k, &s.a.transpose());
        },
    );
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_sdof;
    use std::f64::consts::PI;

    #[test]
    fn free_undamped_energy() {
        let k = (2.0 * PI * 5.0f64).powi(2);
        let model = build_sdof(1.0, k, 0.0).unwrap();
        let nm = Newmark::new(&model, 0.01).unwrap();
        let mut worst: f64 = 0.0;
        nm.run(
            DVector::from_element(1, 1.0),
            DVector::zeros(1),
            1001,
            |_, _| {},
            |_, s| {
                let e = 0.5 * k * s.u[0] * s.u[0] + 0.5 * s.v[0] * s.v[0];
                worst = worst.max((e / (0.5 * k) - 1.0).abs());
            },
        );
        assert!(worst < 1e-3, "{worst}");
    }

    #[test]
    fn slow_sinusoid_follows_dynamic_amplification() {
        let (m, f1, zeta) = (1.0, 5.0, 0.05);
        let k = m * (2.0 * PI * f1).powi(2);
        let model = build_sdof(m, k, zeta).unwrap();
        let h = 0.001;
        let w = 2.0 * PI * 0.1 * f1;
        let steps = 40_000;
        let load: Vec<f64> = (0..steps).map(|i| (w * i as f64 * h).sin()).collect();
        let r = newmark_integrate(&model, &[0], &[load], h).unwrap();
        let ratio = 0.1f64;
        let daf = 1.0 / (((1.0 - ratio * ratio).powi(2) + (2.0 * zeta * ratio).powi(2)).sqrt());
        // amplitude over the last two periods, after transients
        let tail = r.displacement.column(0).rows(steps - 4000, 4000).amax();
        assert!((tail / (daf / k) - 1.0).abs() < 0.005, "{} vs {}", tail, daf / k);
    }

    #[test]
    fn rejects_mismatched_loads() {
        let model = build_sdof(1.0, 1.0, 0.1).unwrap();
        assert!(newmark_integrate(&model, &[0], &[], 0.01).is_err());
        assert!(newmark_integrate(&model, &[3], &[vec![0.0; 3]], 0.01).is_err());
        assert!(Newmark::new(&model, 0.0).is_err());
    }
}
