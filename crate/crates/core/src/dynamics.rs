//! Time integration of `(M0 + A) ẅ + K w = f(t)`.
//!
//! The right side carries the boundary controls: `f = U1·e_{w_x(1)} + U2·e_{w(1)}`.
//! Controls are held constant across a step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{check_dim, norm2, BandCholesky, SymBandMatrix};
use crate::mesh::BeamMesh;
use crate::real::Real;

/// Displacement, velocity and acceleration DOF vectors at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamState<T> {
    pub t: T,
    pub w: Vec<T>,
    pub v: Vec<T>,
    pub a: Vec<T>,
}

impl<T: Real> BeamState<T> {
    pub fn zeros(dim: usize) -> Self {
        BeamState {
            t: T::zero(),
            w: vec![T::zero(); dim],
            v: vec![T::zero(); dim],
            a: vec![T::zero(); dim],
        }
    }

    /// `w_t(1, t)`.
    pub fn wt1(&self, mesh: &BeamMesh<T>) -> T {
        mesh.sel_w1.dot(&self.v)
    }

    /// `w_xt(1, t)`.
    pub fn wxt1(&self, mesh: &BeamMesh<T>) -> T {
        mesh.sel_wx1.dot(&self.v)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        let s = |x: &Vec<T>| x.iter().map(|&xi| alpha * xi).collect();
        BeamState {
            t: self.t,
            w: s(&self.w),
            v: s(&self.v),
            a: s(&self.a),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.w
            .iter()
            .chain(&self.v)
            .chain(&self.a)
            .all(|x| x.is_finite())
    }

    fn check(&self, dim: usize) -> Result<()> {
        check_dim(dim, self.w.len())?;
        check_dim(dim, self.v.len())?;
        check_dim(dim, self.a.len())
    }
}

/// Moment `U1` and shear-type `U2` controls at `x = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlInput<T> {
    pub u1: T,
    pub u2: T,
}

impl<T: Real> ControlInput<T> {
    pub fn zero() -> Self {
        ControlInput {
            u1: T::zero(),
            u2: T::zero(),
        }
    }

    pub fn scaled(self, alpha: T) -> Self {
        ControlInput {
            u1: alpha * self.u1,
            u2: alpha * self.u2,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    NewmarkAverageAcceleration,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T> {
    pub dt: T,
    pub scheme: Scheme,
    /// Relative residual bound checked after each solve; `0` skips the check.
    pub linear_solver_tol: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(dt: T) -> Result<Self> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        Ok(IntegratorConfig {
            dt,
            scheme: Scheme::NewmarkAverageAcceleration,
            linear_solver_tol: T::zero(),
        })
    }
}

/// Force vector of the boundary controls; nonzero only on the tip DOFs.
pub fn control_force<T: Real>(mesh: &BeamMesh<T>, u: ControlInput<T>) -> Vec<T> {
    let mut f = vec![T::zero(); mesh.dim()];
    f[mesh.sel_wx1.index] = u.u1;
    f[mesh.sel_w1.index] = f[mesh.sel_w1.index] + u.u2;
    f
}

/// `(M0 + A)⁻¹ (f(u) − K w)`; factorizes the mass matrix on every call.
pub fn consistent_acceleration<T: Real>(
    mesh: &BeamMesh<T>,
    w: &[T],
    v: &[T],
    u: ControlInput<T>,
) -> Result<Vec<T>> {
    check_dim(mesh.dim(), v.len())?;
    let mass = mesh.m0.combine(T::one(), &mesh.a, T::one()).cholesky()?;
    accel(mesh, &mass, w, u)
}

fn accel<T: Real>(
    mesh: &BeamMesh<T>,
    mass: &BandCholesky<T>,
    w: &[T],
    u: ControlInput<T>,
) -> Result<Vec<T>> {
    let kw = mesh.k.mul_vec(w)?;
    let rhs: Vec<T> = control_force(mesh, u)
        .iter()
        .zip(&kw)
        .map(|(&f, &k)| f - k)
        .collect();
    mass.solve(&rhs)
}

/// Single Newmark step with freshly factorized matrices.
///
/// Convenience for one-off use; trajectories should hold a [`NewmarkIntegrator`].
pub fn step<T: Real>(
    mesh: &BeamMesh<T>,
    state: &BeamState<T>,
    u: ControlInput<T>,
    cfg: IntegratorConfig<T>,
) -> Result<BeamState<T>> {
    NewmarkIntegrator::new(mesh, cfg)?.step(state, u)
}

/// Newmark average-acceleration integrator (`γ = 1/2`, `β = 1/4`).
///
/// Holds the factorizations of `M = M0 + A` and `M + (dt²/4) K` for one `dt`.
#[derive(Clone, Debug)]
pub struct NewmarkIntegrator<'m, T> {
    mesh: &'m BeamMesh<T>,
    cfg: IntegratorConfig<T>,
    mass: SymBandMatrix<T>,
    mass_factor: BandCholesky<T>,
    system_factor: BandCholesky<T>,
}

impl<'m, T: Real> NewmarkIntegrator<'m, T> {
    pub fn new(mesh: &'m BeamMesh<T>, cfg: IntegratorConfig<T>) -> Result<Self> {
        IntegratorConfig::new(cfg.dt)?;
        let mass = mesh.m0.combine(T::one(), &mesh.a, T::one());
        let mass_factor = mass.cholesky()?;
        let quarter_dt2 = cfg.dt * cfg.dt / T::lit(4.0);
        let system_factor = mass.combine(T::one(), &mesh.k, quarter_dt2).cholesky()?;
        Ok(NewmarkIntegrator {
            mesh,
            cfg,
            mass,
            mass_factor,
            system_factor,
        })
    }

    pub fn mesh(&self) -> &'m BeamMesh<T> {
        self.mesh
    }

    pub fn dt(&self) -> T {
        self.cfg.dt
    }

    /// `(M0 + A)⁻¹ (f(u) − K w)` using the cached mass factorization.
    pub fn consistent_acceleration(&self, w: &[T], u: ControlInput<T>) -> Result<Vec<T>> {
        accel(self.mesh, &self.mass_factor, w, u)
    }

    /// Replaces `state.a` with the acceleration consistent with control `u`.
    ///
    /// Required whenever the held control changes so the step starts from
    /// the equation of motion under the new control.
    pub fn reset_acceleration(&self, state: &mut BeamState<T>, u: ControlInput<T>) -> Result<()> {
        state.a = self.consistent_acceleration(&state.w, u)?;
        Ok(())
    }

    /// Advances `state` by `dt` with `u` held over the step.
    pub fn step(&self, state: &BeamState<T>, u: ControlInput<T>) -> Result<BeamState<T>> {
        let n = self.mesh.dim();
        state.check(n)?;
        let dt = self.cfg.dt;
        let half_dt = dt / T::lit(2.0);
        let quarter_dt2 = dt * dt / T::lit(4.0);

        let w_pred: Vec<T> = (0..n)
            .map(|i| state.w[i] + dt * state.v[i] + quarter_dt2 * state.a[i])
            .collect();
        let v_pred: Vec<T> = (0..n).map(|i| state.v[i] + half_dt * state.a[i]).collect();

        let f = control_force(self.mesh, u);
        let kw = self.mesh.k.mul_vec(&w_pred)?;
        let rhs: Vec<T> = f.iter().zip(&kw).map(|(&fi, &ki)| fi - ki).collect();
        let a_new = self.system_factor.solve(&rhs)?;

        let w_new: Vec<T> = (0..n).map(|i| w_pred[i] + quarter_dt2 * a_new[i]).collect();
        let v_new: Vec<T> = (0..n).map(|i| v_pred[i] + half_dt * a_new[i]).collect();

        if self.cfg.linear_solver_tol > T::zero() {
            let res = self.equation_residual(&w_new, &a_new, u)?;
            let scale = norm2(&f).max(norm2(&kw)).max(T::min_positive_value());
            if res > self.cfg.linear_solver_tol * scale {
                return Err(Error::SolveTolerance {
                    residual: res.to_f64().unwrap_or(f64::NAN),
                    tol: self.cfg.linear_solver_tol.to_f64().unwrap_or(f64::NAN),
                });
            }
        }

        Ok(BeamState {
            t: state.t + dt,
            w: w_new,
            v: v_new,
            a: a_new,
        })
    }

    /// `‖(M0 + A) a + K w − f(u)‖₂`.
    pub fn equation_residual(&self, w: &[T], a: &[T], u: ControlInput<T>) -> Result<T> {
        let ma = self.mass.mul_vec(a)?;
        let kw = self.mesh.k.mul_vec(w)?;
        let f = control_force(self.mesh, u);
        let r: Vec<T> = (0..f.len()).map(|i| ma[i] + kw[i] - f[i]).collect();
        Ok(norm2(&r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{project_initial, InitialCondition};

    fn mesh(n: usize) -> BeamMesh<f64> {
        BeamMesh::new(n, 4).unwrap()
    }

    #[test]
    fn control_force_selects_tip_dofs() {
        let m = mesh(4);
        assert!(control_force(&m, ControlInput::zero()).iter().all(|&x| x == 0.0));
        let f = control_force(&m, ControlInput { u1: 1.0, u2: 0.0 });
        assert_eq!(f, m.sel_wx1.to_dense::<f64>());
        let (k1, k2, s, r) = (0.2, 0.1, 0.5, 0.4);
        let f = control_force(
            &m,
            ControlInput {
                u1: -k1 * s,
                u2: -k2 * r,
            },
        );
        assert_eq!(f[m.sel_wx1.index], -k1 * s);
        assert_eq!(f[m.sel_w1.index], -k2 * r);
        assert_eq!(f.iter().filter(|&&x| x != 0.0).count(), 2);
    }

    #[test]
    fn zero_state_stays_zero() {
        let m = mesh(6);
        let cfg = IntegratorConfig::new(1e-3).unwrap();
        let s = step(&m, &BeamState::zeros(m.dim()), ControlInput::zero(), cfg).unwrap();
        assert!(s.w.iter().chain(&s.v).chain(&s.a).all(|&x| x == 0.0));
        assert!((s.t - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn consistent_acceleration_cases() {
        let m = mesh(5);
        let z = vec![0.0; m.dim()];
        let a = consistent_acceleration(&m, &z, &z, ControlInput::zero()).unwrap();
        assert!(a.iter().all(|&x| x == 0.0));

        let a = consistent_acceleration(&m, &z, &z, ControlInput { u1: 1.0, u2: 0.0 }).unwrap();
        let mass = m.m0.combine(1.0, &m.a, 1.0);
        let back = mass.mul_vec(&a).unwrap();
        let e = m.sel_wx1.to_dense::<f64>();
        for (x, y) in back.iter().zip(&e) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn consistent_acceleration_residual_for_sine_profile() {
        let m = mesh(16);
        let (w, v) = project_initial(&m, &InitialCondition::sine_profile());
        let u = ControlInput {
            u1: -0.2 * m.sel_wx1.dot(&v),
            u2: -0.1 * m.sel_w1.dot(&v),
        };
        let integ = NewmarkIntegrator::new(&m, IntegratorConfig::new(1e-3).unwrap()).unwrap();
        let a = integ.consistent_acceleration(&w, u).unwrap();
        assert!(a.iter().all(|x| x.is_finite()));
        let scale = norm2(&m.k.mul_vec(&w).unwrap());
        assert!(integ.equation_residual(&w, &a, u).unwrap() <= 1e-12 * scale);
    }

    #[test]
    fn rejects_nonpositive_dt() {
        assert!(IntegratorConfig::<f64>::new(0.0).is_err());
        assert!(IntegratorConfig::<f64>::new(-1e-3).is_err());
        assert!(IntegratorConfig::<f64>::new(f64::NAN).is_err());
    }

    #[test]
    fn solver_tolerance_check_passes_for_direct_solve() {
        let m = mesh(8);
        let mut cfg = IntegratorConfig::new(1e-3).unwrap();
        cfg.linear_solver_tol = 1e-10;
        let integ = NewmarkIntegrator::new(&m, cfg).unwrap();
        let (w, v) = project_initial(&m, &InitialCondition::sine_profile());
        let mut s = BeamState { t: 0.0, w, v, a: vec![0.0; m.dim()] };
        let u = ControlInput { u1: 1.0, u2: -1.0 };
        integ.reset_acceleration(&mut s, u).unwrap();
        assert!(integ.step(&s, u).is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let m = mesh(4);
        let integ = NewmarkIntegrator::new(&m, IntegratorConfig::new(1e-3).unwrap()).unwrap();
        assert!(matches!(
            integ.step(&BeamState::zeros(3), ControlInput::zero()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
