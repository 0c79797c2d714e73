//! Energy `E`, multiplier functional `ϱ`, Lyapunov functional `V = E + λϱ`,
//! and the time-derivative identities they satisfy along closed-loop motion.
//!
//! ```text
//! E = ½∫w_t² + ½∫w_xx² + ½∫w_xt²
//! ϱ = ∫ w_t (x w_x − α w) + w_xt ((1−α) w_x + x w_xx)
//! dE/dt = −K1 w_xt(1,t) w_xt(1,t_k) − K2 w_t(1,t) w_t(1,t_k)
//! ```

use serde::Serialize;

use crate::dynamics::{BeamState, ControlInput};
use crate::error::{Error, Result};
use crate::linalg::check_dim;
use crate::mesh::{hermite, BeamMesh};
use crate::quadrature::GaussRule;
use crate::real::Real;
use crate::triggering::ControllerGains;

/// Gauss points per element for `ϱ`; its integrand has degree ≤ 6 per element.
const RHO_QUAD_POINTS: usize = 5;

/// `½vᵀM0v + ½wᵀKw + ½vᵀAv`.
pub fn energy<T: Real>(mesh: &BeamMesh<T>, state: &BeamState<T>) -> Result<T> {
    let half = T::lit(0.5);
    Ok(half * (mesh.m0.quad_form(&state.v)? + mesh.k.quad_form(&state.w)? + mesh.a.quad_form(&state.v)?))
}

fn check_alpha<T: Real>(alpha: T) -> Result<()> {
    if alpha > T::lit(0.5) && alpha < T::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (1/2, 1), got {alpha}"
        )))
    }
}

/// Multiplier functional `ϱ` by element-wise Gauss quadrature of the interpolants.
pub fn rho<T: Real>(mesh: &BeamMesh<T>, state: &BeamState<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    check_dim(mesh.dim(), state.w.len())?;
    check_dim(mesh.dim(), state.v.len())?;
    let rule = GaussRule::<T>::new(RHO_QUAD_POINTS);
    let one = T::one();
    let mut total = T::zero();
    for e in 0..mesh.n_elements {
        let wl = mesh.element_dofs(&state.w, e);
        let vl = mesh.element_dofs(&state.v, e);
        let x0 = mesh.node(e);
        let mut acc = T::zero();
        for (&xi, &wq) in rule.points.iter().zip(&rule.weights) {
            let (n, d, dd) = hermite(xi, mesh.h);
            let x = x0 + xi * mesh.h;
            let comb = |b: &[T; 4], c: &[T; 4]| (0..4).fold(T::zero(), |s, i| s + b[i] * c[i]);
            let (w, wx, wxx) = (comb(&n, &wl), comb(&d, &wl), comb(&dd, &wl));
            let (wt, wxt) = (comb(&n, &vl), comb(&d, &vl));
            acc = acc + wq * (wt * (x * wx - alpha * w) + wxt * ((one - alpha) * wx + x * wxx));
        }
        total = total + acc * mesh.h;
    }
    Ok(total)
}

/// `V = E + λϱ`.
pub fn lyapunov<T: Real>(energy: T, rho: T, lambda: T) -> T {
    energy + lambda * rho
}

/// Boundary traces and integrals of one state entering the `ϱ` rate identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StateTraces<T> {
    pub w1: T,
    pub wx1: T,
    /// `w_xx(1, t)` of the interpolant (the Galerkin solution only meets the
    /// moment condition weakly).
    pub wxx1: T,
    pub int_wt2: T,
    pub int_wxt2: T,
    pub int_wxx2: T,
}

impl<T: Real> StateTraces<T> {
    pub fn of(mesh: &BeamMesh<T>, state: &BeamState<T>) -> Result<Self> {
        let (w1, wx1, wxx1) = mesh.eval(&state.w, T::one())?;
        Ok(StateTraces {
            w1,
            wx1,
            wxx1,
            int_wt2: mesh.m0.quad_form(&state.v)?,
            int_wxt2: mesh.a.quad_form(&state.v)?,
            int_wxx2: mesh.k.quad_form(&state.w)?,
        })
    }
}

/// Scalar functionals of one state along a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FunctionalSample<T> {
    pub t: T,
    pub energy: T,
    pub rho: T,
    pub lyapunov: T,
    /// Centered-difference `dE/dt`, filled in by [`energy_rate_identity`].
    pub de_dt_lhs: Option<T>,
    /// `−K1 w_xt(1,t) w_xt(1,t_k) − K2 w_t(1,t) w_t(1,t_k)`.
    pub de_dt_rhs: T,
    pub wt1: T,
    pub wxt1: T,
    pub u1: T,
    pub u2: T,
    pub sampled_wt1: T,
    pub sampled_wxt1: T,
    /// Event index of the held sample; a change marks a control update.
    pub epoch: usize,
    pub traces: StateTraces<T>,
}

impl<T: Real> FunctionalSample<T> {
    /// Evaluates every functional at `state`, with `u` the control held from
    /// `state.t` on and `(sampled_wt1, sampled_wxt1)` the samples behind it.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mesh: &BeamMesh<T>,
        state: &BeamState<T>,
        gains: &ControllerGains<T>,
        alpha: T,
        lambda: T,
        u: ControlInput<T>,
        sampled: (T, T),
        epoch: usize,
    ) -> Result<Self> {
        let traces = StateTraces::of(mesh, state)?;
        let half = T::lit(0.5);
        let energy = half * (traces.int_wt2 + traces.int_wxx2 + traces.int_wxt2);
        let rho = rho(mesh, state, alpha)?;
        let wt1 = state.wt1(mesh);
        let wxt1 = state.wxt1(mesh);
        Ok(FunctionalSample {
            t: state.t,
            energy,
            rho,
            lyapunov: lyapunov(energy, rho, lambda),
            de_dt_lhs: None,
            de_dt_rhs: -gains.k1 * wxt1 * sampled.1 - gains.k2 * wt1 * sampled.0,
            wt1,
            wxt1,
            u1: u.u1,
            u2: u.u2,
            sampled_wt1: sampled.0,
            sampled_wxt1: sampled.1,
            epoch,
            traces,
        })
    }

    /// How far `V` leaves `[(1−3λ)E, (1+3λ)E]`; `0` when inside.
    pub fn sandwich_excess(&self, lambda: T) -> T {
        let three_l = T::lit(3.0) * lambda;
        let lo = (T::one() - three_l) * self.energy - self.lyapunov;
        let hi = self.lyapunov - (T::one() + three_l) * self.energy;
        lo.max(hi).max(T::zero())
    }

    /// How far `|ϱ|` exceeds `3E`; `0` when within.
    pub fn multiplier_excess(&self) -> T {
        (self.rho.abs() - T::lit(3.0) * self.energy).max(T::zero())
    }
}

/// Maximum residual of a rate identity over clean interior samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentityReport<T> {
    pub max_residual: T,
    /// Time of the maximum, if any sample was evaluated.
    pub at_t: Option<T>,
    pub evaluated: usize,
    /// Stencils skipped because the held control changed inside them.
    pub skipped: usize,
}

/// Which centered-difference stencils a rate check evaluates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilPolicy {
    /// Skip stencils across which the held sample changed: the rate jumps
    /// there.
    #[default]
    SkipUpdates,
    /// Evaluate every interior stencil; for controls that move by `O(dt)` per
    /// step, such as per-step resampling.
    All,
}

fn stencils<T: Real>(
    samples: &[FunctionalSample<T>],
    policy: StencilPolicy,
) -> Result<impl Iterator<Item = (usize, bool)> + '_> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    Ok((1..samples.len() - 1).map(move |i| {
        let e = samples[i].epoch;
        let clean = samples[i - 1].epoch == e && samples[i + 1].epoch == e;
        (i, clean || policy == StencilPolicy::All)
    }))
}

fn centered<T: Real>(samples: &[FunctionalSample<T>], i: usize, f: impl Fn(&FunctionalSample<T>) -> T) -> T {
    (f(&samples[i + 1]) - f(&samples[i - 1])) / (samples[i + 1].t - samples[i - 1].t)
}

/// Compares the centered difference of `E` with its closed-loop rate.
///
/// Fills `de_dt_lhs` on the evaluated samples.
pub fn energy_rate_identity<T: Real>(
    samples: &mut [FunctionalSample<T>],
    policy: StencilPolicy,
) -> Result<IdentityReport<T>> {
    let mut report = IdentityReport {
        max_residual: T::zero(),
        at_t: None,
        evaluated: 0,
        skipped: 0,
    };
    let clean: Vec<(usize, bool)> = stencils(samples, policy)?.collect();
    for (i, ok) in clean {
        if !ok {
            report.skipped += 1;
            continue;
        }
        let lhs = centered(samples, i, |s| s.energy);
        samples[i].de_dt_lhs = Some(lhs);
        let r = (lhs - samples[i].de_dt_rhs).abs();
        report.evaluated += 1;
        if report.at_t.is_none() || r > report.max_residual {
            report.max_residual = r;
            report.at_t = Some(samples[i].t);
        }
    }
    Ok(report)
}

/// Right side of the `ϱ` rate identity at one sample.
///
/// Returns `(rhs_bc, rhs_interp)`: the first substitutes the moment
/// condition `w_xx(1,t) = −K1 w_xt(1,t_k)`, the second uses the interpolant's
/// own `w_xx(1,t)`.
pub fn rho_rate_rhs<T: Real>(sample: &FunctionalSample<T>, gains: &ControllerGains<T>, alpha: T) -> (T, T) {
    let half = T::lit(0.5);
    let one = T::one();
    let tr = &sample.traces;
    let (k1, k2) = (gains.k1, gains.k2);
    let (r, s) = (sample.sampled_wt1, sample.sampled_wxt1);
    let common = half * sample.wt1 * sample.wt1 - (half + alpha) * tr.int_wt2
        - (alpha - half) * tr.int_wxt2
        + half * sample.wxt1 * sample.wxt1
        - (T::lit(1.5) - alpha) * tr.int_wxx2
        - k2 * tr.wx1 * r
        + k2 * alpha * tr.w1 * r
        - k1 * (one - alpha) * tr.wx1 * s;
    let wxx1_bc = -k1 * s;
    let rhs_bc = common - half * wxx1_bc * wxx1_bc + k1 * k1 * s * s;
    let rhs_interp = common - half * tr.wxx1 * tr.wxx1 - k1 * s * tr.wxx1;
    (rhs_bc, rhs_interp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoRateReport<T> {
    /// Residual with the boundary-condition substitution for `w_xx(1,t)`.
    pub bc: IdentityReport<T>,
    /// Residual with the interpolant's `w_xx(1,t)`.
    pub max_residual_interp: T,
    /// `max |w_xx(1,t) + K1 w_xt(1,t_k)|` over evaluated samples.
    pub max_moment_mismatch: T,
}

/// Compares the centered difference of `ϱ` with its closed-loop rate.
pub fn rho_rate_check<T: Real>(
    samples: &[FunctionalSample<T>],
    gains: &ControllerGains<T>,
    alpha: T,
    policy: StencilPolicy,
) -> Result<RhoRateReport<T>> {
    check_alpha(alpha)?;
    let mut bc = IdentityReport {
        max_residual: T::zero(),
        at_t: None,
        evaluated: 0,
        skipped: 0,
    };
    let mut max_interp = T::zero();
    let mut mismatch = T::zero();
    for (i, ok) in stencils(samples, policy)? {
        if !ok {
            bc.skipped += 1;
            continue;
        }
        let lhs = centered(samples, i, |s| s.rho);
        let (rhs_bc, rhs_interp) = rho_rate_rhs(&samples[i], gains, alpha);
        let r = (lhs - rhs_bc).abs();
        bc.evaluated += 1;
        if bc.at_t.is_none() || r > bc.max_residual {
            bc.max_residual = r;
            bc.at_t = Some(samples[i].t);
        }
        max_interp = max_interp.max((lhs - rhs_interp).abs());
        let s = &samples[i];
        mismatch = mismatch.max((s.traces.wxx1 + gains.k1 * s.sampled_wxt1).abs());
    }
    Ok(RhoRateReport {
        bc,
        max_residual_interp: max_interp,
        max_moment_mismatch: mismatch,
    })
}

/// Largest one-step increase `E(t_{m+1}) − E(t_m)`, or `0` if `E` never grows.
pub fn max_energy_increase<T: Real>(samples: &[FunctionalSample<T>]) -> T {
    samples
        .windows(2)
        .map(|p| p[1].energy - p[0].energy)
        .fold(T::zero(), |a, b| a.max(b))
}
