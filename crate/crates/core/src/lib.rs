//! Simulation and verification of event-triggered boundary stabilization of
//! the Rayleigh beam
//!
//! ```text
//! w_tt + w_xxxx − w_xxtt = 0,          x ∈ (0, 1)
//! w(0) = w_x(0) = 0
//! w_xx(1) = −K1 w_xt(1, t_k)
//! w_xtt(1) − w_xxx(1) = −K2 w_t(1, t_k)
//! ```
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the `*F64`
//! aliases below fix the scalar for everyday use. [`runner`] drives complete
//! experiments in double precision.

pub mod certificates;
pub mod dynamics;
pub mod error;
pub mod functionals;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod real;
pub mod runner;
pub mod triggering;

pub use certificates::{
    certify, search_for_rate, Certificate, CertificateInputs, EpsilonVariant, SearchOutcome,
};
pub use dynamics::{BeamState, ControlInput, IntegratorConfig, NewmarkIntegrator};
pub use error::{Error, Result};
pub use functionals::{FunctionalSample, StencilPolicy};
pub use mesh::{BeamMesh, InitialCondition};
pub use real::Real;
pub use triggering::{ControllerGains, TriggerCause, TriggerEvent, TriggerParams, TriggerState};

pub type BeamMeshF64 = BeamMesh<f64>;
pub type BeamStateF64 = BeamState<f64>;
pub type InitialConditionF64 = InitialCondition<f64>;
pub type ControlInputF64 = ControlInput<f64>;
pub type TriggerStateF64 = TriggerState<f64>;
pub type TriggerParamsF64 = TriggerParams<f64>;
pub type ControllerGainsF64 = ControllerGains<f64>;
pub type CertificateInputsF64 = CertificateInputs<f64>;
pub type CertificateF64 = Certificate<f64>;
pub type FunctionalSampleF64 = FunctionalSample<f64>;

pub type BeamMeshF32 = BeamMesh<f32>;
pub type BeamStateF32 = BeamState<f32>;
pub type CertificateF32 = Certificate<f32>;

/// Default Gauss points per element for assembly; exact for every product of
/// cubic shape-function derivatives.
pub const DEFAULT_QUAD_ORDER: usize = 4;
