use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certificates::{CertificateInputs, EpsilonVariant};
use crate::error::{Error, Result};
use crate::mesh::InitialCondition;
use crate::triggering::ControllerGains;
use crate::DEFAULT_QUAD_ORDER;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    EventTriggered,
    Continuous,
    Uncontrolled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSpec {
    pub beta: f64,
    pub beta0: f64,
    pub theta: f64,
}

/// Multiplier and perturbation weights of an attached certificate; gains and
/// triggering parameters come from the rest of the scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateSpec {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub epsilon_variant: EpsilonVariant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IcPreset {
    /// `ι₀ = x − sin x`, `ς₀ = 1 − cos x`.
    Sine,
    Zero,
    /// Random cubic profiles drawn from the scenario seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IcSpec {
    Preset(IcPreset),
    /// Polynomial coefficients in increasing degree.
    Coefficients { iota: Vec<f64>, varsigma: Vec<f64> },
}

impl IcSpec {
    pub fn build(&self, seed: u64) -> Result<InitialCondition<f64>> {
        match self {
            IcSpec::Preset(IcPreset::Sine) => Ok(InitialCondition::sine_profile()),
            IcSpec::Preset(IcPreset::Zero) => Ok(InitialCondition::zero()),
            IcSpec::Preset(IcPreset::Random) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut coeffs = || -> Vec<f64> {
                    vec![0.0, 0.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]
                };
                let iota = coeffs();
                let varsigma = coeffs();
                InitialCondition::polynomial(iota, varsigma)
            }
            IcSpec::Coefficients { iota, varsigma } => {
                InitialCondition::polynomial(iota.clone(), varsigma.clone())
                    .map_err(|e| Error::InvalidScenario(e.to_string()))
            }
        }
    }
}

fn default_stride() -> usize {
    1
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

/// One experiment: model, controller, discretization and output cadence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub gains: ControllerGains<f64>,
    pub trigger: TriggerSpec,
    #[serde(default)]
    pub certificate_inputs: Option<CertificateSpec>,
    pub ic: IcSpec,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub n_elements: usize,
    pub dt: f64,
    pub mode: Mode,
    #[serde(default = "default_stride")]
    pub output_stride: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

/// Relative slack on `T / dt` being an integer.
const STEP_COUNT_TOL: f64 = 1e-9;

impl Scenario {
    /// `K1 = 0.2`, `K2 = 0.1`, `T = 2`, sine initial data, `β = 0.01`,
    /// `β0 = 0.005`, `θ = 0.2`, on 32 elements with `dt = 1e-3`, sampled
    /// every 10 steps, with the `(α, λ, μ) = (0.75, 0.1, 0.08)` certificate.
    pub fn reference() -> Self {
        Scenario {
            gains: ControllerGains { k1: 0.2, k2: 0.1 },
            trigger: TriggerSpec {
                beta: 0.01,
                beta0: 0.005,
                theta: 0.2,
            },
            certificate_inputs: Some(CertificateSpec {
                alpha: 0.75,
                lambda: 0.1,
                mu: 0.08,
                epsilon_variant: EpsilonVariant::TheoremStatement,
            }),
            ic: IcSpec::Preset(IcPreset::Sine),
            horizon: 2.0,
            n_elements: 32,
            dt: 1e-3,
            mode: Mode::EventTriggered,
            output_stride: 10,
            seed: 0,
            quad_order: DEFAULT_QUAD_ORDER,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario =
            serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("T must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        let steps = self.horizon / self.dt;
        if (steps - steps.round()).abs() > STEP_COUNT_TOL * steps.max(1.0) || steps.round() < 1.0 {
            return bad(format!("dt = {} does not divide T = {}", self.dt, self.horizon));
        }
        if self.output_stride < 1 {
            return bad("output_stride must be at least 1".into());
        }
        if self.n_elements < 2 {
            return bad(format!("n_elements must be at least 2, got {}", self.n_elements));
        }
        if self.quad_order < 3 {
            return bad(format!("quad_order must be at least 3, got {}", self.quad_order));
        }
        if self.mode != Mode::Uncontrolled && !(self.gains.k1 > 0.0 && self.gains.k2 > 0.0) {
            return bad(format!(
                "gains must be positive, got K1={}, K2={}",
                self.gains.k1, self.gains.k2
            ));
        }
        let tr = &self.trigger;
        if !(tr.beta >= 0.0 && tr.beta0 > 0.0 && tr.theta > 0.0) {
            return bad(format!(
                "need beta >= 0, beta0 > 0, theta > 0; got {}, {}, {}",
                tr.beta, tr.beta0, tr.theta
            ));
        }
        if let Some(c) = &self.certificate_inputs {
            if !(c.alpha > 0.5 && c.alpha < 1.0) {
                return bad(format!("alpha must lie in (1/2, 1), got {}", c.alpha));
            }
            if !(c.lambda > 0.0 && c.mu > 0.0) {
                return bad("certificate lambda and mu must be positive".into());
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    pub fn certificate_inputs(&self) -> Option<CertificateInputs<f64>> {
        self.certificate_inputs.map(|c| CertificateInputs {
            k1: self.gains.k1,
            k2: self.gains.k2,
            alpha: c.alpha,
            lambda: c.lambda,
            mu: c.mu,
            beta: self.trigger.beta,
            beta0: self.trigger.beta0,
            theta: self.trigger.theta,
            epsilon_variant: c.epsilon_variant,
        })
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Scenario {
            mode,
            ..self.clone()
        }
    }
}
