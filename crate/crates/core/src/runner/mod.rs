//! Full closed-loop experiments in double precision: scenario files in,
//! trajectory/event CSVs and a JSON summary out.

mod output;
mod scenario;

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::certificates::{certify, Certificate};
use crate::dynamics::{BeamState, ControlInput, IntegratorConfig, NewmarkIntegrator};
use crate::error::{Error, Result};
use crate::functionals::{
    energy, energy_rate_identity, max_energy_increase, rho_rate_check, FunctionalSample,
    IdentityReport, RhoRateReport, StencilPolicy,
};
use crate::mesh::{project_initial, BeamMesh};
use crate::triggering::{
    control_from_samples, min_inter_event_time, ControllerGains, TriggerCause, TriggerEvent,
    TriggerParams, TriggerState,
};

pub use output::{
    write_comparison, write_events_csv, write_field_csv, write_run, write_summary_json,
    write_sweep_csv, write_trajectory_csv,
};
pub use scenario::{CertificateSpec, IcPreset, IcSpec, Mode, Scenario, TriggerSpec};

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Multiplier weight and Lyapunov mixing used for `ϱ` and `V` when the
/// scenario carries no certificate.
pub const DEFAULT_ALPHA: f64 = 0.75;
pub const DEFAULT_LAMBDA: f64 = 0.1;

/// Relative slack granted to the certified envelope for discretization error.
pub const ENVELOPE_SLACK: f64 = 0.01;

/// Points of the uniform display grid used by field dumps.
pub const FIELD_GRID_POINTS: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Emit `(t, x, w)` every this many steps.
    pub dump_field: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldRow {
    pub t: f64,
    pub x: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeViolation {
    pub t: f64,
    pub energy: f64,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub mode: Mode,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E_final")]
    pub e_final: f64,
    pub steps: usize,
    /// `−slope` of the least-squares fit of `ln E` on `[T/4, T]`.
    pub fitted_decay_rate: Option<f64>,
    /// Control updates including the initial sample.
    pub trigger_count: usize,
    pub min_inter_event_time: Option<f64>,
    /// Present only when a certificate is attached.
    pub envelope_ok: Option<bool>,
    pub envelope_first_violation: Option<EnvelopeViolation>,
    pub certified_delta: Option<f64>,
    pub certified_g: Option<f64>,
    pub energy_identity: IdentityReport<f64>,
    pub rho_identity: RhoRateReport<f64>,
    pub max_sandwich_excess: f64,
    pub max_multiplier_excess: f64,
    pub max_energy_increase: f64,
    /// `|E_final − E0| / E0`.
    pub relative_energy_change: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub wall_time_s: f64,
    pub version: String,
    pub scenario: Scenario,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub certificate: Option<Certificate<f64>>,
    /// Every accepted step, `t = 0` included.
    pub steps: Vec<FunctionalSample<f64>>,
    pub events: Vec<TriggerEvent<f64>>,
    pub field: Vec<FieldRow>,
}

impl RunOutput {
    /// The rows written to the trajectory CSV: every `output_stride`-th step
    /// plus the final one.
    pub fn output_samples(&self) -> Vec<&FunctionalSample<f64>> {
        let stride = self.summary.scenario.output_stride;
        let last = self.steps.len() - 1;
        self.steps
            .iter()
            .enumerate()
            .filter(|(m, _)| m % stride == 0 || *m == last)
            .map(|(_, s)| s)
            .collect()
    }

    pub fn envelope_bound(&self, t: f64) -> Option<f64> {
        self.certificate
            .as_ref()
            .map(|c| c.envelope(t, self.summary.e0))
    }
}

/// Certifies the attached inputs, failing on any violated condition.
pub fn scenario_certificate(scenario: &Scenario) -> Result<Option<Certificate<f64>>> {
    let Some(inputs) = scenario.certificate_inputs() else {
        return Ok(None);
    };
    let cert = certify(&inputs).map_err(|e| Error::InvalidCertificate(vec![e.to_string()]))?;
    if !cert.valid {
        return Err(Error::InvalidCertificate(
            cert.violations.iter().map(|v| v.to_string()).collect(),
        ));
    }
    Ok(Some(cert))
}

pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    run_with(scenario, &RunOptions::default())
}

pub fn run_with(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput> {
    let started = Instant::now();
    scenario.validate()?;
    if opts.dump_field == Some(0) {
        return Err(Error::InvalidScenario("field dump stride must be at least 1".into()));
    }
    let certificate = scenario_certificate(scenario)?;
    let (alpha, lambda) = scenario
        .certificate_inputs
        .map_or((DEFAULT_ALPHA, DEFAULT_LAMBDA), |c| (c.alpha, c.lambda));

    let mesh = BeamMesh::<f64>::new(scenario.n_elements, scenario.quad_order)?;
    let ic = scenario.ic.build(scenario.seed)?;
    let (w0, v0) = project_initial(&mesh, &ic);
    let integrator = NewmarkIntegrator::new(&mesh, IntegratorConfig::new(scenario.dt)?)?;
    let gains = match scenario.mode {
        Mode::Uncontrolled => ControllerGains::open_loop(),
        _ => scenario.gains,
    };

    let mut state = BeamState {
        t: 0.0,
        w: w0,
        v: v0,
        a: vec![0.0; mesh.dim()],
    };
    let e0 = energy(&mesh, &state)?;
    if !e0.is_finite() || !state.is_finite() {
        return Err(Error::NonFinite { step: 0 });
    }
    let params = TriggerParams::new(
        scenario.trigger.beta,
        scenario.trigger.beta0,
        scenario.trigger.theta,
        e0,
    )?;
    let mut trigger = TriggerState::new();
    trigger.update_sample(0.0, state.wt1(&mesh), state.wxt1(&mesh), TriggerCause::Initial)?;
    let mut u = control_from_samples(&gains, &trigger);
    integrator.reset_acceleration(&mut state, u)?;

    let n_steps = scenario.steps();
    let mut steps = Vec::with_capacity(n_steps + 1);
    let mut field = Vec::new();
    let record = |state: &BeamState<f64>, u: ControlInput<f64>, tr: &TriggerState<f64>| {
        FunctionalSample::new(
            &mesh,
            state,
            &gains,
            alpha,
            lambda,
            u,
            (tr.sampled_wt1, tr.sampled_wxt1),
            tr.k().unwrap_or(0),
        )
    };
    steps.push(record(&state, u, &trigger)?);
    if opts.dump_field.is_some() {
        dump_field(&mesh, &state, &mut field)?;
    }

    for m in 1..=n_steps {
        let mut next = integrator.step(&state, u)?;
        next.t = m as f64 * scenario.dt;
        if !next.is_finite() {
            return Err(Error::NonFinite { step: m });
        }
        let (wt1, wxt1) = (next.wt1(&mesh), next.wxt1(&mesh));
        let update = match scenario.mode {
            Mode::Uncontrolled => None,
            Mode::Continuous => Some(TriggerCause::Continuous),
            Mode::EventTriggered => {
                let e = energy(&mesh, &next)?;
                trigger
                    .should_trigger(&params, next.t, e, wt1, wxt1)
                    .then(|| trigger.cause_of(wt1, wxt1))
            }
        };
        if let Some(cause) = update {
            trigger.update_sample(next.t, wt1, wxt1, cause)?;
            u = control_from_samples(&gains, &trigger);
            integrator.reset_acceleration(&mut next, u)?;
        }
        let sample = record(&next, u, &trigger)?;
        if !sample.energy.is_finite() {
            return Err(Error::NonFinite { step: m });
        }
        steps.push(sample);
        if let Some(stride) = opts.dump_field {
            if m % stride == 0 || m == n_steps {
                dump_field(&mesh, &next, &mut field)?;
            }
        }
        state = next;
    }

    let policy = match scenario.mode {
        Mode::Continuous => StencilPolicy::All,
        _ => StencilPolicy::SkipUpdates,
    };
    let energy_identity = energy_rate_identity(&mut steps, policy)?;
    let rho_identity = rho_rate_check(&steps, &gains, alpha, policy)?;
    let events = trigger.into_events();
    let e_final = steps.last().map_or(e0, |s| s.energy);

    let (envelope_ok, envelope_first_violation) = match &certificate {
        None => (None, None),
        Some(cert) => {
            let first = steps.iter().find_map(|s| {
                let bound = cert.envelope(s.t, e0);
                (s.energy > (1.0 + ENVELOPE_SLACK) * bound).then_some(EnvelopeViolation {
                    t: s.t,
                    energy: s.energy,
                    bound,
                })
            });
            (Some(first.is_none()), first)
        }
    };

    let summary = RunSummary {
        mode: scenario.mode,
        e0,
        e_final,
        steps: n_steps,
        fitted_decay_rate: fitted_decay_rate(&steps, scenario.horizon),
        trigger_count: events.len(),
        min_inter_event_time: min_inter_event_time(&events),
        envelope_ok,
        envelope_first_violation,
        certified_delta: certificate.as_ref().map(|c| c.delta),
        certified_g: certificate.as_ref().map(|c| c.g),
        energy_identity,
        rho_identity,
        max_sandwich_excess: steps
            .iter()
            .map(|s| s.sandwich_excess(lambda))
            .fold(0.0, f64::max),
        max_multiplier_excess: steps
            .iter()
            .map(|s| s.multiplier_excess())
            .fold(0.0, f64::max),
        max_energy_increase: max_energy_increase(&steps),
        relative_energy_change: if e0 > 0.0 {
            (e_final - e0).abs() / e0
        } else {
            (e_final - e0).abs()
        },
        alpha,
        lambda,
        wall_time_s: started.elapsed().as_secs_f64(),
        version: VERSION.to_string(),
        scenario: scenario.clone(),
    };
    Ok(RunOutput {
        summary,
        certificate,
        steps,
        events,
        field,
    })
}

fn dump_field(mesh: &BeamMesh<f64>, state: &BeamState<f64>, out: &mut Vec<FieldRow>) -> Result<()> {
    let last = (FIELD_GRID_POINTS - 1) as f64;
    for j in 0..FIELD_GRID_POINTS {
        let x = j as f64 / last;
        let (w, _, _) = mesh.eval(&state.w, x)?;
        out.push(FieldRow { t: state.t, x, w });
    }
    Ok(())
}

/// Least-squares decay rate of `ln E` over `[T/4, T]`.
pub fn fitted_decay_rate(samples: &[FunctionalSample<f64>], horizon: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.t >= 0.25 * horizon - 1e-12 && s.energy > 0.0)
        .map(|s| (s.t, s.energy.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub event_mode: Mode,
    pub reference_mode: Mode,
    pub steps: usize,
    pub event_updates: usize,
    pub reference_updates: usize,
    /// `event_updates / reference_updates`.
    pub update_ratio: f64,
    /// `event_updates / steps`.
    pub updates_per_step: f64,
    /// `max_t |E_event(t) − E_reference(t)|` over all steps.
    pub max_energy_difference: f64,
    pub identical_trajectories: bool,
    pub event_summary: RunSummary,
    pub reference_summary: RunSummary,
}

#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub event: RunOutput,
    pub reference: RunOutput,
    pub comparison: Comparison,
}

/// Runs the scenario event-triggered and continuously on the same
/// discretization. An uncontrolled scenario is run twice as is.
pub fn compare(scenario: &Scenario, opts: &RunOptions) -> Result<CompareOutput> {
    let (event_mode, reference_mode) = match scenario.mode {
        Mode::Uncontrolled => (Mode::Uncontrolled, Mode::Uncontrolled),
        _ => (Mode::EventTriggered, Mode::Continuous),
    };
    let event = run_with(&scenario.with_mode(event_mode), opts)?;
    let reference = run_with(&scenario.with_mode(reference_mode), opts)?;
    let max_energy_difference = event
        .steps
        .iter()
        .zip(&reference.steps)
        .map(|(a, b)| (a.energy - b.energy).abs())
        .fold(0.0, f64::max);
    let identical_trajectories = event.steps.len() == reference.steps.len()
        && event
            .steps
            .iter()
            .zip(&reference.steps)
            .all(|(a, b)| a.energy.to_bits() == b.energy.to_bits() && a.u1 == b.u1 && a.u2 == b.u2);
    let comparison = Comparison {
        event_mode,
        reference_mode,
        steps: event.summary.steps,
        event_updates: event.summary.trigger_count,
        reference_updates: reference.summary.trigger_count,
        update_ratio: event.summary.trigger_count as f64 / reference.summary.trigger_count as f64,
        updates_per_step: event.summary.trigger_count as f64 / event.summary.steps as f64,
        max_energy_difference,
        identical_trajectories,
        event_summary: event.summary.clone(),
        reference_summary: reference.summary.clone(),
    };
    Ok(CompareOutput {
        event,
        reference,
        comparison,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepAxis {
    #[serde(rename = "beta")]
    Beta,
    #[serde(rename = "beta0")]
    Beta0,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "K1")]
    K1,
    #[serde(rename = "K2")]
    K2,
    #[serde(rename = "n_elements")]
    NElements,
    #[serde(rename = "dt")]
    Dt,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 7] = [
        SweepAxis::Beta,
        SweepAxis::Beta0,
        SweepAxis::Theta,
        SweepAxis::K1,
        SweepAxis::K2,
        SweepAxis::NElements,
        SweepAxis::Dt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Beta => "beta",
            SweepAxis::Beta0 => "beta0",
            SweepAxis::Theta => "theta",
            SweepAxis::K1 => "K1",
            SweepAxis::K2 => "K2",
            SweepAxis::NElements => "n_elements",
            SweepAxis::Dt => "dt",
        }
    }

    /// `base` with this parameter set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            SweepAxis::Beta => s.trigger.beta = value,
            SweepAxis::Beta0 => s.trigger.beta0 = value,
            SweepAxis::Theta => s.trigger.theta = value,
            SweepAxis::K1 => s.gains.k1 = value,
            SweepAxis::K2 => s.gains.k2 = value,
            SweepAxis::Dt => s.dt = value,
            SweepAxis::NElements => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::InvalidScenario(format!(
                        "n_elements must be a positive integer, got {value}"
                    )));
                }
                s.n_elements = value as usize;
            }
        }
        s.validate()?;
        Ok(s)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                Error::InvalidScenario(format!(
                    "unknown sweep axis '{s}'; expected one of {}",
                    SweepAxis::ALL.map(|a| a.name()).join(", ")
                ))
            })
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub outcome: std::result::Result<RunOutput, String>,
}

/// One run per value, in parallel, returned in the order of `values`. A
/// failing run is reported in its row rather than aborting the sweep.
pub fn sweep(base: &Scenario, axis: SweepAxis, values: &[f64], opts: &RunOptions) -> Result<Vec<SweepRow>> {
    base.validate()?;
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<_>>()?;
    Ok(scenarios
        .par_iter()
        .zip(values.par_iter())
        .map(|(s, &value)| SweepRow {
            axis,
            value,
            outcome: run_with(s, opts).map_err(|e| e.to_string()),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(mode: Mode) -> Scenario {
        Scenario {
            horizon: 0.2,
            n_elements: 8,
            dt: 2e-3,
            mode,
            ..Scenario::reference()
        }
    }

    #[test]
    fn uncontrolled_run_conserves_energy() {
        let out = run(&short(Mode::Uncontrolled)).unwrap();
        assert!(out.summary.relative_energy_change < 1e-12);
        assert_eq!(out.summary.trigger_count, 1);
        assert_eq!(out.steps.len(), 101);
    }

    #[test]
    fn continuous_mode_updates_every_step() {
        let out = run(&short(Mode::Continuous)).unwrap();
        assert_eq!(out.events.len(), 101);
        assert!(out.events[1..]
            .iter()
            .all(|e| e.cause == TriggerCause::Continuous));
        assert!(out.summary.max_energy_increase <= 1e-14);
    }

    #[test]
    fn output_samples_follow_stride() {
        let out = run(&short(Mode::EventTriggered)).unwrap();
        let rows = out.output_samples();
        assert_eq!(rows.len(), 11);
        assert!((rows[1].t - 0.02).abs() < 1e-15);
    }

    #[test]
    fn invalid_certificate_rejected() {
        let mut s = short(Mode::EventTriggered);
        s.certificate_inputs.as_mut().unwrap().lambda = 0.2;
        assert!(matches!(run(&s), Err(Error::InvalidCertificate(_))));
    }

    #[test]
    fn fitted_rate_of_pure_exponential() {
        let gains = ControllerGains::open_loop();
        let mesh = BeamMesh::<f64>::new(2, 4).unwrap();
        let mut samples = Vec::new();
        for m in 0..=40 {
            let state = BeamState {
                t: m as f64 * 0.05,
                ..BeamState::zeros(mesh.dim())
            };
            let mut s = FunctionalSample::new(&mesh, &state, &gains, 0.75, 0.1, ControlInput::zero(), (0.0, 0.0), 0)
                .unwrap();
            s.energy = (-0.3 * s.t).exp();
            samples.push(s);
        }
        let r = fitted_decay_rate(&samples, 2.0).unwrap();
        assert!((r - 0.3).abs() < 1e-12);
    }

    #[test]
    fn sweep_axis_names_round_trip() {
        for a in SweepAxis::ALL {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
        }
        assert!("gamma".parse::<SweepAxis>().is_err());
        assert!(SweepAxis::NElements.apply(&Scenario::reference(), 2.5).is_err());
    }

    #[test]
    fn sweep_preserves_value_order() {
        let rows = sweep(&short(Mode::EventTriggered), SweepAxis::Beta, &[0.02, 0.005, 0.01], &RunOptions::default())
            .unwrap();
        let vals: Vec<f64> = rows.iter().map(|r| r.value).collect();
        assert_eq!(vals, vec![0.02, 0.005, 0.01]);
        assert!(rows.iter().all(|r| r.outcome.is_ok()));
    }
}
