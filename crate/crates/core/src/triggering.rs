//! Event-triggering of the sampled boundary feedback.
//!
//! Between triggering instants the controller holds
//! `U1 = −K1 w_xt(1, t_k)` and `U2 = −K2 w_t(1, t_k)`. A new instant is taken
//! as soon as
//!
//! ```text
//! max(e_k², ê_k²) ≥ β E(t) + β0 E(0) e^{−2θt}
//! ```
//!
//! with `e_k = w_t(1,t) − w_t(1,t_k)` and `ê_k = w_xt(1,t) − w_xt(1,t_k)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dynamics::ControlInput;
use crate::error::{Error, Result};
use crate::real::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerParams<T> {
    pub beta: T,
    pub beta0: T,
    pub theta: T,
    /// Initial energy `E(0)`, captured once from the projected initial state.
    pub e0: T,
}

impl<T: Real> TriggerParams<T> {
    pub fn new(beta: T, beta0: T, theta: T, e0: T) -> Result<Self> {
        if !(beta >= T::zero()) {
            return Err(Error::InvalidParameter(format!("beta must be >= 0, got {beta}")));
        }
        if !(beta0 > T::zero()) {
            return Err(Error::InvalidParameter(format!("beta0 must be > 0, got {beta0}")));
        }
        if !(theta > T::zero()) {
            return Err(Error::InvalidParameter(format!("theta must be > 0, got {theta}")));
        }
        if !(e0 >= T::zero()) {
            return Err(Error::InvalidParameter(format!("E(0) must be >= 0, got {e0}")));
        }
        Ok(TriggerParams {
            beta,
            beta0,
            theta,
            e0,
        })
    }

    /// `β E(t) + β0 E(0) e^{−2θt}`.
    pub fn threshold(&self, t: T, energy: T) -> T {
        self.beta * energy + self.beta0 * self.e0 * (-T::lit(2.0) * self.theta * t).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerGains<T> {
    #[serde(rename = "K1")]
    pub k1: T,
    #[serde(rename = "K2")]
    pub k2: T,
}

impl<T: Real> ControllerGains<T> {
    pub fn new(k1: T, k2: T) -> Result<Self> {
        if !(k1 > T::zero() && k2 > T::zero()) {
            return Err(Error::InvalidParameter(format!(
                "gains must be positive, got K1={k1}, K2={k2}"
            )));
        }
        Ok(ControllerGains { k1, k2 })
    }

    /// Zero gains: the open-loop (conservative) beam.
    pub fn open_loop() -> Self {
        ControllerGains {
            k1: T::zero(),
            k2: T::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerCause {
    /// The first sample at `t_0 = 0`.
    Initial,
    /// `e_k²` reached the threshold.
    E,
    /// `ê_k²` reached the threshold.
    EHat,
    /// Refresh on every step in continuous comparator mode.
    Continuous,
}

impl fmt::Display for TriggerCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriggerCause::Initial => "initial",
            TriggerCause::E => "e",
            TriggerCause::EHat => "e_hat",
            TriggerCause::Continuous => "continuous",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriggerEvent<T> {
    pub k: usize,
    pub t: T,
    pub sampled_wt1: T,
    pub sampled_wxt1: T,
    pub cause: TriggerCause,
}

/// Last triggering instant, held samples and the event log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriggerState<T> {
    pub t_k: T,
    pub sampled_wt1: T,
    pub sampled_wxt1: T,
    events: Vec<TriggerEvent<T>>,
}

impl<T: Real> TriggerState<T> {
    pub fn new() -> Self {
        TriggerState {
            t_k: T::zero(),
            sampled_wt1: T::zero(),
            sampled_wxt1: T::zero(),
            events: Vec::new(),
        }
    }

    /// Index of the latest event (`0` for the initial sample), `None` before any.
    pub fn k(&self) -> Option<usize> {
        self.events.len().checked_sub(1)
    }

    pub fn events(&self) -> &[TriggerEvent<T>] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TriggerEvent<T>> {
        self.events
    }

    /// `(e_k, ê_k)`.
    pub fn trigger_errors(&self, wt1_now: T, wxt1_now: T) -> (T, T) {
        (wt1_now - self.sampled_wt1, wxt1_now - self.sampled_wxt1)
    }

    pub fn should_trigger(
        &self,
        params: &TriggerParams<T>,
        t: T,
        energy: T,
        wt1_now: T,
        wxt1_now: T,
    ) -> bool {
        let (e, e_hat) = self.trigger_errors(wt1_now, wxt1_now);
        (e * e).max(e_hat * e_hat) >= params.threshold(t, energy)
    }

    /// Which error reached the threshold; ties go to `e`.
    pub fn cause_of(&self, wt1_now: T, wxt1_now: T) -> TriggerCause {
        let (e, e_hat) = self.trigger_errors(wt1_now, wxt1_now);
        if e * e >= e_hat * e_hat {
            TriggerCause::E
        } else {
            TriggerCause::EHat
        }
    }

    /// Takes a new sample at `t`. Event times must strictly increase.
    pub fn update_sample(
        &mut self,
        t: T,
        wt1_now: T,
        wxt1_now: T,
        cause: TriggerCause,
    ) -> Result<()> {
        if let Some(last) = self.events.last() {
            if !(t > last.t) {
                return Err(time_regression(t, last.t));
            }
        } else if t < self.t_k {
            return Err(time_regression(t, self.t_k));
        }
        self.t_k = t;
        self.sampled_wt1 = wt1_now;
        self.sampled_wxt1 = wxt1_now;
        self.events.push(TriggerEvent {
            k: self.events.len(),
            t,
            sampled_wt1: wt1_now,
            sampled_wxt1: wxt1_now,
            cause,
        });
        Ok(())
    }
}

fn time_regression<T: Real>(t: T, t_k: T) -> Error {
    Error::TimeRegression {
        t: t.to_f64().unwrap_or(f64::NAN),
        t_k: t_k.to_f64().unwrap_or(f64::NAN),
    }
}

/// `U1 = −K1 w_xt(1, t_k)`, `U2 = −K2 w_t(1, t_k)`.
pub fn control_from_samples<T: Real>(
    gains: &ControllerGains<T>,
    ts: &TriggerState<T>,
) -> ControlInput<T> {
    continuous_control(gains, ts.sampled_wt1, ts.sampled_wxt1)
}

/// The same feedback evaluated on instantaneous traces.
pub fn continuous_control<T: Real>(gains: &ControllerGains<T>, wt1: T, wxt1: T) -> ControlInput<T> {
    ControlInput {
        u1: -gains.k1 * wxt1,
        u2: -gains.k2 * wt1,
    }
}

/// Smallest gap between consecutive events; `None` with fewer than two events.
pub fn min_inter_event_time<T: Real>(events: &[TriggerEvent<T>]) -> Option<T> {
    events
        .windows(2)
        .map(|p| p[1].t - p[0].t)
        .reduce(|a, b| a.min(b))
}

/// One point of a recorded boundary signal for open-loop replay.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignalPoint<T> {
    pub t: T,
    pub energy: T,
    pub wt1: T,
    pub wxt1: T,
}

/// Runs the triggering rule over a fixed recorded signal.
///
/// The first point is taken as the initial sample. Useful for comparing
/// threshold settings on one shared trajectory.
pub fn replay<T: Real>(signal: &[SignalPoint<T>], params: &TriggerParams<T>) -> Result<TriggerState<T>> {
    let mut ts = TriggerState::new();
    let Some(first) = signal.first() else {
        return Ok(ts);
    };
    ts.update_sample(first.t, first.wt1, first.wxt1, TriggerCause::Initial)?;
    for p in &signal[1..] {
        if ts.should_trigger(params, p.t, p.energy, p.wt1, p.wxt1) {
            let cause = ts.cause_of(p.wt1, p.wxt1);
            ts.update_sample(p.t, p.wt1, p.wxt1, cause)?;
        }
    }
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampled(wt1: f64, wxt1: f64) -> TriggerState<f64> {
        let mut ts = TriggerState::new();
        ts.update_sample(0.0, wt1, wxt1, TriggerCause::Initial).unwrap();
        ts
    }

    fn reference_params() -> TriggerParams<f64> {
        TriggerParams::new(0.01, 0.005, 0.2, 0.294867).unwrap()
    }

    #[test]
    fn errors_are_differences() {
        let ts = sampled(0.5, 0.2);
        assert_eq!(ts.trigger_errors(0.5, 0.2), (0.0, 0.0));
        let (e, eh) = ts.trigger_errors(0.3, 0.25);
        assert!((e + 0.2).abs() < 1e-15);
        assert!((eh - 0.05).abs() < 1e-15);
    }

    #[test]
    fn errors_vanish_right_after_update() {
        let mut ts = sampled(0.5, 0.2);
        ts.update_sample(0.1, -0.7, 1.3, TriggerCause::E).unwrap();
        assert_eq!(ts.trigger_errors(-0.7, 1.3), (0.0, 0.0));
    }

    #[test]
    fn zero_errors_never_trigger_with_positive_energy() {
        let ts = sampled(0.4, 0.5);
        let p = reference_params();
        for &t in &[0.0, 0.5, 2.0, 100.0] {
            assert!(!ts.should_trigger(&p, t, 0.0, 0.4, 0.5));
        }
    }

    #[test]
    fn threshold_hand_evaluation() {
        // 0.01·0.25 + 0.005·0.294867·e^{−0.2} = 0.00370708
        let p = reference_params();
        assert!((p.threshold(0.5, 0.25) - 0.0037071).abs() < 1e-7);
        let ts = sampled(0.0, 0.0);
        assert!(ts.should_trigger(&p, 0.5, 0.25, 0.1, 0.0));
        assert!(!ts.should_trigger(&p, 0.5, 0.25, 0.05, 0.02));
    }

    #[test]
    fn equality_triggers() {
        let p = TriggerParams::new(0.0, 1.0, 1.0, 1.0).unwrap();
        let ts = sampled(0.0, 0.0);
        // threshold at t = 0 is exactly 1
        assert!(ts.should_trigger(&p, 0.0, 0.0, 1.0, 0.0));
    }

    #[test]
    fn first_update_is_event_zero() {
        let ts = sampled(0.1, 0.2);
        assert_eq!(ts.k(), Some(0));
        assert_eq!(ts.events()[0].cause, TriggerCause::Initial);
        assert_eq!(ts.events()[0].t, 0.0);
        assert_eq!(TriggerState::<f64>::new().k(), None);
    }

    #[test]
    fn equal_times_rejected() {
        let mut ts = sampled(0.1, 0.2);
        ts.update_sample(0.3, 0.0, 0.0, TriggerCause::E).unwrap();
        assert!(matches!(
            ts.update_sample(0.3, 0.0, 0.0, TriggerCause::E),
            Err(Error::TimeRegression { .. })
        ));
        assert!(ts.update_sample(0.2, 0.0, 0.0, TriggerCause::E).is_err());
        assert_eq!(ts.k(), Some(1));
    }

    #[test]
    fn control_law() {
        let g = ControllerGains::new(0.2, 0.1).unwrap();
        assert_eq!(
            control_from_samples(&g, &sampled(0.0, 0.0)),
            ControlInput { u1: 0.0, u2: 0.0 }
        );
        let u = control_from_samples(&g, &sampled(0.4, 0.5));
        assert!((u.u1 + 0.10).abs() < 1e-15);
        assert!((u.u2 + 0.04).abs() < 1e-15);
        assert_eq!(continuous_control(&g, 0.4, 0.5), u);
    }

    #[test]
    fn gains_and_params_validated() {
        assert!(ControllerGains::new(0.0, 0.1).is_err());
        assert!(TriggerParams::new(-0.1, 0.1, 0.1, 1.0).is_err());
        assert!(TriggerParams::new(0.1, 0.0, 0.1, 1.0).is_err());
        assert!(TriggerParams::new(0.1, 0.1, 0.0, 1.0).is_err());
    }

    #[test]
    fn inter_event_times() {
        let mut ts = sampled(0.0, 0.0);
        assert_eq!(min_inter_event_time(ts.events()), None);
        ts.update_sample(0.1, 0.0, 0.0, TriggerCause::E).unwrap();
        ts.update_sample(0.35, 0.0, 0.0, TriggerCause::EHat).unwrap();
        assert!((min_inter_event_time(ts.events()).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn cause_display() {
        assert_eq!(TriggerCause::EHat.to_string(), "e_hat");
        assert_eq!(TriggerCause::Initial.to_string(), "initial");
    }
}
