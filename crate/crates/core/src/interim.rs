//! Interim estimation from partially observed time-to-event outcomes.
//!
//! A pending patient with follow-up `t` inside a window of length `A`
//! contributes `min(t / A, 1)` of a non-event to the effective count, which
//! turns the interim likelihood into a binomial-like kernel with a
//! fractional number of non-events.

use serde::{Deserialize, Serialize};

use crate::beta::reg_inc_beta;
use crate::design::DesignParams;
use crate::error::EstimateError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Endpoint {
    Tox,
    Eff,
}

impl Endpoint {
    pub fn window(self, params: &DesignParams) -> f64 {
        match self {
            Endpoint::Tox => params.tox_window,
            Endpoint::Eff => params.eff_window,
        }
    }
}

/// One patient's assignment and (latent or observed) outcomes. Event times
/// are measured from enrollment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    #[serde(with = "crate::dose_level")]
    pub dose: usize,
    pub enroll_time: f64,
    pub tox_event: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tox_time: Option<f64>,
    pub eff_event: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eff_time: Option<f64>,
}

impl PatientRecord {
    pub fn event(&self, endpoint: Endpoint) -> (bool, Option<f64>) {
        match endpoint {
            Endpoint::Tox => (self.tox_event, self.tox_time),
            Endpoint::Eff => (self.eff_event, self.eff_time),
        }
    }

    /// Calendar time at which the endpoint becomes known: the event time if
    /// an event occurs, otherwise the end of the assessment window.
    pub fn resolution_time(&self, endpoint: Endpoint, params: &DesignParams) -> f64 {
        match self.event(endpoint) {
            (true, Some(t)) => self.enroll_time + t,
            _ => self.enroll_time + endpoint.window(params),
        }
    }

    /// Both endpoints resolved.
    pub fn full_resolution_time(&self, params: &DesignParams) -> f64 {
        self.resolution_time(Endpoint::Tox, params)
            .max(self.resolution_time(Endpoint::Eff, params))
    }

    pub fn is_ascertained(&self, endpoint: Endpoint, now: f64, params: &DesignParams) -> bool {
        now >= self.resolution_time(endpoint, params)
    }

    /// Checks the event-time invariants against the assessment windows.
    pub fn check(&self, params: &DesignParams) -> Result<(), &'static str> {
        for endpoint in [Endpoint::Tox, Endpoint::Eff] {
            let window = endpoint.window(params);
            match self.event(endpoint) {
                (true, Some(t)) if t > 0.0 && t <= window => {}
                (true, Some(_)) => return Err("event time outside (0, window]"),
                (true, None) => return Err("event recorded without an event time"),
                (false, Some(_)) => return Err("event time given without an event"),
                (false, None) => {}
            }
        }
        if !self.enroll_time.is_finite() {
            return Err("enrollment time must be finite");
        }
        Ok(())
    }
}

/// Effective counts for one endpoint at one dose at one calendar time.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterimSummary {
    pub n_patients: usize,
    /// Events observed by now.
    pub n_events: usize,
    /// Windows completed without an event.
    pub m_complete: usize,
    /// `m_complete` plus the follow-up weights of pending patients.
    pub m_effective: f64,
    pub n_pending: usize,
}

impl InterimSummary {
    /// Summary of fully observed binomial data.
    pub fn complete(n_patients: usize, n_events: usize) -> Self {
        let m = n_patients - n_events;
        Self {
            n_patients,
            n_events,
            m_complete: m,
            m_effective: m as f64,
            n_pending: 0,
        }
    }
}

/// `min(elapsed / window, 1)`.
pub fn follow_up_weight(elapsed: f64, window: f64) -> Result<f64, EstimateError> {
    if !(window > 0.0) {
        return Err(EstimateError::BadWindow(window));
    }
    if elapsed < 0.0 || elapsed.is_nan() {
        return Err(EstimateError::NegativeFollowUp(elapsed));
    }
    Ok((elapsed / window).min(1.0))
}

/// Summarizes the given patients (all assumed to share one dose) at time
/// `now`. A latent event that lies in the future leaves the patient
/// pending.
pub fn summarize(
    patients: &[PatientRecord],
    now: f64,
    endpoint: Endpoint,
    params: &DesignParams,
) -> InterimSummary {
    summarize_iter(patients.iter(), now, endpoint, params)
}

/// As [`summarize`], restricted to patients on `dose`.
pub fn summarize_dose(
    patients: &[PatientRecord],
    dose: usize,
    now: f64,
    endpoint: Endpoint,
    params: &DesignParams,
) -> InterimSummary {
    summarize_iter(
        patients.iter().filter(|p| p.dose == dose),
        now,
        endpoint,
        params,
    )
}

fn summarize_iter<'a>(
    patients: impl Iterator<Item = &'a PatientRecord>,
    now: f64,
    endpoint: Endpoint,
    params: &DesignParams,
) -> InterimSummary {
    let window = endpoint.window(params);
    let mut s = InterimSummary::default();
    let mut pending_weight = 0.0;
    for p in patients {
        s.n_patients += 1;
        let (event, _) = p.event(endpoint);
        if p.is_ascertained(endpoint, now, params) {
            if event {
                s.n_events += 1;
            } else {
                s.m_complete += 1;
            }
        } else {
            s.n_pending += 1;
            let elapsed = (now - p.enroll_time).max(0.0);
            pending_weight += (elapsed / window).min(1.0);
        }
    }
    s.m_effective = s.m_complete as f64 + pending_weight;
    s
}

/// `n / (n + m_effective)`.
pub fn interim_estimate(s: &InterimSummary) -> Result<f64, EstimateError> {
    let denom = s.n_events as f64 + s.m_effective;
    if denom <= 0.0 {
        return Err(EstimateError::Undefined);
    }
    Ok(s.n_events as f64 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tail {
    Above,
    Below,
}

/// Tail probability of the posterior `Beta(alpha + n_events, beta + m_effective)`.
pub fn posterior_tail(
    n_events: f64,
    m_effective: f64,
    prior: (f64, f64),
    threshold: f64,
    tail: Tail,
) -> Result<f64, EstimateError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(EstimateError::BadThreshold(threshold));
    }
    let a = prior.0 + n_events;
    let b = prior.1 + m_effective;
    if !(a > 0.0 && b > 0.0 && prior.0 > 0.0 && prior.1 > 0.0) {
        return Err(EstimateError::BadShape(a, b));
    }
    let below = reg_inc_beta(a, b, threshold);
    Ok(match tail {
        Tail::Below => below,
        Tail::Above => 1.0 - below,
    })
}
