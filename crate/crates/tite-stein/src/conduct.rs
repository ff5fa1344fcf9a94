//! Live trial conduct as an event-sourced session.
//!
//! A session's state is a pure function of its design and its log. Each
//! log entry is a batch of calendar events closed by the client's `now`.
//! Eliminations are committed when a new cohort is enrolled, at the
//! enrollment time of its first patient; the decision shown at `now`
//! reports pending eliminations without committing them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use tite_stein_core::interim::summarize_dose;
use tite_stein_core::select::DoseOutcome;
use tite_stein_core::{
    compute_boundaries, interim_estimate, next_dose, Boundaries, ConfigError, Decision, DesignParams, DoseState, Endpoint, FinalData,
    InterimSummary, PatientRecord, Verdict,
};

use crate::files::config_hash;
use crate::report::{finalize, FinalizeReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConductError {
    #[error("unknown trial `{0}`")]
    NotFound(String),
    #[error("invalid value at `{path}`: {message}")]
    Invalid { path: String, message: String },
    #[error("{0}")]
    Conflict(String),
    #[error("outcomes still pending for patients: {}", .0.join(", "))]
    Pending(Vec<String>),
}

impl ConductError {
    fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConductError::Invalid {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<ConfigError> for ConductError {
    fn from(e: ConfigError) -> Self {
        ConductError::invalid(e.field, e.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    Enroll,
    Toxicity,
    Response,
}

/// One calendar event. `dose` is required for enrollments only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub id: String,
    pub time: f64,
    #[serde(rename = "type")]
    pub kind: EventType,
    pub patient: String,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "tite_stein_core::dose_level::option")]
    pub dose: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventBatch {
    pub now: f64,
    #[serde(default)]
    pub events: Vec<Event>,
}

/// Hypothetical events; `now` defaults to the session clock.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhatIf {
    #[serde(default)]
    pub now: Option<f64>,
    #[serde(default)]
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum LogEntry {
    Create { id: String, params: DesignParams },
    Events { now: f64, events: Vec<Event> },
    Finalize { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Enrolling,
    Suspended,
    Terminated,
    Finalized,
}

#[derive(Debug, Clone, PartialEq)]
struct Patient {
    id: String,
    record: PatientRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: String,
    pub params: DesignParams,
    bounds: Boundaries,
    log: Vec<LogEntry>,
    seen: HashMap<String, Event>,
    patients: Vec<Patient>,
    by_patient: HashMap<String, usize>,
    eliminated: Vec<(bool, bool)>,
    current: usize,
    now: f64,
    last_event: f64,
    decision: Decision,
    report: Option<FinalizeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoseView {
    pub level: usize,
    pub tox: InterimSummary,
    pub eff: InterimSummary,
    pub p_tilde: Option<f64>,
    pub q_tilde: Option<f64>,
    pub eliminated_safety: bool,
    pub eliminated_futility: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub status: Status,
    pub config_hash: String,
    pub params: DesignParams,
    pub now: f64,
    #[serde(with = "tite_stein_core::dose_level")]
    pub current_dose: usize,
    pub enrolled: usize,
    pub max_sample_size: usize,
    /// Patients still to enroll in the open cohort at `current_dose`.
    pub cohort_slots: usize,
    pub doses: Vec<DoseView>,
    /// Decision for the next cohort, evaluated at `now`.
    pub decision: Decision,
    pub log_entries: usize,
    pub report: Option<FinalizeReport>,
}

impl Session {
    pub fn new(id: impl Into<String>, params: DesignParams) -> Result<Self, ConductError> {
        params.validate()?;
        let bounds = compute_boundaries(&params)?;
        let id = id.into();
        Ok(Session {
            id: id.clone(),
            bounds,
            log: vec![LogEntry::Create {
                id,
                params: params.clone(),
            }],
            seen: HashMap::new(),
            patients: Vec::new(),
            by_patient: HashMap::new(),
            eliminated: vec![(false, false); params.num_doses],
            current: params.start_dose,
            now: 0.0,
            last_event: f64::NEG_INFINITY,
            decision: next_dose(&vec![DoseState::default(); params.num_doses], params.start_dose, &bounds, &params),
            report: None,
            params,
        })
    }

    /// Rebuilds a session from its log.
    pub fn replay(log: &[LogEntry]) -> Result<Self, ConductError> {
        let mut entries = log.iter();
        let mut s = match entries.next() {
            Some(LogEntry::Create { id, params }) => Session::new(id.clone(), params.clone())?,
            _ => return Err(ConductError::Conflict("log must start with a create entry".into())),
        };
        for e in entries {
            match e {
                LogEntry::Create { .. } => return Err(ConductError::Conflict("duplicate create entry".into())),
                LogEntry::Events { now, events } => {
                    s.post_events(EventBatch {
                        now: *now,
                        events: events.clone(),
                    })?;
                }
                LogEntry::Finalize { seed } => {
                    s.finalize(*seed)?;
                }
            }
        }
        Ok(s)
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn decision(&self) -> &Decision {
        &self.decision
    }

    pub fn report(&self) -> Option<&FinalizeReport> {
        self.report.as_ref()
    }

    fn states(&self, at: f64) -> Vec<DoseState> {
        let records: Vec<PatientRecord> = self.patients.iter().map(|p| p.record.clone()).collect();
        (0..self.params.num_doses)
            .map(|d| DoseState {
                tox: summarize_dose(&records, d, at, Endpoint::Tox, &self.params),
                eff: summarize_dose(&records, d, at, Endpoint::Eff, &self.params),
                eliminated_safety: self.eliminated[d].0,
                eliminated_futility: self.eliminated[d].1,
            })
            .collect()
    }

    fn decide(&self, at: f64) -> Decision {
        next_dose(&self.states(at), self.current, &self.bounds, &self.params)
    }

    fn commit(&mut self, d: &Decision) {
        if let Some(from) = d.eliminate_from {
            self.eliminated[from..].iter_mut().for_each(|e| e.0 = true);
        }
        if let Some(f) = d.eliminate_futile {
            self.eliminated[f].1 = true;
        }
    }

    pub fn status(&self) -> Status {
        if self.report.is_some() {
            return Status::Finalized;
        }
        if self.cohort_slots() > 0 && !self.patients.is_empty() {
            return Status::Enrolling;
        }
        match self.decision.verdict {
            Verdict::Suspend => Status::Suspended,
            Verdict::Terminate => Status::Terminated,
            _ => Status::Enrolling,
        }
    }

    fn cohort_slots(&self) -> usize {
        let n = self.patients.len();
        if n >= self.params.max_sample_size() {
            return 0;
        }
        match n % self.params.cohort_size {
            0 => 0,
            r => self.params.cohort_size - r,
        }
    }

    /// Validates and applies a batch. On error the session is unchanged.
    pub fn post_events(&mut self, batch: EventBatch) -> Result<&Decision, ConductError> {
        let mut next = self.clone();
        next.apply(batch)?;
        *self = next;
        Ok(&self.decision)
    }

    /// Decision after hypothetical events, without touching the session.
    pub fn what_if(&self, q: WhatIf) -> Result<Decision, ConductError> {
        let mut copy = self.clone();
        copy.apply(EventBatch {
            now: q.now.unwrap_or(self.now),
            events: q.events,
        })?;
        Ok(copy.decision)
    }

    fn apply(&mut self, batch: EventBatch) -> Result<(), ConductError> {
        if self.report.is_some() {
            return Err(ConductError::Conflict("trial already finalized".into()));
        }
        if !batch.now.is_finite() {
            return Err(ConductError::invalid("now", "must be a finite number"));
        }
        if batch.now < self.now {
            return Err(ConductError::Conflict(format!(
                "now {} is earlier than the session clock {}",
                batch.now, self.now
            )));
        }
        let mut fresh = Vec::new();
        for (i, e) in batch.events.into_iter().enumerate() {
            let at = |field: &str| format!("events[{i}].{field}");
            if let Some(old) = self.seen.get(&e.id) {
                if *old == e {
                    continue;
                }
                return Err(ConductError::Conflict(format!("event id `{}` reused with different content", e.id)));
            }
            if e.id.is_empty() {
                return Err(ConductError::invalid(at("id"), "must not be empty"));
            }
            if !e.time.is_finite() {
                return Err(ConductError::invalid(at("time"), "must be a finite number"));
            }
            if e.time < self.last_event {
                return Err(ConductError::Conflict(format!(
                    "event `{}` at {} precedes the last recorded event at {}",
                    e.id, e.time, self.last_event
                )));
            }
            if e.time > batch.now {
                return Err(ConductError::invalid(at("time"), "lies after now"));
            }
            match e.kind {
                EventType::Enroll => self.enroll(&e, &at)?,
                EventType::Toxicity | EventType::Response => self.outcome(&e, &at)?,
            }
            self.last_event = e.time;
            self.seen.insert(e.id.clone(), e.clone());
            fresh.push(e);
        }
        self.now = batch.now;
        self.decision = self.decide(self.now);
        self.log.push(LogEntry::Events {
            now: batch.now,
            events: fresh,
        });
        Ok(())
    }

    fn enroll(&mut self, e: &Event, at: &dyn Fn(&str) -> String) -> Result<(), ConductError> {
        if self.by_patient.contains_key(&e.patient) {
            return Err(ConductError::invalid(at("patient"), "patient already enrolled"));
        }
        let dose = e.dose.ok_or_else(|| ConductError::invalid(at("dose"), "required for enrollments"))?;
        if dose >= self.params.num_doses {
            return Err(ConductError::invalid(at("dose"), "beyond the last dose"));
        }
        if self.patients.len() >= self.params.max_sample_size() {
            return Err(ConductError::Conflict("maximum sample size reached".into()));
        }
        if self.patients.len() % self.params.cohort_size == 0 {
            let d = self.decide(e.time);
            match (d.verdict, d.next_dose) {
                (Verdict::Suspend, _) => {
                    return Err(ConductError::Conflict(format!("accrual is suspended at time {}", e.time)));
                }
                (Verdict::Terminate, _) | (_, None) => {
                    return Err(ConductError::Conflict("the trial has terminated".into()));
                }
                (_, Some(next)) => {
                    if dose != next {
                        return Err(ConductError::invalid(
                            at("dose"),
                            format!("the next cohort is assigned dose level {}", next + 1),
                        ));
                    }
                }
            }
            self.commit(&d);
            self.current = dose;
        } else if dose != self.current {
            return Err(ConductError::invalid(
                at("dose"),
                format!("the open cohort is at dose level {}", self.current + 1),
            ));
        }
        self.by_patient.insert(e.patient.clone(), self.patients.len());
        self.patients.push(Patient {
            id: e.patient.clone(),
            record: PatientRecord {
                dose,
                enroll_time: e.time,
                tox_event: false,
                tox_time: None,
                eff_event: false,
                eff_time: None,
            },
        });
        Ok(())
    }

    fn outcome(&mut self, e: &Event, at: &dyn Fn(&str) -> String) -> Result<(), ConductError> {
        if e.dose.is_some() {
            return Err(ConductError::invalid(at("dose"), "only allowed on enrollments"));
        }
        let idx = *self
            .by_patient
            .get(&e.patient)
            .ok_or_else(|| ConductError::invalid(at("patient"), "unknown patient"))?;
        let (endpoint, name) = match e.kind {
            EventType::Toxicity => (Endpoint::Tox, "toxicity"),
            _ => (Endpoint::Eff, "response"),
        };
        let window = endpoint.window(&self.params);
        let rec = &mut self.patients[idx].record;
        let elapsed = e.time - rec.enroll_time;
        if !(elapsed > 0.0 && elapsed <= window) {
            return Err(ConductError::invalid(
                at("time"),
                format!("{name} must fall inside the assessment window after enrollment"),
            ));
        }
        let (flag, time) = match endpoint {
            Endpoint::Tox => (&mut rec.tox_event, &mut rec.tox_time),
            Endpoint::Eff => (&mut rec.eff_event, &mut rec.eff_time),
        };
        if *flag {
            return Err(ConductError::invalid(at("type"), format!("{name} already recorded for this patient")));
        }
        *flag = true;
        *time = Some(elapsed);
        Ok(())
    }

    /// Patients whose outcomes are not yet ascertained at `now`.
    pub fn pending_patients(&self) -> Vec<String> {
        self.patients
            .iter()
            .filter(|p| {
                !(p.record.is_ascertained(Endpoint::Tox, self.now, &self.params)
                    && p.record.is_ascertained(Endpoint::Eff, self.now, &self.params))
            })
            .map(|p| p.id.clone())
            .collect()
    }

    pub fn final_data(&self) -> FinalData {
        let mut doses = vec![DoseOutcome::default(); self.params.num_doses];
        for p in &self.patients {
            let d = &mut doses[p.record.dose];
            d.n += 1;
            d.tox += p.record.tox_event as usize;
            d.eff += p.record.eff_event as usize;
        }
        for (d, e) in doses.iter_mut().zip(&self.eliminated) {
            d.eliminated = e.0 || e.1;
        }
        FinalData { doses }
    }

    pub fn finalize(&mut self, seed: u64) -> Result<&FinalizeReport, ConductError> {
        if self.report.is_some() {
            return Err(ConductError::Conflict("trial already finalized".into()));
        }
        if self.patients.is_empty() {
            return Err(ConductError::Conflict("no patients enrolled".into()));
        }
        let pending = self.pending_patients();
        if !pending.is_empty() {
            return Err(ConductError::Pending(pending));
        }
        let report = finalize(&self.final_data(), &self.params, seed).expect("tried doses carry weight");
        self.log.push(LogEntry::Finalize { seed });
        Ok(self.report.insert(report))
    }

    pub fn view(&self) -> SessionView {
        let states = self.states(self.now);
        SessionView {
            id: self.id.clone(),
            status: self.status(),
            config_hash: config_hash(&self.params),
            params: self.params.clone(),
            now: self.now,
            current_dose: self.current,
            enrolled: self.patients.len(),
            max_sample_size: self.params.max_sample_size(),
            cohort_slots: self.cohort_slots(),
            doses: states
                .iter()
                .enumerate()
                .map(|(d, s)| DoseView {
                    level: d + 1,
                    tox: s.tox,
                    eff: s.eff,
                    p_tilde: interim_estimate(&s.tox).ok(),
                    q_tilde: interim_estimate(&s.eff).ok(),
                    eliminated_safety: s.eliminated_safety,
                    eliminated_futility: s.eliminated_futility,
                })
                .collect(),
            decision: self.decision.clone(),
            log_entries: self.log.len(),
            report: self.report.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(id: &str, time: f64, kind: EventType, patient: &str, dose: Option<usize>) -> Event {
        Event {
            id: id.into(),
            time,
            kind,
            patient: patient.into(),
            dose,
        }
    }

    fn enroll(id: &str, time: f64, dose: usize) -> Event {
        ev(id, time, EventType::Enroll, id, Some(dose))
    }

    #[test]
    fn fresh_session_opens_at_start_dose() {
        let s = Session::new("a", DesignParams::default()).unwrap();
        assert_eq!(s.decision.next_dose, Some(0));
        assert_eq!(s.status(), Status::Enrolling);
        let sa3 = Session::new("b", tite_stein_core::presets::sa3()).unwrap();
        assert_eq!(sa3.decision.next_dose, Some(1));
    }

    #[test]
    fn cohort_dose_is_enforced() {
        let mut s = Session::new("a", DesignParams::default()).unwrap();
        let err = s
            .post_events(EventBatch {
                now: 0.1,
                events: vec![enroll("p1", 0.1, 1)],
            })
            .unwrap_err();
        assert!(matches!(err, ConductError::Invalid { ref path, .. } if path == "events[0].dose"));
        assert_eq!(s.log().len(), 1);
    }

    #[test]
    fn suspension_blocks_next_cohort() {
        let mut s = Session::new("a", DesignParams::default()).unwrap();
        s.post_events(EventBatch {
            now: 0.3,
            events: vec![enroll("p1", 0.1, 0), enroll("p2", 0.2, 0), enroll("p3", 0.3, 0)],
        })
        .unwrap();
        assert_eq!(s.status(), Status::Suspended);
        let err = s
            .post_events(EventBatch {
                now: 0.4,
                events: vec![enroll("p4", 0.4, 0)],
            })
            .unwrap_err();
        assert!(matches!(err, ConductError::Conflict(_)));
    }

    #[test]
    fn clock_is_monotone_and_ids_idempotent() {
        let mut s = Session::new("a", DesignParams::default()).unwrap();
        let batch = EventBatch {
            now: 0.5,
            events: vec![enroll("p1", 0.1, 0)],
        };
        s.post_events(batch.clone()).unwrap();
        let before = s.view();
        s.post_events(batch).unwrap();
        let after = s.view();
        assert_eq!(before.enrolled, after.enrolled);
        assert_eq!(before.decision, after.decision);
        let err = s.post_events(EventBatch { now: 0.4, events: vec![] }).unwrap_err();
        assert!(matches!(err, ConductError::Conflict(_)));
    }

    #[test]
    fn finalize_requires_complete_follow_up() {
        let mut s = Session::new("a", DesignParams::default()).unwrap();
        s.post_events(EventBatch {
            now: 0.3,
            events: vec![enroll("p1", 0.1, 0), enroll("p2", 0.2, 0), enroll("p3", 0.3, 0)],
        })
        .unwrap();
        match s.finalize(1).unwrap_err() {
            ConductError::Pending(ids) => assert_eq!(ids, ["p1", "p2", "p3"]),
            e => panic!("{e}"),
        }
        s.post_events(EventBatch { now: 3.5, events: vec![] }).unwrap();
        assert!(s.finalize(1).is_ok());
        assert_eq!(s.status(), Status::Finalized);
    }
}
