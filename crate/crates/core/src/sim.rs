//! Calendar-time trial simulation and operating characteristics.
//!
//! Time units are whatever the windows and accrual rate share (months for
//! the standard settings, days for the case study).

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::decision::{next_dose, Decision, DoseState, Verdict};
use crate::design::{compute_boundaries, Boundaries, DesignParams};
use crate::error::ConfigError;
use crate::interim::{summarize_dose, Endpoint, PatientRecord};
use crate::select::{final_elimination, select_candidate, DoseOutcome, FinalData};
use crate::verify::verify;

/// Distribution of an event time inside its window, as fractions of the
/// window length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "UPPERCASE")]
pub enum TimeLaw {
    Uniform,
    /// Mass `masses[i]` spread uniformly over `(cuts[i], cuts[i + 1]]`;
    /// `cuts` runs from 0 to 1.
    Piecewise { cuts: Vec<f64>, masses: Vec<f64> },
}

impl TimeLaw {
    /// Sample in `(0, window]`.
    pub fn sample<R: Rng + ?Sized>(&self, window: f64, rng: &mut R) -> f64 {
        // 1 - u lies in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        match self {
            TimeLaw::Uniform => u * window,
            TimeLaw::Piecewise { cuts, masses } => {
                let pick = rng.random::<f64>();
                let mut acc = 0.0;
                let mut seg = masses.len() - 1;
                for (i, m) in masses.iter().enumerate() {
                    acc += m;
                    if pick < acc {
                        seg = i;
                        break;
                    }
                }
                let (lo, hi) = (cuts[seg], cuts[seg + 1]);
                (lo + u * (hi - lo)) * window
            }
        }
    }

    pub fn check(&self) -> Result<(), &'static str> {
        match self {
            TimeLaw::Uniform => Ok(()),
            TimeLaw::Piecewise { cuts, masses } => {
                if masses.is_empty() || cuts.len() != masses.len() + 1 {
                    return Err("cuts must have one more entry than masses");
                }
                if cuts[0] != 0.0 || cuts[cuts.len() - 1] != 1.0 {
                    return Err("cuts must start at 0 and end at 1");
                }
                if cuts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err("cuts must be strictly increasing");
                }
                if masses.iter().any(|m| !(*m >= 0.0)) {
                    return Err("masses must be non-negative");
                }
                if (masses.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err("masses must sum to 1");
                }
                Ok(())
            }
        }
    }
}

fn uniform() -> TimeLaw {
    TimeLaw::Uniform
}

/// True dose-response curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub tox: Vec<f64>,
    pub eff: Vec<f64>,
    #[serde(default = "uniform")]
    pub tox_law: TimeLaw,
    #[serde(default = "uniform")]
    pub eff_law: TimeLaw,
    /// Correct answer for scoring; `None` when no dose qualifies.
    #[serde(default, with = "crate::dose_level::option")]
    pub true_obd: Option<usize>,
}

impl Scenario {
    pub fn validate(&self, params: &DesignParams) -> Result<(), ConfigError> {
        if self.tox.len() != params.num_doses {
            return Err(ConfigError::new("tox", "length must equal num_doses"));
        }
        if self.eff.len() != params.num_doses {
            return Err(ConfigError::new("eff", "length must equal num_doses"));
        }
        for (field, v) in [("tox", &self.tox), ("eff", &self.eff)] {
            if v.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(ConfigError::new(field, "probabilities must lie in [0, 1]"));
            }
        }
        if self.tox.windows(2).any(|w| w[1] < w[0]) {
            return Err(ConfigError::new("tox", "must be non-decreasing"));
        }
        self.tox_law
            .check()
            .map_err(|e| ConfigError::new("tox_law", e))?;
        self.eff_law
            .check()
            .map_err(|e| ConfigError::new("eff_law", e))?;
        if let Some(d) = self.true_obd {
            if d >= params.num_doses {
                return Err(ConfigError::new("true_obd", "beyond the last dose"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum InterArrival {
    #[default]
    Exponential,
    Fixed,
}

/// What happens to recruitment while accrual is suspended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum SuspensionPolicy {
    /// Recruitment stops and restarts when the suspension lifts.
    #[default]
    Pause,
    /// Patients keep arriving and wait to be enrolled.
    Queue,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccrualModel {
    /// Patients per time unit.
    pub rate: f64,
    #[serde(default)]
    pub law: InterArrival,
    #[serde(default)]
    pub suspension: SuspensionPolicy,
}

impl AccrualModel {
    pub fn new(rate: f64) -> Self {
        Self {
            rate,
            law: InterArrival::Exponential,
            suspension: SuspensionPolicy::Pause,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(ConfigError::new("rate", "must be positive"));
        }
        Ok(())
    }

    fn gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            InterArrival::Exponential => Exp::new(self.rate).expect("positive rate").sample(rng),
            InterArrival::Fixed => 1.0 / self.rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub time: f64,
    #[serde(flatten)]
    pub decision: Decision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    #[serde(with = "crate::dose_level::option")]
    pub selected: Option<usize>,
    /// Utility argmax before verification.
    #[serde(with = "crate::dose_level::option")]
    pub candidate: Option<usize>,
    pub p_g: Option<f64>,
    pub patients: Vec<usize>,
    pub toxicities: Vec<usize>,
    pub responses: Vec<usize>,
    pub duration: f64,
    pub early_terminated: bool,
    pub trace: Vec<TraceEntry>,
}

impl TrialResult {
    pub fn total_patients(&self) -> usize {
        self.patients.iter().sum()
    }
}

/// Draws one patient's latent outcomes. Enrollment time is left at zero.
pub fn sample_patient<R: Rng + ?Sized>(
    scenario: &Scenario,
    dose: usize,
    params: &DesignParams,
    rng: &mut R,
) -> PatientRecord {
    let tox_event = rng.random::<f64>() < scenario.tox[dose];
    let tox_time = tox_event.then(|| scenario.tox_law.sample(params.tox_window, rng));
    let eff_event = rng.random::<f64>() < scenario.eff[dose];
    let eff_time = eff_event.then(|| scenario.eff_law.sample(params.eff_window, rng));
    PatientRecord {
        dose,
        enroll_time: 0.0,
        tox_event,
        tox_time,
        eff_event,
        eff_time,
    }
}

/// Per-replication generator: one ChaCha stream per replication index, so
/// results do not depend on how replications are scheduled.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn dose_states(
    patients: &[PatientRecord],
    eliminated: &[(bool, bool)],
    now: f64,
    params: &DesignParams,
) -> Vec<DoseState> {
    (0..params.num_doses)
        .map(|d| DoseState {
            tox: summarize_dose(patients, d, now, Endpoint::Tox, params),
            eff: summarize_dose(patients, d, now, Endpoint::Eff, params),
            eliminated_safety: eliminated[d].0,
            eliminated_futility: eliminated[d].1,
        })
        .collect()
}

struct Trial<'a> {
    params: &'a DesignParams,
    bounds: Boundaries,
    patients: Vec<PatientRecord>,
    eliminated: Vec<(bool, bool)>,
    trace: Vec<TraceEntry>,
}

impl Trial<'_> {
    fn decide(&self, current: usize, now: f64) -> Decision {
        let states = dose_states(&self.patients, &self.eliminated, now, self.params);
        next_dose(&states, current, &self.bounds, self.params)
    }

    /// Earliest time at or after `now` when the decision is no longer a
    /// suspension, using the known future resolution times.
    fn lift_time(&self, current: usize, now: f64) -> (f64, Decision) {
        let mut times: Vec<f64> = self
            .patients
            .iter()
            .flat_map(|p| {
                [
                    p.resolution_time(Endpoint::Tox, self.params),
                    p.resolution_time(Endpoint::Eff, self.params),
                ]
            })
            .filter(|t| *t > now)
            .collect();
        times.sort_by(f64::total_cmp);
        times.dedup();
        let mut last = now;
        for t in times {
            last = t;
            let d = self.decide(current, t);
            if d.verdict != Verdict::Suspend {
                return (t, d);
            }
        }
        (last, self.decide(current, last))
    }

    fn record(&mut self, time: f64, decision: &Decision) {
        let d = decision.clone();
        for (i, e) in self.eliminated.iter_mut().enumerate() {
            if d.eliminate_from.is_some_and(|f| i >= f) {
                e.0 = true;
            }
            if d.eliminate_futile == Some(i) {
                e.1 = true;
            }
        }
        self.trace.push(TraceEntry { time, decision: d });
    }

    fn final_data(&self) -> FinalData {
        let mut doses = alloc::vec![DoseOutcome::default(); self.params.num_doses];
        for p in &self.patients {
            let d = &mut doses[p.dose];
            d.n += 1;
            d.tox += p.tox_event as usize;
            d.eff += p.eff_event as usize;
        }
        for (d, e) in doses.iter_mut().zip(&self.eliminated) {
            d.eliminated = e.0 || e.1;
        }
        FinalData { doses }
    }
}

/// End-of-trial conventions that the design leaves open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Apply the elimination rules once more on complete data before
    /// selection.
    pub final_elimination: bool,
    /// Keep the decision trace in each result.
    pub keep_trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            final_elimination: true,
            keep_trace: true,
        }
    }
}

/// Runs one virtual trial.
pub fn run_trial<R: RngCore>(
    params: &DesignParams,
    scenario: &Scenario,
    accrual: &AccrualModel,
    options: &SimOptions,
    rng: &mut R,
) -> Result<TrialResult, ConfigError> {
    params.validate()?;
    scenario.validate(params)?;
    accrual.validate()?;
    let bounds = compute_boundaries(params)?;
    let mut trial = Trial {
        params,
        bounds,
        patients: Vec::with_capacity(params.max_sample_size()),
        eliminated: alloc::vec![(false, false); params.num_doses],
        trace: Vec::new(),
    };
    let mut current = params.start_dose;
    let mut arrival = accrual.gap(rng);
    let mut terminated_at = None;

    for cohort in 0..params.max_cohorts {
        let mut start = arrival;
        if cohort > 0 {
            let mut decision = trial.decide(current, start);
            if decision.verdict == Verdict::Suspend {
                trial.record(start, &decision);
                let (lift, d) = trial.lift_time(current, start);
                match accrual.suspension {
                    SuspensionPolicy::Queue => {
                        start = lift;
                        decision = d;
                    }
                    SuspensionPolicy::Pause => {
                        start = lift + accrual.gap(rng);
                        arrival = start;
                        decision = trial.decide(current, start);
                        if decision.verdict == Verdict::Suspend {
                            let (l, d) = trial.lift_time(current, start);
                            start = l;
                            decision = d;
                        }
                    }
                }
            }
            trial.record(start, &decision);
            match decision.next_dose {
                Some(d) if decision.verdict != Verdict::Terminate => current = d,
                _ => {
                    terminated_at = Some(start);
                    break;
                }
            }
        }
        for i in 0..params.cohort_size {
            if i > 0 {
                arrival += accrual.gap(rng);
            }
            let mut p = sample_patient(scenario, current, params, rng);
            p.enroll_time = arrival.max(start);
            trial.patients.push(p);
        }
        arrival += accrual.gap(rng);
    }

    let n = |d: usize| trial.patients.iter().filter(|p| p.dose == d).count();
    let patients: Vec<usize> = (0..params.num_doses).map(n).collect();
    let count = |f: fn(&PatientRecord) -> bool| {
        (0..params.num_doses)
            .map(|d| trial.patients.iter().filter(|p| p.dose == d && f(p)).count())
            .collect::<Vec<_>>()
    };
    let toxicities = count(|p| p.tox_event);
    let responses = count(|p| p.eff_event);
    let follow_up_end = trial
        .patients
        .iter()
        .map(|p| p.full_resolution_time(params))
        .fold(0.0, f64::max);

    let mut result = TrialResult {
        selected: None,
        candidate: None,
        p_g: None,
        patients,
        toxicities,
        responses,
        duration: follow_up_end,
        early_terminated: terminated_at.is_some(),
        trace: Vec::new(),
    };
    if let Some(t) = terminated_at {
        result.duration = follow_up_end.max(t);
    } else {
        let mut data = trial.final_data();
        if options.final_elimination {
            final_elimination(&mut data, params);
        }
        let report = select_candidate(&data, params).expect("at least one tried dose");
        result.candidate = report.candidate;
        result.selected = report.candidate;
        if let (Some(c), true) = (report.candidate, params.verify.enabled) {
            let v = verify(&data, c, params, rng.next_u64());
            result.p_g = Some(v.p_g);
            if !v.accepted {
                result.selected = None;
            }
        }
    }
    if options.keep_trace {
        result.trace = trial.trace;
    }
    Ok(result)
}

/// Summary over replications. Percentages are in points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingCharacteristics {
    pub reps: usize,
    pub selection_pct: Vec<f64>,
    pub selection_se: Vec<f64>,
    pub none_pct: f64,
    pub none_se: f64,
    pub early_termination_pct: f64,
    pub mean_patients: Vec<f64>,
    pub patients_se: Vec<f64>,
    pub mean_total: f64,
    pub mean_duration: f64,
    pub duration_se: f64,
    /// Selection percentage of the scenario's correct answer (the "none"
    /// percentage when no dose qualifies).
    pub correct_pct: Option<f64>,
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = xs.clone().sum::<f64>() / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nf - 1.0);
    (mean, libm::sqrt(var / nf))
}

fn pct_se(hits: usize, n: usize) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    (100.0 * p, 100.0 * libm::sqrt(p * (1.0 - p) / n as f64))
}

/// Aggregates trial results. Panics on an empty slice.
pub fn summarize_results(results: &[TrialResult], scenario: Option<&Scenario>) -> OperatingCharacteristics {
    let reps = results.len();
    assert!(reps > 0, "no replications");
    let doses = results[0].patients.len();
    let mut selection_pct = Vec::with_capacity(doses);
    let mut selection_se = Vec::with_capacity(doses);
    let mut mean_patients = Vec::with_capacity(doses);
    let mut patients_se = Vec::with_capacity(doses);
    for d in 0..doses {
        let (p, s) = pct_se(results.iter().filter(|r| r.selected == Some(d)).count(), reps);
        selection_pct.push(p);
        selection_se.push(s);
        let (m, s) = mean_se(results.iter().map(|r| r.patients[d] as f64), reps);
        mean_patients.push(m);
        patients_se.push(s);
    }
    let (none_pct, none_se) = pct_se(results.iter().filter(|r| r.selected.is_none()).count(), reps);
    let (early_termination_pct, _) = pct_se(results.iter().filter(|r| r.early_terminated).count(), reps);
    let (mean_duration, duration_se) = mean_se(results.iter().map(|r| r.duration), reps);
    let (mean_total, _) = mean_se(results.iter().map(|r| r.total_patients() as f64), reps);
    let correct_pct = scenario.map(|s| match s.true_obd {
        Some(d) => selection_pct[d],
        None => none_pct,
    });
    OperatingCharacteristics {
        reps,
        selection_pct,
        selection_se,
        none_pct,
        none_se,
        early_termination_pct,
        mean_patients,
        patients_se,
        mean_total,
        mean_duration,
        duration_se,
        correct_pct,
    }
}

/// Sequential operating characteristics over `reps` replications.
pub fn operating_characteristics(
    params: &DesignParams,
    scenario: &Scenario,
    accrual: &AccrualModel,
    options: &SimOptions,
    reps: usize,
    seed: u64,
) -> Result<OperatingCharacteristics, ConfigError> {
    if reps == 0 {
        return Err(ConfigError::new("reps", "must be at least 1"));
    }
    let options = SimOptions {
        keep_trace: false,
        ..*options
    };
    let results = (0..reps)
        .map(|i| run_trial(params, scenario, accrual, &options, &mut replication_rng(seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(summarize_results(&results, Some(scenario)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Mode;
    use alloc::vec;

    fn flat(p: f64, q: f64) -> Scenario {
        Scenario {
            name: String::new(),
            tox: vec![p; 5],
            eff: vec![q; 5],
            tox_law: TimeLaw::Uniform,
            eff_law: TimeLaw::Uniform,
            true_obd: None,
        }
    }

    #[test]
    fn event_times_inside_window() {
        let mut rng = replication_rng(1, 0);
        let s = Scenario {
            eff_law: TimeLaw::Piecewise {
                cuts: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0],
                masses: vec![0.7, 0.2, 0.1],
            },
            ..flat(1.0, 1.0)
        };
        let p = DesignParams::default();
        for _ in 0..2000 {
            let r = sample_patient(&s, 0, &p, &mut rng);
            let (t, e) = (r.tox_time.unwrap(), r.eff_time.unwrap());
            assert!(t > 0.0 && t <= 1.0 && e > 0.0 && e <= 3.0);
        }
        let r = sample_patient(&flat(0.0, 0.0), 0, &p, &mut rng);
        assert!(!r.tox_event && r.tox_time.is_none() && !r.eff_event);
    }

    #[test]
    fn toxic_first_dose_terminates() {
        let p = DesignParams::default();
        let s = Scenario {
            tox: vec![0.99; 5],
            ..flat(0.99, 0.5)
        };
        let r = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(3, 0)).unwrap();
        assert!(r.early_terminated);
        assert_eq!(r.selected, None);
        assert!(r.total_patients() <= 9);
    }

    #[test]
    fn conservation_and_bounds() {
        let p = DesignParams::default();
        let s = flat(0.1, 0.5);
        for i in 0..20 {
            let r = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(5, i)).unwrap();
            assert!(r.total_patients() <= 45);
            assert!(r.duration > 0.0);
            assert!(r.trace.windows(2).all(|w| w[0].time <= w[1].time));
        }
    }

    #[test]
    fn same_seed_same_result() {
        let p = DesignParams::default();
        let s = flat(0.15, 0.4);
        let a = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(9, 4)).unwrap();
        let b = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(9, 4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn complete_mode_waits_for_outcomes() {
        let mut p = DesignParams::default();
        p.mode = Mode::Complete;
        let s = flat(0.05, 0.3);
        let r = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(2, 0)).unwrap();
        assert!(r.trace.iter().any(|e| e.decision.verdict == Verdict::Suspend));
        assert!(r.duration > 15.0 * 2.0);
    }

    #[test]
    fn single_rep_summary() {
        let p = DesignParams::default();
        let s = flat(0.1, 0.5);
        let oc = operating_characteristics(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), 1, 11).unwrap();
        let r = run_trial(&p, &s, &AccrualModel::new(3.0), &SimOptions::default(), &mut replication_rng(11, 0)).unwrap();
        assert_eq!(oc.mean_patients, r.patients.iter().map(|n| *n as f64).collect::<Vec<_>>());
        let total: f64 = oc.selection_pct.iter().sum::<f64>() + oc.none_pct;
        assert!((total - 100.0).abs() < 1e-9);
    }
}
