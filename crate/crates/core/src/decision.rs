//! Interval dose-finding rules with safety/futility elimination and accrual
//! suspension.
//!
//! Rule precedence is fixed: suspension, then elimination, then the
//! toxicity/efficacy interval rules.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::design::{Boundaries, DesignParams, Mode};
use crate::interim::{interim_estimate, posterior_tail, InterimSummary, Tail};

/// Prior used by every Beta posterior in the dose-finding stage.
pub const UNIFORM_PRIOR: (f64, f64) = (1.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DoseState {
    pub tox: InterimSummary,
    pub eff: InterimSummary,
    pub eliminated_safety: bool,
    pub eliminated_futility: bool,
}

impl DoseState {
    pub fn eliminated(&self) -> bool {
        self.eliminated_safety || self.eliminated_futility
    }

    pub fn n_patients(&self) -> usize {
        self.tox.n_patients
    }

    pub fn max_pending(&self) -> usize {
        self.tox.n_pending.max(self.eff.n_pending)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Stay,
    DeEscalate,
    MoveTo {
        #[serde(with = "crate::dose_level")]
        dose: usize,
    },
    Suspend,
    EliminateAndDeescalate,
    Terminate,
}

impl Verdict {
    /// Short label matching the decision-table vocabulary.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Stay => "S",
            Verdict::DeEscalate => "D",
            Verdict::MoveTo { .. } => "TBD",
            Verdict::Suspend => "PENDING",
            Verdict::EliminateAndDeescalate => "DU",
            Verdict::Terminate => "TERMINATE",
        }
    }
}

/// Which rule produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// No patient enrolled yet: the trial opens at the current dose.
    StartingDose,
    /// Too many pending outcomes at the current dose.
    PendingFraction,
    /// Complete-data mode with at least one unresolved outcome.
    AwaitingCompleteData,
    /// No ascertained information yet for an estimate.
    NoInformation,
    SafetyElimination,
    AllEliminated,
    /// `p >= phi_U`.
    Toxic,
    /// `p >= phi_U` at the lowest available dose.
    DeescalationFloor,
    /// `p < phi_U` and `q >= psi`.
    Promising,
    /// `q < psi`: best posterior efficacy within the admissible set.
    Explore,
    /// Admissible set empty; nearest open dose.
    NearestOpenDose,
    NoAdmissibleDose,
}

/// Quantities behind a decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rationale {
    pub rule: Rule,
    #[serde(with = "crate::dose_level")]
    pub current: usize,
    pub pending_fraction: f64,
    pub p_tilde: Option<f64>,
    pub q_tilde: Option<f64>,
    /// `Pr(p > pi_T)` at the current dose.
    pub safety_prob: Option<f64>,
    /// `Pr(q < pi_E)` at the current dose.
    pub futility_prob: Option<f64>,
    pub boundaries: Boundaries,
    /// `(dose level, Pr(q > psi))` over the admissible set, when explored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub admissible: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    #[serde(flatten)]
    pub verdict: Verdict,
    /// Dose for the next cohort; `None` when suspended or terminated.
    #[serde(with = "crate::dose_level::option")]
    pub next_dose: Option<usize>,
    /// Lowest dose removed by the safety rule in this evaluation.
    #[serde(with = "crate::dose_level::option")]
    pub eliminate_from: Option<usize>,
    /// Dose removed by the futility rule in this evaluation.
    #[serde(with = "crate::dose_level::option")]
    pub eliminate_futile: Option<usize>,
    pub rationale: Rationale,
}

impl Decision {
    /// Records the eliminations carried by this decision.
    pub fn apply_eliminations(&self, states: &mut [DoseState]) {
        if let Some(from) = self.eliminate_from {
            for s in &mut states[from..] {
                s.eliminated_safety = true;
            }
        }
        if let Some(d) = self.eliminate_futile {
            states[d].eliminated_futility = true;
        }
    }
}

/// `Pr(p > pi_T)` under the uniform prior.
pub fn safety_probability(tox: &InterimSummary, params: &DesignParams) -> f64 {
    posterior_tail(
        tox.n_events as f64,
        tox.m_effective,
        UNIFORM_PRIOR,
        params.elim.pi_tox,
        Tail::Above,
    )
    .unwrap_or(0.0)
}

/// `Pr(q < pi_E)` under the uniform prior.
pub fn futility_probability(eff: &InterimSummary, params: &DesignParams) -> f64 {
    posterior_tail(
        eff.n_events as f64,
        eff.m_effective,
        UNIFORM_PRIOR,
        params.elim.pi_eff,
        Tail::Below,
    )
    .unwrap_or(0.0)
}

/// `Pr(q > psi)` used to rank admissible doses; untried doses get the prior.
pub fn efficacy_promise(eff: &InterimSummary, psi: f64) -> f64 {
    posterior_tail(
        eff.n_events as f64,
        eff.m_effective,
        UNIFORM_PRIOR,
        psi,
        Tail::Above,
    )
    .unwrap_or(0.0)
}

/// Decides the dose for the next cohort given the interim state of every
/// dose and the dose the last cohort received.
///
/// The function is pure: eliminations it triggers are reported on the
/// returned [`Decision`] and applied by the caller with
/// [`Decision::apply_eliminations`].
pub fn next_dose(
    states: &[DoseState],
    current: usize,
    boundaries: &Boundaries,
    params: &DesignParams,
) -> Decision {
    let num = states.len();
    assert!(current < num, "current dose out of range");
    let here = &states[current];
    let n = here.n_patients();
    let pending_fraction = if n > 0 {
        here.max_pending() as f64 / n as f64
    } else {
        0.0
    };
    let mut rationale = Rationale {
        rule: Rule::NoInformation,
        current,
        pending_fraction,
        p_tilde: None,
        q_tilde: None,
        safety_prob: None,
        futility_prob: None,
        boundaries: *boundaries,
        admissible: Vec::new(),
    };
    let decision = |verdict, next, elim_from, futile, rationale| Decision {
        verdict,
        next_dose: next,
        eliminate_from: elim_from,
        eliminate_futile: futile,
        rationale,
    };

    if states.iter().all(|s| s.n_patients() == 0) {
        rationale.rule = Rule::StartingDose;
        return decision(Verdict::Stay, Some(current), None, None, rationale);
    }

    let suspend = match params.mode {
        Mode::Tite => pending_fraction > params.suspend_fraction,
        Mode::Complete => states.iter().any(|s| s.max_pending() > 0),
    };
    if suspend {
        rationale.rule = match params.mode {
            Mode::Tite => Rule::PendingFraction,
            Mode::Complete => Rule::AwaitingCompleteData,
        };
        return decision(Verdict::Suspend, None, None, None, rationale);
    }

    let safety = safety_probability(&here.tox, params);
    let futility = futility_probability(&here.eff, params);
    rationale.safety_prob = Some(safety);
    rationale.futility_prob = Some(futility);
    let mut eliminated: Vec<bool> = states.iter().map(DoseState::eliminated).collect();
    let mut elim_from = None;
    let mut futile = None;
    if n > 0 && safety > params.elim.c_tox && !here.eliminated_safety {
        elim_from = Some(current);
    }
    if n > 0 && futility > params.elim.c_eff && !here.eliminated_futility {
        futile = Some(current);
    }
    if let Some(from) = elim_from {
        eliminated[from..].iter_mut().for_each(|e| *e = true);
    }
    if let Some(d) = futile {
        eliminated[d] = true;
    }
    let lower_open = (0..current).rev().find(|&d| !eliminated[d]);

    if here.eliminated_safety || elim_from.is_some() {
        return match lower_open {
            Some(d) => {
                rationale.rule = Rule::SafetyElimination;
                decision(
                    Verdict::EliminateAndDeescalate,
                    Some(d),
                    elim_from,
                    futile,
                    rationale,
                )
            }
            None => {
                rationale.rule = Rule::AllEliminated;
                decision(Verdict::Terminate, None, elim_from, futile, rationale)
            }
        };
    }
    if eliminated.iter().all(|e| *e) {
        rationale.rule = Rule::AllEliminated;
        return decision(Verdict::Terminate, None, elim_from, futile, rationale);
    }

    let (p, q) = match (interim_estimate(&here.tox), interim_estimate(&here.eff)) {
        (Ok(p), Ok(q)) => (p, q),
        _ => {
            rationale.rule = Rule::NoInformation;
            return decision(Verdict::Suspend, None, elim_from, futile, rationale);
        }
    };
    rationale.p_tilde = Some(p);
    rationale.q_tilde = Some(q);

    if p >= boundaries.phi_u {
        rationale.rule = Rule::Toxic;
        if let Some(d) = lower_open {
            return decision(Verdict::DeEscalate, Some(d), elim_from, futile, rationale);
        }
        if !eliminated[current] {
            rationale.rule = Rule::DeescalationFloor;
            return decision(Verdict::Stay, Some(current), elim_from, futile, rationale);
        }
        rationale.rule = Rule::NoAdmissibleDose;
        return decision(Verdict::Terminate, None, elim_from, futile, rationale);
    }
    if q >= boundaries.psi && !eliminated[current] {
        rationale.rule = Rule::Promising;
        return decision(Verdict::Stay, Some(current), elim_from, futile, rationale);
    }

    let upper = if p <= boundaries.phi_l {
        (current + 1).min(num - 1)
    } else {
        current
    };
    let lower = current.saturating_sub(1);
    let mut best: Option<(usize, f64)> = None;
    for d in lower..=upper {
        if eliminated[d] {
            continue;
        }
        let prob = efficacy_promise(&states[d].eff, boundaries.psi);
        rationale.admissible.push((d + 1, prob));
        // ties go to the higher dose
        if best.is_none_or(|(_, b)| prob >= b) {
            best = Some((d, prob));
        }
    }
    match best {
        Some((d, _)) => {
            rationale.rule = Rule::Explore;
            decision(Verdict::MoveTo { dose: d }, Some(d), elim_from, futile, rationale)
        }
        None => {
            // every neighbour is closed: move to the nearest open dose,
            // looking upward first
            let fallback = (current + 1..num)
                .find(|&d| !eliminated[d])
                .or(lower_open);
            match fallback {
                Some(d) => {
                    rationale.rule = Rule::NearestOpenDose;
                    decision(Verdict::MoveTo { dose: d }, Some(d), elim_from, futile, rationale)
                }
                None => {
                    rationale.rule = Rule::NoAdmissibleDose;
                    decision(Verdict::Terminate, None, elim_from, futile, rationale)
                }
            }
        }
    }
}
