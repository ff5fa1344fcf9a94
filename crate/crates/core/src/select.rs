//! End-of-trial candidate selection.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::decision::{futility_probability, safety_probability};
use crate::design::{utility, DesignParams};
use crate::interim::InterimSummary;
use crate::error::IsotonicError;
use crate::isotonic::{pava, unimodal, Direction};

/// Fully observed outcomes for one dose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DoseOutcome {
    pub n: usize,
    pub tox: usize,
    pub eff: usize,
    #[serde(default)]
    pub eliminated: bool,
}

/// Final data set, one entry per dose level in increasing order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalData {
    pub doses: Vec<DoseOutcome>,
}

impl FinalData {
    pub fn check(&self) -> Result<(), &'static str> {
        if self.doses.is_empty() {
            return Err("no doses");
        }
        if self.doses.iter().any(|d| d.tox > d.n || d.eff > d.n) {
            return Err("event count exceeds patients");
        }
        Ok(())
    }

    pub fn weights(&self) -> Vec<f64> {
        self.doses.iter().map(|d| d.n as f64).collect()
    }

    fn rates(&self, f: impl Fn(&DoseOutcome) -> usize) -> Vec<f64> {
        self.doses
            .iter()
            .map(|d| if d.n > 0 { f(d) as f64 / d.n as f64 } else { 0.0 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub p_tilde: Vec<f64>,
    pub q_tilde: Vec<f64>,
    /// Posterior weight of each unimodal fit, indexed by mode.
    pub model_weights: Vec<f64>,
    /// `None` for doses that are untried or eliminated.
    pub utilities: Vec<Option<f64>>,
    #[serde(with = "crate::dose_level::option")]
    pub candidate: Option<usize>,
}

const CLAMP: f64 = 1e-10;

fn ln_binom_kernel(q: f64, n: f64, y: f64) -> f64 {
    let q = q.clamp(CLAMP, 1.0 - CLAMP);
    y * libm::log(q) + (n - y) * libm::log1p(-q)
}

/// Model-averaged unimodal fit of `values`.
///
/// `counts` is `(n_d, y_d)` per dose; the binomial coefficient is common to
/// every model and cancels in the normalisation. Returns the averaged curve
/// and the model weights.
pub fn model_average(
    values: &[f64],
    counts: &[(f64, f64)],
) -> Result<(Vec<f64>, Vec<f64>), IsotonicError> {
    let weights: Vec<f64> = counts.iter().map(|c| c.0).collect();
    model_average_weighted(values, &weights, counts)
}

/// As [`model_average`] with explicit regression weights.
pub fn model_average_weighted(
    values: &[f64],
    weights: &[f64],
    counts: &[(f64, f64)],
) -> Result<(Vec<f64>, Vec<f64>), IsotonicError> {
    let d = values.len();
    let mut fits = Vec::with_capacity(d);
    let mut log_lik = Vec::with_capacity(d);
    for mode in 0..d {
        let fit = unimodal(values, weights, mode)?;
        let ll = fit
            .iter()
            .zip(counts)
            .filter(|(_, c)| c.0 > 0.0)
            .map(|(q, &(n, y))| ln_binom_kernel(*q, n, y))
            .sum::<f64>();
        fits.push(fit);
        log_lik.push(ll);
    }
    let top = log_lik.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pi: Vec<f64> = log_lik.iter().map(|l| libm::exp(l - top)).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    let mut avg = alloc::vec![0.0; d];
    for (fit, w) in fits.iter().zip(&pi) {
        for (a, f) in avg.iter_mut().zip(fit) {
            *a += w * f;
        }
    }
    Ok((avg, pi))
}

/// Model-averaged efficacy estimate with its model weights.
pub fn model_average_efficacy(data: &FinalData) -> Result<(Vec<f64>, Vec<f64>), IsotonicError> {
    let counts: Vec<(f64, f64)> = data
        .doses
        .iter()
        .map(|d| (d.n as f64, d.eff as f64))
        .collect();
    model_average(&data.rates(|d| d.eff), &counts)
}

/// Utility-maximising dose among tried, non-eliminated doses. Ties go to
/// the lower dose.
pub fn argmax_utility(p: &[f64], q: &[f64], eligible: &[bool], params: &DesignParams) -> (Vec<Option<f64>>, Option<usize>) {
    let utilities: Vec<Option<f64>> = (0..p.len())
        .map(|d| eligible[d].then(|| utility(p[d], q[d], params)))
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (d, u) in utilities.iter().enumerate() {
        if let Some(u) = *u {
            if best.is_none_or(|(_, b)| u > b) {
                best = Some((d, u));
            }
        }
    }
    (utilities, best.map(|b| b.0))
}

/// Re-applies the safety and futility rules to complete data. Safety
/// removes the dose and every higher one; futility only the dose itself.
pub fn final_elimination(data: &mut FinalData, params: &DesignParams) {
    for d in 0..data.doses.len() {
        let DoseOutcome { n, tox, eff, .. } = data.doses[d];
        if n == 0 {
            continue;
        }
        if safety_probability(&InterimSummary::complete(n, tox), params) > params.elim.c_tox {
            data.doses[d..].iter_mut().for_each(|o| o.eliminated = true);
        }
        if futility_probability(&InterimSummary::complete(n, eff), params) > params.elim.c_eff {
            data.doses[d].eliminated = true;
        }
    }
}

/// Isotonic toxicity, model-averaged efficacy and the utility argmax.
pub fn select_candidate(data: &FinalData, params: &DesignParams) -> Result<SelectionReport, IsotonicError> {
    let w = data.weights();
    let p_tilde = pava(&data.rates(|d| d.tox), &w, Direction::Increasing)?;
    let (q_tilde, model_weights) = model_average_efficacy(data)?;
    let eligible: Vec<bool> = data.doses.iter().map(|d| d.n > 0 && !d.eliminated).collect();
    let (utilities, candidate) = argmax_utility(&p_tilde, &q_tilde, &eligible, params);
    Ok(SelectionReport {
        p_tilde,
        q_tilde,
        model_weights,
        utilities,
        candidate,
    })
}
