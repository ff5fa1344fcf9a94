//! Posterior-sampling check of the selected candidate.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::design::{utility, DesignParams};
use crate::isotonic::{pava, Direction};
use crate::select::{model_average_weighted, FinalData};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    #[serde(with = "crate::dose_level")]
    pub candidate: usize,
    pub p_g: f64,
    pub accepted: bool,
    #[serde(rename = "M")]
    pub samples: usize,
    #[serde(rename = "U_B")]
    pub utility_cutoff: f64,
    pub p_min: f64,
    pub mean_utility: f64,
    /// Utility quantiles at 5%, 25%, 50%, 75% and 95%.
    pub quantiles: [f64; 5],
}

fn beta(a: f64, b: f64) -> Beta<f64> {
    Beta::new(a, b).expect("positive shapes")
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Draws `M` posterior samples of every dose, passes each through the same
/// isotonic and model-averaging steps as the point estimate, and reports
/// the share of samples whose candidate utility exceeds `U_B`.
///
/// Panics if `candidate` is out of range or untried.
pub fn verify(data: &FinalData, candidate: usize, params: &DesignParams, seed: u64) -> VerificationReport {
    let v = &params.verify;
    assert!(candidate < data.doses.len(), "candidate out of range");
    assert!(data.doses[candidate].n > 0, "candidate is untried");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tox_laws: Vec<Beta<f64>> = data
        .doses
        .iter()
        .map(|d| beta(d.tox as f64 + v.alpha_tox, (d.n - d.tox) as f64 + v.beta_tox))
        .collect();
    let eff_laws: Vec<Beta<f64>> = data
        .doses
        .iter()
        .map(|d| beta(d.eff as f64 + v.alpha_eff, (d.n - d.eff) as f64 + v.beta_eff))
        .collect();
    let weights = data.weights();
    let counts: Vec<(f64, f64)> = data
        .doses
        .iter()
        .map(|d| (d.n as f64, d.eff as f64))
        .collect();

    let mut utilities = Vec::with_capacity(v.samples);
    let mut p = alloc::vec![0.0; data.doses.len()];
    let mut q = alloc::vec![0.0; data.doses.len()];
    for _ in 0..v.samples {
        for (x, law) in p.iter_mut().zip(&tox_laws) {
            *x = law.sample(&mut rng);
        }
        for (x, law) in q.iter_mut().zip(&eff_laws) {
            *x = law.sample(&mut rng);
        }
        let p_fit = pava(&p, &weights, Direction::Increasing).expect("candidate has weight");
        let (q_fit, _) = model_average_weighted(&q, &weights, &counts).expect("candidate has weight");
        utilities.push(utility(p_fit[candidate], q_fit[candidate], params));
    }
    let hits = utilities.iter().filter(|u| **u > v.utility_cutoff).count();
    let p_g = hits as f64 / v.samples as f64;
    let mean_utility = utilities.iter().sum::<f64>() / v.samples as f64;
    utilities.sort_by(f64::total_cmp);
    let quantiles = [0.05, 0.25, 0.5, 0.75, 0.95].map(|a| quantile(&utilities, a));
    VerificationReport {
        candidate,
        p_g,
        accepted: p_g > v.p_min,
        samples: v.samples,
        utility_cutoff: v.utility_cutoff,
        p_min: v.p_min,
        mean_utility,
        quantiles,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::select::DoseOutcome;
    use alloc::vec;

    fn one(n: usize, tox: usize, eff: usize) -> FinalData {
        FinalData {
            doses: vec![DoseOutcome {
                n,
                tox,
                eff,
                eliminated: false,
            }],
        }
    }

    #[test]
    fn all_respond_no_toxicity_accepts() {
        let r = verify(&one(60, 0, 60), 0, &DesignParams::default(), 1);
        assert!(r.p_g > 0.99 && r.accepted);
    }

    #[test]
    fn all_toxic_no_response_rejects() {
        let r = verify(&one(30, 30, 0), 0, &DesignParams::default(), 1);
        assert_eq!(r.p_g, 0.0);
        assert!(!r.accepted);
    }

    #[test]
    fn deterministic_under_seed() {
        let d = FinalData {
            doses: vec![
                DoseOutcome { n: 9, tox: 1, eff: 3, eliminated: false },
                DoseOutcome { n: 12, tox: 3, eff: 5, eliminated: false },
                DoseOutcome { n: 0, tox: 0, eff: 0, eliminated: false },
            ],
        };
        let p = DesignParams::default();
        assert_eq!(verify(&d, 1, &p, 7), verify(&d, 1, &p, 7));
        let r = verify(&d, 1, &p, 7);
        assert!(r.quantiles.windows(2).all(|w| w[0] <= w[1]));
    }
}
