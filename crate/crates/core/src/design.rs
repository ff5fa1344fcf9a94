//! Design constants, interval boundaries and the toxicity/efficacy utility.

use libm::log;
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Whether dosing decisions use partial follow-up or wait for every
/// enrolled patient's outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    /// Time-to-event weighting of pending outcomes.
    #[default]
    Tite,
    /// Complete-data decisions.
    Complete,
}

/// Posterior thresholds for the safety and futility elimination rules.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EliminationParams {
    /// Toxicity level in the safety rule `Pr(p > pi_T) > c_T`.
    #[serde(rename = "pi_T")]
    pub pi_tox: f64,
    /// Efficacy level in the futility rule `Pr(q < pi_E) > c_E`.
    #[serde(rename = "pi_E")]
    pub pi_eff: f64,
    #[serde(rename = "c_T")]
    pub c_tox: f64,
    #[serde(rename = "c_E")]
    pub c_eff: f64,
}

impl Default for EliminationParams {
    fn default() -> Self {
        Self {
            pi_tox: 0.3,
            pi_eff: 0.25,
            c_tox: 0.95,
            c_eff: 0.9,
        }
    }
}

/// Settings of the end-of-trial posterior verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyParams {
    /// When false the utility candidate is accepted without sampling.
    #[serde(default = "enabled")]
    pub enabled: bool,
    /// Number of posterior draws.
    #[serde(rename = "M")]
    pub samples: usize,
    /// Utility cutoff.
    #[serde(rename = "U_B")]
    pub utility_cutoff: f64,
    /// Minimum exceedance probability required to accept the candidate.
    pub p_min: f64,
    #[serde(rename = "alpha_T")]
    pub alpha_tox: f64,
    #[serde(rename = "beta_T")]
    pub beta_tox: f64,
    #[serde(rename = "alpha_E")]
    pub alpha_eff: f64,
    #[serde(rename = "beta_E")]
    pub beta_eff: f64,
}

fn enabled() -> bool {
    true
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            enabled: true,
            samples: 1000,
            utility_cutoff: 0.201,
            p_min: 0.1,
            alpha_tox: 1.0,
            beta_tox: 1.0,
            alpha_eff: 1.0,
            beta_eff: 1.0,
        }
    }
}

/// All constants of a trial design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignParams {
    pub num_doses: usize,
    /// Target toxicity probability.
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub psi1: f64,
    pub psi2: f64,
    pub w1: f64,
    pub w2: f64,
    /// Maximum acceptable toxicity probability.
    #[serde(rename = "pT_cap")]
    pub tox_cap: f64,
    /// Minimum acceptable efficacy probability.
    #[serde(rename = "qE_floor")]
    pub eff_floor: f64,
    pub tox_window: f64,
    pub eff_window: f64,
    pub cohort_size: usize,
    pub max_cohorts: usize,
    #[serde(default)]
    pub elim: EliminationParams,
    #[serde(default = "default_suspend_fraction")]
    pub suspend_fraction: f64,
    #[serde(default)]
    pub verify: VerifyParams,
    #[serde(default)]
    pub mode: Mode,
    /// Dose level given to the first cohort.
    #[serde(default, with = "crate::dose_level")]
    pub start_dose: usize,
}

fn default_suspend_fraction() -> f64 {
    0.5
}

impl Default for DesignParams {
    fn default() -> Self {
        Self {
            num_doses: 5,
            phi: 0.3,
            phi1: 0.225,
            phi2: 0.375,
            psi1: 0.3,
            psi2: 0.8,
            w1: 0.33,
            w2: 1.09,
            tox_cap: 0.3,
            eff_floor: 0.25,
            tox_window: 1.0,
            eff_window: 3.0,
            cohort_size: 3,
            max_cohorts: 15,
            elim: EliminationParams::default(),
            suspend_fraction: default_suspend_fraction(),
            verify: VerifyParams::default(),
            mode: Mode::Tite,
            start_dose: 0,
        }
    }
}

fn open_unit(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, alloc::format!("{v} is not in (0, 1)")))
    }
}

impl DesignParams {
    pub fn max_sample_size(&self) -> usize {
        self.cohort_size * self.max_cohorts
    }

    /// Checks every range and ordering constraint, reporting the first
    /// violation with its JSON key path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_doses < 1 {
            return Err(ConfigError::new("num_doses", "at least one dose is required"));
        }
        for (name, v) in [
            ("phi", self.phi),
            ("phi1", self.phi1),
            ("phi2", self.phi2),
            ("psi1", self.psi1),
            ("psi2", self.psi2),
            ("pT_cap", self.tox_cap),
            ("qE_floor", self.eff_floor),
            ("elim.pi_T", self.elim.pi_tox),
            ("elim.pi_E", self.elim.pi_eff),
            ("elim.c_T", self.elim.c_tox),
            ("elim.c_E", self.elim.c_eff),
            ("verify.p_min", self.verify.p_min),
        ] {
            open_unit(name, v)?;
        }
        if !(self.phi1 < self.phi && self.phi < self.phi2) {
            return Err(ConfigError::new("phi", "requires phi1 < phi < phi2"));
        }
        if self.psi1 >= self.psi2 {
            return Err(ConfigError::new("psi1", "requires psi1 < psi2"));
        }
        if !(self.w1 >= 0.0) {
            return Err(ConfigError::new("w1", "must be non-negative"));
        }
        if !(self.w2 >= 0.0) {
            return Err(ConfigError::new("w2", "must be non-negative"));
        }
        if !(self.tox_window > 0.0 && self.tox_window.is_finite()) {
            return Err(ConfigError::new("tox_window", "must be positive"));
        }
        if !(self.eff_window > 0.0 && self.eff_window.is_finite()) {
            return Err(ConfigError::new("eff_window", "must be positive"));
        }
        if self.cohort_size < 1 {
            return Err(ConfigError::new("cohort_size", "must be at least 1"));
        }
        if self.max_cohorts < 1 {
            return Err(ConfigError::new("max_cohorts", "must be at least 1"));
        }
        if !(self.suspend_fraction >= 0.0 && self.suspend_fraction < 1.0) {
            return Err(ConfigError::new("suspend_fraction", "must be in [0, 1)"));
        }
        if self.verify.samples < 1 {
            return Err(ConfigError::new("verify.M", "must be at least 1"));
        }
        for (name, v) in [
            ("verify.alpha_T", self.verify.alpha_tox),
            ("verify.beta_T", self.verify.beta_tox),
            ("verify.alpha_E", self.verify.alpha_eff),
            ("verify.beta_E", self.verify.beta_eff),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(name, "prior parameters must be positive"));
            }
        }
        if self.start_dose >= self.num_doses {
            return Err(ConfigError::new("start_dose", "exceeds num_doses"));
        }
        Ok(())
    }
}

/// Decision boundaries derived from the hypothesis points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundaries {
    pub phi_l: f64,
    pub phi_u: f64,
    pub psi: f64,
}

/// Closed-form boundaries minimizing the probability of incorrect
/// classification under equal prior weight on each hypothesis.
pub fn compute_boundaries(params: &DesignParams) -> Result<Boundaries, ConfigError> {
    let (phi1, phi, phi2) = (params.phi1, params.phi, params.phi2);
    let (psi1, psi2) = (params.psi1, params.psi2);
    for (name, v) in [
        ("phi", phi),
        ("phi1", phi1),
        ("phi2", phi2),
        ("psi1", psi1),
        ("psi2", psi2),
    ] {
        open_unit(name, v)?;
    }
    if !(phi1 < phi && phi < phi2) {
        return Err(ConfigError::new("phi", "requires phi1 < phi < phi2"));
    }
    if psi1 >= psi2 {
        return Err(ConfigError::new("psi1", "requires psi1 < psi2"));
    }
    let phi_l = log((1.0 - phi1) / (1.0 - phi)) / log(phi * (1.0 - phi1) / (phi1 * (1.0 - phi)));
    let phi_u = log((1.0 - phi) / (1.0 - phi2)) / log(phi2 * (1.0 - phi) / (phi * (1.0 - phi2)));
    let psi = log((1.0 - psi1) / (1.0 - psi2)) / log(psi2 * (1.0 - psi1) / (psi1 * (1.0 - psi2)));
    Ok(Boundaries { phi_l, phi_u, psi })
}

/// `q - w1 p - w2 p 1[p > phi]`. The penalty indicator is strict.
pub fn utility(p: f64, q: f64, params: &DesignParams) -> f64 {
    let over = if p > params.phi { 1.0 } else { 0.0 };
    q - params.w1 * p - params.w2 * p * over
}
