//! Standard simulation settings: the twelve benchmark scenarios, the
//! sensitivity variants and the three-dose case study.

use alloc::format;
use alloc::vec::Vec;

use crate::design::DesignParams;
use crate::sim::{AccrualModel, Scenario, TimeLaw};

/// Patients per month in the benchmark settings.
pub const STANDARD_ACCRUAL_RATE: f64 = 3.0;

const TABLE: [([f64; 5], [f64; 5], Option<usize>); 12] = [
    ([0.20, 0.35, 0.45, 0.50, 0.55], [0.40, 0.50, 0.55, 0.60, 0.65], Some(0)),
    ([0.05, 0.10, 0.15, 0.30, 0.40], [0.30, 0.50, 0.70, 0.75, 0.80], Some(2)),
    ([0.05, 0.07, 0.10, 0.15, 0.35], [0.10, 0.20, 0.35, 0.50, 0.55], Some(3)),
    ([0.10, 0.20, 0.40, 0.50, 0.55], [0.05, 0.10, 0.30, 0.50, 0.60], None),
    ([0.01, 0.05, 0.10, 0.15, 0.30], [0.50, 0.70, 0.55, 0.45, 0.25], Some(1)),
    ([0.05, 0.10, 0.20, 0.30, 0.40], [0.20, 0.40, 0.60, 0.55, 0.50], Some(2)),
    ([0.05, 0.13, 0.18, 0.25, 0.35], [0.15, 0.30, 0.50, 0.65, 0.60], Some(3)),
    ([0.35, 0.45, 0.55, 0.60, 0.65], [0.15, 0.35, 0.55, 0.60, 0.50], None),
    ([0.05, 0.20, 0.35, 0.45, 0.50], [0.20, 0.45, 0.55, 0.60, 0.60], Some(1)),
    ([0.10, 0.12, 0.15, 0.20, 0.25], [0.20, 0.40, 0.60, 0.60, 0.60], Some(2)),
    ([0.05, 0.10, 0.15, 0.20, 0.35], [0.10, 0.20, 0.30, 0.45, 0.45], Some(3)),
    ([0.10, 0.20, 0.30, 0.40, 0.45], [0.02, 0.05, 0.10, 0.20, 0.20], None),
];

/// Benchmark scenario `k` (1 to 12) with uniform event times.
pub fn scenario(k: usize) -> Option<Scenario> {
    let (tox, eff, true_obd) = TABLE.get(k.checked_sub(1)?)?;
    Some(Scenario {
        name: format!("S{k}"),
        tox: tox.to_vec(),
        eff: eff.to_vec(),
        tox_law: TimeLaw::Uniform,
        eff_law: TimeLaw::Uniform,
        true_obd: *true_obd,
    })
}

pub fn all_scenarios() -> Vec<Scenario> {
    (1..=12).filter_map(scenario).collect()
}

/// Benchmark design: five doses, one-month toxicity and three-month
/// efficacy windows, 15 cohorts of three.
pub fn standard_design() -> DesignParams {
    DesignParams::default()
}

pub fn standard_accrual() -> AccrualModel {
    AccrualModel::new(STANDARD_ACCRUAL_RATE)
}

/// Smaller maximum sample size (30 patients).
pub fn sa1() -> DesignParams {
    DesignParams {
        max_cohorts: 10,
        ..DesignParams::default()
    }
}

/// Doubled assessment windows.
pub fn sa2() -> DesignParams {
    DesignParams {
        tox_window: 2.0,
        eff_window: 6.0,
        ..DesignParams::default()
    }
}

/// Trial starts at dose level 2.
pub fn sa3() -> DesignParams {
    DesignParams {
        start_dose: 1,
        ..DesignParams::default()
    }
}

/// Case-study design, in days: three doses, 45 cohorts of three,
/// 28-day toxicity and 84-day efficacy windows.
pub fn case_study_design() -> DesignParams {
    DesignParams {
        num_doses: 3,
        tox_window: 28.0,
        eff_window: 84.0,
        max_cohorts: 45,
        ..DesignParams::default()
    }
}

/// Assumed case-study rates; responses arrive mostly early in the window.
pub fn case_study_scenario() -> Scenario {
    Scenario {
        name: "case-study".into(),
        tox: [0.07, 0.10, 0.12].to_vec(),
        eff: [0.65, 0.75, 0.75].to_vec(),
        tox_law: TimeLaw::Uniform,
        eff_law: TimeLaw::Piecewise {
            cuts: [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0].to_vec(),
            masses: [0.7, 0.2, 0.1].to_vec(),
        },
        true_obd: Some(1),
    }
}

/// One patient every five days.
pub fn case_study_accrual() -> AccrualModel {
    AccrualModel::new(0.2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        let p = standard_design();
        for s in all_scenarios() {
            s.validate(&p).unwrap();
        }
        assert!(scenario(0).is_none() && scenario(13).is_none());
        for d in [sa1(), sa2(), sa3(), case_study_design()] {
            d.validate().unwrap();
        }
        case_study_scenario().validate(&case_study_design()).unwrap();
        assert_eq!(case_study_design().max_sample_size(), 135);
        assert_eq!(sa1().max_sample_size(), 30);
    }
}
