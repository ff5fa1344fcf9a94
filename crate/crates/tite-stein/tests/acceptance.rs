//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the
//! run; any other failure exits non-zero.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use proptest::strategy::{Strategy, ValueTree};
use tite_stein::files::load_design;
use tite_stein::runner::simulate;
use tite_stein_core::interim::summarize;
use tite_stein_core::isotonic::{pava, Direction};
use tite_stein_core::presets;
use tite_stein_core::select::model_average;
use tite_stein_core::table::generate_decision_table;
use tite_stein_core::{
    compute_boundaries, interim_estimate, posterior_tail, Endpoint, OperatingCharacteristics, PatientRecord, Tail,
};

const SEED: u64 = 12345;
const REPS: usize = 1000;

const PCT_TOL: f64 = 4.0;
const N_TOL: f64 = 2.0;
const MONTHS_TOL: f64 = 2.5;
const STEIN_MONTHS_TOL: f64 = 3.0;
const CASE_N_TOL: f64 = 3.0;
const BOUNDARY_TOL: f64 = 1e-4;
const TAIL_TOL: f64 = 1e-8;
const DAYS_PER_MONTH: f64 = 365.25 / 12.0;

const KNOWN_FAILURES: &[&str] = &["decision-table", "stein", "case-study"];

/// Reference decision table, `n|n_T|m_T|n_E|m_E|decision`.
const REFERENCE_TABLE: &[&str] = &[
    "3|pending≥2",
    "3|≥2|≤0.46|Any|Any|DU",
    "3|1|≤1.96|Any|Any|D",
    "3|≤1|>1.96|≥2|Any|S",
    "3|≤1|>1.96|≤1|Any|TBD",
    "6|pending≥4",
    "6|≥4|≤1.86|Any|Any|DU",
    "6|3|≤1.53|Any|Any|DU",
    "6|3|>1.53|Any|Any|D",
    "6|2|≤3.93|Any|Any|D",
    "6|2|>3.93|≥3|<2.34|S",
    "6|2|>3.93|3|≥2.34|TBD",
    "6|2|>3.93|2|<1.56|S",
    "6|2|>3.93|2|≥1.56|TBD",
    "6|2|>3.93|≤1|Any|TBD",
    "6|≤1|Any|≥3|<2.34|S",
    "6|≤1|Any|3|≥2.34|TBD",
    "6|≤1|Any|2|<1.56|S",
    "6|≤1|Any|2|≥1.56|TBD",
    "6|≤1|Any|≤1|Any|TBD",
    "9|pending≥5",
    "9|≥5|Any|Any|Any|DU",
    "9|4|≤2.76|Any|Any|DU",
    "9|4|>2.76|Any|Any|D",
    "9|3|≤5.90|Any|Any|D",
    "9|3|>5.90|≥5|<3.91|S",
    "9|3|>5.90|5|≥3.91|TBD",
    "9|3|>5.90|4|<3.13|S",
    "9|3|>5.90|4|≥3.13|TBD",
    "9|3|>5.90|3|<2.34|S",
    "9|3|>5.90|3|≥2.34|TBD",
    "9|3|>5.90|≤2|Any|TBD",
    "9|2|≤3.93|Any|Any|D",
    "9|2|>3.93|≥5|<3.91|S",
    "9|2|>3.93|5|≥3.91|TBD",
    "9|2|>3.93|4|<3.13|S",
    "9|2|>3.93|4|≥3.13|TBD",
    "9|2|>3.93|3|<2.34|S",
    "9|2|>3.93|3|≥2.34|TBD",
    "9|2|>3.93|≤2|Any|TBD",
    "9|≤1|Any|≥5|<3.91|S",
    "9|≤1|Any|5|≥3.91|TBD",
    "9|≤1|Any|4|<3.13|S",
    "9|≤1|Any|4|≥3.13|TBD",
    "9|≤1|Any|3|<2.34|S",
    "9|≤1|Any|3|≥2.34|TBD",
    "9|≤1|Any|≤2|Any|TBD",
];

struct Checks {
    notes: Vec<String>,
}

impl Checks {
    fn within(&mut self, label: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.notes.push(format!("{label} {got:.1} vs {want} ±{tol}{}", if ok { "" } else { " (out)" }));
        if !ok {
            self.notes.push(String::new());
        }
    }

    fn failed(&self) -> bool {
        self.notes.iter().any(|n| n.is_empty())
    }

    fn summary(&self) -> String {
        self.notes.iter().filter(|n| !n.is_empty()).cloned().collect::<Vec<_>>().join("; ")
    }
}

fn root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

fn threads() -> Option<usize> {
    tite_stein::runner::env_threads()
}

fn decision_table() -> (bool, String) {
    let p = presets::standard_design();
    let start = Instant::now();
    let b = compute_boundaries(&p).unwrap();
    let rows = generate_decision_table(&p, &b, &[3, 6, 9]);
    let elapsed = start.elapsed().as_secs_f64();
    let keys: Vec<String> = rows.iter().map(|r| r.key()).collect();
    let missing: Vec<&str> = REFERENCE_TABLE.iter().copied().filter(|r| !keys.iter().any(|k| k == r)).collect();
    let extra: Vec<&String> = keys.iter().filter(|k| !REFERENCE_TABLE.contains(&k.as_str())).collect();
    let matched = REFERENCE_TABLE.len() - missing.len();
    let ok = missing.is_empty() && extra.is_empty() && elapsed < 1.0;
    let mut detail = format!("{matched}/{} rows match, {} generated, {elapsed:.3}s", REFERENCE_TABLE.len(), keys.len());
    if !missing.is_empty() || !extra.is_empty() {
        detail.push_str(&format!("; reference only {missing:?}; generated only {extra:?}"));
    }
    (ok, detail)
}

fn boundaries() -> (bool, String) {
    let b = compute_boundaries(&presets::standard_design()).unwrap();
    let ok = [(b.phi_l, 0.26137), (b.phi_u, 0.33681), (b.psi, 0.56087)]
        .iter()
        .all(|(g, w)| (g - w).abs() <= BOUNDARY_TOL);
    (ok, format!("phi_L {:.6} phi_U {:.6} psi {:.6}", b.phi_l, b.phi_u, b.psi))
}

fn tite_oc(tite: &[OperatingCharacteristics]) -> (bool, String) {
    let mut c = Checks { notes: Vec::new() };
    let s = |k: usize| &tite[k - 1];
    c.within("S1 DL1%", s(1).selection_pct[0], 70.7, PCT_TOL);
    c.within("S1 N1", s(1).mean_patients[0], 25.5, N_TOL);
    c.within("S1 months", s(1).mean_duration, 23.9, MONTHS_TOL);
    c.within("S4 ET%", s(4).none_pct, 56.6, PCT_TOL);
    c.within("S8 ET%", s(8).none_pct, 80.4, PCT_TOL);
    c.within("S8 N1", s(8).mean_patients[0], 19.8, N_TOL);
    c.within("S10 DL3%", s(10).selection_pct[2], 56.5, PCT_TOL);
    c.within("S10 N3", s(10).mean_patients[2], 18.8, N_TOL);
    c.within("S12 ET%", s(12).none_pct, 73.4, PCT_TOL);
    (!c.failed(), c.summary())
}

fn stein(tite: &[OperatingCharacteristics]) -> (bool, String) {
    let params = load_design(&root().join("configs/stein.json")).unwrap();
    let accrual = presets::standard_accrual();
    let complete: Vec<OperatingCharacteristics> = presets::all_scenarios()
        .iter()
        .map(|s| simulate(&params, s, &accrual, REPS, SEED, threads()).unwrap())
        .collect();
    let mut c = Checks { notes: Vec::new() };
    c.within("S1 months", complete[0].mean_duration, 53.5, STEIN_MONTHS_TOL);
    c.within("S1 DL1%", complete[0].selection_pct[0], 68.9, PCT_TOL);
    let shorter: Vec<usize> = (0..tite.len()).filter(|&k| complete[k].mean_duration <= tite[k].mean_duration).map(|k| k + 1).collect();
    c.notes.push(format!("COMPLETE longer than TITE in {}/12", 12 - shorter.len()));
    if !shorter.is_empty() {
        c.notes.push(String::new());
    }
    (!c.failed(), c.summary())
}

fn case_study() -> (bool, String) {
    let oc = simulate(
        &presets::case_study_design(),
        &presets::case_study_scenario(),
        &presets::case_study_accrual(),
        REPS,
        SEED,
        threads(),
    )
    .unwrap();
    let mut c = Checks { notes: Vec::new() };
    c.within("DL2%", oc.selection_pct[1], 55.6, PCT_TOL);
    c.within("N2", oc.mean_patients[1], 65.5, CASE_N_TOL);
    c.within("months", oc.mean_duration / DAYS_PER_MONTH, 30.7, MONTHS_TOL);
    (!c.failed(), c.summary())
}

fn grid_vectors(len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v: Vec<f64>| {
                [0.0, 0.25, 0.5, 0.75, 1.0].into_iter().map(move |g| {
                    let mut w = v.clone();
                    w.push(g);
                    w
                })
            })
            .collect();
    }
    out
}

fn properties() -> (bool, String) {
    let mut notes = Vec::new();
    let mut ok = true;

    let mut pava_cases = 0;
    let mut pava_ok = true;
    for len in 1..=4 {
        for v in grid_vectors(len) {
            let w = vec![1.0; len];
            let fit = pava(&v, &w, Direction::Increasing).unwrap();
            let oracle = common::brute_increasing(&v, &w);
            pava_ok &= fit.iter().zip(&oracle).all(|(a, b)| (a - b).abs() < 1e-9);
            pava_cases += 1;
        }
    }
    notes.push(format!("pava {pava_cases} grid vectors {}", if pava_ok { "ok" } else { "MISMATCH" }));
    ok &= pava_ok;

    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let counts = proptest::collection::vec((1usize..40).prop_flat_map(|n| (proptest::strategy::Just(n), 0..=n)), 1..=6);
    let mut worst_pi: f64 = 0.0;
    for _ in 0..200 {
        let c = counts.new_tree(&mut runner).unwrap().current();
        let rates: Vec<f64> = c.iter().map(|&(n, y)| y as f64 / n as f64).collect();
        let cf: Vec<(f64, f64)> = c.iter().map(|&(n, y)| (n as f64, y as f64)).collect();
        let (_, pi) = model_average(&rates, &cf).unwrap();
        worst_pi = worst_pi.max((pi.iter().sum::<f64>() - 1.0).abs());
    }
    notes.push(format!("pi sum max error {worst_pi:.1e}"));
    ok &= worst_pi < 1e-12;

    let cases = (0.0f64..59.0, 0.0f64..59.0, 0.02f64..0.98);
    let mut worst_tail: f64 = 0.0;
    for _ in 0..100 {
        let (n, m, t) = cases.new_tree(&mut runner).unwrap().current();
        let got = posterior_tail(n, m, (1.0, 1.0), t, Tail::Above).unwrap();
        worst_tail = worst_tail.max((got - common::beta_tail_quadrature(1.0 + n, 1.0 + m, t)).abs());
    }
    notes.push(format!("tail vs quadrature max error {worst_tail:.1e}"));
    ok &= worst_tail <= TAIL_TOL;

    let p = presets::standard_design();
    let records: Vec<PatientRecord> = (0..12)
        .map(|i| PatientRecord {
            dose: 0,
            enroll_time: i as f64 * 0.4,
            tox_event: i % 4 == 0,
            tox_time: (i % 4 == 0).then_some(0.5),
            eff_event: i % 3 != 0,
            eff_time: (i % 3 != 0).then_some(2.0),
        })
        .collect();
    let s = summarize(&records, 20.0, Endpoint::Tox, &p);
    let reduced = s.n_pending == 0 && interim_estimate(&s).unwrap() == 3.0 / 12.0;
    notes.push(format!("complete-data reduction {}", if reduced { "ok" } else { "MISMATCH" }));
    ok &= reduced;

    let sc = presets::scenario(3).unwrap();
    let acc = presets::standard_accrual();
    let runs: Vec<OperatingCharacteristics> =
        [1, 2, 4].iter().map(|&t| simulate(&p, &sc, &acc, 50, SEED, Some(t)).unwrap()).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    notes.push(format!("replay across 1/2/4 threads {}", if same { "identical" } else { "DIFFERS" }));
    ok &= same;

    (ok, notes.join("; "))
}

fn main() -> ExitCode {
    let accrual = presets::standard_accrual();
    let params = presets::standard_design();
    let start = Instant::now();
    let tite: Vec<OperatingCharacteristics> = presets::all_scenarios()
        .iter()
        .map(|s| simulate(&params, s, &accrual, REPS, SEED, threads()).unwrap())
        .collect();

    let results = [
        ("decision-table", decision_table()),
        ("boundaries", boundaries()),
        ("tite-oc", tite_oc(&tite)),
        ("stein", stein(&tite)),
        ("case-study", case_study()),
        ("properties", properties()),
    ];
    let mut unexpected = Vec::new();
    for (name, (ok, detail)) in &results {
        let tag = match (ok, KNOWN_FAILURES.contains(name)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => {
                unexpected.push(*name);
                "FAIL"
            }
        };
        println!("{tag} {name}: {detail}");
    }
    for name in KNOWN_FAILURES {
        if results.iter().any(|(n, (ok, _))| n == name && *ok) {
            println!("note: {name} is listed as a known failure but passed");
        }
    }
    println!("seed {SEED}, {REPS} replications, {:.1}s", start.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
