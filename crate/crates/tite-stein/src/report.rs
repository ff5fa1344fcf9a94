//! Output documents. Every document carries the design hash and the seed.

use serde::{Deserialize, Serialize};
use tite_stein_core::select::final_elimination;
use tite_stein_core::table::TableRow;
use tite_stein_core::{select_candidate, verify, DesignParams, FinalData, IsotonicError, Mode, OperatingCharacteristics, SelectionReport, VerificationReport};

use crate::files::config_hash;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config_hash: String,
    pub seed: u64,
    pub mode: Mode,
    pub scenario: String,
    pub oc: OperatingCharacteristics,
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn f1(x: f64) -> String {
    format!("{x:.1}")
}

fn f2(x: f64) -> String {
    format!("{x:.2}")
}

/// One CSV row per scenario: selection %, ET %, mean allocation and
/// duration, each followed by its Monte-Carlo standard error.
pub fn oc_csv(reports: &[SimReport]) -> Vec<u8> {
    let doses = reports.first().map_or(0, |r| r.oc.selection_pct.len());
    let mut header: Vec<String> = ["config_hash", "seed", "mode", "scenario", "reps"]
        .map(String::from)
        .to_vec();
    for d in 1..=doses {
        header.push(format!("sel_DL{d}"));
        header.push(format!("sel_DL{d}_se"));
    }
    header.extend(["ET", "ET_se"].map(String::from));
    for d in 1..=doses {
        header.push(format!("N_DL{d}"));
        header.push(format!("N_DL{d}_se"));
    }
    header.extend(["N_total", "duration", "duration_se", "early_stop", "correct"].map(String::from));
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let oc = &r.oc;
            let mut row = vec![
                r.config_hash.clone(),
                r.seed.to_string(),
                mode_name(r.mode).into(),
                r.scenario.clone(),
                oc.reps.to_string(),
            ];
            for (p, s) in oc.selection_pct.iter().zip(&oc.selection_se) {
                row.push(f1(*p));
                row.push(f2(*s));
            }
            row.push(f1(oc.none_pct));
            row.push(f2(oc.none_se));
            for (m, s) in oc.mean_patients.iter().zip(&oc.patients_se) {
                row.push(f1(*m));
                row.push(f2(*s));
            }
            row.push(f1(oc.mean_total));
            row.push(f1(oc.mean_duration));
            row.push(f2(oc.duration_se));
            row.push(f1(oc.early_termination_pct));
            row.push(oc.correct_pct.map(f1).unwrap_or_default());
            row
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Tite => "tite",
        Mode::Complete => "complete",
    }
}

pub fn oc_text(reports: &[SimReport]) -> String {
    let mut out = String::new();
    if let Some(r) = reports.first() {
        out.push_str(&format!("config {} seed {} mode {}\n", r.config_hash, r.seed, mode_name(r.mode)));
    }
    for r in reports {
        let oc = &r.oc;
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:5.1}")).collect::<Vec<_>>().join(" ");
        out.push_str(&format!(
            "{:<12} sel [{}] ET {:5.1} | N [{}] | duration {:5.1}\n",
            r.scenario,
            list(&oc.selection_pct),
            oc.none_pct,
            list(&oc.mean_patients),
            oc.mean_duration
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub config_hash: String,
    pub rows: Vec<TableRow>,
}

fn table_cells(row: &TableRow) -> [String; 6] {
    match row {
        TableRow::Pending { n, min_pending } => [
            n.to_string(),
            format!("max(o_T,o_E)≥{min_pending}"),
            String::new(),
            String::new(),
            String::new(),
            "Pending".into(),
        ],
        TableRow::Rule {
            n,
            tox_events,
            tox_m,
            eff,
            decision,
        } => {
            let (ec, em) = match eff {
                Some((c, m)) => (c.to_string(), m.to_string()),
                None => ("Any".into(), "Any".into()),
            };
            [n.to_string(), tox_events.to_string(), tox_m.to_string(), ec, em, decision.to_string()]
        }
    }
}

const TABLE_HEADER: [&str; 6] = ["n", "n_T", "m_T", "n_E", "m_E", "decision"];

pub fn table_csv(t: &TableReport) -> Vec<u8> {
    let mut header: Vec<String> = vec!["config_hash".into()];
    header.extend(TABLE_HEADER.map(String::from));
    let rows: Vec<Vec<String>> = t
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![t.config_hash.clone()];
            v.extend(table_cells(r));
            v
        })
        .collect();
    csv_bytes(&header, &rows)
}

pub fn table_text(t: &TableReport) -> String {
    let cells: Vec<[String; 6]> = t.rows.iter().map(table_cells).collect();
    let mut width = TABLE_HEADER.map(|h| h.chars().count());
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let line = |c: &[String]| {
        c.iter()
            .zip(width)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };
    let mut out = format!("config {}\n", t.config_hash);
    out.push_str(&line(&TABLE_HEADER.map(String::from)));
    out.push('\n');
    let mut last_n = None;
    for (row, c) in t.rows.iter().zip(&cells) {
        let n = match row {
            TableRow::Pending { n, .. } | TableRow::Rule { n, .. } => *n,
        };
        if last_n.is_some_and(|m| m != n) {
            out.push('\n');
        }
        last_n = Some(n);
        out.push_str(&line(c));
        out.push('\n');
    }
    out
}

/// End-of-trial analysis on complete data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalizeReport {
    pub config_hash: String,
    pub seed: u64,
    /// Declared dose level, `null` when none.
    #[serde(with = "tite_stein_core::dose_level::option")]
    pub obd: Option<usize>,
    /// Eliminated flags after re-applying the elimination rules.
    pub eliminated: Vec<bool>,
    pub selection: SelectionReport,
    pub verification: Option<VerificationReport>,
}

pub fn finalize(data: &FinalData, params: &DesignParams, seed: u64) -> Result<FinalizeReport, IsotonicError> {
    let mut data = data.clone();
    final_elimination(&mut data, params);
    let selection = select_candidate(&data, params)?;
    let verification = match selection.candidate {
        Some(c) if params.verify.enabled => Some(verify(&data, c, params, seed)),
        _ => None,
    };
    let obd = match &verification {
        Some(v) => selection.candidate.filter(|_| v.accepted),
        None => selection.candidate,
    };
    Ok(FinalizeReport {
        config_hash: config_hash(params),
        seed,
        obd,
        eliminated: data.doses.iter().map(|d| d.eliminated).collect(),
        selection,
        verification,
    })
}

pub fn finalize_text(r: &FinalizeReport) -> String {
    let mut out = format!("config {} seed {}\n", r.config_hash, r.seed);
    let cand = r.selection.candidate.map_or("none".to_string(), |c| format!("DL{}", c + 1));
    out.push_str(&format!("candidate {cand}\n"));
    if let Some(v) = &r.verification {
        out.push_str(&format!("p_g {:.3} accepted {}\n", v.p_g, v.accepted));
    }
    let obd = r.obd.map_or("none".to_string(), |c| format!("DL{}", c + 1));
    out.push_str(&format!("OBD {obd}\n"));
    out
}
