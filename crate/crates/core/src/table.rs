//! Regeneration of the tabulated dosing rules.
//!
//! For a dose holding `n` patients, every reachable combination of
//! ascertained events and effective non-event counts maps to one of the
//! verdicts D, DU, S, TBD or Pending. The table lists the `m` cut points
//! that separate them. Only states that do not trigger suspension are
//! reachable, so at most `floor(n * suspend_fraction)` outcomes per endpoint
//! are pending and the effective count ranges over
//! `[max(0, n - k - o_max), n - k]` for `k` events.
//!
//! Thresholds are exact reals internally and are shown truncated to two
//! decimals, which rounds each displayed cut toward the inside of its
//! region.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::design::{Boundaries, DesignParams};
use crate::interim::{posterior_tail, Tail};

use crate::decision::UNIFORM_PRIOR;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum TableVerdict {
    D,
    Du,
    S,
    Tbd,
}

impl fmt::Display for TableVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableVerdict::D => "D",
            TableVerdict::Du => "DU",
            TableVerdict::S => "S",
            TableVerdict::Tbd => "TBD",
        })
    }
}

/// Event-count cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", content = "k", rename_all = "snake_case")]
pub enum CountCell {
    Any,
    Exactly(usize),
    AtLeast(usize),
    AtMost(usize),
}

impl fmt::Display for CountCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CountCell::Any => f.write_str("Any"),
            CountCell::Exactly(k) => write!(f, "{k}"),
            CountCell::AtLeast(k) => write!(f, "≥{k}"),
            CountCell::AtMost(k) => write!(f, "≤{k}"),
        }
    }
}

/// Effective-count cell; the value is the exact threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "m", rename_all = "snake_case")]
pub enum RangeCell {
    Any,
    AtMost(f64),
    Above(f64),
    Below(f64),
    AtLeast(f64),
}

/// Two-decimal display by truncation.
pub fn truncate2(x: f64) -> f64 {
    libm::floor(x * 100.0 + 1e-9) / 100.0
}

impl fmt::Display for RangeCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RangeCell::Any => f.write_str("Any"),
            RangeCell::AtMost(x) => write!(f, "≤{:.2}", truncate2(*x)),
            RangeCell::Above(x) => write!(f, ">{:.2}", truncate2(*x)),
            RangeCell::Below(x) => write!(f, "<{:.2}", truncate2(*x)),
            RangeCell::AtLeast(x) => write!(f, "≥{:.2}", truncate2(*x)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TableRow {
    /// Suspend when `max(o_T, o_E) >= min_pending`.
    Pending { n: usize, min_pending: usize },
    Rule {
        n: usize,
        tox_events: CountCell,
        tox_m: RangeCell,
        /// `None` when the efficacy columns are irrelevant.
        eff: Option<(CountCell, RangeCell)>,
        decision: TableVerdict,
    },
}

impl TableRow {
    /// Compact `n|nT|mT|nE|mE|decision` form used for comparisons.
    pub fn key(&self) -> String {
        match self {
            TableRow::Pending { n, min_pending } => format!("{n}|pending≥{min_pending}"),
            TableRow::Rule {
                n,
                tox_events,
                tox_m,
                eff,
                decision,
            } => {
                let (ec, em) = match eff {
                    Some((c, m)) => (format!("{c}"), format!("{m}")),
                    None => (String::from("Any"), String::from("Any")),
                };
                format!("{n}|{tox_events}|{tox_m}|{ec}|{em}|{decision}")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Split {
    All,
    Part(f64),
    None,
}

struct Ctx<'a> {
    n: usize,
    o_max: usize,
    params: &'a DesignParams,
    b: &'a Boundaries,
}

impl Ctx<'_> {
    fn range(&self, k: usize) -> (f64, f64) {
        let lo = self.n.saturating_sub(k + self.o_max) as f64;
        (lo, (self.n - k) as f64)
    }

    fn safety(&self, k: usize, m: f64) -> f64 {
        posterior_tail(k as f64, m, UNIFORM_PRIOR, self.params.elim.pi_tox, Tail::Above)
            .unwrap_or(0.0)
    }

    /// Largest `m` with the safety posterior above its cutoff.
    fn du_split(&self, k: usize) -> Split {
        let (lo, hi) = self.range(k);
        let c = self.params.elim.c_tox;
        if self.safety(k, hi) > c {
            return Split::All;
        }
        if self.safety(k, lo) <= c {
            return Split::None;
        }
        let (mut a, mut z) = (lo, hi);
        while z - a > 1e-9 {
            let mid = 0.5 * (a + z);
            if self.safety(k, mid) > c {
                a = mid;
            } else {
                z = mid;
            }
        }
        Split::Part(a)
    }

    /// `p >= phi_U` iff `m <= k (1 - phi_U) / phi_U`.
    fn d_split(&self, k: usize) -> Split {
        let (lo, hi) = self.range(k);
        let t = k as f64 * (1.0 - self.b.phi_u) / self.b.phi_u;
        classify(k, lo, hi, t)
    }

    /// `q >= psi` iff `m <= k (1 - psi) / psi`.
    fn s_split(&self, k: usize) -> Split {
        let (lo, hi) = self.range(k);
        let t = k as f64 * (1.0 - self.b.psi) / self.b.psi;
        classify(k, lo, hi, t)
    }
}

fn classify(k: usize, lo: f64, hi: f64, t: f64) -> Split {
    if k == 0 {
        Split::None
    } else if hi <= t {
        Split::All
    } else if lo > t {
        Split::None
    } else {
        Split::Part(t)
    }
}

fn count_cell(k: usize, n: usize, at_least: bool) -> CountCell {
    if at_least && k < n {
        CountCell::AtLeast(k)
    } else if !at_least && k > 0 {
        CountCell::AtMost(k)
    } else {
        CountCell::Exactly(k)
    }
}

/// Efficacy rows: top group of stays, split counts, bottom group of TBDs.
fn efficacy_rows(ctx: &Ctx) -> Vec<(CountCell, RangeCell, TableVerdict)> {
    let n = ctx.n;
    let splits: Vec<Split> = (0..=n).map(|k| ctx.s_split(k)).collect();
    let mut rows = Vec::new();
    let mut top = n + 1;
    while top > 0 && splits[top - 1] == Split::All {
        top -= 1;
    }
    let mut next = top;
    if top > 0 {
        let k = top - 1;
        if let Split::Part(t) = splits[k] {
            if top <= n && (top..=n).all(|j| ctx.range(j).1 <= t) {
                rows.push((count_cell(k, n, true), RangeCell::Below(t), TableVerdict::S));
                rows.push((CountCell::Exactly(k), RangeCell::AtLeast(t), TableVerdict::Tbd));
                next = k;
            }
        }
    }
    if next == top && top <= n {
        rows.push((count_cell(top, n, true), RangeCell::Any, TableVerdict::S));
    }
    let mut bottom = 0;
    while bottom < next && splits[bottom] == Split::None {
        bottom += 1;
    }
    for k in (bottom..next).rev() {
        match splits[k] {
            Split::All => rows.push((CountCell::Exactly(k), RangeCell::Any, TableVerdict::S)),
            Split::None => rows.push((CountCell::Exactly(k), RangeCell::Any, TableVerdict::Tbd)),
            Split::Part(t) => {
                rows.push((CountCell::Exactly(k), RangeCell::Below(t), TableVerdict::S));
                rows.push((CountCell::Exactly(k), RangeCell::AtLeast(t), TableVerdict::Tbd));
            }
        }
    }
    if bottom > 0 {
        rows.push((count_cell(bottom - 1, n, false), RangeCell::Any, TableVerdict::Tbd));
    }
    rows
}

fn push_eff(
    out: &mut Vec<TableRow>,
    n: usize,
    tox_events: CountCell,
    tox_m: RangeCell,
    eff: &[(CountCell, RangeCell, TableVerdict)],
) {
    for &(c, m, v) in eff {
        out.push(TableRow::Rule {
            n,
            tox_events,
            tox_m,
            eff: Some((c, m)),
            decision: v,
        });
    }
}

fn rows_for(ctx: &Ctx, out: &mut Vec<TableRow>) {
    let n = ctx.n;
    out.push(TableRow::Pending {
        n,
        min_pending: ctx.o_max + 1,
    });
    let eff = efficacy_rows(ctx);
    let du: Vec<Split> = (0..=n).map(|k| ctx.du_split(k)).collect();
    let d: Vec<Split> = (0..=n).map(|k| ctx.d_split(k)).collect();
    let tox_row = |out: &mut Vec<TableRow>, c: CountCell, m: RangeCell, v: TableVerdict| {
        out.push(TableRow::Rule {
            n,
            tox_events: c,
            tox_m: m,
            eff: None,
            decision: v,
        })
    };

    // Counts whose every reachable state is eliminated.
    let mut top = n + 1;
    while top > 0 && du[top - 1] == Split::All {
        top -= 1;
    }
    let mut next = top;
    if top > 0 {
        let k = top - 1;
        if let Split::Part(t) = du[k] {
            if top <= n && (top..=n).all(|j| ctx.range(j).1 <= t) {
                // The merged row stands for several counts; its remainder
                // is left to the count-specific rows below.
                tox_row(out, count_cell(k, n, true), RangeCell::AtMost(t), TableVerdict::Du);
                next = k;
            }
        }
    }
    if next == top && top <= n {
        tox_row(out, count_cell(top, n, true), RangeCell::Any, TableVerdict::Du);
    }

    // Counts where only the efficacy rows apply.
    let eff_only = |k: usize| du[k] == Split::None && d[k] == Split::None;
    let mut bottom = 0;
    while bottom < next && eff_only(bottom) {
        bottom += 1;
    }
    // A lone zero-event bottom group is folded into the count above it
    // when that count's non-de-escalation region sits entirely above the
    // zero-event range.
    let mut fold = None;
    if bottom == 1 && next > 1 && du[1] == Split::None {
        if let Split::Part(t) = d[1] {
            if ctx.range(0).0 > t {
                fold = Some(t);
            }
        }
    }
    let middle_end = if fold.is_some() { 2 } else { bottom };

    let mut k = next;
    while k > middle_end {
        k -= 1;
        let mut rest = RangeCell::Any;
        if let Split::Part(t) = du[k] {
            tox_row(out, CountCell::Exactly(k), RangeCell::AtMost(t), TableVerdict::Du);
            rest = RangeCell::Above(t);
        }
        let lower = match du[k] {
            Split::Part(t) => t,
            _ => ctx.range(k).0,
        };
        match d[k] {
            Split::All => tox_row(out, CountCell::Exactly(k), rest, TableVerdict::D),
            Split::Part(t) if t >= ctx.range(k).1 => {
                tox_row(out, CountCell::Exactly(k), rest, TableVerdict::D)
            }
            Split::Part(t) if t > lower => {
                tox_row(out, CountCell::Exactly(k), RangeCell::AtMost(t), TableVerdict::D);
                push_eff(out, n, CountCell::Exactly(k), RangeCell::Above(t), &eff);
            }
            _ => push_eff(out, n, CountCell::Exactly(k), rest, &eff),
        }
    }
    if let Some(t) = fold {
        tox_row(out, CountCell::Exactly(1), RangeCell::AtMost(t), TableVerdict::D);
        push_eff(out, n, CountCell::AtMost(1), RangeCell::Above(t), &eff);
    } else if bottom > 0 {
        push_eff(out, n, count_cell(bottom - 1, n, false), RangeCell::Any, &eff);
    }
}

/// Builds the decision table for each patient count in `n_values`.
pub fn generate_decision_table(
    params: &DesignParams,
    boundaries: &Boundaries,
    n_values: &[usize],
) -> Vec<TableRow> {
    let mut out = Vec::new();
    for &n in n_values {
        if n == 0 {
            continue;
        }
        let o_max = libm::floor(n as f64 * params.suspend_fraction + 1e-12) as usize;
        let ctx = Ctx {
            n,
            o_max: o_max.min(n),
            params,
            b: boundaries,
        };
        rows_for(&ctx, &mut out);
    }
    out
}
