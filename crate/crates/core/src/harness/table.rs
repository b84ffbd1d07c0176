use std::io::Write;

use crate::analytics::{rates, solve_nmeas, steady_state};
use crate::error::Result;
use crate::qmath::{CatParams, DecayParams};

use super::{EnsembleResult, EventRow, OBSERVABLE_NAMES};

/// A header plus string cells, written as comma-separated values.
///
/// Floats are rendered with Rust's `Display`, the shortest decimal that round-trips.
/// Undefined values are empty cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_owned()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_f64(&mut self, row: &[f64]) {
        self.push(row.iter().copied().map(fmt_f64).collect());
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` as floats; empty cells become NaN.
    pub fn column_f64(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(
            self.rows
                .iter()
                .map(|r| r[k].parse().unwrap_or(f64::NAN))
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Appends the rows of `other`, which must have the same header.
    pub fn extend(&mut self, other: Table) {
        debug_assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }
}

pub const ANALYTIC_HEADER: [&str; 8] = [
    "alpha2",
    "eta",
    "r_parity",
    "r_dephasing",
    "n_meas",
    "f_meas",
    "delta",
    "p_steady",
];

/// One analytic row. `n_meas`/`f_meas` are empty outside `1/2 < η < 1`.
pub fn analytic_row(cat: CatParams, decay: Option<DecayParams>) -> Result<Vec<String>> {
    let r = rates(cat)?;
    let est = solve_nmeas(cat).ok();
    let ss = steady_state(r, decay);
    Ok(vec![
        fmt_f64(cat.alpha2),
        fmt_f64(cat.eta),
        fmt_f64(r.r_parity),
        fmt_f64(r.r_dephasing),
        fmt_opt(est.map(|e| e.n_meas)),
        fmt_opt(est.map(|e| e.f_meas)),
        fmt_f64(ss.delta),
        fmt_f64(ss.p_target),
    ])
}

pub fn analytic_table(cat: CatParams, decay: Option<DecayParams>) -> Result<Table> {
    let mut t = Table::new(&ANALYTIC_HEADER);
    t.push(analytic_row(cat, decay)?);
    Ok(t)
}

/// `step` followed by `<obs>_mean`, `<obs>_sem` for every observable.
pub fn ensemble_header() -> Vec<String> {
    let mut h = vec!["step".to_owned()];
    for n in OBSERVABLE_NAMES {
        h.push(format!("{n}_mean"));
        h.push(format!("{n}_sem"));
    }
    h
}

fn ensemble_cells(res: &EnsembleResult, k: usize) -> Vec<String> {
    let mut row = vec![res.steps[k].to_string()];
    let (m, s) = (res.mean[k].to_array(), res.sem[k].to_array());
    for j in 0..OBSERVABLE_NAMES.len() {
        row.push(fmt_f64(m[j]));
        row.push(fmt_f64(s[j]));
    }
    row
}

pub fn ensemble_table(res: &EnsembleResult) -> Table {
    let mut t = Table::new(&ensemble_header());
    for k in 0..res.steps.len() {
        t.push(ensemble_cells(res, k));
    }
    t
}

/// Ensemble table with a leading `alpha2` column, for α² sweeps.
pub fn sweep_table(parts: &[(f64, EnsembleResult)]) -> Table {
    let mut header = vec!["alpha2".to_owned()];
    header.extend(ensemble_header());
    let mut t = Table::new(&header);
    for (a2, res) in parts {
        for k in 0..res.steps.len() {
            let mut row = vec![fmt_f64(*a2)];
            row.extend(ensemble_cells(res, k));
            t.push(row);
        }
    }
    t
}

/// Single-trajectory series: `step` followed by the raw observables.
pub fn series_table(record_every: usize, series: &[super::Observables]) -> Table {
    let mut header = vec!["step"];
    header.extend(OBSERVABLE_NAMES);
    let mut t = Table::new(&header);
    for (k, o) in series.iter().enumerate() {
        let mut row = vec![((k + 1) * record_every).to_string()];
        row.extend(o.to_array().into_iter().map(fmt_f64));
        t.push(row);
    }
    t
}

pub const EVENT_HEADER: [&str; 5] = [
    "step",
    "outcome",
    "pulse_fired",
    "fid_be_plus",
    "p_odd_filter",
];

pub fn event_table(events: &[EventRow]) -> Table {
    let mut t = Table::new(&EVENT_HEADER);
    for e in events {
        t.push(vec![
            e.step.to_string(),
            e.outcome.as_str().to_owned(),
            u8::from(e.pulse_fired).to_string(),
            fmt_f64(e.fid_be_plus),
            fmt_f64(e.p_odd_filter),
        ]);
    }
    t
}
