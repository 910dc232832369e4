//! Metric reports: CSV `model,MAP,MRR,P@1,A.Clk` and an aligned text table.

use std::path::Path;

use topirank_core::evaluation::MetricReport;

use super::{parse_f64, read_text, write_with};
use crate::error::{Error, Result};

pub const HEADER: &str = "model,MAP,MRR,P@1,A.Clk";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub model: String,
    pub map: f64,
    pub mrr: f64,
    pub p_at_1: f64,
    pub a_clk: f64,
}

impl ReportRow {
    pub fn new(model: impl Into<String>, r: &MetricReport) -> Self {
        Self {
            model: model.into(),
            map: r.map,
            mrr: r.mrr,
            p_at_1: r.p_at_1,
            a_clk: r.a_clk,
        }
    }

    fn values(&self) -> [f64; 4] {
        [self.map, self.mrr, self.p_at_1, self.a_clk]
    }
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut s = String::from(HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&r.model);
        for v in r.values() {
            s.push_str(&format!(",{v:.6}"));
        }
        s.push('\n');
    }
    s
}

pub fn render_table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.model.len()).chain([5]).max().unwrap_or(5);
    let mut s = format!("{:<width$}  {:>8}  {:>8}  {:>8}  {:>8}\n", "model", "MAP", "MRR", "P@1", "A.Clk");
    for r in rows {
        let [a, b, c, d] = r.values();
        s.push_str(&format!("{:<width$}  {a:>8.4}  {b:>8.4}  {c:>8.4}  {d:>8.4}\n", r.model));
    }
    s
}

pub fn write_report(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let csv = render_csv(rows);
    write_with(path, |w| w.write_all(csv.as_bytes()))
}

pub fn read_report(path: &Path) -> Result<Vec<ReportRow>> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == HEADER => {}
        _ => return Err(Error::parse(path, 1, format!("expected header {HEADER:?}"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(Error::parse(path, i + 1, "expected 5 columns"));
        }
        let v = cols[1..]
            .iter()
            .map(|c| parse_f64(path, i + 1, c))
            .collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow {
            model: cols[0].to_string(),
            map: v[0],
            mrr: v[1],
            p_at_1: v[2],
            a_clk: v[3],
        });
    }
    Ok(rows)
}
