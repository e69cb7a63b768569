//! Ledger rendering. Both formats print identical number strings.

use super::Format;
use crate::vn_dimension::{BettiEstimate, LedgerRow};

pub const CSV_HEADER: [&str; 6] = ["degree", "level_k", "level_l", "epsilon", "value", "kind"];

/// Adding +0 turns −0 into 0.
pub fn num(x: f64) -> String {
    (x + 0.0).to_string()
}

fn fields(r: &LedgerRow) -> [String; 6] {
    [
        r.degree.to_string(),
        r.level_k.to_string(),
        r.level_l.to_string(),
        num(r.epsilon),
        num(r.value),
        r.kind.to_string(),
    ]
}

pub fn render_rows(rows: &[LedgerRow], format: Format) -> String {
    let body: Vec<[String; 6]> = rows.iter().map(fields).collect();
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(&CSV_HEADER.join(","));
            out.push('\n');
            for f in &body {
                out.push_str(&f.join(","));
                out.push('\n');
            }
        }
        Format::Table => {
            let mut width = CSV_HEADER.map(str::len);
            for f in &body {
                for (w, s) in width.iter_mut().zip(f) {
                    *w = (*w).max(s.len());
                }
            }
            let line = |cells: Vec<&str>| {
                let padded: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:>w$}")).collect();
                padded.join("  ").trim_end().to_string() + "\n"
            };
            out.push_str(&line(CSV_HEADER.to_vec()));
            for f in &body {
                out.push_str(&line(f.iter().map(String::as_str).collect()));
            }
        }
    }
    out
}

/// `<name> <lo> <hi>`.
pub fn estimate_line(name: &str, e: &BettiEstimate) -> String {
    let (lo, hi) = e.bounds();
    format!("{name} {} {}\n", num(lo), num(hi))
}
