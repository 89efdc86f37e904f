//! Plain-text reports: `[section]` headers, `key = value` lines and
//! comma-delimited matrix blocks fenced by `begin matrix <name>` / `end matrix`.
//!
//! Everything above the `[timing]` section is deterministic for a fixed
//! configuration and seed.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gibbs::ChainDiagnostics;

/// Incremental report writer.
#[derive(Clone, Debug, Default)]
pub struct Report {
    text: String,
}

impl Report {
    pub fn new(title: &str) -> Self {
        Report {
            text: format!("# {title}\n"),
        }
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = write!(self.text, "\n[{name}]\n");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key} = {value}");
        self
    }

    pub fn line(&mut self, s: &str) -> &mut Self {
        self.text.push_str(s);
        self.text.push('\n');
        self
    }

    /// Appends preformatted `key = value` lines.
    pub fn raw(&mut self, s: &str) -> &mut Self {
        self.text.push_str(s);
        if !s.ends_with('\n') {
            self.text.push('\n');
        }
        self
    }

    /// A matrix with a header row of column labels and one labelled row per line.
    pub fn matrix(&mut self, name: &str, labels: &[String], a: &DMatrix<f64>) -> &mut Self {
        let _ = writeln!(self.text, "begin matrix {name}");
        let _ = writeln!(self.text, ",{}", labels.join(","));
        for i in 0..a.nrows() {
            let row: Vec<String> = (0..a.ncols()).map(|j| format_entry(a[(i, j)])).collect();
            let _ = writeln!(self.text, "{},{}", labels[i], row.join(","));
        }
        let _ = writeln!(self.text, "end matrix");
        self
    }

    pub fn diagnostics(&mut self, d: &ChainDiagnostics) -> &mut Self {
        self.section("diagnostics")
            .kv("burn_in", d.burn_in)
            .kv("iterations", d.iterations)
            .kv("thin", d.thin)
            .kv("chains", d.chains)
            .kv("kept", d.kept)
            .kv("max_batch_drift", format!("{:.6}", d.max_batch_drift))
            .kv("drift_warning", d.drift_warning)
            .kv("min_d", format!("{:e}", d.min_d))
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

fn format_entry(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.10e}")
    }
}

/// The part of a report before `[timing]`.
pub fn deterministic_body(report: &str) -> &str {
    match report.find("\n[timing]") {
        Some(k) => &report[..k],
        None => report,
    }
}

/// Reads back the matrix block called `name`.
pub fn parse_matrix_block(report: &str, name: &str) -> Result<DMatrix<f64>> {
    let start = format!("begin matrix {name}");
    let mut lines = report.lines().enumerate().skip_while(|(_, l)| *l != start);
    let (first, _) = lines.next().ok_or_else(|| Error::Parse {
        line: 0,
        msg: format!("no matrix block `{name}`"),
    })?;
    lines.next();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, l) in lines {
        if l == "end matrix" {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(Error::Parse {
                    line: first + 1,
                    msg: format!("matrix block `{name}` is not square"),
                });
            }
            return Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
        }
        let row = l
            .split(',')
            .skip(1)
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln + 1,
                    msg: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Err(Error::Parse {
        line: first + 1,
        msg: format!("matrix block `{name}` is not terminated"),
    })
}

/// Value of the first `key = value` line with this key.
pub fn find_value<'a>(report: &'a str, key: &str) -> Option<&'a str> {
    report.lines().find_map(|l| {
        let (k, v) = l.split_once(" = ")?;
        (k == key).then_some(v)
    })
}
