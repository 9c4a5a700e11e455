//! Result rows of a benchmark run and their two output formats: CSV for
//! further processing (parseable back, round-trip exact) and an aligned
//! text layout grouped by `kappa` for reading at the terminal.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::bench::grid::{Algorithm, KRule};
use crate::bench::BenchError;

/// Averages of one grid cell. `avg_time_s`/`avg_iters` are `None` exactly
/// when every replication hit the iteration cap; otherwise they average
/// *all* replications, capped ones included, and `timeouts` says how many
/// of those there were.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub kappa: f64,
    pub n: usize,
    pub k_rule: KRule,
    pub algorithm: Algorithm,
    pub avg_time_s: Option<f64>,
    pub avg_iters: Option<f64>,
    pub timeouts: usize,
}

const CSV_HEADER: &str = "kappa,n,k_rule,algorithm,avg_time_s,avg_iters,timeouts";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Text,
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Csv => "csv",
            TableFormat::Text => "text",
        })
    }
}

impl FromStr for TableFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "text" => Ok(TableFormat::Text),
            other => Err(BenchError::Format(format!(
                "unknown table format {other:?}, expected csv or text"
            ))),
        }
    }
}

/// Renders rows in the requested format. CSV keeps full precision and
/// leaves the average cells empty on fully capped rows; the text layout
/// prints the `BOX` sentinel there instead.
pub fn emit_table(rows: &[TableRow], format: TableFormat) -> Result<String, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::Format("no rows to emit".into()));
    }
    match format {
        TableFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for row in rows {
                let time = row.avg_time_s.map(|v| v.to_string()).unwrap_or_default();
                let iters = row.avg_iters.map(|v| v.to_string()).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{},{time},{iters},{}\n",
                    row.kappa, row.n, row.k_rule, row.algorithm, row.timeouts
                ));
            }
            Ok(out)
        }
        TableFormat::Text => {
            let mut out = String::new();
            let mut current: Option<f64> = None;
            for row in rows {
                if current != Some(row.kappa) {
                    if current.is_some() {
                        out.push('\n');
                    }
                    out.push_str(&format!("kappa = {}\n", row.kappa));
                    out.push_str(&format!(
                        "  {:<7} {:<7} {:<10} {:>12} {:>12} {:>9}\n",
                        "n", "k_rule", "algorithm", "avg_time_s", "avg_iters", "timeouts"
                    ));
                    current = Some(row.kappa);
                }
                let time = row.avg_time_s.map_or("BOX".to_string(), |v| format!("{v:.6}"));
                let iters = row.avg_iters.map_or("BOX".to_string(), |v| format!("{v:.1}"));
                out.push_str(&format!(
                    "  {:<7} {:<7} {:<10} {:>12} {:>12} {:>9}\n",
                    row.n,
                    row.k_rule.to_string(),
                    row.algorithm.to_string(),
                    time,
                    iters,
                    row.timeouts
                ));
            }
            Ok(out)
        }
    }
}

/// Writes the rendered table to `path`, naming the path on failure.
pub fn save_table(rows: &[TableRow], format: TableFormat, path: &Path) -> Result<(), BenchError> {
    let text = emit_table(rows, format)?;
    std::fs::write(path, text)
        .map_err(|e| BenchError::Format(format!("cannot write {}: {e}", path.display())))
}

/// Parses the CSV rendering of [`emit_table`] back into rows; exact
/// inverse because every number is printed with round-trip precision.
pub fn parse_table(text: &str) -> Result<Vec<TableRow>, BenchError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == CSV_HEADER => {}
        Some((_, header)) => {
            return Err(BenchError::Format(format!(
                "unexpected header {header:?}, expected {CSV_HEADER:?}"
            )));
        }
        None => return Err(BenchError::Format("empty table".into())),
    }
    let mut rows = Vec::new();
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(BenchError::Format(format!(
                "line {}: expected 7 fields, found {}",
                index + 1,
                fields.len()
            )));
        }
        let number = |field: &str, name: &str| {
            field.trim().parse::<f64>().map_err(|_| {
                BenchError::Format(format!("line {}: bad {name} value {field:?}", index + 1))
            })
        };
        let optional = |field: &str, name: &str| -> Result<Option<f64>, BenchError> {
            if field.trim().is_empty() {
                Ok(None)
            } else {
                number(field, name).map(Some)
            }
        };
        rows.push(TableRow {
            kappa: number(fields[0], "kappa")?,
            n: fields[1].trim().parse::<usize>().map_err(|_| {
                BenchError::Format(format!("line {}: bad n value {:?}", index + 1, fields[1]))
            })?,
            k_rule: fields[2].trim().parse()?,
            algorithm: fields[3].trim().parse()?,
            avg_time_s: optional(fields[4], "avg_time_s")?,
            avg_iters: optional(fields[5], "avg_iters")?,
            timeouts: fields[6].trim().parse::<usize>().map_err(|_| {
                BenchError::Format(format!(
                    "line {}: bad timeouts value {:?}",
                    index + 1,
                    fields[6]
                ))
            })?,
        });
    }
    if rows.is_empty() {
        return Err(BenchError::Format("table has a header but no rows".into()));
    }
    Ok(rows)
}
