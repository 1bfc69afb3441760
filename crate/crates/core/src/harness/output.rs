//! CSV tables and plot-data files.
//!
//! Plot data is whitespace separated. A `#` comment header names the columns;
//! each series (one policy at one path-loss exponent) is a block of rows
//! sorted by `x`, and blocks are separated by two blank lines so that gnuplot
//! can address them with `index`. Missing values are written as `nan`.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::sweep::ResultRow;

/// CSV header, in column order.
pub const FIELDS: [&str; 16] = [
    "axis_value",
    "policy",
    "alpha",
    "top_closed",
    "top_numeric",
    "sop_upper",
    "sop_lower",
    "top_mc",
    "top_ci_lo",
    "top_ci_hi",
    "sop_mc",
    "sop_ci_lo",
    "sop_ci_hi",
    "n_trials",
    "seed",
    "error",
];

/// Columns that can be plotted against `axis_value`.
pub const PLOT_COLUMNS: [&str; 10] = [
    "top_closed",
    "top_numeric",
    "sop_upper",
    "sop_lower",
    "top_mc",
    "top_ci_lo",
    "top_ci_hi",
    "sop_mc",
    "sop_ci_lo",
    "sop_ci_hi",
];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("record {record}: {message}")]
    Malformed { record: u64, message: String },
}

/// `%.12g`-style formatting: twelve significant digits, trailing zeros
/// removed, exponent notation outside `[1e-5, 1e12)`.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-5..DIGITS).contains(&exp) {
        trim(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x))
    } else {
        format!("{}e{}", trim(mantissa), exp)
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_sig).unwrap_or_default()
}

fn record(row: &ResultRow) -> [String; 16] {
    [
        format_sig(row.axis_value),
        row.policy.to_string(),
        format_sig(row.alpha),
        opt(row.top_closed),
        opt(row.top_numeric),
        opt(row.sop_upper),
        opt(row.sop_lower),
        opt(row.top_mc),
        opt(row.top_ci_lo),
        opt(row.top_ci_hi),
        opt(row.sop_mc),
        opt(row.sop_ci_lo),
        opt(row.sop_ci_hi),
        row.n_trials.map(|n| n.to_string()).unwrap_or_default(),
        row.seed.map(|n| n.to_string()).unwrap_or_default(),
        row.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), OutputError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(FIELDS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), OutputError> {
    write_csv(rows, BufWriter::new(File::create(path)?))
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, OutputError> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(FIELDS) {
        return Err(OutputError::Malformed {
            record: 0,
            message: format!("header must be {}", FIELDS.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let record = i as u64 + 1;
        let bad = |message: String| OutputError::Malformed { record, message };
        let num = |k: usize| -> Result<Option<f64>, OutputError> {
            match &rec[k] {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(format!("{}: `{s}` is not a number", FIELDS[k]))),
            }
        };
        let int = |k: usize| -> Result<Option<u64>, OutputError> {
            match &rec[k] {
                "" => Ok(None),
                s => s
                    .parse()
                    .map(Some)
                    .map_err(|_| bad(format!("{}: `{s}` is not an integer", FIELDS[k]))),
            }
        };
        let required = |k: usize| num(k)?.ok_or_else(|| bad(format!("{} is empty", FIELDS[k])));
        rows.push(ResultRow {
            axis_value: required(0)?,
            policy: rec[1].parse().map_err(|e| bad(format!("policy: {e}")))?,
            alpha: required(2)?,
            top_closed: num(3)?,
            top_numeric: num(4)?,
            sop_upper: num(5)?,
            sop_lower: num(6)?,
            top_mc: num(7)?,
            top_ci_lo: num(8)?,
            top_ci_hi: num(9)?,
            sop_mc: num(10)?,
            sop_ci_lo: num(11)?,
            sop_ci_hi: num(12)?,
            n_trials: int(13)?,
            seed: int(14)?,
            error: Some(rec[15].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(rows)
}

pub fn load_csv(path: &Path) -> Result<Vec<ResultRow>, OutputError> {
    read_csv(File::open(path)?)
}

fn column(row: &ResultRow, name: &str) -> Option<f64> {
    match name {
        "top_closed" => row.top_closed,
        "top_numeric" => row.top_numeric,
        "sop_upper" => row.sop_upper,
        "sop_lower" => row.sop_lower,
        "top_mc" => row.top_mc,
        "top_ci_lo" => row.top_ci_lo,
        "top_ci_hi" => row.top_ci_hi,
        "sop_mc" => row.sop_mc,
        "sop_ci_lo" => row.sop_ci_lo,
        "sop_ci_hi" => row.sop_ci_hi,
        _ => unreachable!("column names are checked up front"),
    }
}

pub fn write_plotdata<W: Write, S: AsRef<str>>(
    rows: &[ResultRow],
    columns: &[S],
    mut out: W,
) -> Result<(), OutputError> {
    let columns: Vec<&str> = columns.iter().map(AsRef::as_ref).collect();
    if let Some(bad) = columns.iter().find(|c| !PLOT_COLUMNS.contains(c)) {
        return Err(OutputError::UnknownColumn(bad.to_string()));
    }
    writeln!(out, "# coopjam plot data")?;
    writeln!(out, "# columns: x {}", columns.join(" "))?;
    writeln!(
        out,
        "# series blocks separated by two blank lines; missing values are nan"
    )?;

    let mut series: Vec<((String, u64), Vec<&ResultRow>)> = Vec::new();
    for row in rows {
        let key = (row.policy.to_string(), row.alpha.to_bits());
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(row),
            None => series.push((key, vec![row])),
        }
    }
    for (i, ((policy, alpha), members)) in series.iter_mut().enumerate() {
        if i > 0 {
            writeln!(out, "\n")?;
        }
        members.sort_by(|a, b| a.axis_value.total_cmp(&b.axis_value));
        writeln!(
            out,
            "# series: policy={policy} alpha={}",
            format_sig(f64::from_bits(*alpha))
        )?;
        for row in members.iter() {
            let mut line = format_sig(row.axis_value);
            for c in &columns {
                line.push(' ');
                line.push_str(&format_sig(column(row, c).unwrap_or(f64::NAN)));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn emit_plotdata<S: AsRef<str>>(
    rows: &[ResultRow],
    columns: &[S],
    path: &Path,
) -> Result<(), OutputError> {
    let columns: Vec<&str> = columns.iter().map(AsRef::as_ref).collect();
    if let Some(bad) = columns.iter().find(|c| !PLOT_COLUMNS.contains(c)) {
        return Err(OutputError::UnknownColumn(bad.to_string()));
    }
    write_plotdata(rows, &columns, BufWriter::new(File::create(path)?))
}
