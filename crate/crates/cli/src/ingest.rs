//! Reading and writing return tables.
//!
//! Grammar: comma-separated, first line `date,<asset>,...`; every further line an
//! ISO-8601 date (`YYYY-MM-DD`) followed by one decimal number per asset. Dates
//! strictly increase. No cell may be empty, no row may be ragged, and no value may be
//! non-finite. Cells are not trimmed.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use simweight::ReturnPanel;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed delimited text: {0}")]
    Csv(#[from] csv::Error),
    #[error("line 1: {0}")]
    Header(String),
    #[error("line {line}: expected {expected} cells, found {found}")]
    Ragged {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column} ({name}): empty cell")]
    EmptyCell {
        line: u64,
        column: usize,
        name: String,
    },
    #[error("line {line}, column {column} ({name}): `{value}` is not a finite number")]
    NonNumeric {
        line: u64,
        column: usize,
        name: String,
        value: String,
    },
    #[error("line {line}: `{value}` is not an ISO-8601 date (YYYY-MM-DD)")]
    BadDate { line: u64, value: String },
    #[error("line {line}: date {date} repeats the previous row")]
    DuplicateDate { line: u64, date: String },
    #[error("line {line}: date {date} is earlier than the previous row")]
    UnsortedDate { line: u64, date: String },
    #[error("line {line}, column {column} ({name}): price {value} must be positive")]
    NonPositivePrice {
        line: u64,
        column: usize,
        name: String,
        value: f64,
    },
    #[error("line {line}, column {column} ({name}): no earlier price to carry forward")]
    NothingToFill {
        line: u64,
        column: usize,
        name: String,
    },
    #[error("forward filling applies to price input only")]
    FillWithoutPrices,
    #[error("{0}")]
    Empty(String),
    #[error(transparent)]
    Panel(#[from] simweight::Error),
}

/// How cells are interpreted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestOptions {
    /// Cells are prices; returns are `S_t / S_(t-1) - 1`.
    pub prices: bool,
    /// Carry the previous price into empty cells. Only valid with `prices`.
    pub forward_fill: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub panel: ReturnPanel,
    /// Cells filled by carrying a price forward.
    pub filled: usize,
}

const EPOCH: NaiveDate = match NaiveDate::from_ymd_opt(1970, 1, 1) {
    Some(d) => d,
    None => panic!("valid epoch"),
};

/// Days since 1970-01-01.
pub fn date_to_time(d: NaiveDate) -> i64 {
    (d - EPOCH).num_days()
}

pub fn time_to_date(t: i64) -> Option<NaiveDate> {
    EPOCH.checked_add_signed(chrono::TimeDelta::try_days(t)?)
}

pub fn ingest_returns(path: &Path, options: IngestOptions) -> Result<Ingested, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_table(std::io::BufReader::new(file), options)
}

pub fn parse_table(reader: impl Read, options: IngestOptions) -> Result<Ingested, IngestError> {
    if options.forward_fill && !options.prices {
        return Err(IngestError::FillWithoutPrices);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(IngestError::Empty("file is empty".into())),
    };
    if header.get(0) != Some("date") {
        return Err(IngestError::Header(format!(
            "first header cell must be `date`, found `{}`",
            header.get(0).unwrap_or("")
        )));
    }
    let assets: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if assets.is_empty() {
        return Err(IngestError::Header("no asset columns".into()));
    }
    if let Some(k) = assets.iter().position(|a| a.is_empty()) {
        return Err(IngestError::Header(format!(
            "asset name in column {} is empty",
            k + 2
        )));
    }
    let width = assets.len() + 1;
    let mut times: Vec<i64> = Vec::new();
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    let mut prev: Option<NaiveDate> = None;
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(IngestError::Ragged {
                line,
                expected: width,
                found: rec.len(),
            });
        }
        let raw = &rec[0];
        let date =
            NaiveDate::parse_from_str(raw, "%Y-%m-%d").map_err(|_| IngestError::BadDate {
                line,
                value: raw.to_string(),
            })?;
        if let Some(p) = prev {
            if date == p {
                return Err(IngestError::DuplicateDate {
                    line,
                    date: raw.to_string(),
                });
            }
            if date < p {
                return Err(IngestError::UnsortedDate {
                    line,
                    date: raw.to_string(),
                });
            }
        }
        prev = Some(date);
        let mut row = Vec::with_capacity(assets.len());
        for (k, cell) in rec.iter().skip(1).enumerate() {
            let column = k + 2;
            if cell.is_empty() {
                if options.forward_fill {
                    row.push(None);
                    continue;
                }
                return Err(IngestError::EmptyCell {
                    line,
                    column,
                    name: assets[k].clone(),
                });
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => row.push(Some(v)),
                _ => {
                    return Err(IngestError::NonNumeric {
                        line,
                        column,
                        name: assets[k].clone(),
                        value: cell.to_string(),
                    })
                }
            }
        }
        times.push(date_to_time(date));
        rows.push(row);
        lines.push(line);
    }
    if rows.is_empty() {
        return Err(IngestError::Empty("no data rows".into()));
    }
    let mut filled = 0;
    if options.forward_fill {
        for r in 0..rows.len() {
            for k in 0..assets.len() {
                if rows[r][k].is_none() {
                    let carried = if r == 0 { None } else { rows[r - 1][k] };
                    match carried {
                        Some(v) => {
                            rows[r][k] = Some(v);
                            filled += 1;
                        }
                        None => {
                            return Err(IngestError::NothingToFill {
                                line: lines[r],
                                column: k + 2,
                                name: assets[k].clone(),
                            })
                        }
                    }
                }
            }
        }
    }
    let dense: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.expect("filled")).collect())
        .collect();
    let panel = if options.prices {
        for (r, row) in dense.iter().enumerate() {
            if let Some(k) = row.iter().position(|&v| v <= 0.0) {
                return Err(IngestError::NonPositivePrice {
                    line: lines[r],
                    column: k + 2,
                    name: assets[k].clone(),
                    value: row[k],
                });
            }
        }
        if dense.len() < 2 {
            return Err(IngestError::Empty("prices need at least two rows".into()));
        }
        let values = dense
            .windows(2)
            .flat_map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b / a - 1.0))
            .collect();
        ReturnPanel::new(times[1..].to_vec(), assets, values)?
    } else {
        ReturnPanel::new(times, assets, dense.concat())?
    };
    Ok(Ingested { panel, filled })
}

/// Writes a panel in the ingest grammar with 17 significant digits.
pub fn write_returns(panel: &ReturnPanel, out: impl Write) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["date".to_string()];
    header.extend(panel.assets().iter().cloned());
    w.write_record(&header)?;
    for (r, &t) in panel.times().iter().enumerate() {
        let date = time_to_date(t)
            .ok_or_else(|| IngestError::Empty(format!("time {t} is not a representable date")))?;
        let mut rec = vec![date.format("%Y-%m-%d").to_string()];
        rec.extend(panel.row(r).iter().map(|v| crate::output::num(*v)));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: "<output>".into(),
        source,
    })?;
    Ok(())
}
