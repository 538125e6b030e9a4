//! CSV input and dataset digests.
//!
//! Prices: `period,p1,...,pL`, one row per period. Choices: `period,q1,...,qL`,
//! one row per observed bundle. Patch counts: `period,patch_index,count` with
//! 0-based patch indices. Period labels are arbitrary strings; periods are
//! numbered in their order of appearance in the price file.

use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Dataset, GeometryError, Observations};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot open {path}")]
    Open {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("line {line}: period {label:?} has no prices")]
    UnknownPeriod { line: u64, label: String },
    #[error("period {label:?} appears twice in the price file")]
    DuplicatePeriod { label: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Prices with their period labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub labels: Vec<String>,
    pub prices: Vec<Vec<f64>>,
}

impl PriceTable {
    fn period(&self, label: &str, line: u64) -> Result<usize, IoError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| IoError::UnknownPeriod {
                line,
                label: label.to_string(),
            })
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

fn parse<T: std::str::FromStr>(rec: &csv::StringRecord, field: usize) -> Result<T, IoError>
where
    T::Err: std::fmt::Display,
{
    let raw = rec.get(field).ok_or_else(|| IoError::Parse {
        line: line_of(rec),
        message: format!("missing field {}", field + 1),
    })?;
    raw.parse().map_err(|e: T::Err| IoError::Parse {
        line: line_of(rec),
        message: format!("field {} ({raw:?}): {e}", field + 1),
    })
}

fn vector(rec: &csv::StringRecord) -> Result<Vec<f64>, IoError> {
    (1..rec.len()).map(|k| parse(rec, k)).collect()
}

pub fn read_prices<R: Read>(r: R) -> Result<PriceTable, IoError> {
    let mut table = PriceTable {
        labels: Vec::new(),
        prices: Vec::new(),
    };
    for rec in reader(r).records() {
        let rec = rec?;
        let label = rec.get(0).unwrap_or_default().to_string();
        if table.labels.contains(&label) {
            return Err(IoError::DuplicatePeriod { label });
        }
        table.prices.push(vector(&rec)?);
        table.labels.push(label);
    }
    Ok(table)
}

pub fn read_choices<R: Read>(r: R, prices: &PriceTable) -> Result<Vec<Vec<Vec<f64>>>, IoError> {
    let mut out = vec![Vec::new(); prices.labels.len()];
    for rec in reader(r).records() {
        let rec = rec?;
        let t = prices.period(rec.get(0).unwrap_or_default(), line_of(&rec))?;
        out[t].push(vector(&rec)?);
    }
    Ok(out)
}

/// Counts per period; rows for the same `(period, patch_index)` accumulate.
/// `patch_counts[t]` gives the number of patches of period `t`.
pub fn read_patch_counts<R: Read>(
    r: R,
    prices: &PriceTable,
    patch_counts: &[usize],
) -> Result<Vec<Vec<u64>>, IoError> {
    let mut out: Vec<Vec<u64>> = patch_counts.iter().map(|&n| vec![0; n]).collect();
    for rec in reader(r).records() {
        let rec = rec?;
        let line = line_of(&rec);
        let t = prices.period(rec.get(0).unwrap_or_default(), line)?;
        let i: usize = parse(&rec, 1)?;
        let n: u64 = parse(&rec, 2)?;
        let slot = out[t].get_mut(i).ok_or_else(|| IoError::Parse {
            line,
            message: format!("period {t} has {} patches, got index {i}", patch_counts[t]),
        })?;
        *slot += n;
    }
    Ok(out)
}

fn open(path: &Path) -> Result<std::fs::File, IoError> {
    std::fs::File::open(path).map_err(|source| IoError::Open {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_prices_file(path: &Path) -> Result<PriceTable, IoError> {
    read_prices(open(path)?)
}

pub fn read_choices_file(path: &Path, prices: &PriceTable) -> Result<Vec<Vec<Vec<f64>>>, IoError> {
    read_choices(open(path)?, prices)
}

pub fn read_patch_counts_file(
    path: &Path,
    prices: &PriceTable,
    patch_counts: &[usize],
) -> Result<Vec<Vec<u64>>, IoError> {
    read_patch_counts(open(path)?, prices, patch_counts)
}

/// Hex SHA-256 over the prices and observations, bit-exact on the floats.
pub fn data_digest(dataset: &Dataset) -> String {
    let mut h = Sha256::new();
    let floats = |h: &mut Sha256, v: &[f64]| {
        h.update((v.len() as u64).to_le_bytes());
        for x in v {
            h.update(x.to_bits().to_le_bytes());
        }
    };
    h.update((dataset.periods() as u64).to_le_bytes());
    for p in dataset.prices() {
        floats(&mut h, p);
    }
    match dataset.observations() {
        Observations::Bundles(b) => {
            h.update(b"bundles");
            for period in b {
                h.update((period.len() as u64).to_le_bytes());
                for q in period {
                    floats(&mut h, q);
                }
            }
        }
        Observations::PatchCounts(c) => {
            h.update(b"counts");
            for period in c {
                h.update((period.len() as u64).to_le_bytes());
                for n in period {
                    h.update(n.to_le_bytes());
                }
            }
        }
    }
    hex::encode(h.finalize())
}
