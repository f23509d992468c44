//! CSV ingestion and export.
//!
//! Dialect: comma separated, mandatory header row, `.` decimal separator,
//! UTF-8. A row with a missing or non-numeric field is dropped whole.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: Dataset,
    pub dropped_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<LoadedCsv> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, target_column).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_csv<R: Read>(reader: R, target_column: &str) -> Result<LoadedCsv> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::input("empty file: no header row"));
    }
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| {
            Error::input(format!(
                "target column '{target_column}' not found in header [{}]",
                header.join(", ")
            ))
        })?;
    let width = header.len();
    if width < 2 {
        return Err(Error::input("the file has no feature columns"));
    }

    let mut values: Vec<f64> = Vec::new();
    let mut target: Vec<f64> = Vec::new();
    let mut dropped = 0;
    let mut row_buf = Vec::with_capacity(width);
    for record in rdr.records() {
        let record = record?;
        row_buf.clear();
        let parsed = record.len() == width
            && record.iter().all(|field| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    row_buf.push(v);
                    true
                }
                _ => false,
            });
        if !parsed {
            dropped += 1;
            continue;
        }
        for (k, &v) in row_buf.iter().enumerate() {
            if k == target_idx {
                target.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = target.len();
    if n == 0 {
        return Err(Error::input(format!(
            "no usable rows ({dropped} dropped for missing or non-numeric values)"
        )));
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing or non-numeric values");
    }
    let names = header
        .into_iter()
        .enumerate()
        .filter(|&(k, _)| k != target_idx)
        .map(|(_, h)| h)
        .collect();
    let features = Array2::from_shape_vec((n, width - 1), values)
        .map_err(|e| Error::invalid(e.to_string()))?;
    let dataset = Dataset::new(features, Array1::from(target), names)?;
    Ok(LoadedCsv {
        dataset,
        dropped_rows: dropped,
    })
}

/// Writes features followed by the target column, with shortest round-trip
/// float formatting.
pub fn write_csv<W: Write>(dataset: &Dataset, target_name: &str, writer: W) -> Result<()> {
    if dataset.feature_names().iter().any(|f| f == target_name) {
        return Err(Error::input(format!(
            "target name '{target_name}' collides with a feature name"
        )));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names().iter().map(String::as_str).collect();
    header.push(target_name);
    wtr.write_record(&header)?;
    let mut fields = Vec::with_capacity(header.len());
    for (row, y) in dataset.features().rows().into_iter().zip(dataset.target()) {
        fields.clear();
        fields.extend(row.iter().map(|v| v.to_string()));
        fields.push(y.to_string());
        wtr.write_record(&fields)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, target_name: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(dataset, target_name, std::io::BufWriter::new(file))
}
