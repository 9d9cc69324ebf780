use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A run of missing values that was filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    /// Zero-based data row of the first missing value.
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvSeries {
    pub values: Vec<f64>,
    pub labels: Option<Vec<String>>,
    pub gaps: Vec<Gap>,
}

fn is_missing(cell: &str) -> bool {
    matches!(cell.to_ascii_lowercase().as_str(), "" | "na" | "nan" | "null")
}

/// Fill interior gaps linearly and edge gaps with the nearest value.
fn fill(raw: &[Option<f64>]) -> Result<(Vec<f64>, Vec<Gap>)> {
    let known: Vec<usize> = (0..raw.len()).filter(|&i| raw[i].is_some()).collect();
    let (&first, &last) = match (known.first(), known.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Input("series has no values".into())),
    };
    let mut out = vec![0.0; raw.len()];
    let mut gaps = Vec::new();
    let mut i = 0;
    while i < raw.len() {
        if let Some(v) = raw[i] {
            out[i] = v;
            i += 1;
            continue;
        }
        let start = i;
        while i < raw.len() && raw[i].is_none() {
            i += 1;
        }
        gaps.push(Gap { start, len: i - start });
        for j in start..i {
            out[j] = if start < first {
                raw[first].unwrap()
            } else if i > last {
                raw[last].unwrap()
            } else {
                let (a, b) = (raw[start - 1].unwrap(), raw[i].unwrap());
                let frac = (j - start + 1) as f64 / (i - start + 1) as f64;
                a + (b - a) * frac
            };
        }
    }
    Ok((out, gaps))
}

/// Read one value column (and optionally a time column) from CSV bytes with a header row.
pub fn read_series_csv(bytes: &[u8], value_column: &str, time_column: Option<&str>) -> Result<CsvSeries> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Input(format!("column {name:?} not found; header has {:?}", headers.iter().collect::<Vec<_>>())))
    };
    let value_idx = find(value_column)?;
    let time_idx = time_column.map(find).transpose()?;

    let mut raw = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row + 2;
        let cell = record.get(value_idx).unwrap_or("").trim();
        raw.push(if is_missing(cell) {
            None
        } else {
            Some(cell.parse::<f64>().map_err(|_| {
                Error::Parse(format!("line {line}: {value_column} value {cell:?} is not a number"))
            })?)
        });
        if let Some(t) = time_idx {
            labels.push(record.get(t).unwrap_or("").trim().to_string());
        }
    }
    if time_idx.is_some() {
        let numeric: Option<Vec<f64>> = labels.iter().map(|l| l.parse::<f64>().ok()).collect();
        if let Some(times) = numeric {
            if let Some(p) = times.windows(2).position(|w| !(w[1] > w[0])) {
                return Err(Error::Parse(format!(
                    "line {}: time column is not strictly increasing",
                    p + 3
                )));
            }
        }
    }
    let (values, gaps) = fill(&raw)?;
    Ok(CsvSeries {
        values,
        labels: time_idx.map(|_| labels),
        gaps,
    })
}
