//! CSV ingestion, train/test splitting, standardization and vertical
//! partitioning of feature columns between the two data owners.

use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::mlp::model::Scaling;
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub features: RealMatrix,
    /// Class index per row.
    pub labels: Vec<usize>,
    pub classes: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn onehot(&self) -> RealMatrix {
        onehot(&self.labels, self.classes.len())
    }

    pub fn onehot_rows(&self, rows: &[usize]) -> RealMatrix {
        let labels: Vec<usize> = rows.iter().map(|&i| self.labels[i]).collect();
        onehot(&labels, self.classes.len())
    }
}

pub fn onehot(labels: &[usize], classes: usize) -> RealMatrix {
    RealMatrix::from_fn(labels.len(), classes, |i, j| {
        if labels[i] == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Raw headered CSV: every cell kept as text until a caller asks for typed
/// columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// The named columns as reals, in the given order.
    pub fn select(&self, names: &[String]) -> Result<RealMatrix> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n).ok_or_else(|| Error::Format {
                    row: 1,
                    col: 0,
                    msg: format!("no column named {n:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut data = Vec::with_capacity(self.rows.len() * idx.len());
        for (k, row) in self.rows.iter().enumerate() {
            for &i in &idx {
                data.push(parse_cell(&row[i], k + 2, i + 1)?);
            }
        }
        RealMatrix::from_vec(self.rows.len(), idx.len(), data)
    }

    pub fn labels(&self, name: &str) -> Option<Vec<String>> {
        let i = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[i].clone()).collect())
    }
}

fn parse_cell(cell: &str, row: usize, col: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Format {
        row,
        col,
        msg: format!("{cell:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Format {
            row,
            col,
            msg: "non-finite value".into(),
        });
    }
    Ok(v)
}

/// Reads a headered CSV, trimming cells. Rows must all have the header's
/// width. Error positions are 1-based file lines and columns.
pub fn load_columns(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(csv_error)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(csv_error)?;
        if record.len() != header.len() {
            return Err(Error::Format {
                row: k + 2,
                col: record.len().min(header.len()) + 1,
                msg: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        rows.push(record.iter().map(|c| c.trim().to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::usage(format!("{} has no data rows", path.display())));
    }
    Ok(Table { header, rows })
}

/// Reads a headered CSV with numeric feature columns and one categorical
/// label column. Labels are encoded over `classes` when given, otherwise
/// over the sorted distinct labels.
pub fn load_csv(path: &Path, label_col: &str, classes: Option<&[String]>) -> Result<Dataset> {
    let table = load_columns(path)?;
    let label_idx = table.column_index(label_col).ok_or_else(|| Error::Format {
        row: 1,
        col: 0,
        msg: format!("no column named {label_col:?}"),
    })?;
    let feature_names: Vec<String> = table
        .header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::usage("dataset has no feature columns"));
    }
    let features = table.select(&feature_names)?;
    let raw_labels = table.labels(label_col).expect("label column exists");
    let classes: Vec<String> = match classes {
        Some(c) => c.to_vec(),
        None => {
            let mut c = raw_labels.clone();
            c.sort();
            c.dedup();
            c
        }
    };
    let mut labels = Vec::with_capacity(raw_labels.len());
    for (k, l) in raw_labels.iter().enumerate() {
        let idx = classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::Format {
                row: k + 2,
                col: label_idx + 1,
                msg: format!("unknown class {l:?}"),
            })?;
        labels.push(idx);
    }
    Ok(Dataset {
        feature_names,
        features,
        labels,
        classes,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let (row, msg) = match e.position() {
        Some(p) => (p.line() as usize, e.to_string()),
        None => (0, e.to_string()),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Format { row, col: 0, msg },
    }
}

/// Column partition: the first `ceil(d/2)` columns go to Alice.
pub fn vertical_split(features: &RealMatrix) -> Result<(RealMatrix, RealMatrix)> {
    let d = features.cols();
    if d < 2 {
        return Err(Error::usage(format!(
            "vertical split needs >= 2 feature columns, got {d}"
        )));
    }
    let cut = d.div_ceil(2);
    Ok((features.slice_cols(0, cut)?, features.slice_cols(cut, d)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    /// Training rows in seeded random order.
    pub train: Vec<usize>,
    /// Test rows in file order.
    pub test: Vec<usize>,
}

/// Per-class holdout: `round(count * test_fraction)` rows of each class go
/// to the test set.
pub fn stratified_split(
    labels: &[usize],
    classes: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<Split> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::usage(format!(
            "test fraction must be in [0, 1), got {test_fraction}"
        )));
    }
    let mut rng = Rng::derive(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for c in 0..classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        rng.shuffle(&mut idx);
        let k = (idx.len() as f64 * test_fraction).round() as usize;
        test.extend_from_slice(&idx[..k]);
        train.extend_from_slice(&idx[k..]);
    }
    rng.shuffle(&mut train);
    test.sort_unstable();
    Ok(Split { train, test })
}

/// Z-score parameters of the given rows; constant columns get scale 1.
pub fn fit_scaling(features: &RealMatrix, rows: &[usize], names: &[String]) -> Scaling {
    let d = features.cols();
    let n = rows.len().max(1) as f64;
    let mut mean = vec![0.0; d];
    let mut scale = vec![0.0; d];
    for &i in rows {
        for (j, m) in mean.iter_mut().enumerate() {
            *m += features[(i, j)];
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    for &i in rows {
        for j in 0..d {
            scale[j] += (features[(i, j)] - mean[j]).powi(2);
        }
    }
    for s in &mut scale {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Scaling {
        columns: names.to_vec(),
        mean,
        scale,
    }
}

pub fn apply_scaling(features: &RealMatrix, s: &Scaling) -> Result<RealMatrix> {
    if features.cols() != s.mean.len() {
        return Err(Error::dim(format!(
            "scaling for {} columns applied to {}",
            s.mean.len(),
            features.cols()
        )));
    }
    Ok(RealMatrix::from_fn(
        features.rows(),
        features.cols(),
        |i, j| (features[(i, j)] - s.mean[j]) / s.scale[j],
    ))
}
