use std::collections::{HashMap, HashSet};
use std::path::Path;

use crate::{csvutil, Error, Result};

/// Rows are users, columns are named features. Values are row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    row_ids: Vec<String>,
    column_names: Vec<String>,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(row_ids: Vec<String>, column_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if row_ids.is_empty() || column_names.is_empty() {
            return Err(Error::InvalidArgument(
                "feature matrix needs at least one row and one column".into(),
            ));
        }
        if values.len() != row_ids.len() * column_names.len() {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: row_ids.len() * column_names.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = column_names.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::InvalidArgument(format!(
                "duplicate column name `{dup}`"
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite value at row `{}`, column `{}`",
                row_ids[i / column_names.len()],
                column_names[i % column_names.len()]
            )));
        }
        Ok(FeatureMatrix {
            row_ids,
            column_names,
            values,
        })
    }

    /// Builds a matrix from per-row vectors.
    pub fn from_rows(
        row_ids: Vec<String>,
        column_names: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self> {
        let p = column_names.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::LengthMismatch {
                left: bad.len(),
                right: p,
            });
        }
        Self::new(row_ids, column_names, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[row * p..(row + 1) * p]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.get(r, col)).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|c| c == name)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&r| self.row_ids[r].clone()).collect();
        let values = rows
            .iter()
            .flat_map(|&r| self.row(r).iter().copied())
            .collect();
        Self::new(ids, self.column_names.clone(), values)
    }

    pub fn select_columns(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::InvalidArgument(format!("unknown column `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = (0..self.n_rows())
            .flat_map(|r| idx.iter().map(move |&c| self.get(r, c)))
            .collect();
        Self::new(self.row_ids.clone(), names.to_vec(), values)
    }

    /// Appends the columns of `other`, matching rows by id.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<Self> {
        let pos: HashMap<&str, usize> = other
            .row_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        let mut values = Vec::with_capacity(self.n_rows() * (self.n_cols() + other.n_cols()));
        for (r, id) in self.row_ids.iter().enumerate() {
            let o = *pos.get(id.as_str()).ok_or_else(|| {
                Error::InvalidArgument(format!("row `{id}` missing from right-hand matrix"))
            })?;
            values.extend_from_slice(self.row(r));
            values.extend_from_slice(other.row(o));
        }
        let mut names = self.column_names.clone();
        names.extend(other.column_names.iter().cloned());
        Self::new(self.row_ids.clone(), names, values)
    }

    /// Writes `user_id,<columns...>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csvutil::writer(path)?;
        let mut header = vec!["user_id".to_owned()];
        header.extend(self.column_names.iter().cloned());
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![self.row_ids[r].clone()];
            rec.extend(self.row(r).iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csvutil::reader(path)?;
        let headers = rdr.headers()?.clone();
        if headers.get(0) != Some("user_id") {
            return Err(Error::parse(
                path.display(),
                1,
                "first column must be `user_id`",
            ));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_owned).collect();
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            ids.push(rec[0].to_owned());
            for i in 1..=names.len() {
                values.push(csvutil::parse_f64(path, &rec, i)?);
            }
        }
        Self::new(ids, names, values)
    }
}
