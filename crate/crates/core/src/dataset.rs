//! Columnar tables with missing cells, and their CSV form.
//!
//! In CSV an empty field is a missing cell. Integral values are written
//! without a decimal point; other values use the shortest representation that
//! round-trips.

use std::io::{Read, Write};

use crate::VariableId;

pub type Cell = Option<f64>;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("row {row} has {got} cells, expected {expected}")]
    RowArity {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("duplicate column {0}")]
    DuplicateColumn(VariableId),
    #[error("unknown column {0}")]
    UnknownColumn(VariableId),
    #[error("empty column name in header")]
    EmptyColumnName,
    #[error("cannot parse {value:?} in row {row}, column {column}")]
    BadCell {
        row: usize,
        column: VariableId,
        value: String,
    },
    #[error("provenance has {got} entries for {expected} rows")]
    ProvenanceLength { expected: usize, got: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// A table with one named column per variable and optional cells.
///
/// `sources` optionally records, per row, the index of the input part the
/// row came from.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<VariableId>,
    rows: Vec<Vec<Cell>>,
    sources: Option<Vec<usize>>,
}

impl Dataset {
    pub fn new(columns: Vec<VariableId>, rows: Vec<Vec<Cell>>) -> Result<Self, DatasetError> {
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(DatasetError::DuplicateColumn(c.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(DatasetError::RowArity {
                    row: r,
                    expected: columns.len(),
                    got: row.len(),
                });
            }
        }
        Ok(Dataset {
            columns,
            rows,
            sources: None,
        })
    }

    pub fn empty(columns: Vec<VariableId>) -> Result<Self, DatasetError> {
        Self::new(columns, Vec::new())
    }

    pub fn with_sources(mut self, sources: Vec<usize>) -> Result<Self, DatasetError> {
        if sources.len() != self.rows.len() {
            return Err(DatasetError::ProvenanceLength {
                expected: self.rows.len(),
                got: sources.len(),
            });
        }
        self.sources = Some(sources);
        Ok(self)
    }

    pub fn columns(&self) -> &[VariableId] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Vec<Cell>> {
        self.rows
    }

    pub fn sources(&self) -> Option<&[usize]> {
        self.sources.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, v: &VariableId) -> Result<usize, DatasetError> {
        self.columns
            .iter()
            .position(|c| c == v)
            .ok_or_else(|| DatasetError::UnknownColumn(v.clone()))
    }

    pub fn column(&self, v: &VariableId) -> Result<impl Iterator<Item = Cell> + '_, DatasetError> {
        let j = self.column_index(v)?;
        Ok(self.rows.iter().map(move |r| r[j]))
    }

    pub fn missing_count(&self) -> usize {
        self.rows.iter().flatten().filter(|c| c.is_none()).count()
    }

    /// New dataset restricted to `vars`, in that order. Provenance is kept.
    pub fn select(&self, vars: &[VariableId]) -> Result<Dataset, DatasetError> {
        let idx = vars
            .iter()
            .map(|v| self.column_index(v))
            .collect::<Result<Vec<_>, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| idx.iter().map(|&j| r[j]).collect())
            .collect();
        let mut out = Dataset::new(vars.to_vec(), rows)?;
        out.sources = self.sources.clone();
        Ok(out)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Dataset, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let mut columns = Vec::new();
        for h in rdr.headers()? {
            columns.push(VariableId::try_new(h.trim()).ok_or(DatasetError::EmptyColumnName)?);
        }
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let mut row = Vec::with_capacity(rec.len());
            for (j, field) in rec.iter().enumerate() {
                let field = field.trim();
                if field.is_empty() {
                    row.push(None);
                } else {
                    let v: f64 = field.parse().map_err(|_| DatasetError::BadCell {
                        row: r,
                        column: columns
                            .get(j)
                            .cloned()
                            .unwrap_or_else(|| VariableId::new("?")),
                        value: field.to_string(),
                    })?;
                    row.push(Some(v));
                }
            }
            rows.push(row);
        }
        Dataset::new(columns, rows)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.columns.iter().map(VariableId::as_str))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(format_cell).unwrap_or_default()))?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub(crate) fn format_cell(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}
