//! CSV schemas written and read by the tool.
//!
//! Every file starts with exactly the header of its schema. Numbers are
//! written in Rust's shortest round-trip form, so identical values give
//! identical bytes.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{CliError, CliResult};

/// Bumped whenever a column is added, removed or renamed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [&'static str],
}

pub const EXACT_EQ: Schema = Schema {
    name: "exact-eq",
    columns: &["gamma", "T", "eps_c"],
};

pub const EXACT_QA: Schema = Schema {
    name: "exact-qa",
    columns: &["t", "gamma", "eps_res"],
};

pub const PIMC_EQ: Schema = Schema {
    name: "pimc-eq",
    columns: &[
        "P", "gamma", "temp", "moves", "eps_c_est", "stderr", "t_burn", "geweke_z", "n_mcs", "rep",
    ],
};

pub const SQA: Schema = Schema {
    name: "sqa",
    columns: &[
        "t_mcs",
        "gamma",
        "eps_avg_mean",
        "eps_avg_sem",
        "eps_min_mean",
        "eps_min_sem",
        "n_reps",
    ],
};

/// Final coherent residual energy against annealing time.
pub const QA_SCALING: Schema = Schema {
    name: "qa-scaling",
    columns: &["tau", "eps_res"],
};

/// Final SQA residual energies against annealing time.
pub const SQA_SCALING: Schema = Schema {
    name: "sqa-scaling",
    columns: &[
        "tau",
        "eps_avg_mean",
        "eps_avg_sem",
        "eps_min_mean",
        "eps_min_sem",
        "n_reps",
    ],
};

pub const TEFF_FITS: Schema = Schema {
    name: "teff-fits",
    columns: &["source", "tau", "t_eff", "stderr", "residual_rms", "n_points"],
};

pub const ALL_SCHEMAS: [Schema; 8] = [
    EXACT_EQ,
    EXACT_QA,
    PIMC_EQ,
    SQA,
    QA_SCALING,
    SQA_SCALING,
    TEFF_FITS,
    FIT_JSON,
];

/// Not a CSV; names the JSON written by the fit commands.
pub const FIT_JSON: Schema = Schema {
    name: "fit-json",
    columns: &["parameter", "stderr", "window", "residual_rms"],
};

/// Row-oriented table bound to a schema.
#[derive(Clone, Debug)]
pub struct Table {
    schema: Schema,
    rows: Vec<Vec<String>>,
}

/// A cell value.
pub enum Cell<'a> {
    F(f64),
    U(u64),
    S(&'a str),
}

impl From<f64> for Cell<'_> {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<u64> for Cell<'_> {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}

impl From<usize> for Cell<'_> {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}

impl<'a> From<&'a str> for Cell<'a> {
    fn from(x: &'a str) -> Self {
        Cell::S(x)
    }
}

impl Table {
    pub fn new(schema: Schema) -> Self {
        Table { schema, rows: Vec::new() }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, cells: Vec<Cell<'_>>) {
        assert_eq!(cells.len(), self.schema.columns.len(), "row width for {}", self.schema.name);
        self.rows.push(
            cells
                .into_iter()
                .map(|c| match c {
                    Cell::F(x) => format!("{x}"),
                    Cell::U(x) => x.to_string(),
                    Cell::S(s) => s.to_string(),
                })
                .collect(),
        );
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.schema.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// A CSV file read back by column name.
#[derive(Clone, Debug)]
pub struct ColumnTable {
    headers: Vec<String>,
    index: HashMap<String, usize>,
    rows: Vec<Vec<String>>,
}

impl ColumnTable {
    pub fn read(path: &Path) -> CliResult<Self> {
        let table_err = |message: String| CliError::Table {
            path: path.to_path_buf(),
            message,
        };
        let mut reader = csv::Reader::from_path(path).map_err(|e| table_err(e.to_string()))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| table_err(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.clone(), i))
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| table_err(e.to_string()))?;
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(ColumnTable { headers, index, rows })
    }

    pub fn headers(&self) -> &[String] {
        &self.headers
    }

    pub fn has(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Column `name` parsed as numbers.
    pub fn numbers(&self, name: &str, path: &Path) -> CliResult<Vec<f64>> {
        let &c = self.index.get(name).ok_or_else(|| CliError::Table {
            path: path.to_path_buf(),
            message: format!("missing column {name:?} (have {})", self.headers.join(",")),
        })?;
        self.rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                row[c].parse::<f64>().map_err(|_| CliError::Table {
                    path: path.to_path_buf(),
                    message: format!("row {}: column {name:?} is not a number: {:?}", r + 2, row[c]),
                })
            })
            .collect()
    }
}

/// Matches a header row against the known schemas.
pub fn schema_for_headers(headers: &[String]) -> Option<Schema> {
    ALL_SCHEMAS
        .into_iter()
        .find(|s| s.columns.len() == headers.len() && s.columns.iter().zip(headers).all(|(a, b)| a == b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_then_rows() {
        let mut t = Table::new(EXACT_EQ);
        t.push(vec![0.5.into(), 0.01.into(), 1.25e-3.into()]);
        assert_eq!(String::from_utf8(t.to_bytes()).unwrap(), "gamma,T,eps_c\n0.5,0.01,0.00125\n");
    }

    #[test]
    fn floats_round_trip() {
        let xs = [0.1 + 0.2, 1e-300, 123456.789, -2.2e-16];
        let mut t = Table::new(QA_SCALING);
        for &x in &xs {
            t.push(vec![x.into(), x.into()]);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, t.to_bytes()).unwrap();
        let back = ColumnTable::read(&path).unwrap();
        assert_eq!(back.numbers("eps_res", &path).unwrap(), xs);
        assert_eq!(schema_for_headers(back.headers()), Some(QA_SCALING));
    }

    #[test]
    fn missing_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "tau,eps\n1,2\n").unwrap();
        let t = ColumnTable::read(&path).unwrap();
        let msg = t.numbers("eps_res", &path).unwrap_err().to_string();
        assert!(msg.contains("eps_res"), "{msg}");
    }
}
