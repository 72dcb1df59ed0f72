use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which sample a data matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Group {
    First,
    Second,
}

impl Group {
    pub(crate) fn label(self) -> u64 {
        match self {
            Group::First => 1,
            Group::Second => 2,
        }
    }
}

/// Observations for one group: `n` rows, `d` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    group: Group,
    names: Option<Vec<String>>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, group: Group) -> Result<Self> {
        let (n, d) = values.shape();
        if n < 2 || d < 2 {
            return Err(Error::invalid(format!(
                "data matrix must have at least 2 rows and 2 columns, got {n}x{d}"
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (pos % n, pos / n);
            return Err(Error::invalid(format!("non-finite entry at row {row}, column {col}")));
        }
        Ok(Self { values, group, names: None })
    }

    /// Build from row-major observations.
    pub fn from_rows(rows: &[Vec<f64>], group: Group) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::invalid("rows have differing lengths"));
        }
        Self::new(DMatrix::from_fn(n, d, |i, j| rows[i][j]), group)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d() {
            return Err(Error::invalid(format!(
                "{} column names for {} columns",
                names.len(),
                self.d()
            )));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn d(&self) -> usize {
        self.values.ncols()
    }

    pub fn group(&self) -> Group {
        self.group
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Same observations relabelled as another group.
    pub fn relabel(mut self, group: Group) -> Self {
        self.group = group;
        self
    }
}
