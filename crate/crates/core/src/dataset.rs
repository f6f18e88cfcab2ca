//! In-memory datasets shared by every other module.

use crate::error::{Error, Result};

/// Learning task of a dataset or tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Classification { num_classes: usize },
    Regression,
}

impl Task {
    pub fn is_classification(&self) -> bool {
        matches!(self, Task::Classification { .. })
    }

    pub fn num_classes(&self) -> Option<usize> {
        match *self {
            Task::Classification { num_classes } => Some(num_classes),
            Task::Regression => None,
        }
    }
}

/// Response vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Class(Vec<usize>),
    Real(Vec<f64>),
}

impl Target {
    pub fn len(&self) -> usize {
        match self {
            Target::Class(v) => v.len(),
            Target::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A feature matrix (row-major, finite values only) with its response.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    features: Vec<f64>,
    n_features: usize,
    target: Target,
    task: Task,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Vec<f64>,
        n_features: usize,
        target: Target,
        task: Task,
    ) -> Result<Self> {
        let n = target.len();
        if n == 0 {
            return Err(Error::invalid("dataset has no rows"));
        }
        if n_features == 0 {
            return Err(Error::invalid("dataset has no feature columns"));
        }
        if features.len() != n * n_features {
            return Err(Error::invalid(format!(
                "feature buffer holds {} values, expected {n} x {n_features}",
                features.len()
            )));
        }
        if let Some(pos) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data {
                row: pos / n_features,
                message: format!("non-finite value in column {}", pos % n_features),
            });
        }
        match (&target, task) {
            (Target::Class(labels), Task::Classification { num_classes }) => {
                if num_classes == 0 {
                    return Err(Error::invalid("classification task needs at least one class"));
                }
                if let Some(row) = labels.iter().position(|&c| c >= num_classes) {
                    return Err(Error::Data {
                        row,
                        message: format!("label {} outside [0, {num_classes})", labels[row]),
                    });
                }
            }
            (Target::Real(y), Task::Regression) => {
                if let Some(row) = y.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Data {
                        row,
                        message: "non-finite response".into(),
                    });
                }
            }
            _ => return Err(Error::invalid("target kind does not match task")),
        }
        Ok(Dataset {
            name: name.into(),
            features,
            n_features,
            target,
            task,
        })
    }

    /// Convenience constructor from a slice of rows.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        target: Target,
        task: Task,
    ) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::Data {
                row: bad,
                message: format!("expected {p} features, got {}", rows[bad].len()),
            });
        }
        Dataset::new(name, rows.concat(), p, target, task)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    /// Class label of row `i`. Panics on regression data.
    pub fn label(&self, i: usize) -> usize {
        match &self.target {
            Target::Class(v) => v[i],
            Target::Real(_) => panic!("label() on a regression dataset"),
        }
    }

    /// Real response of row `i`. Panics on classification data.
    pub fn response(&self, i: usize) -> f64 {
        match &self.target {
            Target::Real(v) => v[i],
            Target::Class(_) => panic!("response() on a classification dataset"),
        }
    }

    /// Rows `indices` (in that order) as a new dataset with the same task.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid(format!("row {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
        }
        let target = match &self.target {
            Target::Class(v) => Target::Class(indices.iter().map(|&i| v[i]).collect()),
            Target::Real(v) => Target::Real(indices.iter().map(|&i| v[i]).collect()),
        };
        Dataset::new(self.name.clone(), features, self.n_features, target, self.task)
    }

    /// Same rows with one extra trailing feature column.
    pub fn with_appended_feature(&self, column: &[f64]) -> Result<Dataset> {
        if column.len() != self.len() {
            return Err(Error::invalid(format!(
                "appended column has {} values for {} rows",
                column.len(),
                self.len()
            )));
        }
        let p = self.n_features + 1;
        let mut features = Vec::with_capacity(self.len() * p);
        for (i, &extra) in column.iter().enumerate() {
            features.extend_from_slice(self.row(i));
            features.push(extra);
        }
        Dataset::new(self.name.clone(), features, p, self.target.clone(), self.task)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}
