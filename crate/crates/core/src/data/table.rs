use crate::error::{Error, Result};
use crate::numcore::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Process,
    Quality,
}

/// Sample table whose columns are tagged as process or quality variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Matrix,
    names: Vec<String>,
    roles: Vec<Role>,
}

impl DataMatrix {
    pub fn new(values: Matrix, names: Vec<String>, roles: Vec<Role>) -> Result<Self> {
        if names.len() != values.cols() || roles.len() != values.cols() {
            return Err(Error::Schema(format!(
                "{} columns but {} names and {} roles",
                values.cols(),
                names.len(),
                roles.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
        }
        Ok(Self {
            values,
            names,
            roles,
        })
    }

    /// `x` followed by `y`, with the given column names.
    pub fn from_parts(
        x: &Matrix,
        y: &Matrix,
        process_names: Vec<String>,
        quality_names: Vec<String>,
    ) -> Result<Self> {
        let values = x.hstack(y)?;
        let mut roles = vec![Role::Process; x.cols()];
        roles.extend(vec![Role::Quality; y.cols()]);
        let mut names = process_names;
        names.extend(quality_names);
        Self::new(values, names, roles)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn cols(&self) -> usize {
        self.values.cols()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn indices_with(&self, role: Role) -> Vec<usize> {
        (0..self.cols())
            .filter(|&j| self.roles[j] == role)
            .collect()
    }

    pub fn process_indices(&self) -> Vec<usize> {
        self.indices_with(Role::Process)
    }

    pub fn quality_indices(&self) -> Vec<usize> {
        self.indices_with(Role::Quality)
    }

    pub fn process_names(&self) -> Vec<String> {
        self.process_indices()
            .into_iter()
            .map(|j| self.names[j].clone())
            .collect()
    }

    pub fn quality_names(&self) -> Vec<String> {
        self.quality_indices()
            .into_iter()
            .map(|j| self.names[j].clone())
            .collect()
    }

    /// Process columns `x`.
    pub fn process(&self) -> Matrix {
        self.values
            .select_columns(&self.process_indices())
            .expect("indices in range")
    }

    /// Quality columns `y`.
    pub fn quality(&self) -> Matrix {
        self.values
            .select_columns(&self.quality_indices())
            .expect("indices in range")
    }

    /// Same schema, new values.
    pub fn with_values(&self, values: Matrix) -> Result<Self> {
        if values.cols() != self.cols() {
            return Err(Error::Shape {
                op: "with_values",
                left: self.values.shape(),
                right: values.shape(),
            });
        }
        Ok(Self {
            values,
            names: self.names.clone(),
            roles: self.roles.clone(),
        })
    }

    pub fn select_columns(&self, names: &[&str]) -> Result<Self> {
        let mut idx = Vec::with_capacity(names.len());
        for name in names {
            idx.push(
                self.column_index(name)
                    .ok_or_else(|| Error::Schema(format!("unknown column `{name}`")))?,
            );
        }
        Self::new(
            self.values.select_columns(&idx)?,
            idx.iter().map(|&j| self.names[j].clone()).collect(),
            idx.iter().map(|&j| self.roles[j]).collect(),
        )
    }

    /// Rows `start..end` (0-based, exclusive end).
    pub fn row_range(&self, start: usize, end: usize) -> Self {
        Self {
            values: self.values.row_range(start, end),
            names: self.names.clone(),
            roles: self.roles.clone(),
        }
    }
}
