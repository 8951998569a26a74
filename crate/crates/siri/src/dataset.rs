use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// An n-by-p predictor matrix with an n-vector response and column names.
///
/// All selection, screening and cross-validation routines consume this type.
/// Predictor columns are addressed by zero-based index throughout; names
/// default to `x1..xp`.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    names: Vec<String>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let names = (1..=x.ncols()).map(|j| format!("x{}", j)).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: Array2<f64>, y: Array1<f64>, names: Vec<String>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptySample);
        }
        if x.nrows() != y.len() {
            return Err(Error::InvalidArgument(format!(
                "predictor rows ({}) and response length ({}) differ",
                x.nrows(),
                y.len()
            )));
        }
        if names.len() != x.ncols() {
            return Err(Error::InvalidArgument(format!(
                "{} names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite value in data".into()));
        }
        Ok(Dataset { x, y, names })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn predictors(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn response(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, f64> {
        self.x.column(j)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, j: usize) -> &str {
        &self.names[j]
    }

    /// Copy of the dataset restricted to the given rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let p = self.p();
        let mut x = Array2::zeros((rows.len(), p));
        let mut y = Array1::zeros(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            x.row_mut(i).assign(&self.x.row(r));
            y[i] = self.y[r];
        }
        Dataset { x, y, names: self.names.clone() }
    }

    /// Matrix of the given predictor columns, n-by-d, in the given order.
    pub fn columns(&self, cols: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((self.n(), cols.len()));
        for (k, &j) in cols.iter().enumerate() {
            out.column_mut(k).assign(&self.x.column(j));
        }
        out
    }
}
