use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name given to the constant column appended by [`FeatureMatrix::with_bias`].
pub const BIAS_COLUMN: &str = "bias";

/// Dense, row-major matrix of per-post features with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    schema: Vec<String>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major `data`. Every value must be finite.
    pub fn new(rows: usize, schema: Vec<String>, data: Vec<f64>) -> Result<Self> {
        let cols = schema.len();
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "feature matrix at row {}, column {}",
                pos / cols.max(1),
                schema[pos % cols.max(1)]
            )));
        }
        Ok(Self {
            rows,
            cols,
            data,
            schema,
        })
    }

    pub fn from_rows(schema: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let cols = schema.len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::dim(format!(
                    "row {i} has {} values, schema has {cols}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), schema, data)
    }

    /// Convenience constructor with generated column names `x0, x1, ...`.
    pub fn from_unnamed_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        Self::from_rows((0..cols).map(|j| format!("x{j}")).collect(), rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row_dot(&self, i: usize, beta: &[f64]) -> f64 {
        dot(self.row(i), beta)
    }

    fn check_coefficients(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.cols {
            return Err(Error::dim(format!(
                "{} coefficients for {} feature columns",
                beta.len(),
                self.cols
            )));
        }
        Ok(())
    }

    /// `X β`.
    pub fn mul_vec(&self, beta: &[f64]) -> Result<Vec<f64>> {
        self.check_coefficients(beta)?;
        Ok((0..self.rows).map(|i| self.row_dot(i, beta)).collect())
    }

    /// `X' r`, accumulated in row order.
    pub fn t_mul_vec(&self, r: &[f64]) -> Result<Vec<f64>> {
        if r.len() != self.rows {
            return Err(Error::dim(format!(
                "vector of length {} against {} rows",
                r.len(),
                self.rows
            )));
        }
        let mut out = vec![0.0; self.cols];
        for (i, &ri) in r.iter().enumerate() {
            if ri == 0.0 {
                continue;
            }
            for (o, x) in out.iter_mut().zip(self.row(i)) {
                *o += ri * x;
            }
        }
        Ok(out)
    }

    /// Horizontal concatenation `[self, other]`.
    pub fn hstack(&self, other: &FeatureMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dim(format!(
                "cannot stack {} rows beside {} rows",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        let mut schema = self.schema.clone();
        schema.extend(other.schema.iter().cloned());
        Ok(Self {
            rows: self.rows,
            cols,
            data,
            schema,
        })
    }

    /// Appends one column.
    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<Self> {
        let column = FeatureMatrix::new(values.len(), vec![name.to_string()], values.to_vec())?;
        self.hstack(&column)
    }

    /// Appends the constant-one intercept column.
    pub fn with_bias(&self) -> Self {
        self.with_column(BIAS_COLUMN, &vec![1.0; self.rows])
            .expect("bias column always matches")
    }

    pub fn select_rows(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
            schema: self.schema.clone(),
        }
    }

    pub fn rename(mut self, prefix: &str) -> Self {
        for name in &mut self.schema {
            *name = format!("{prefix}{name}");
        }
        self
    }

    /// Upper-left Gram `Σ x_i x_i'` over rows where `include(i)` holds,
    /// returned row-major `cols x cols`.
    pub(crate) fn gram_where(&self, include: impl Fn(usize) -> bool) -> Vec<f64> {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for i in (0..self.rows).filter(|&i| include(i)) {
            let x = self.row(i);
            for a in 0..d {
                let xa = x[a];
                if xa == 0.0 {
                    continue;
                }
                for b in a..d {
                    g[a * d + b] += xa * x[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                g[a * d + b] = g[b * d + a];
            }
        }
        g
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Column-wise z-scoring with statistics frozen from a training matrix.
///
/// Columns with zero spread keep scale 1 so they pass through centered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(cols: usize) -> Self {
        Self {
            mean: vec![0.0; cols],
            scale: vec![1.0; cols],
        }
    }

    pub fn fit(x: &FeatureMatrix) -> Self {
        let n = x.rows();
        if n == 0 {
            return Self::identity(x.cols());
        }
        let mut mean = vec![0.0; x.cols()];
        for i in 0..n {
            for (m, v) in mean.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; x.cols()];
        for i in 0..n {
            for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n as f64).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn fit_values(values: &[f64]) -> (f64, f64) {
        let x = FeatureMatrix::new(values.len(), vec!["v".into()], values.to_vec())
            .expect("finite column");
        let s = Self::fit(&x);
        (s.mean[0], s.scale[0])
    }

    pub fn cols(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        if x.cols() != self.cols() {
            return Err(Error::dim(format!(
                "standardizer fitted on {} columns applied to {}",
                self.cols(),
                x.cols()
            )));
        }
        let mut data = Vec::with_capacity(x.as_slice().len());
        for i in 0..x.rows() {
            for ((v, m), s) in x.row(i).iter().zip(&self.mean).zip(&self.scale) {
                data.push((v - m) / s);
            }
        }
        FeatureMatrix::new(x.rows(), x.schema().to_vec(), data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[Vec<f64>]) -> FeatureMatrix {
        FeatureMatrix::from_unnamed_rows(rows).unwrap()
    }

    #[test]
    fn rejects_non_finite() {
        let err = FeatureMatrix::from_rows(vec!["a".into()], &[vec![f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFinite(_)));
    }

    #[test]
    fn hstack_and_bias() {
        let x = m(&[vec![1.0], vec![2.0]]).with_bias();
        assert_eq!(x.schema(), &["x0".to_string(), BIAS_COLUMN.to_string()]);
        assert_eq!(x.row(1), &[2.0, 1.0]);
        assert!(x.hstack(&m(&[vec![1.0]])).is_err());
    }

    #[test]
    fn transpose_product_matches_loop() {
        let x = m(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        assert_eq!(x.t_mul_vec(&[1.0, 0.0, 2.0]).unwrap(), vec![11.0, 14.0]);
        assert_eq!(x.mul_vec(&[1.0, -1.0]).unwrap(), vec![-1.0, -1.0, -1.0]);
    }

    #[test]
    fn gram_is_symmetric_and_masked() {
        let x = m(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(x.gram_where(|_| true), vec![10.0, 14.0, 14.0, 20.0]);
        assert_eq!(x.gram_where(|i| i == 0), vec![1.0, 2.0, 2.0, 4.0]);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let x = m(&[vec![1.0, 5.0], vec![3.0, 5.0]]);
        let s = Standardizer::fit(&x);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.scale, vec![1.0, 1.0]);
        let z = s.apply(&x).unwrap();
        assert_eq!(z.row(0), &[-1.0, 0.0]);
    }
}
