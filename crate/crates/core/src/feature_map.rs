use nalgebra::DMatrix;

use crate::error::{check_dim, Result};

/// An explicit feature vector; kernel estimates are plain dot products.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &FeatureVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// Anything that maps an input row to a fixed-length feature row.
pub trait FeatureMap {
    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Writes the features of `x` into `out` (length [`output_dim`](Self::output_dim)).
    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    fn map(&self, x: &[f64]) -> Result<FeatureVector> {
        let mut out = vec![0.0; self.output_dim()];
        self.map_into(x, &mut out)?;
        Ok(FeatureVector(out))
    }

    /// Feature matrix with one row per input row.
    fn map_rows(&self, rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.input_dim(), rows.ncols())?;
        let p = self.output_dim();
        let mut out = DMatrix::zeros(rows.nrows(), p);
        let mut x = vec![0.0; rows.ncols()];
        let mut buf = vec![0.0; p];
        for i in 0..rows.nrows() {
            for (j, v) in x.iter_mut().enumerate() {
                *v = rows[(i, j)];
            }
            self.map_into(&x, &mut buf)?;
            for (j, v) in buf.iter().enumerate() {
                out[(i, j)] = *v;
            }
        }
        Ok(out)
    }
}

/// Writes `[cos z; sin z] / sqrt(n)` for the projections `z`.
pub(crate) fn paired_trig(z: &[f64], out: &mut [f64]) {
    let n = z.len();
    let scale = 1.0 / (n as f64).sqrt();
    let (cos, sin) = out.split_at_mut(n);
    for ((c, s), &v) in cos.iter_mut().zip(sin.iter_mut()).zip(z) {
        let (sv, cv) = v.sin_cos();
        *c = cv * scale;
        *s = sv * scale;
    }
}
