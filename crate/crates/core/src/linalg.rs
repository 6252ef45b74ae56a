//! Dense symmetric eigendecomposition: cyclic Jacobi rotations for small
//! matrices, Householder tridiagonalization with implicit QR above that.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Off-diagonal Frobenius norm (relative to the full norm) at which the
/// Jacobi iteration stops.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Largest order handled by [`jacobi_eigen`] inside [`symmetric_eigen`].
pub const JACOBI_MAX_DIM: usize = 256;

/// Eigenvalues in ascending order with matching unit eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymmetricEigen {
    /// `V diag(f(λ)) Vᵀ`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            scaled.column_mut(j).scale_mut(w);
        }
        let out = &scaled * self.vectors.transpose();
        debug_assert_eq!(out.nrows(), n);
        out
    }
}

/// Eigendecomposition of a symmetric matrix. Orders up to [`JACOBI_MAX_DIM`]
/// use [`jacobi_eigen`]; larger ones use nalgebra's tridiagonal QR solver,
/// whose cost has a much smaller constant.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    if a.nrows() <= JACOBI_MAX_DIM {
        return jacobi_eigen(a);
    }
    check_symmetric(a)?;
    let eig = nalgebra::SymmetricEigen::try_new(a.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("symmetric eigensolver did not converge"))?;
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(a.nrows(), a.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors })
}

fn check_symmetric(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::invalid("eigendecomposition needs a square matrix"));
    }
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !scale.is_finite() {
        return Err(Error::numerical("matrix has non-finite entries"));
    }
    let n = a.nrows();
    for i in 0..n {
        for j in 0..i {
            let (x, y) = (a[(i, j)], a[(j, i)]);
            if (x - y).abs() > 1e-10 * (1.0 + scale) {
                return Err(Error::invalid("matrix is not symmetric"));
            }
        }
    }
    Ok(scale)
}

/// Eigendecomposition of a symmetric matrix via the cyclic Jacobi method.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    let scale = check_symmetric(a)?;
    let n = a.nrows();
    if n == 0 {
        return Ok(SymmetricEigen {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }

    // Row-major working copy; eigenvectors kept as rows of `vt`.
    let mut m: Vec<f64> = (0..n * n).map(|k| a[(k / n, k % n)]).collect();
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let mut row_p = vec![0.0; n];
    let mut row_q = vec![0.0; n];
    let target = JACOBI_TOLERANCE * scale.max(f64::MIN_POSITIVE);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&m, n);
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                row_p.copy_from_slice(&m[p * n..(p + 1) * n]);
                row_q.copy_from_slice(&m[q * n..(q + 1) * n]);
                for k in 0..n {
                    let (g, h) = (row_p[k], row_q[k]);
                    row_p[k] = c * g - s * h;
                    row_q[k] = s * g + c * h;
                }
                row_p[p] = app - t * apq;
                row_q[q] = aqq + t * apq;
                row_p[q] = 0.0;
                row_q[p] = 0.0;
                m[p * n..(p + 1) * n].copy_from_slice(&row_p);
                m[q * n..(q + 1) * n].copy_from_slice(&row_q);
                for k in 0..n {
                    m[k * n + p] = row_p[k];
                    m[k * n + q] = row_q[k];
                }

                let (vp, vq) = split_rows(&mut vt, n, p, q);
                for (g, h) in vp.iter_mut().zip(vq.iter_mut()) {
                    let (x, y) = (*g, *h);
                    *g = c * x - s * y;
                    *h = s * x + c * y;
                }
            }
        }
    }
    if !converged && off_diagonal_norm(&m, n) > target {
        return Err(Error::numerical("Jacobi iteration did not converge"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| vt[order[c] * n + r]);
    Ok(SymmetricEigen { values, vectors })
}

fn off_diagonal_norm(m: &[f64], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m[i * n + j] * m[i * n + j];
            }
        }
    }
    acc.sqrt()
}

fn split_rows(v: &mut [f64], n: usize, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(p < q);
    let (head, tail) = v.split_at_mut(q * n);
    (&mut head[p * n..(p + 1) * n], &mut tail[..n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{gaussian_diag, SeedSpec};

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let g = gaussian_diag(n * n, SeedSpec::new(seed, 0));
        let b = DMatrix::from_vec(n, n, g);
        &b + b.transpose()
    }

    #[test]
    fn reconstructs_matrix() {
        let a = random_symmetric(30, 1);
        let eig = jacobi_eigen(&a).unwrap();
        let back = eig.map_spectrum(|l| l);
        assert!((&back - &a).abs().max() < 1e-10);
        let vtv = eig.vectors.transpose() * &eig.vectors;
        assert!((vtv - DMatrix::identity(30, 30)).abs().max() < 1e-12);
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn diagonal_and_two_by_two() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let eig = jacobi_eigen(&d).unwrap();
        assert_eq!(eig.values, vec![1.0, 2.0, 3.0]);

        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = jacobi_eigen(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn large_orders_agree_with_jacobi() {
        let a = random_symmetric(JACOBI_MAX_DIM + 20, 4);
        let fast = symmetric_eigen(&a).unwrap();
        let slow = jacobi_eigen(&a).unwrap();
        for (x, y) in fast.values.iter().zip(&slow.values) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!((fast.map_spectrum(|l| l) - &a).abs().max() < 1e-9);
        assert!(fast.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(jacobi_eigen(&DMatrix::zeros(2, 3)).is_err());
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(jacobi_eigen(&a).is_err());
    }
}
