//! Baseline feature maps: dense random kitchen sinks and Nyström.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;

use crate::error::{check_dim, Error, Result};
use crate::feature_map::{paired_trig, FeatureMap, FeatureVector};
use crate::kernels::KernelSpec;
use crate::linalg::symmetric_eigen;
use crate::sampling::{hashed_gaussian, SeedSpec};

/// Eigenvalues of `K_nn` at or below this are dropped from the whitening.
pub const NYSTROM_EIGEN_FLOOR: f64 = 1e-10;

/// Eigenvalues more negative than this mean the kernel matrix is not PSD.
pub const NYSTROM_PSD_TOLERANCE: f64 = 1e-8;

/// Dense `n × d` matrix `Z` with iid `N(0, σ⁻²)` entries.
///
/// Entry `(i, j)` is `hashed_gaussian(i, j, seed) / σ` in both modes, so the
/// hashed mode (which regenerates entries on every application) gives results
/// bit-identical to the stored mode.
#[derive(Debug, Clone)]
pub struct DenseGaussianTransform {
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
    stored: Option<Vec<f64>>,
}

impl DenseGaussianTransform {
    pub fn build(d: usize, n: usize, sigma: f64, seed: u64, hashed: bool) -> Result<Self> {
        if d == 0 || n == 0 {
            return Err(Error::invalid("dense transform needs d >= 1 and n >= 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        let mut tf = Self {
            n,
            d,
            sigma,
            seed,
            stored: None,
        };
        if !hashed {
            let mut z = vec![0.0; n * d];
            for (i, row) in z.chunks_exact_mut(d).enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = tf.entry(i, j);
                }
            }
            tf.stored = Some(z);
        }
        Ok(tf)
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        hashed_gaussian(i as u64, j as u64, self.seed) / self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_hashed(&self) -> bool {
        self.stored.is_none()
    }

    /// Bytes held by the stored matrix (zero in hashed mode).
    pub fn parameter_bytes(&self) -> usize {
        self.stored
            .as_ref()
            .map_or(0, |z| z.len() * std::mem::size_of::<f64>())
    }

    /// `Z x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        let mut out = vec![0.0; self.n];
        self.project_into(x, &mut out);
        Ok(out)
    }

    fn project_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.stored {
            Some(z) => {
                for (o, row) in out.iter_mut().zip(z.chunks_exact(self.d)) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
            None => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = x
                        .iter()
                        .enumerate()
                        .map(|(j, v)| self.entry(i, j) * v)
                        .sum();
                }
            }
        }
    }

    /// `(1/n) Σ_j cos([Z(x - x')]_j)`.
    pub fn kernel_estimate(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        check_dim(x.len(), xp.len())?;
        let diff: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
        let z = self.project(&diff)?;
        Ok(z.iter().map(|v| v.cos()).sum::<f64>() / self.n as f64)
    }
}

impl FeatureMap for DenseGaussianTransform {
    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        2 * self.n
    }

    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.d, x.len())?;
        check_dim(2 * self.n, out.len())?;
        let mut z = vec![0.0; self.n];
        self.project_into(x, &mut z);
        paired_trig(&z, out);
        Ok(())
    }
}

/// `[cos(Zx); sin(Zx)] / √n`.
pub fn rks_features(tf: &DenseGaussianTransform, x: &[f64]) -> Result<FeatureVector> {
    tf.map(x)
}

/// Nyström features `K_nn^{-1/2} [k(x_1, x), ..., k(x_n, x)]`.
#[derive(Debug, Clone)]
pub struct NystromMap {
    landmarks: DMatrix<f64>,
    w: DMatrix<f64>,
    spec: KernelSpec,
    rank: usize,
}

impl NystromMap {
    /// Whitening built from explicit landmark rows.
    pub fn from_landmarks(landmarks: DMatrix<f64>, spec: KernelSpec) -> Result<Self> {
        let n = landmarks.nrows();
        if n == 0 {
            return Err(Error::invalid("need at least one landmark"));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| landmarks.row(i).iter().copied().collect())
            .collect();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = spec.evaluate(&rows[i], &rows[j])?;
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        let eig = symmetric_eigen(&k)?;
        if let Some(&min) = eig.values.first() {
            if min < -NYSTROM_PSD_TOLERANCE {
                return Err(Error::numerical(format!(
                    "landmark kernel matrix is not PSD (eigenvalue {min:e})"
                )));
            }
        }
        let rank = eig.values.iter().filter(|&&l| l > NYSTROM_EIGEN_FLOOR).count();
        let w = eig.map_spectrum(|l| if l > NYSTROM_EIGEN_FLOOR { 1.0 / l.sqrt() } else { 0.0 });
        Ok(Self {
            landmarks,
            w,
            spec,
            rank,
        })
    }

    pub fn landmarks(&self) -> &DMatrix<f64> {
        &self.landmarks
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Number of eigenvalues kept above the floor.
    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }
}

/// Samples `n` landmark rows of `data` uniformly without replacement.
pub fn nystrom_build(data: &DMatrix<f64>, n: usize, spec: KernelSpec, seed: SeedSpec) -> Result<NystromMap> {
    let m = data.nrows();
    if n == 0 || n > m {
        return Err(Error::invalid(format!(
            "landmark count {n} must be in 1..={m}"
        )));
    }
    let mut rng = seed.rng();
    let mut picked = index::sample(&mut rng, m, n).into_vec();
    picked.sort_unstable();
    let landmarks = data.select_rows(picked.iter());
    NystromMap::from_landmarks(landmarks, spec)
}

impl FeatureMap for NystromMap {
    fn input_dim(&self) -> usize {
        self.landmarks.ncols()
    }

    fn output_dim(&self) -> usize {
        self.landmarks.nrows()
    }

    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.landmarks.ncols(), x.len())?;
        check_dim(self.landmarks.nrows(), out.len())?;
        let mut row = vec![0.0; x.len()];
        let kx = DVector::from_iterator(
            self.landmarks.nrows(),
            (0..self.landmarks.nrows()).map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = self.landmarks[(i, j)];
                }
                self.spec.evaluate(&row, x)
            })
            .collect::<Result<Vec<f64>>>()?,
        );
        let phi = &self.w * kx;
        out.copy_from_slice(phi.as_slice());
        Ok(())
    }
}

/// Nyström feature vector of `x`.
pub fn nystrom_features(map: &NystromMap, x: &[f64]) -> Result<FeatureVector> {
    map.map(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::rbf_kernel;
    use crate::sampling::CounterRng;
    use crate::stats::McEstimate;
    use rand::Rng;

    fn random_rows(m: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = CounterRng::new(SeedSpec::new(seed, 0));
        DMatrix::from_fn(m, d, |_, _| rng.gen::<f64>())
    }

    #[test]
    fn hashed_mode_is_bit_identical() {
        let stored = DenseGaussianTransform::build(7, 12, 0.9, 4, false).unwrap();
        let hashed = DenseGaussianTransform::build(7, 12, 0.9, 4, true).unwrap();
        let x = [0.1, 0.2, -0.3, 0.5, 0.0, 1.0, -2.0];
        assert_eq!(stored.project(&x).unwrap(), hashed.project(&x).unwrap());
        assert_eq!(hashed.parameter_bytes(), 0);
        assert_eq!(stored.parameter_bytes(), 7 * 12 * 8);
    }

    #[test]
    fn rks_self_inner_product() {
        let tf = DenseGaussianTransform::build(4, 30, 1.0, 1, false).unwrap();
        let phi = rks_features(&tf, &[0.3, 0.1, -0.2, 0.8]).unwrap();
        assert_eq!(phi.len(), 60);
        assert!((phi.dot(&phi) - 1.0).abs() < 1e-12);
        assert!(rks_features(&tf, &[1.0]).is_err());
    }

    #[test]
    fn entry_variance() {
        let tf = DenseGaussianTransform::build(100, 400, 2.0, 9, false).unwrap();
        let z = tf.stored.as_ref().unwrap();
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((var - 0.25).abs() < 0.01, "{var}");
    }

    #[test]
    fn rks_unbiased() {
        let x = [0.4, -0.1, 0.3];
        let xp = [-0.2, 0.5, 0.1];
        let samples: Vec<f64> = (0..5000)
            .map(|s| {
                DenseGaussianTransform::build(3, 8, 0.7, s, true)
                    .unwrap()
                    .kernel_estimate(&x, &xp)
                    .unwrap()
            })
            .collect();
        let est = McEstimate::from_samples(&samples);
        assert!(est.z_score(rbf_kernel(&x, &xp, 0.7)) < 4.0, "{est:?}");
    }

    #[test]
    fn full_landmarks_reproduce_gram() {
        let data = random_rows(30, 3, 2);
        let spec = KernelSpec::Rbf { sigma: 0.5 };
        let map = nystrom_build(&data, 30, spec.clone(), SeedSpec::new(1, 1)).unwrap();
        let feats = map.map_rows(&data).unwrap();
        let gram = &feats * feats.transpose();
        for i in 0..30 {
            for j in 0..30 {
                let xi: Vec<f64> = data.row(i).iter().copied().collect();
                let xj: Vec<f64> = data.row(j).iter().copied().collect();
                let k = spec.evaluate(&xi, &xj).unwrap();
                assert!((gram[(i, j)] - k).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn separated_landmarks_give_identity() {
        let landmarks = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 100.0, 0.0, 0.0, 100.0]);
        let map = NystromMap::from_landmarks(landmarks, KernelSpec::Rbf { sigma: 1.0 }).unwrap();
        let w = map.whitening();
        assert!((w - DMatrix::identity(3, 3)).abs().max() < 1e-12);
        let phi = nystrom_features(&map, &[100.0, 0.0]).unwrap();
        assert!((phi.0[1] - 1.0).abs() < 1e-12 && phi.0[0].abs() < 1e-12);
    }

    #[test]
    fn whitened_gram_is_projector() {
        let data = random_rows(50, 2, 5);
        let map = NystromMap::from_landmarks(data.clone(), KernelSpec::Rbf { sigma: 0.2 }).unwrap();
        let k = DMatrix::from_fn(50, 50, |i, j| {
            let xi: Vec<f64> = data.row(i).iter().copied().collect();
            let xj: Vec<f64> = data.row(j).iter().copied().collect();
            rbf_kernel(&xi, &xj, 0.2)
        });
        let p = map.whitening() * &k * map.whitening();
        assert!((&p * &p - &p).abs().max() < 1e-8);
    }

    #[test]
    fn landmark_count_checked() {
        let data = random_rows(5, 2, 0);
        let spec = KernelSpec::Rbf { sigma: 1.0 };
        assert!(nystrom_build(&data, 6, spec.clone(), SeedSpec::new(0, 0)).is_err());
        assert!(nystrom_build(&data, 0, spec, SeedSpec::new(0, 0)).is_err());
    }
}
