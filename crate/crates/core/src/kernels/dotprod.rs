//! Random features for dot-product kernels `κ(<x,x'>)`: a random Legendre
//! degree and a random unit direction per feature.

use crate::error::{check_dim, Error, Result};
use crate::fastfood::{build_block_with, FastfoodBlock, RowLaw};
use crate::feature_map::{FeatureMap, FeatureVector};
use crate::hadamard::next_pow2;
use crate::sampling::{degree_sampler, SeedSpec};

use super::legendre::{homogeneous_legendre, LegendreCoeffs};
use super::sq_norm;

/// Stream id reserved for the degree draws.
const DEGREE_STREAM: u64 = u64::MAX;

/// Features `√(Z/n) |x|^{n_i} L_{n_i,d}(<x, z_i>/|x|)` with unit directions
/// `z_i` taken from Fastfood rows.
#[derive(Debug, Clone)]
pub struct DotProductFeatures {
    coeffs: LegendreCoeffs,
    n: usize,
    blocks: Vec<FastfoodBlock>,
    degrees: Vec<usize>,
}

impl DotProductFeatures {
    pub fn build(coeffs: LegendreCoeffs, n: usize, master_seed: u64) -> Result<Self> {
        let d = coeffs.dim();
        if n == 0 {
            return Err(Error::invalid("feature count must be positive"));
        }
        let d_pad = next_pow2(d);
        let blocks = (0..n.div_ceil(d_pad))
            .map(|i| build_block_with(d_pad, d, 1.0, &RowLaw::Unit, SeedSpec::new(master_seed, i as u64)))
            .collect::<Result<Vec<_>>>()?;
        let degrees = degree_sampler(&coeffs, n, SeedSpec::new(master_seed, DEGREE_STREAM))?;
        Ok(Self {
            coeffs,
            n,
            blocks,
            degrees,
        })
    }

    pub fn coeffs(&self) -> &LegendreCoeffs {
        &self.coeffs
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `<x, z_i>` for every feature.
    fn directions_dot(&self, x: &[f64]) -> Vec<f64> {
        let d = self.coeffs.dim();
        let d_pad = self.blocks[0].dim();
        let mut padded = vec![0.0; d_pad];
        padded[..d].copy_from_slice(x);
        let mut out = vec![0.0; self.n];
        let mut buf = vec![0.0; d_pad];
        let mut scratch = vec![0.0; d_pad];
        for (block, chunk) in self.blocks.iter().zip(out.chunks_mut(d_pad)) {
            block.apply_into(&padded, &mut buf, &mut scratch);
            chunk.copy_from_slice(&buf[..chunk.len()]);
        }
        out
    }

    pub fn kernel_estimate(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        Ok(self.map(x)?.dot(&self.map(xp)?))
    }
}

impl FeatureMap for DotProductFeatures {
    fn input_dim(&self) -> usize {
        self.coeffs.dim()
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.coeffs.dim();
        check_dim(d, x.len())?;
        check_dim(self.n, out.len())?;
        let r = sq_norm(x).sqrt();
        if !(r > 0.0) {
            return Err(Error::invalid("dot-product features need a nonzero input"));
        }
        let scale = (self.coeffs.normalization() / self.n as f64).sqrt();
        for ((o, t), &deg) in out.iter_mut().zip(self.directions_dot(x)).zip(&self.degrees) {
            // Rounding can push |t| a hair past r; the direction is unit length.
            *o = scale * homogeneous_legendre(deg, d, t.clamp(-r, r), r)?;
        }
        Ok(())
    }
}

/// Feature vector of `x` for the dot-product kernel described by `coeffs`.
pub fn dotprod_features(
    x: &[f64],
    coeffs: &LegendreCoeffs,
    n: usize,
    master_seed: u64,
) -> Result<FeatureVector> {
    DotProductFeatures::build(coeffs.clone(), n, master_seed)?.map(x)
}

/// `(Z/m) Σ_i ψ_i(x) ψ_i(x')` over `m` random degree/direction pairs.
pub fn dotprod_kernel_estimate(
    x: &[f64],
    xp: &[f64],
    coeffs: &LegendreCoeffs,
    m: usize,
    master_seed: u64,
) -> Result<f64> {
    check_dim(x.len(), xp.len())?;
    DotProductFeatures::build(coeffs.clone(), m, master_seed)?.kernel_estimate(x, xp)
}
