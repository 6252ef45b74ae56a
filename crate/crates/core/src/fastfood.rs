//! The Fastfood transform `V = (1/(σ√d)) S H G Π H B`, stacked into `n`
//! rows, and the feature maps built on it.
//!
//! A block stores three length-`d` real arrays (`b`, `g`, `s`) and one index
//! array (`perm`). Applying it costs two Walsh–Hadamard transforms.
//!
//! When the data dimension is smaller than the padded dimension and the
//! radial law is defined in the data dimension (Matérn, tabulated spectra,
//! unit directions), `s` is normalized against the norm of each row restricted
//! to the data coordinates, so that the part of `V` that touches the data has
//! the requested radial law.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::feature_map::{paired_trig, FeatureMap, FeatureVector};
use crate::hadamard::{fwht_unchecked, hadamard_matrix, next_pow2, PaddedVector};
use crate::kernels::{sq_norm, KernelSpec};
use crate::sampling::{
    gaussian_diag, rademacher_diag, radial_draws, random_permutation, Permutation, RadialSampler,
    SeedSpec,
};

/// Largest block size accepted by the dense materializers.
pub const DENSE_MAX_DIM: usize = 64;

/// Version written into serialized transform records.
pub const RECORD_VERSION: u32 = 1;

const RECORD_FORMAT: &str = "fastfood-transform";

const TAG_B: u64 = 0xB;
const TAG_PERM: u64 = 0x11;
const TAG_G: u64 = 0x6;
const TAG_S: u64 = 0x5;

/// Radial law of the rows of a block.
#[derive(Debug, Clone)]
pub(crate) enum RowLaw {
    Radial(RadialSampler),
    /// Every row (restricted to the data coordinates) has unit norm.
    Unit,
}

/// One `d × d` implicit projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastfoodBlock {
    b: Vec<f64>,
    perm: Permutation,
    g: Vec<f64>,
    s: Vec<f64>,
    sigma: f64,
    d: usize,
}

impl FastfoodBlock {
    /// Assembles a block from explicit parts.
    pub fn from_parts(
        b: Vec<f64>,
        perm: Permutation,
        g: Vec<f64>,
        s: Vec<f64>,
        sigma: f64,
    ) -> Result<Self> {
        let block = FastfoodBlock {
            d: b.len(),
            b,
            perm,
            g,
            s,
            sigma,
        };
        block.validate()?;
        Ok(block)
    }

    fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 || !d.is_power_of_two() {
            return Err(Error::invalid(format!(
                "block size must be a power of two, got {d}"
            )));
        }
        check_dim(d, self.b.len())?;
        check_dim(d, self.perm.len())?;
        check_dim(d, self.g.len())?;
        check_dim(d, self.s.len())?;
        if self.b.iter().any(|&v| v != 1.0 && v != -1.0) {
            return Err(Error::invalid("B entries must be ±1"));
        }
        Permutation::from_indices(self.perm.indices().to_vec())?;
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("G entries must be finite"));
        }
        if self.s.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("S entries must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be positive"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn perm(&self) -> &Permutation {
        &self.perm
    }

    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn s(&self) -> &[f64] {
        &self.s
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Bytes held by the parameter arrays.
    pub fn parameter_bytes(&self) -> usize {
        3 * self.d * std::mem::size_of::<f64>() + self.d * std::mem::size_of::<u32>()
    }

    /// `V x` for a vector already padded to the block size.
    pub fn apply_block(&self, x: &PaddedVector) -> Result<Vec<f64>> {
        check_dim(self.d, x.len())?;
        let mut out = vec![0.0; self.d];
        let mut scratch = vec![0.0; self.d];
        self.apply_into(x.values(), &mut out, &mut scratch);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        for ((t, &xi), &bi) in scratch.iter_mut().zip(x).zip(&self.b) {
            *t = bi * xi;
        }
        fwht_unchecked(scratch);
        self.perm.apply(scratch, out);
        for (o, &gi) in out.iter_mut().zip(&self.g) {
            *o *= gi;
        }
        fwht_unchecked(out);
        let scale = 1.0 / (self.sigma * (self.d as f64).sqrt());
        for (o, &si) in out.iter_mut().zip(&self.s) {
            *o *= si * scale;
        }
    }

    /// Dense `H G Π H B`, row-major. Test oracle for `d <= DENSE_MAX_DIM`.
    pub fn unscaled_dense(&self) -> Result<Vec<f64>> {
        let d = self.d;
        if d > DENSE_MAX_DIM {
            return Err(Error::invalid(format!(
                "dense materialization limited to d <= {DENSE_MAX_DIM}"
            )));
        }
        let h = hadamard_matrix(d)?;
        // (Π H B)_{lk} = H_{perm[l], k} b_k
        let mut m = vec![0.0; d * d];
        for j in 0..d {
            for k in 0..d {
                let mut acc = 0.0;
                for l in 0..d {
                    let p = self.perm.indices()[l] as usize;
                    acc += h[j * d + l] * self.g[l] * h[p * d + k];
                }
                m[j * d + k] = acc * self.b[k];
            }
        }
        Ok(m)
    }

    /// Dense `V`, row-major. Test oracle for `d <= DENSE_MAX_DIM`.
    pub fn dense_matrix(&self) -> Result<Vec<f64>> {
        let d = self.d;
        let scale = 1.0 / (self.sigma * (d as f64).sqrt());
        let mut m = self.unscaled_dense()?;
        for (j, row) in m.chunks_exact_mut(d).enumerate() {
            row.iter_mut().for_each(|v| *v *= self.s[j] * scale);
        }
        Ok(m)
    }
}

/// Builds one block for a shift-invariant kernel spec on `d_pad` coordinates,
/// all of which carry data.
pub fn build_block(d_pad: usize, spec: &KernelSpec, seed: SeedSpec) -> Result<FastfoodBlock> {
    let (sigma, law) = row_law(spec, d_pad, d_pad)?;
    build_block_with(d_pad, d_pad, sigma, &law, seed)
}

pub(crate) fn build_block_with(
    d_pad: usize,
    data_dim: usize,
    sigma: f64,
    law: &RowLaw,
    seed: SeedSpec,
) -> Result<FastfoodBlock> {
    if d_pad == 0 || !d_pad.is_power_of_two() {
        return Err(Error::invalid(format!(
            "block size must be a power of two, got {d_pad}"
        )));
    }
    if data_dim == 0 || data_dim > d_pad {
        return Err(Error::invalid(format!(
            "data dimension {data_dim} does not fit a block of size {d_pad}"
        )));
    }
    let b = rademacher_diag(d_pad, seed.child(TAG_B));
    let perm = random_permutation(d_pad, seed.child(TAG_PERM));
    let g = gaussian_diag(d_pad, seed.child(TAG_G));
    let (radii, law_dim) = match law {
        RowLaw::Radial(sampler) => (radial_draws(sampler, d_pad, seed.child(TAG_S))?, sampler.dim()),
        RowLaw::Unit => (vec![1.0; d_pad], data_dim),
    };
    let g_norm = sq_norm(&g).sqrt();
    if !(g_norm > 0.0) {
        return Err(Error::numerical("G diagonal has zero norm"));
    }
    let mut block = FastfoodBlock {
        b,
        perm,
        g,
        s: vec![1.0; d_pad],
        sigma: 1.0,
        d: d_pad,
    };
    let s = if law_dim == d_pad {
        radii.iter().map(|r| r / g_norm).collect()
    } else if law_dim == data_dim {
        // The unscaled block output on e_k is column k of HGΠHB / √d, so the
        // squared restricted row norm divided by d is accumulated here.
        let restricted = restricted_sq_norms(&block, data_dim);
        radii
            .iter()
            .zip(&restricted)
            .map(|(r, q)| {
                if *q > 0.0 {
                    Ok(r / q.sqrt())
                } else {
                    Err(Error::numerical("row vanishes on the data coordinates"))
                }
            })
            .collect::<Result<Vec<f64>>>()?
    } else {
        return Err(Error::invalid(format!(
            "radial law dimension {law_dim} matches neither the data dimension {data_dim} nor the block size {d_pad}"
        )));
    };
    block.s = s;
    block.sigma = sigma;
    block.validate()?;
    Ok(block)
}

/// Squared norms of the block's rows restricted to the first `data_dim` columns.
fn restricted_sq_norms(block: &FastfoodBlock, data_dim: usize) -> Vec<f64> {
    let d = block.d;
    let mut acc = vec![0.0; d];
    let mut e = vec![0.0; d];
    let mut out = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    for k in 0..data_dim {
        e[k] = 1.0;
        block.apply_into(&e, &mut out, &mut scratch);
        e[k] = 0.0;
        for (a, v) in acc.iter_mut().zip(&out) {
            *a += v * v;
        }
    }
    acc
}

fn row_law(spec: &KernelSpec, data_dim: usize, d_pad: usize) -> Result<(f64, RowLaw)> {
    spec.validate()?;
    match spec {
        KernelSpec::Rbf { sigma } => Ok((*sigma, RowLaw::Radial(RadialSampler::ChiRbf { dim: d_pad }))),
        KernelSpec::Matern { sigma, t } => Ok((
            *sigma,
            RowLaw::Radial(RadialSampler::MaternConv {
                dim: data_dim,
                t: *t,
            }),
        )),
        KernelSpec::Spectral { sigma, density } => {
            if density.dim() != data_dim && density.dim() != d_pad {
                return Err(Error::invalid(format!(
                    "tabulated spectrum has dimension {}, data has {data_dim}",
                    density.dim()
                )));
            }
            Ok((*sigma, RowLaw::Radial(RadialSampler::Tabulated(density.clone()))))
        }
        other => Err(Error::invalid(format!(
            "kernel {other:?} is not shift-invariant; use its dedicated feature map"
        ))),
    }
}

fn build_blocks(
    input_dim: usize,
    n: usize,
    sigma: f64,
    law: &RowLaw,
    master_seed: u64,
) -> Result<Vec<FastfoodBlock>> {
    if input_dim == 0 {
        return Err(Error::invalid("input dimension must be positive"));
    }
    if n == 0 {
        return Err(Error::invalid("feature count must be positive"));
    }
    let d_pad = next_pow2(input_dim);
    (0..n.div_ceil(d_pad))
        .map(|i| build_block_with(d_pad, input_dim, sigma, law, SeedSpec::new(master_seed, i as u64)))
        .collect()
}

/// Stacked projections `z = V x`, truncated to `out.len()` rows.
fn project_blocks(blocks: &[FastfoodBlock], input_dim: usize, x: &[f64], out: &mut [f64]) -> Result<()> {
    check_dim(input_dim, x.len())?;
    let d = blocks[0].d;
    let mut padded = vec![0.0; d];
    padded[..input_dim].copy_from_slice(x);
    let mut buf = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    for (block, chunk) in blocks.iter().zip(out.chunks_mut(d)) {
        block.apply_into(&padded, &mut buf, &mut scratch);
        chunk.copy_from_slice(&buf[..chunk.len()]);
    }
    Ok(())
}

/// `n` stacked Fastfood rows for a shift-invariant kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct FastfoodTransform {
    input_dim: usize,
    d_pad: usize,
    n: usize,
    spec: KernelSpec,
    master_seed: u64,
    blocks: Vec<FastfoodBlock>,
}

/// Serialized form of a [`FastfoodTransform`]. Seeds and spec alone rebuild
/// the transform bit for bit; the block arrays are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformRecord {
    pub format: String,
    pub version: u32,
    pub input_dim: usize,
    pub n: usize,
    pub master_seed: u64,
    pub spec: KernelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<FastfoodBlock>>,
}

impl FastfoodTransform {
    /// Builds `ceil(n / d_pad)` blocks with stream ids `0, 1, ...` under
    /// `master_seed`; rows past `n` are dropped.
    pub fn build(input_dim: usize, n: usize, spec: KernelSpec, master_seed: u64) -> Result<Self> {
        let d_pad = next_pow2(input_dim.max(1));
        let (sigma, law) = row_law(&spec, input_dim, d_pad)?;
        let blocks = build_blocks(input_dim, n, sigma, &law, master_seed)?;
        Ok(Self {
            input_dim,
            d_pad,
            n,
            spec,
            master_seed,
            blocks,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn d_pad(&self) -> usize {
        self.d_pad
    }

    /// Number of projections (half the feature length).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn blocks(&self) -> &[FastfoodBlock] {
        &self.blocks
    }

    pub fn parameter_bytes(&self) -> usize {
        self.blocks.iter().map(FastfoodBlock::parameter_bytes).sum()
    }

    /// The `n` projections `V x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.n];
        project_blocks(&self.blocks, self.input_dim, x, &mut out)?;
        Ok(out)
    }

    /// `[cos(Vx); sin(Vx)] / √n`.
    pub fn features(&self, x: &[f64]) -> Result<FeatureVector> {
        self.map(x)
    }

    /// `(1/n) Σ_j cos([V(x - x')]_j)`, equal to `φ(x)·φ(x')`.
    pub fn kernel_estimate(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        check_dim(x.len(), xp.len())?;
        let diff: Vec<f64> = x.iter().zip(xp).map(|(a, b)| a - b).collect();
        let z = self.project(&diff)?;
        Ok(z.iter().map(|v| v.cos()).sum::<f64>() / self.n as f64)
    }

    pub fn to_record(&self, inline_arrays: bool) -> TransformRecord {
        TransformRecord {
            format: RECORD_FORMAT.to_string(),
            version: RECORD_VERSION,
            input_dim: self.input_dim,
            n: self.n,
            master_seed: self.master_seed,
            spec: self.spec.clone(),
            blocks: inline_arrays.then(|| self.blocks.clone()),
        }
    }

    pub fn from_record(record: TransformRecord) -> Result<Self> {
        if record.format != RECORD_FORMAT {
            return Err(Error::Format(format!("unexpected format {:?}", record.format)));
        }
        if record.version != RECORD_VERSION {
            return Err(Error::Format(format!(
                "unsupported record version {}",
                record.version
            )));
        }
        let mut tf = Self::build(record.input_dim, record.n, record.spec, record.master_seed)?;
        if let Some(blocks) = record.blocks {
            check_dim(tf.blocks.len(), blocks.len())?;
            for block in &blocks {
                block.validate().map_err(|e| Error::Format(e.to_string()))?;
                check_dim(tf.d_pad, block.d)?;
            }
            tf.blocks = blocks;
        }
        Ok(tf)
    }

    pub fn to_json(&self, inline_arrays: bool) -> Result<String> {
        serde_json::to_string(&self.to_record(inline_arrays)).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: TransformRecord =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_record(record)
    }
}

impl FeatureMap for FastfoodTransform {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        2 * self.n
    }

    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(2 * self.n, out.len())?;
        let mut z = vec![0.0; self.n];
        project_blocks(&self.blocks, self.input_dim, x, &mut z)?;
        paired_trig(&z, out);
        Ok(())
    }
}

/// Features `n^{-1/2} exp(-(a/2)|x - z_i|²)` with Gaussian anchors
/// `z_i ~ N(0, I/b)` read off the rows of a Fastfood transform.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredFeatures {
    input_dim: usize,
    n: usize,
    a: f64,
    b: f64,
    blocks: Vec<FastfoodBlock>,
    anchor_sq_norms: Vec<f64>,
}

impl AnchoredFeatures {
    pub fn build(input_dim: usize, n: usize, a: f64, b: f64, master_seed: u64) -> Result<Self> {
        KernelSpec::AnchoredGaussian { a, b }.validate()?;
        let d_pad = next_pow2(input_dim.max(1));
        let law = RowLaw::Radial(RadialSampler::ChiRbf { dim: d_pad });
        let blocks = build_blocks(input_dim, n, b.sqrt(), &law, master_seed)?;
        let mut anchor_sq_norms: Vec<f64> = blocks
            .iter()
            .flat_map(|block| restricted_sq_norms(block, input_dim))
            .collect();
        anchor_sq_norms.truncate(n);
        Ok(Self {
            input_dim,
            n,
            a,
            b,
            blocks,
            anchor_sq_norms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> KernelSpec {
        KernelSpec::AnchoredGaussian {
            a: self.a,
            b: self.b,
        }
    }

    /// The anchors as an `n × input_dim` matrix.
    pub fn anchors(&self) -> DMatrix<f64> {
        let mut z = DMatrix::zeros(self.n, self.input_dim);
        let mut e = vec![0.0; self.input_dim];
        let mut col = vec![0.0; self.n];
        for k in 0..self.input_dim {
            e[k] = 1.0;
            project_blocks(&self.blocks, self.input_dim, &e, &mut col)
                .expect("basis vector has the input dimension");
            e[k] = 0.0;
            for (i, v) in col.iter().enumerate() {
                z[(i, k)] = *v;
            }
        }
        z
    }

    pub fn kernel_estimate(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        Ok(self.map(x)?.dot(&self.map(xp)?))
    }
}

impl FeatureMap for AnchoredFeatures {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn output_dim(&self) -> usize {
        self.n
    }

    fn map_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.n, out.len())?;
        project_blocks(&self.blocks, self.input_dim, x, out)?;
        let xx = sq_norm(x);
        let scale = 1.0 / (self.n as f64).sqrt();
        for (o, zz) in out.iter_mut().zip(&self.anchor_sq_norms) {
            *o = scale * (-(self.a / 2.0) * (xx - 2.0 * *o + zz)).exp();
        }
        Ok(())
    }
}
