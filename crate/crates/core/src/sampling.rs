//! Seeded randomness: counter-based streams, diagonal draws, permutations,
//! radial spectrum samplers and the Legendre degree sampler.
//!
//! Every draw is a pure function of a [`SeedSpec`]. Two streams with the same
//! `(master_seed, stream_id)` produce identical sequences no matter which
//! thread evaluates them or in which order.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::kernels::LegendreCoeffs;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Grid size used by [`TabulatedDensity::from_fn`].
pub const TABULATED_GRID: usize = 4096;

#[inline]
fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

// Odd increment with enough bit transitions (SplittableRandom's mixGamma).
fn mix_gamma(z: u64) -> u64 {
    let mut g = fmix64(z) | 1;
    if (g ^ (g >> 1)).count_ones() < 24 {
        g ^= 0xAAAA_AAAA_AAAA_AAAA;
    }
    g
}

/// Identifies one reproducible random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// A sub-stream keyed by `tag`, independent of the parent and its siblings.
    pub fn child(&self, tag: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: fmix64(self.stream_id ^ fmix64(tag.wrapping_add(GOLDEN))),
        }
    }

    pub fn rng(&self) -> CounterRng {
        CounterRng::new(*self)
    }
}

/// Stateless counter-based generator: the `k`-th output is
/// `fmix64(key + k * gamma)` with `(key, gamma)` derived from the seed.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    gamma: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: SeedSpec) -> Self {
        let s = fmix64(seed.stream_id.wrapping_add(0x632B_E59B_D9B4_E019));
        Self {
            key: fmix64(seed.master_seed ^ s),
            gamma: mix_gamma(s ^ seed.master_seed.rotate_left(17)),
            counter: 0,
        }
    }

    /// Output at an arbitrary position without advancing the stream.
    pub fn at(&self, index: u64) -> u64 {
        fmix64(self.key.wrapping_add(index.wrapping_add(1).wrapping_mul(self.gamma)))
    }

    /// Uniform in the open interval (0, 1).
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// `d` iid signs, each `+1.0` or `-1.0` with probability 1/2.
pub fn rademacher_diag(d: usize, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..d)
        .map(|_| if rng.next_u64() >> 63 == 0 { 1.0 } else { -1.0 })
        .collect()
}

/// `d` iid standard normal draws.
pub fn gaussian_diag(d: usize, seed: SeedSpec) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..d).map(|_| rng.sample(StandardNormal)).collect()
}

/// A permutation stored as an index lookup: `apply` gathers `out[i] = x[idx[i]]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn identity(d: usize) -> Self {
        Permutation((0..d as u32).collect())
    }

    pub fn from_indices(indices: Vec<u32>) -> Result<Self> {
        let mut seen = vec![false; indices.len()];
        for &i in &indices {
            let slot = seen
                .get_mut(i as usize)
                .ok_or_else(|| Error::invalid(format!("index {i} out of range")))?;
            if *slot {
                return Err(Error::invalid(format!("index {i} repeated")));
            }
            *slot = true;
        }
        Ok(Permutation(indices))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p as usize] = i as u32;
        }
        Permutation(inv)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (o, &p) in out.iter_mut().zip(&self.0) {
            *o = x[p as usize];
        }
    }
}

/// Uniformly random permutation of `0..d`, generated by sorting random keys.
pub fn random_permutation(d: usize, seed: SeedSpec) -> Permutation {
    let mut rng = seed.rng();
    let mut keyed: Vec<(u64, u32)> = (0..d as u32).map(|i| (rng.next_u64(), i)).collect();
    keyed.sort_unstable();
    Permutation(keyed.into_iter().map(|(_, i)| i).collect())
}

/// Uniform direction on the unit sphere in `R^dim`.
pub fn uniform_on_sphere<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Uniform point in the unit ball of `R^dim`: sphere direction times `U^(1/dim)`.
pub fn uniform_in_ball<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let dir = uniform_on_sphere(dim, rng);
    let u: f64 = rng.gen();
    let radius = u.powf(1.0 / dim as f64);
    dir.into_iter().map(|a| a * radius).collect()
}

/// Radial density `∝ r^(dim-1) λ(r)` tabulated on a grid, sampled by
/// inverse-CDF linear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedDensity {
    dim: usize,
    radii: Vec<f64>,
    cdf: Vec<f64>,
}

impl TabulatedDensity {
    /// Builds the sampler from the spectral density `lambda[k] = λ(radii[k])`.
    /// `radii` must be strictly increasing and start at or above zero.
    pub fn new(dim: usize, radii: Vec<f64>, lambda: &[f64]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if radii.len() < 2 || radii.len() != lambda.len() {
            return Err(Error::invalid(
                "tabulated density needs at least two grid points and one value per point",
            ));
        }
        if radii[0] < 0.0 || radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("radial grid must be nonnegative and increasing"));
        }
        if lambda.iter().any(|&v| !v.is_finite() || v < 0.0) {
            return Err(Error::invalid("spectral density must be finite and nonnegative"));
        }
        let weight = |k: usize| radii[k].powi(dim as i32 - 1) * lambda[k];
        let mut cdf = Vec::with_capacity(radii.len());
        cdf.push(0.0);
        for k in 1..radii.len() {
            let area = 0.5 * (weight(k - 1) + weight(k)) * (radii[k] - radii[k - 1]);
            cdf.push(cdf[k - 1] + area);
        }
        let total = *cdf.last().unwrap();
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::invalid("radial density is not normalizable"));
        }
        cdf.iter_mut().for_each(|c| *c /= total);
        Ok(Self { dim, radii, cdf })
    }

    /// Tabulates `lambda` on [`TABULATED_GRID`] equispaced points in `[0, r_max]`.
    pub fn from_fn(dim: usize, r_max: f64, lambda: impl Fn(f64) -> f64) -> Result<Self> {
        if !(r_max > 0.0) {
            return Err(Error::invalid("r_max must be positive"));
        }
        let radii: Vec<f64> = (0..TABULATED_GRID)
            .map(|k| r_max * k as f64 / (TABULATED_GRID - 1) as f64)
            .collect();
        let values: Vec<f64> = radii.iter().map(|&r| lambda(r)).collect();
        Self::new(dim, radii, &values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Inverse CDF at `u ∈ [0, 1]`.
    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        if c1 > c0 {
            r0 + (u - c0) / (c1 - c0) * (r1 - r0)
        } else {
            r0
        }
    }

    /// Piecewise-linear CDF matching [`quantile`](Self::quantile).
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.radii[0] {
            return 0.0;
        }
        let k = self.radii.partition_point(|&x| x < r);
        if k >= self.radii.len() {
            return 1.0;
        }
        let (r0, r1) = (self.radii[k - 1], self.radii[k]);
        let t = (r - r0) / (r1 - r0);
        self.cdf[k - 1] + t * (self.cdf[k] - self.cdf[k - 1])
    }
}

/// Radial law of the rows of a spectral sampling matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialSampler {
    /// Norm of a standard Gaussian in `R^dim`: density `∝ r^(dim-1) e^(-r²/2)`.
    ChiRbf { dim: usize },
    /// Norm of the sum of `t` iid uniform points of the unit ball in `R^dim`.
    MaternConv { dim: usize, t: u32 },
    Tabulated(TabulatedDensity),
}

impl RadialSampler {
    pub fn dim(&self) -> usize {
        match self {
            RadialSampler::ChiRbf { dim } | RadialSampler::MaternConv { dim, .. } => *dim,
            RadialSampler::Tabulated(t) => t.dim(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RadialSampler::ChiRbf { dim } if *dim == 0 => {
                Err(Error::invalid("chi sampler needs dim >= 1"))
            }
            RadialSampler::MaternConv { dim, t } if *dim == 0 || *t == 0 => {
                Err(Error::invalid("Matérn sampler needs dim >= 1 and t >= 1"))
            }
            _ => Ok(()),
        }
    }

    /// One draw from the radial law.
    pub fn draw(&self, rng: &mut CounterRng) -> f64 {
        match self {
            RadialSampler::ChiRbf { dim } => (0..*dim)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    z * z
                })
                .sum::<f64>()
                .sqrt(),
            RadialSampler::MaternConv { dim, t } => {
                let mut acc = vec![0.0; *dim];
                for _ in 0..*t {
                    for (a, x) in acc.iter_mut().zip(uniform_in_ball(*dim, rng)) {
                        *a += x;
                    }
                }
                acc.iter().map(|a| a * a).sum::<f64>().sqrt()
            }
            RadialSampler::Tabulated(table) => table.quantile(rng.gen::<f64>()),
        }
    }
}

/// `count` iid draws from `sampler`.
pub fn radial_draws(sampler: &RadialSampler, count: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("draw count must be positive"));
    }
    sampler.validate()?;
    let mut rng = seed.rng();
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

/// Categorical sampler over Legendre degrees with `p(n) ∝ λ_n · dim H_n^d`.
#[derive(Debug, Clone)]
pub struct DegreeSampler {
    cumulative: Vec<f64>,
}

impl DegreeSampler {
    pub fn new(coeffs: &LegendreCoeffs) -> Result<Self> {
        let weights = coeffs.degree_weights()?;
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in weights {
            acc += w;
            cumulative.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::invalid("all Legendre coefficients are zero"));
        }
        cumulative.iter_mut().for_each(|c| *c /= acc);
        Ok(Self { cumulative })
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cumulative
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn draw(&self, rng: &mut CounterRng) -> usize {
        let u: f64 = rng.gen();
        let k = self.cumulative.partition_point(|&c| c <= u);
        // First bucket whose upper edge exceeds u; zero-mass buckets are never chosen.
        k.min(self.cumulative.len() - 1)
    }
}

/// `count` iid degrees with `p(n) ∝ λ_n · dim H_n^d`.
pub fn degree_sampler(coeffs: &LegendreCoeffs, count: usize, seed: SeedSpec) -> Result<Vec<usize>> {
    let sampler = DegreeSampler::new(coeffs)?;
    let mut rng = seed.rng();
    Ok((0..count).map(|_| sampler.draw(&mut rng)).collect())
}

/// Deterministic standard-normal value for matrix cell `(i, j)`.
///
/// The cell is hashed to a uniform in (0, 1), then mapped through the normal
/// quantile function. No state is kept; identical inputs give identical output.
pub fn hashed_gaussian(i: u64, j: u64, master_seed: u64) -> f64 {
    let h = fmix64(
        fmix64(master_seed ^ i.wrapping_mul(0xD6E8_FEB8_6659_FD93))
            .wrapping_add(fmix64(j.wrapping_add(GOLDEN).wrapping_mul(0xA076_1D64_78BD_642F))),
    );
    let u = ((h >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
    standard_normal_quantile(u)
}

pub(crate) fn standard_normal_quantile(u: f64) -> f64 {
    thread_local! {
        static STD: Normal = Normal::new(0.0, 1.0).expect("unit normal");
    }
    STD.with(|n| n.inverse_cdf(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chi_cdf, ks_test, mean, variance};

    fn seed(s: u64) -> SeedSpec {
        SeedSpec::new(42, s)
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = {
            let mut r = seed(1).rng();
            (0..16).map(|_| r.next_u64()).collect()
        };
        let b: Vec<u64> = {
            let mut r = seed(1).rng();
            (0..16).map(|_| r.next_u64()).collect()
        };
        let c: Vec<u64> = {
            let mut r = seed(2).rng();
            (0..16).map(|_| r.next_u64()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(seed(1).rng().at(5), a[5]);
    }

    #[test]
    fn uniform_is_open_interval() {
        let mut r = seed(3).rng();
        for _ in 0..10_000 {
            let u = r.next_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn rademacher_balanced_and_deterministic() {
        let b = rademacher_diag(100_000, seed(4));
        assert!(b.iter().all(|&v| v == 1.0 || v == -1.0));
        let m = mean(&b);
        assert!(m.abs() <= 0.02, "mean {m}");
        assert_eq!(b, rademacher_diag(100_000, seed(4)));
        let one = rademacher_diag(1, seed(5));
        assert!(one[0] == 1.0 || one[0] == -1.0);
    }

    #[test]
    fn gaussian_moments() {
        let g = gaussian_diag(1_000_000, seed(6));
        let v = variance(&g);
        assert!((v - 1.0).abs() <= 0.01, "variance {v}");
        let m4 = g.iter().map(|x| x.powi(4)).sum::<f64>() / g.len() as f64;
        assert!((m4 - 3.0).abs() <= 0.1, "fourth moment {m4}");
        assert_eq!(gaussian_diag(10, seed(6)), g[..10].to_vec());
    }

    #[test]
    fn permutation_bijection_and_inverse() {
        let p = random_permutation(257, seed(7));
        let mut sorted: Vec<u32> = p.indices().to_vec();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..257).collect::<Vec<u32>>());
        let x: Vec<f64> = (0..257).map(f64::from).collect();
        let mut y = vec![0.0; 257];
        let mut z = vec![0.0; 257];
        p.apply(&x, &mut y);
        p.inverse().apply(&y, &mut z);
        assert_eq!(x, z);
        assert!(Permutation::from_indices(vec![0, 0]).is_err());
        assert!(Permutation::from_indices(vec![2, 0]).is_err());
    }

    #[test]
    fn permutations_of_three_are_uniform() {
        let mut counts = std::collections::HashMap::new();
        for s in 0..60_000u64 {
            *counts
                .entry(random_permutation(3, SeedSpec::new(9, s)).indices().to_vec())
                .or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        for (perm, c) in counts {
            assert!((c as i64 - 10_000).abs() <= 400, "{perm:?}: {c}");
        }
    }

    #[test]
    fn chi_radial_moments() {
        let r = radial_draws(&RadialSampler::ChiRbf { dim: 16 }, 100_000, seed(10)).unwrap();
        let ms = r.iter().map(|a| a * a).sum::<f64>() / r.len() as f64;
        assert!((ms - 16.0).abs() <= 0.2, "mean square {ms}");

        let r1 = radial_draws(&RadialSampler::ChiRbf { dim: 1 }, 100_000, seed(11)).unwrap();
        let expect = (2.0 / std::f64::consts::PI).sqrt();
        assert!((mean(&r1) / expect - 1.0).abs() <= 0.01);
    }

    #[test]
    fn matern_radial_moment() {
        let s = RadialSampler::MaternConv { dim: 4, t: 3 };
        let r = radial_draws(&s, 100_000, seed(12)).unwrap();
        let ms = r.iter().map(|a| a * a).sum::<f64>() / r.len() as f64;
        assert!((ms / 2.0 - 1.0).abs() <= 0.02, "mean square {ms}");
        assert!(r.iter().all(|&v| v >= 0.0 && v <= 3.0));
    }

    #[test]
    fn ks_against_analytic_cdfs() {
        let chi = radial_draws(&RadialSampler::ChiRbf { dim: 5 }, 10_000, seed(13)).unwrap();
        let p = ks_test(&chi, |r| chi_cdf(5, r)).p_value;
        assert!(p > 0.001, "chi p = {p}");

        let ball = radial_draws(&RadialSampler::MaternConv { dim: 3, t: 1 }, 10_000, seed(14)).unwrap();
        let p = ks_test(&ball, |r| r.clamp(0.0, 1.0).powi(3)).p_value;
        assert!(p > 0.001, "ball p = {p}");

        // Tabulated half-normal spectrum in one dimension matches |N(0,1)|.
        let table = TabulatedDensity::from_fn(1, 8.0, |r| (-0.5 * r * r).exp()).unwrap();
        let draws = radial_draws(&RadialSampler::Tabulated(table), 10_000, seed(15)).unwrap();
        let p = ks_test(&draws, |r| chi_cdf(1, r)).p_value;
        assert!(p > 0.001, "tabulated p = {p}");
    }

    #[test]
    fn tabulated_validation() {
        assert!(TabulatedDensity::new(2, vec![0.0, 1.0], &[1.0, -1.0]).is_err());
        assert!(TabulatedDensity::new(2, vec![0.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(TabulatedDensity::new(2, vec![1.0, 0.5], &[1.0, 1.0]).is_err());
        assert!(TabulatedDensity::new(2, vec![0.0, 1.0], &[f64::INFINITY, 1.0]).is_err());
        let t = TabulatedDensity::new(1, vec![0.0, 2.0], &[1.0, 1.0]).unwrap();
        assert!((t.quantile(0.25) - 0.5).abs() < 1e-12);
        assert!((t.cdf(1.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degree_sampler_cases() {
        let only0 = LegendreCoeffs::new(3, vec![1.0]).unwrap();
        assert!(degree_sampler(&only0, 100, seed(16)).unwrap().iter().all(|&n| n == 0));

        let only5 = LegendreCoeffs::new(4, vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0]).unwrap();
        assert!(degree_sampler(&only5, 100, seed(17)).unwrap().iter().all(|&n| n == 5));

        let two = LegendreCoeffs::new(3, vec![1.0, 1.0]).unwrap();
        let draws = degree_sampler(&two, 10_000, seed(18)).unwrap();
        let freq = draws.iter().filter(|&&n| n == 1).count() as f64 / 1e4;
        assert!((freq - 0.75).abs() <= 0.01, "p(1) = {freq}");
    }

    #[test]
    fn hashed_gaussian_properties() {
        assert_eq!(hashed_gaussian(3, 7, 11), hashed_gaussian(3, 7, 11));
        assert_ne!(hashed_gaussian(3, 7, 11), hashed_gaussian(7, 3, 11));

        let vals: Vec<f64> = (0..1000u64)
            .flat_map(|i| (0..1000u64).map(move |j| hashed_gaussian(i, j, 5)))
            .collect();
        assert!((variance(&vals) - 1.0).abs() <= 0.01);

        let (mut a, mut b) = (Vec::new(), Vec::new());
        for k in 0..100_000u64 {
            let (i, j) = (k / 317, 1000 + k % 317);
            a.push(hashed_gaussian(i, j, 5));
            b.push(hashed_gaussian(j, i, 5));
        }
        let rho = crate::stats::correlation(&a, &b);
        assert!(rho.abs() < 0.01, "rho = {rho}");
    }
}
