//! Legendre polynomials in `d` dimensions (Gegenbauer polynomials normalized
//! to `L_{n,d}(1) = 1`), harmonic-space dimensions, and expansion of a
//! dot-product kernel profile `κ(ξ)` into Legendre coefficients.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

const ARG_SLACK: f64 = 1e-12;
/// Coefficients below `-PSD_TOLERANCE` reject the kernel as indefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// `L_{n,d}(t)` by the three-term recurrence
/// `L_{k+1} = [(2k+d-2) t L_k - k L_{k-1}] / (k+d-2)`.
pub fn legendre_eval(n: usize, d: usize, t: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("Legendre dimension must be >= 2, got {d}")));
    }
    if !(t.abs() <= 1.0 + ARG_SLACK) {
        return Err(Error::invalid(format!("Legendre argument {t} outside [-1, 1]")));
    }
    Ok(legendre_unchecked(n, d, t.clamp(-1.0, 1.0)))
}

pub(crate) fn legendre_unchecked(n: usize, d: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let dd = d as f64;
    let (mut prev, mut cur) = (1.0, t);
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + dd - 2.0) * t * cur - kf * prev) / (kf + dd - 2.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// `r^n L_{n,d}(t / r)`, the homogeneous extension used by the feature map.
pub fn homogeneous_legendre(n: usize, d: usize, tcoord: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    if tcoord.abs() > r * (1.0 + ARG_SLACK) {
        return Err(Error::invalid(format!("|{tcoord}| exceeds radius {r}")));
    }
    let l = legendre_eval(n, d, (tcoord / r).clamp(-1.0, 1.0))?;
    Ok(r.powi(n as i32) * l)
}

/// Number of linearly independent homogeneous polynomials of degree `n` in
/// `d` variables, `(d+n-1)! / (n! (d-1)!)`.
pub fn count_monomials(d: usize, n: usize) -> Result<u64> {
    if d == 0 {
        return Err(Error::invalid("dimension must be >= 1"));
    }
    // C(d+n-1, n) = prod_{i=1..k} (m - k + i) / i with k = min(n, d-1).
    let m = (d + n - 1) as u128;
    let k = n.min(d - 1) as u128;
    let mut acc: u128 = 1;
    for i in 1..=k {
        acc = acc
            .checked_mul(m - k + i)
            .ok_or_else(|| Error::Overflow(format!("N({d}, {n})")))?
            / i;
    }
    u64::try_from(acc).map_err(|_| Error::Overflow(format!("N({d}, {n}) exceeds 64 bits")))
}

/// Dimension of the space of degree-`n` spherical harmonics on `S^{d-1}`:
/// `N(d, n) - N(d, n-2)`.
pub fn harmonic_dimension(d: usize, n: usize) -> Result<u64> {
    let total = count_monomials(d, n)?;
    if n < 2 {
        Ok(total)
    } else {
        Ok(total - count_monomials(d, n - 2)?)
    }
}

/// Gauss quadrature for the weight `(1-t²)^((d-3)/2)` on `[-1, 1]`,
/// exact for polynomials of degree `< 2 * nodes`.
pub fn gauss_gegenbauer(nodes: usize, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if nodes == 0 || d < 2 {
        return Err(Error::invalid("quadrature needs nodes >= 1 and d >= 2"));
    }
    if d == 2 {
        // Chebyshev weight (1-t²)^(-1/2) has closed-form nodes.
        let w = std::f64::consts::PI / nodes as f64;
        let x = (1..=nodes)
            .map(|k| ((2 * k - 1) as f64 * std::f64::consts::PI / (2 * nodes) as f64).cos())
            .collect();
        return Ok((x, vec![w; nodes]));
    }
    // Golub–Welsch on the symmetric Jacobi matrix of the monic recurrence.
    let lam = (d as f64 - 2.0) / 2.0;
    let mut jm = DMatrix::zeros(nodes, nodes);
    for k in 1..nodes {
        let kf = k as f64;
        let beta = kf * (kf + 2.0 * lam - 1.0) / (4.0 * (kf + lam) * (kf + lam - 1.0));
        jm[(k, k - 1)] = beta.sqrt();
        jm[(k - 1, k)] = beta.sqrt();
    }
    let mu0 = (std::f64::consts::PI.sqrt().ln() + ln_gamma(lam + 0.5) - ln_gamma(lam + 1.0)).exp();
    let eig = jacobi_eigen(&jm)?;
    let weights = (0..nodes).map(|j| mu0 * eig.vectors[(0, j)].powi(2)).collect();
    Ok((eig.values, weights))
}

/// Legendre expansion `κ(ξ) = Σ_n λ_n L_{n,d}(ξ)` of a dot-product kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendreCoeffs {
    d: usize,
    lambda: Vec<f64>,
    z: f64,
}

impl LegendreCoeffs {
    pub fn new(d: usize, lambda: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::invalid("Legendre dimension must be >= 2"));
        }
        if let Some((n, v)) = lambda
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::invalid(format!(
                "λ_{n} = {v} is negative; the kernel is not positive semidefinite"
            )));
        }
        let mut z = 0.0;
        for (n, &l) in lambda.iter().enumerate() {
            if l > 0.0 {
                z += l * harmonic_dimension(d, n)? as f64;
            }
        }
        if !(z > 0.0) {
            return Err(Error::invalid("all Legendre coefficients are zero"));
        }
        Ok(Self { d, lambda, z })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn max_degree(&self) -> usize {
        self.lambda.len().saturating_sub(1)
    }

    /// Normalization `Z = Σ_n λ_n dim H_n^d`.
    pub fn normalization(&self) -> f64 {
        self.z
    }

    /// Unnormalized degree masses `λ_n dim H_n^d`.
    pub fn degree_weights(&self) -> Result<Vec<f64>> {
        self.lambda
            .iter()
            .enumerate()
            .map(|(n, &l)| {
                if l == 0.0 {
                    Ok(0.0)
                } else {
                    Ok(l * harmonic_dimension(self.d, n)? as f64)
                }
            })
            .collect()
    }

    /// `κ(ξ)` reconstructed from the coefficients.
    pub fn profile(&self, xi: f64) -> f64 {
        let xi = xi.clamp(-1.0, 1.0);
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0.0)
            .map(|(n, &l)| l * legendre_unchecked(n, self.d, xi))
            .sum()
    }

    /// `Σ_n λ_n |x|^n |x'|^n L_{n,d}(cos θ)`.
    pub fn kernel(&self, x: &[f64], xp: &[f64]) -> f64 {
        let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let np = xp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if nx == 0.0 || np == 0.0 {
            return self.lambda.first().copied().unwrap_or(0.0);
        }
        let cos = (x.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>() / (nx * np)).clamp(-1.0, 1.0);
        self.lambda
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != 0.0)
            .map(|(n, &l)| l * (nx * np).powi(n as i32) * legendre_unchecked(n, self.d, cos))
            .sum()
    }
}

impl fmt::Display for LegendreCoeffs {
    /// Plain text: the dimension on the first line, then one `λ_n` per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.d)?;
        for l in &self.lambda {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

impl FromStr for LegendreCoeffs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut tokens = s.split_whitespace();
        let d = tokens
            .next()
            .ok_or_else(|| Error::Format("missing dimension".into()))?
            .parse::<usize>()
            .map_err(|e| Error::Format(format!("dimension: {e}")))?;
        let lambda = tokens
            .map(|t| t.parse::<f64>().map_err(|e| Error::Format(format!("coefficient {t:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        LegendreCoeffs::new(d, lambda)
    }
}

/// Projects `kappa` onto `L_{0,d} .. L_{P,d}` under the weight
/// `(1-t²)^((d-3)/2)` with a `4(P+1)`-node Gauss rule.
pub fn legendre_coeffs_from_kappa(
    kappa: impl Fn(f64) -> f64,
    d: usize,
    max_degree: usize,
) -> Result<LegendreCoeffs> {
    let (nodes, weights) = gauss_gegenbauer(4 * (max_degree + 1), d)?;
    let values: Vec<f64> = nodes.iter().map(|&t| kappa(t)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("kappa is not finite on [-1, 1]"));
    }
    let mut lambda = Vec::with_capacity(max_degree + 1);
    for n in 0..=max_degree {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&t, &w), &k) in nodes.iter().zip(&weights).zip(&values) {
            let l = legendre_unchecked(n, d, t);
            num += w * k * l;
            den += w * l * l;
        }
        lambda.push(num / den);
    }
    let scale = lambda.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (n, l) in lambda.iter_mut().enumerate() {
        if *l < -PSD_TOLERANCE * scale.max(1.0) {
            return Err(Error::invalid(format!(
                "λ_{n} = {l:e} < 0: kernel is not positive semidefinite"
            )));
        }
        if l.abs() <= 1e-12 * scale.max(1.0) {
            *l = 0.0;
        }
    }
    LegendreCoeffs::new(d, lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn low_degrees() {
        for d in [2, 3, 5, 10] {
            for t in [-1.0, -0.3, 0.0, 0.7, 1.0] {
                assert_eq!(legendre_eval(0, d, t).unwrap(), 1.0);
                assert_eq!(legendre_eval(1, d, t).unwrap(), t);
                let l2 = (d as f64 * t * t - 1.0) / (d as f64 - 1.0);
                assert!(close(legendre_eval(2, d, t).unwrap(), l2, 1e-14));
            }
        }
        assert!(close(legendre_eval(2, 3, 0.5).unwrap(), -0.125, 1e-15));
    }

    #[test]
    fn normalized_at_one() {
        for d in 2..8 {
            for n in 0..12 {
                assert!(close(legendre_eval(n, d, 1.0).unwrap(), 1.0, 1e-12));
            }
        }
    }

    #[test]
    fn three_dimensions_is_classical_legendre() {
        for k in 0..20 {
            let t = -1.0 + 2.0 * k as f64 / 19.0;
            let p3 = (5.0 * t.powi(3) - 3.0 * t) / 2.0;
            assert!(close(legendre_eval(3, 3, t).unwrap(), p3, 1e-14));
        }
    }

    #[test]
    fn two_dimensions_is_chebyshev() {
        for k in 0..10 {
            let t: f64 = -0.95 + 0.2 * k as f64;
            let th = t.acos();
            for n in 0..8 {
                assert!(close(legendre_eval(n, 2, t).unwrap(), (n as f64 * th).cos(), 1e-12));
            }
        }
    }

    #[test]
    fn argument_checks() {
        assert!(legendre_eval(2, 3, 1.0 + 1e-13).is_ok());
        assert!(legendre_eval(2, 3, 1.01).is_err());
        assert!(legendre_eval(2, 1, 0.5).is_err());
        assert!(homogeneous_legendre(2, 3, 0.0, 0.0).is_err());
        assert!(homogeneous_legendre(2, 3, 3.0, 2.0).is_err());
    }

    #[test]
    fn homogeneous_extension() {
        assert_eq!(homogeneous_legendre(0, 4, 0.3, 7.0).unwrap(), 1.0);
        assert!(close(homogeneous_legendre(1, 4, 0.3, 7.0).unwrap(), 0.3, 1e-15));
        assert!(close(homogeneous_legendre(2, 3, 1.0, 2.0).unwrap(), -0.5, 1e-15));
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(count_monomials(7, 0).unwrap(), 1);
        assert_eq!(count_monomials(3, 2).unwrap(), 6);
        assert_eq!(count_monomials(1, 40).unwrap(), 1);
        assert_eq!(count_monomials(10, 3).unwrap(), 220);
        assert!(matches!(count_monomials(1000, 1000), Err(Error::Overflow(_))));
        assert_eq!(harmonic_dimension(3, 2).unwrap(), 5);
        assert_eq!(harmonic_dimension(3, 4).unwrap(), 9);
        assert_eq!(harmonic_dimension(2, 5).unwrap(), 2);
        assert_eq!(harmonic_dimension(5, 1).unwrap(), 5);
    }

    #[test]
    fn quadrature_integrates_weight_moments() {
        // ∫ t² (1-t²)^((d-3)/2) dt = B(3/2, (d-1)/2)
        for d in [2usize, 3, 4, 6, 9] {
            let (x, w) = gauss_gegenbauer(12, d).unwrap();
            let a = (d as f64 - 1.0) / 2.0;
            let beta = (ln_gamma(1.5) + ln_gamma(a) - ln_gamma(1.5 + a)).exp();
            let q: f64 = x.iter().zip(&w).map(|(t, w)| w * t * t).sum();
            assert!(close(q, beta, 1e-12), "d={d}: {q} vs {beta}");
        }
    }

    #[test]
    fn weighted_orthogonality() {
        for d in [3usize, 4, 6] {
            let (x, w) = gauss_gegenbauer(40, d).unwrap();
            for m in 0..=8 {
                for n in 0..m {
                    let ip: f64 = x
                        .iter()
                        .zip(&w)
                        .map(|(&t, &w)| w * legendre_unchecked(m, d, t) * legendre_unchecked(n, d, t))
                        .sum();
                    assert!(ip.abs() <= 1e-8, "d={d} m={m} n={n}: {ip}");
                }
            }
        }
    }

    #[test]
    fn expansions_of_simple_profiles() {
        let c = legendre_coeffs_from_kappa(|_| 1.0, 5, 4).unwrap();
        assert!(close(c.lambda()[0], 1.0, 1e-12));
        assert!(c.lambda()[1..].iter().all(|&l| l == 0.0));

        let c = legendre_coeffs_from_kappa(|t| t, 4, 4).unwrap();
        assert!(close(c.lambda()[1], 1.0, 1e-12));
        assert_eq!(c.lambda()[0], 0.0);

        let c = legendre_coeffs_from_kappa(|t| t * t, 3, 4).unwrap();
        assert!(close(c.lambda()[0], 1.0 / 3.0, 1e-12));
        assert!(close(c.lambda()[2], 2.0 / 3.0, 1e-12));
        assert!(close(c.normalization(), 1.0 / 3.0 + 2.0 / 3.0 * 5.0, 1e-12));
        assert!(close(c.profile(0.3), 0.09, 1e-12));

        // 2-D uses the Chebyshev weight.
        let c = legendre_coeffs_from_kappa(|t| t * t, 2, 3).unwrap();
        assert!(close(c.lambda()[0], 0.5, 1e-12) && close(c.lambda()[2], 0.5, 1e-12));
    }

    #[test]
    fn indefinite_profile_rejected() {
        assert!(legendre_coeffs_from_kappa(|t| -t * t, 3, 4).is_err());
        assert!(LegendreCoeffs::new(3, vec![1.0, -0.5]).is_err());
        assert!(LegendreCoeffs::new(3, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let c = LegendreCoeffs::new(6, vec![0.25, 0.0, 1.5e-3]).unwrap();
        let text = c.to_string();
        assert!(text.starts_with("6\n"));
        assert_eq!(text.parse::<LegendreCoeffs>().unwrap(), c);
        assert!("".parse::<LegendreCoeffs>().is_err());
        assert!("3\n0.5\nx".parse::<LegendreCoeffs>().is_err());
    }
}
