//! Exact kernel oracles and kernel descriptions.

mod dotprod;
mod legendre;
mod polynomial;

pub use dotprod::{dotprod_features, dotprod_kernel_estimate, DotProductFeatures};
pub use legendre::{
    count_monomials, gauss_gegenbauer, harmonic_dimension, homogeneous_legendre,
    legendre_coeffs_from_kappa, legendre_eval, LegendreCoeffs, PSD_TOLERANCE,
};
pub use polynomial::{direct_poly_closed_form, direct_poly_mc, sphere_area};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::sampling::TabulatedDensity;

/// Largest scaled distance `|x - x'| / σ` accepted by [`matern_kernel`].
pub const MATERN_MAX_RADIUS: f64 = 30.0;

/// Which kernel a transform approximates or an oracle evaluates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    /// `exp(-|x-x'|² / 2σ²)`.
    Rbf { sigma: f64 },
    /// Spectrum is the `t`-fold convolution of the unit-ball indicator.
    Matern { sigma: f64, t: u32 },
    /// `κ(<x,x'>)` given by its Legendre expansion.
    DotProduct { coeffs: LegendreCoeffs },
    /// `Σ_p c_p E_v[<x,v>^p <x',v>^p]`, `v` uniform on the sphere.
    DirectPoly { coeffs: Vec<f64> },
    /// Gaussian bumps anchored at Gaussian-distributed centers.
    AnchoredGaussian { a: f64, b: f64 },
    /// Rotation-invariant kernel with a tabulated radial spectrum (no exact oracle).
    Spectral { sigma: f64, density: TabulatedDensity },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            KernelSpec::Rbf { sigma } | KernelSpec::Spectral { sigma, .. } if !(*sigma > 0.0) => {
                Err(Error::invalid("sigma must be positive"))
            }
            KernelSpec::Matern { sigma, t } if !(*sigma > 0.0) || *t == 0 => {
                Err(Error::invalid("Matérn needs sigma > 0 and t >= 1"))
            }
            KernelSpec::DirectPoly { coeffs }
                if coeffs.is_empty() || coeffs.iter().any(|c| !(*c >= 0.0)) =>
            {
                Err(Error::invalid("polynomial coefficients must be nonnegative"))
            }
            KernelSpec::AnchoredGaussian { a, b } if !(*a > 0.0 && *b > 0.0) => {
                Err(Error::invalid("anchored template needs a > 0 and b > 0"))
            }
            _ => Ok(()),
        }
    }

    /// Bandwidth for shift-invariant kernels.
    pub fn sigma(&self) -> Option<f64> {
        match self {
            KernelSpec::Rbf { sigma }
            | KernelSpec::Matern { sigma, .. }
            | KernelSpec::Spectral { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    /// Exact kernel value. For the anchored template this is the limit of the
    /// feature inner product, including the Gaussian normalization constant.
    pub fn evaluate(&self, x: &[f64], xp: &[f64]) -> Result<f64> {
        check_dim(x.len(), xp.len())?;
        self.validate()?;
        match self {
            KernelSpec::Rbf { sigma } => Ok(rbf_kernel(x, xp, *sigma)),
            KernelSpec::Matern { sigma, t } => matern_kernel(x, xp, *sigma, *t),
            KernelSpec::DotProduct { coeffs } => {
                check_dim(coeffs.dim(), x.len())?;
                Ok(coeffs.kernel(x, xp))
            }
            KernelSpec::DirectPoly { coeffs } => direct_poly_closed_form(x, xp, coeffs),
            KernelSpec::AnchoredGaussian { a, b } => {
                let norm = (b / (2.0 * a + b)).powf(x.len() as f64 / 2.0);
                Ok(norm * anchored_closed_form(x, xp, *a, *b))
            }
            KernelSpec::Spectral { .. } => Err(Error::invalid(
                "tabulated spectra have no closed-form kernel",
            )),
        }
    }
}

pub(crate) fn sq_dist(x: &[f64], xp: &[f64]) -> f64 {
    x.iter().zip(xp).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub(crate) fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum()
}

/// Gaussian RBF kernel `exp(-|x-x'|² / 2σ²)`.
pub fn rbf_kernel(x: &[f64], xp: &[f64], sigma: f64) -> f64 {
    (-sq_dist(x, xp) / (2.0 * sigma * sigma)).exp()
}

/// `Γ(ν+1) (2/r)^ν J_ν(r)`, the characteristic function of the uniform
/// distribution on the unit ball of `R^(2ν)`; equals 1 at `r = 0`.
pub fn normalized_bessel(nu: f64, r: f64) -> f64 {
    let q = -r * r / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..400 {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (nu + kf + 1.0));
        sum += term;
        if k >= 40 && term.abs() <= 1e-16 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind, by its ascending series.
pub fn bessel_j(nu: f64, r: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    if r == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    let scale = (nu * (r / 2.0).ln() - ln_gamma(nu + 1.0)).exp();
    scale * normalized_bessel(nu, r)
}

/// Matérn-type kernel `(Γ(ν+1) (2/r)^ν J_ν(r))^t` with `ν = d/2` and
/// `r = |x - x'| / σ`, normalized so that `k(x, x) = 1`.
pub fn matern_kernel(x: &[f64], xp: &[f64], sigma: f64, t: u32) -> Result<f64> {
    check_dim(x.len(), xp.len())?;
    if t == 0 || !(sigma > 0.0) {
        return Err(Error::invalid("Matérn needs sigma > 0 and t >= 1"));
    }
    let r = sq_dist(x, xp).sqrt() / sigma;
    if r > MATERN_MAX_RADIUS {
        return Err(Error::OutOfRange(format!(
            "scaled distance {r} exceeds the series budget {MATERN_MAX_RADIUS}"
        )));
    }
    let nu = x.len() as f64 / 2.0;
    Ok(normalized_bessel(nu, r).powi(t as i32))
}

/// Anchored Gaussian template up to its constant factor:
/// `exp(-(a/2)(b/(2a+b))(|x|²+|x'|²) - a²/(4a+2b) |x-x'|²)`.
pub fn anchored_closed_form(x: &[f64], xp: &[f64], a: f64, b: f64) -> f64 {
    let norms = sq_norm(x) + sq_norm(xp);
    (-(a / 2.0) * (b / (2.0 * a + b)) * norms - a * a / (4.0 * a + 2.0 * b) * sq_dist(x, xp)).exp()
}
