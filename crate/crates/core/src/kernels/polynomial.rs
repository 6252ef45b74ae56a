//! Polynomial kernels defined by averaging `<x,v>^p <x',v>^p` over uniform
//! directions `v`, with their Gamma-function closed form.

use statrs::function::gamma::ln_gamma;

use crate::error::{check_dim, Error, Result};
use crate::sampling::{uniform_on_sphere, SeedSpec};
use crate::stats::McEstimate;

use super::sq_norm;

/// Surface area of the unit sphere `S_k ⊂ R^(k+1)`: `2π^((k+1)/2) / Γ((k+1)/2)`.
pub fn sphere_area(k: usize) -> f64 {
    let h = (k as f64 + 1.0) / 2.0;
    2.0 * (h * std::f64::consts::PI.ln() - ln_gamma(h)).exp()
}

fn ln_binomial(p: usize, i: usize) -> f64 {
    ln_gamma(p as f64 + 1.0) - ln_gamma(i as f64 + 1.0) - ln_gamma((p - i) as f64 + 1.0)
}

/// Closed form of `Σ_p c_p |S_{d-1}|⁻¹ ∫ <x,v>^p <x',v>^p dv` for `d >= 4`.
pub fn direct_poly_closed_form(x: &[f64], xp: &[f64], coeffs: &[f64]) -> Result<f64> {
    check_dim(x.len(), xp.len())?;
    let d = x.len();
    if d < 4 {
        return Err(Error::invalid(format!(
            "closed-form polynomial expansion needs d >= 4, got {d}"
        )));
    }
    let (nx, np) = (sq_norm(x).sqrt(), sq_norm(xp).sqrt());
    let theta = if nx > 0.0 && np > 0.0 {
        (x.iter().zip(xp).map(|(a, b)| a * b).sum::<f64>() / (nx * np)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let sine = (1.0 - theta * theta).max(0.0).sqrt();
    let df = d as f64;
    let ratio = sphere_area(d - 3) / sphere_area(d - 1);
    let mut total = 0.0;
    for (p, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let pf = p as f64;
        let mut inner = 0.0;
        for i in (0..=p).step_by(2) {
            let fi = i as f64;
            let ln_mag = ln_binomial(p, i)
                + ln_gamma((2.0 * pf - fi + 1.0) / 2.0)
                + ln_gamma((fi + 1.0) / 2.0)
                + ln_gamma((df - 2.0) / 2.0)
                - ln_gamma((2.0 * pf + df) / 2.0);
            inner += theta.powi((p - i) as i32) * sine.powi(i as i32) * ln_mag.exp();
        }
        total += c * (nx * np).powi(p as i32) * ratio * inner;
    }
    Ok(total)
}

/// Monte Carlo average of `Σ_p c_p <x,v>^p <x',v>^p` over `m` uniform directions.
pub fn direct_poly_mc(
    x: &[f64],
    xp: &[f64],
    coeffs: &[f64],
    m: usize,
    seed: SeedSpec,
) -> Result<McEstimate> {
    check_dim(x.len(), xp.len())?;
    if m < 2 {
        return Err(Error::invalid("need at least two Monte Carlo samples"));
    }
    let mut rng = seed.rng();
    let samples: Vec<f64> = (0..m)
        .map(|_| {
            let v = uniform_on_sphere(x.len(), &mut rng);
            let a: f64 = x.iter().zip(&v).map(|(p, q)| p * q).sum();
            let b: f64 = xp.iter().zip(&v).map(|(p, q)| p * q).sum();
            let prod = a * b;
            let mut pow = 1.0;
            let mut acc = 0.0;
            for &c in coeffs {
                acc += c * pow;
                pow *= prod;
            }
            acc
        })
        .collect();
    Ok(McEstimate::from_samples(&samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(2) - 4.0 * std::f64::consts::PI).abs() < 1e-13);
        assert!((sphere_area(3) - 2.0 * std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn constant_term_is_c0() {
        for d in 4..9 {
            let x = vec![0.3; d];
            let xp = vec![-0.1; d];
            let k = direct_poly_closed_form(&x, &xp, &[2.5]).unwrap();
            assert!((k - 2.5).abs() < 1e-12, "d={d}: {k}");
        }
    }

    #[test]
    fn linear_term_is_scaled_inner_product() {
        // E[<x,v><x',v>] = <x,x'> / d
        let x = [1.0, 2.0, 0.5, -1.0, 0.3];
        let xp = [0.4, -0.3, 1.2, 0.2, 0.9];
        let ip: f64 = x.iter().zip(&xp).map(|(a, b)| a * b).sum();
        let k = direct_poly_closed_form(&x, &xp, &[0.0, 1.0]).unwrap();
        assert!((k - ip / 5.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_term_matches_isotropic_moment() {
        // E[(v·x)²(v·x')²] = (|x|²|x'|² + 2<x,x'>²) / (d(d+2))
        let x = [1.0, 0.0, 0.0, 0.0];
        let xp = [0.6, 0.8, 0.0, 0.0];
        let expect = (1.0 + 2.0 * 0.36) / 24.0;
        let k = direct_poly_closed_form(&x, &xp, &[0.0, 0.0, 1.0]).unwrap();
        assert!((k - expect).abs() < 1e-12);
        let sym = direct_poly_closed_form(&xp, &x, &[0.0, 0.0, 1.0]).unwrap();
        assert!((k - sym).abs() < 1e-15);
    }

    #[test]
    fn low_dimension_rejected() {
        assert!(direct_poly_closed_form(&[1.0; 3], &[1.0; 3], &[1.0]).is_err());
    }

    #[test]
    fn monte_carlo_agrees_with_closed_form() {
        let x = [0.9, 0.2, -0.3, 0.1];
        let xp = [0.5, 0.6, 0.1, -0.2];
        let c = [0.5, 1.0, 1.0];
        let exact = direct_poly_closed_form(&x, &xp, &c).unwrap();
        let mc = direct_poly_mc(&x, &xp, &c, 200_000, SeedSpec::new(1, 2)).unwrap();
        assert!(mc.z_score(exact) < 4.0, "{mc:?} vs {exact}");
    }
}
