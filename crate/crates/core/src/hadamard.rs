//! Fast Walsh–Hadamard transform.
//!
//! All routines use the unnormalized Sylvester ordering: `H_1 = [1]`,
//! `H_{2d} = [[H_d, H_d], [H_d, -H_d]]`. Callers apply any `1/sqrt(d)`
//! factors themselves.

use crate::error::{Error, Result};

/// Largest length accepted by [`naive_hadamard`] and [`hadamard_matrix`].
pub const NAIVE_MAX_LEN: usize = 4096;

/// A vector zero-padded to a power-of-two length.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedVector {
    values: Vec<f64>,
    original_len: usize,
}

impl PaddedVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Padded length (a power of two).
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// Applies the FWHT to the padded buffer in place.
    pub fn fwht(mut self) -> Self {
        // Length is a power of two by construction.
        fwht_unchecked(&mut self.values);
        self
    }
}

/// Smallest power of two that is `>= n` (with `next_pow2(0) == 1`).
pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}

fn check_pow2(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "Hadamard transform length must be a power of two, got {len}"
        )));
    }
    Ok(())
}

/// Zero-pads `x` to the next power-of-two length.
pub fn pad_to_pow2(x: &[f64]) -> Result<PaddedVector> {
    if x.is_empty() {
        return Err(Error::invalid("cannot pad an empty vector"));
    }
    let mut values = vec![0.0; next_pow2(x.len())];
    values[..x.len()].copy_from_slice(x);
    Ok(PaddedVector {
        values,
        original_len: x.len(),
    })
}

/// In-place unnormalized Walsh–Hadamard transform, `x <- H_d x`.
pub fn fwht_inplace(x: &mut [f64]) -> Result<()> {
    check_pow2(x.len())?;
    fwht_unchecked(x);
    Ok(())
}

/// Iterative radix-2 butterfly. The length must be a power of two.
pub(crate) fn fwht_unchecked(x: &mut [f64]) {
    let n = x.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for chunk in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let u = *a;
                let v = *b;
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Dense `H_d` in row-major order, built by the Sylvester doubling.
pub fn hadamard_matrix(d: usize) -> Result<Vec<f64>> {
    check_pow2(d)?;
    if d > NAIVE_MAX_LEN {
        return Err(Error::invalid(format!(
            "dense Hadamard limited to {NAIVE_MAX_LEN}, got {d}"
        )));
    }
    let mut h = vec![1.0];
    let mut size = 1;
    while size < d {
        let next = 2 * size;
        let mut grown = vec![0.0; next * next];
        for i in 0..size {
            for j in 0..size {
                let v = h[i * size + j];
                grown[i * next + j] = v;
                grown[i * next + j + size] = v;
                grown[(i + size) * next + j] = v;
                grown[(i + size) * next + j + size] = -v;
            }
        }
        h = grown;
        size = next;
    }
    Ok(h)
}

/// `H_d x` by an explicit dense matrix-vector product. Test oracle only.
pub fn naive_hadamard(x: &[f64]) -> Result<Vec<f64>> {
    let d = x.len();
    let h = hadamard_matrix(d)?;
    Ok(h.chunks_exact(d)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_vector_gives_first_column() {
        let mut x = [1.0, 0.0, 0.0, 0.0];
        fwht_inplace(&mut x).unwrap();
        assert_eq!(x, [1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_point_transform() {
        let mut x = [3.0, 1.0];
        fwht_inplace(&mut x).unwrap();
        assert_eq!(x, [4.0, 2.0]);
        assert_eq!(naive_hadamard(&[1.0, 0.0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(naive_hadamard(&[0.0, 1.0]).unwrap(), vec![1.0, -1.0]);
    }

    #[test]
    fn length_one_is_identity() {
        let mut x = [2.5];
        fwht_inplace(&mut x).unwrap();
        assert_eq!(x, [2.5]);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut x = vec![1.0; 6];
        assert!(matches!(fwht_inplace(&mut x), Err(Error::InvalidArgument(_))));
        assert!(fwht_inplace(&mut []).is_err());
        assert!(naive_hadamard(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn naive_twice_scales_by_d() {
        let x: Vec<f64> = (0..8).map(|i| (i as f64).sin()).collect();
        let twice = naive_hadamard(&naive_hadamard(&x).unwrap()).unwrap();
        for (a, b) in twice.iter().zip(&x) {
            assert!((a - 8.0 * b).abs() < 1e-12);
        }
    }

    #[test]
    fn padding() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let p = pad_to_pow2(&x).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.original_len(), 10);
        assert!(p.values()[10..].iter().all(|&v| v == 0.0));
        let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        assert_eq!(norm(p.values()), norm(&x));

        let y = vec![0.5; 16];
        let q = pad_to_pow2(&y).unwrap();
        assert_eq!(q.values(), &y[..]);
        assert!(pad_to_pow2(&[]).is_err());
    }

    fn pow2_vec() -> impl Strategy<Value = Vec<f64>> {
        (0u32..=10).prop_flat_map(|k| proptest::collection::vec(-10.0f64..10.0, 1usize << k))
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(x in pow2_vec()) {
            let mut fast = x.clone();
            fwht_inplace(&mut fast).unwrap();
            let slow = naive_hadamard(&x).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert!((a - b).abs() <= 1e-9 * x.len() as f64);
            }
        }

        #[test]
        fn involution_and_parseval(x in pow2_vec()) {
            let d = x.len() as f64;
            let mut y = x.clone();
            fwht_inplace(&mut y).unwrap();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            let nx: f64 = x.iter().map(|v| v * v).sum();
            prop_assert!((ny - d * nx).abs() <= 1e-9 * (1.0 + d * nx));
            fwht_inplace(&mut y).unwrap();
            for (a, b) in y.iter().zip(&x) {
                prop_assert!((a - d * b).abs() <= 1e-9 * d * (1.0 + b.abs()));
            }
        }

        #[test]
        fn linear(x in proptest::collection::vec(-5.0f64..5.0, 64),
                  y in proptest::collection::vec(-5.0f64..5.0, 64),
                  a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let mut combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let (mut fx, mut fy) = (x.clone(), y.clone());
            fwht_inplace(&mut combo).unwrap();
            fwht_inplace(&mut fx).unwrap();
            fwht_inplace(&mut fy).unwrap();
            for i in 0..64 {
                let expect = a * fx[i] + b * fy[i];
                prop_assert!((combo[i] - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
            }
        }
    }
}
