//! Radix-2 FFT and spectral differentiation on periodic grids.

use super::{Grid1D, C64};
use crate::{Error, Result};

/// In-place iterative radix-2 transform. `sign = -1` forward, `+1` inverse
/// (without the 1/n factor).
fn transform(buf: &mut [C64], sign: f64) {
    let n = buf.len();
    debug_assert!(n.is_power_of_two());

    // bit-reversal permutation
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let ang = sign * 2.0 * std::f64::consts::PI / len as f64;
        let wlen = C64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = C64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wlen;
            }
            i += len;
        }
        len <<= 1;
    }
}

/// Forward DFT, convention `X_k = sum_j x_j exp(-2 pi i j k / n)`.
pub fn fft(v: &[C64]) -> Vec<C64> {
    let mut out = v.to_vec();
    transform(&mut out, -1.0);
    out
}

/// Inverse DFT (includes the 1/n factor).
pub fn ifft(v: &[C64]) -> Vec<C64> {
    let mut out = v.to_vec();
    transform(&mut out, 1.0);
    let inv = 1.0 / v.len() as f64;
    for z in out.iter_mut() {
        *z *= inv;
    }
    out
}

pub fn fft_in_place(buf: &mut [C64]) {
    transform(buf, -1.0);
}

pub fn ifft_in_place(buf: &mut [C64]) {
    transform(buf, 1.0);
    let inv = 1.0 / buf.len() as f64;
    for z in buf.iter_mut() {
        *z *= inv;
    }
}

/// Spectral derivative of order 1 or 2 with periodic boundary conditions.
///
/// The Nyquist mode is zeroed for odd orders (it carries no well-defined
/// first derivative on a real grid).
pub fn spectral_derivative(v: &[C64], grid: &Grid1D, order: u8) -> Result<Vec<C64>> {
    if v.len() != grid.n_points() {
        return Err(Error::ShapeMismatch(format!(
            "vector length {} does not match grid size {}",
            v.len(),
            grid.n_points()
        )));
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter(format!(
            "derivative order must be 1 or 2, got {order}"
        )));
    }
    let n = grid.n_points();
    let mut hat = fft(v);
    for (j, z) in hat.iter_mut().enumerate() {
        let k = grid.wavenumber(j);
        *z *= match order {
            1 => {
                if j == n / 2 {
                    C64::new(0.0, 0.0)
                } else {
                    C64::new(0.0, k)
                }
            }
            _ => C64::new(-k * k, 0.0),
        };
    }
    Ok(ifft(&hat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::vec_norm;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let grid = Grid1D::new(64, 0.1, 0.0).unwrap();
        let v = vec![c(1.3, -0.4); 64];
        let d = spectral_derivative(&v, &grid, 1).unwrap();
        assert!(vec_norm(&d) < 1e-12);
    }

    #[test]
    fn fourier_mode_is_eigenfunction() {
        let n = 64;
        let dx = 0.37;
        let grid = Grid1D::new(n, dx, 0.0).unwrap();
        let k = 2.0 * std::f64::consts::PI / (n as f64 * dx);
        let v: Vec<C64> = (0..n)
            .map(|i| (C64::new(0.0, k * grid.x(i))).exp())
            .collect();
        let d = spectral_derivative(&v, &grid, 1).unwrap();
        for (a, b) in d.iter().zip(&v) {
            let expect = C64::new(0.0, k) * b;
            assert!((a - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_of_sine() {
        // sin(x) sampled on [0, 2pi): d2/dx2 -> -sin(x)
        let n = 64;
        let dx = 2.0 * std::f64::consts::PI / n as f64;
        let grid = Grid1D::new(n, dx, 0.0).unwrap();
        let v: Vec<C64> = (0..n).map(|i| c(grid.x(i).sin(), 0.0)).collect();
        let d2 = spectral_derivative(&v, &grid, 2).unwrap();
        let max_err = d2
            .iter()
            .zip(&v)
            .map(|(a, b)| (a + b).norm())
            .fold(0.0f64, f64::max);
        assert!(max_err < 1e-10, "max error {max_err:.3e}");
    }

    #[test]
    fn rejects_length_mismatch() {
        let grid = Grid1D::new(64, 0.1, 0.0).unwrap();
        let v = vec![c(1.0, 0.0); 32];
        assert!(spectral_derivative(&v, &grid, 1).is_err());
    }

    proptest! {
        #[test]
        fn parseval_norm_preserved(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let n = 128;
            let v: Vec<C64> = (0..n)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let hat = fft(&v);
            let lhs = vec_norm(&hat) / (n as f64).sqrt();
            let rhs = vec_norm(&v);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn round_trip(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let n = 64;
            let v: Vec<C64> = (0..n)
                .map(|_| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect();
            let back = ifft(&fft(&v));
            let err = v.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0f64, f64::max);
            prop_assert!(err < 1e-12);
        }
    }
}
