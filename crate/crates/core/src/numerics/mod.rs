//! Shared numerical kernels: complex linear algebra, spectral differentiation
//! on periodic grids, Hermitian eigendecomposition, and seedable RNG streams.

pub mod eig;
pub mod fft;
pub mod grid;
pub mod matrix;
pub mod rng;

pub use eig::hermitian_eig;
pub use fft::{fft, ifft, spectral_derivative};
pub use grid::Grid1D;
pub use matrix::CMatrix;
pub use rng::RngStream;

pub type C64 = num_complex::Complex64;

/// 2-norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Inner product `<a|b>` (conjugate-linear in the first argument).
pub fn vec_dot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Normalize a vector in place; errors on zero or non-finite norm.
pub fn normalize(v: &mut [C64]) -> crate::Result<()> {
    let n = vec_norm(v);
    if !n.is_finite() || n < 1e-300 {
        return Err(crate::Error::ZeroNorm);
    }
    let inv = 1.0 / n;
    for z in v.iter_mut() {
        *z *= inv;
    }
    Ok(())
}

pub fn all_finite(v: &[C64]) -> bool {
    v.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}
