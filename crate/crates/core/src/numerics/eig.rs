//! Hermitian eigendecomposition via cyclic complex Jacobi rotations.
//!
//! Deterministic (no pivoting on floating-point ties beyond fixed sweep
//! order), which keeps golden-value tests stable across runs.

use super::{CMatrix, C64};
use crate::{Error, Result};

const HERM_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a Hermitian matrix.
///
/// Returns eigenvalues sorted ascending and the unitary matrix of
/// eigenvectors (as columns), with each column's largest-magnitude component
/// rotated to be real positive. `m = U diag(lambda) U^H` to ~1e-12.
pub fn hermitian_eig(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition of {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    m.check_hermitian(HERM_TOL.max(1e-10 * m.max_abs_entry()))?;

    let n = m.rows();
    // Work on the Hermitian average to wash out representation asymmetry.
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)].conj());
        }
    }
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm().max(1e-300);

    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i theta}
                let phase_m = phase.conj();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // column rotation: A <- A R
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = c * aip - s * phase_m * aiq;
                    a[(i, q)] = s * aip + c * phase_m * aiq;
                }
                // row rotation: A <- R^H A
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = c * apj - s * phase * aqj;
                    a[(q, j)] = s * apj + c * phase * aqj;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);

                // accumulate eigenvectors: V <- V R
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * phase_m * viq;
                    v[(i, q)] = s * vip + c * phase_m * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());

    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        let mut col = v.column(old_col);
        // phase convention: largest-magnitude component real positive
        let mut best = 0usize;
        let mut best_mag = 0.0f64;
        for (i, z) in col.iter().enumerate() {
            let mag = z.norm();
            if mag > best_mag + 1e-14 {
                best_mag = mag;
                best = i;
            }
        }
        if best_mag > 0.0 {
            let ph = col[best] / best_mag;
            let corr = ph.conj();
            for z in col.iter_mut() {
                *z *= corr;
            }
        }
        vectors.set_column(new_col, &col);
    }

    Ok((eigenvalues, vectors))
}

/// Eigenvalues only (ascending).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eig(m).map(|(vals, _)| vals)
}
