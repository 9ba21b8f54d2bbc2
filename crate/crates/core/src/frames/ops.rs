//! Reusable event unitaries for measurement chains.

use crate::numerics::{vec_dot, CMatrix, C64};
use crate::{Error, Result};

/// Measurement-style unitary on (system, device): the device (neutral state
/// 0) is cyclically shifted by 1 + outcome, controlled on the projectors of
/// the given orthonormal `outcome_states` in the system factor. System
/// directions outside the outcome set leave the device untouched, so the
/// matrix is unitary for any partial isometry of outcomes.
///
/// Index convention: (system, device) pair ordered system-major, matching
/// event targets `[system..., device]`.
pub fn measurement_unitary(
    sys_dim: usize,
    dev_dim: usize,
    outcome_states: &[Vec<C64>],
) -> Result<CMatrix> {
    if outcome_states.len() + 1 > dev_dim {
        return Err(Error::InvalidParameter(format!(
            "{} outcomes need device dimension at least {}",
            outcome_states.len(),
            outcome_states.len() + 1
        )));
    }
    for (i, a) in outcome_states.iter().enumerate() {
        if a.len() != sys_dim {
            return Err(Error::ShapeMismatch("outcome state length".into()));
        }
        for (j, b) in outcome_states.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            if (vec_dot(a, b) - C64::new(expect, 0.0)).norm() > 1e-10 {
                return Err(Error::NotOrthonormal(
                    (vec_dot(a, b) - C64::new(expect, 0.0)).norm(),
                ));
            }
        }
    }
    let dim = sys_dim * dev_dim;
    let mut u = CMatrix::zeros(dim, dim);
    // complement of the outcome projectors: device untouched
    let mut residual = CMatrix::identity(sys_dim);
    for state in outcome_states {
        residual.axpy(C64::new(-1.0, 0.0), &CMatrix::outer(state, state));
    }
    for si in 0..sys_dim {
        for sj in 0..sys_dim {
            let p = residual[(si, sj)];
            if p != C64::new(0.0, 0.0) {
                for d in 0..dev_dim {
                    u[(si * dev_dim + d, sj * dev_dim + d)] += p;
                }
            }
        }
    }
    for (outcome, state) in outcome_states.iter().enumerate() {
        for si in 0..sys_dim {
            for sj in 0..sys_dim {
                let p = state[si] * state[sj].conj();
                if p != C64::new(0.0, 0.0) {
                    for d in 0..dev_dim {
                        let shifted = (d + 1 + outcome) % dev_dim;
                        u[(si * dev_dim + shifted, sj * dev_dim + d)] += p;
                    }
                }
            }
        }
    }
    u.check_unitary(1e-10)?;
    Ok(u)
}

/// Measurement of a full orthonormal basis given as matrix columns.
pub fn basis_measurement_unitary(
    sys_dim: usize,
    dev_dim: usize,
    basis: &CMatrix,
) -> Result<CMatrix> {
    let states: Vec<Vec<C64>> = (0..basis.cols()).map(|j| basis.column(j)).collect();
    measurement_unitary(sys_dim, dev_dim, &states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::matrix::random_unitary;
    use crate::numerics::RngStream;

    #[test]
    fn full_basis_measurement_is_unitary() {
        let mut rng = RngStream::new(3, 0);
        for sys_dim in [2usize, 3] {
            let b = random_unitary(sys_dim, &mut rng);
            let u = basis_measurement_unitary(sys_dim, sys_dim + 1, &b).unwrap();
            u.check_unitary(1e-10).unwrap();
        }
    }

    #[test]
    fn partial_outcome_set_is_unitary() {
        // two outcome states inside a 6-dimensional factor
        let mut rng = RngStream::new(4, 0);
        let u6 = random_unitary(6, &mut rng);
        let states = vec![u6.column(0), u6.column(1)];
        let u = measurement_unitary(6, 3, &states).unwrap();
        u.check_unitary(1e-10).unwrap();
    }

    #[test]
    fn device_records_the_outcome() {
        // measuring |1> in the computational basis flips device 0 -> 2
        let basis = CMatrix::identity(2);
        let u = basis_measurement_unitary(2, 3, &basis).unwrap();
        // input (sys=1, dev=0) -> index 3; output should be (1, dev=2) -> 5
        assert!((u[(5, 3)] - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn too_many_outcomes_rejected() {
        let basis = CMatrix::identity(3);
        assert!(basis_measurement_unitary(3, 3, &basis).is_err());
    }
}
