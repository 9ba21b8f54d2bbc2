//! Direct integration of the unconditioned master equation for the
//! monitored particle,
//! d rho/dt = -i [p^2/2M + V, rho] + lambda [[x, rho], x],
//! on small position grids. Serves as the ensemble-average oracle for the
//! stochastic trajectories.

use crate::localization::LocalizationParams;
use crate::numerics::{eig::hermitian_eigenvalues, fft, CMatrix, Grid1D, C64};
use crate::{Error, Result};

const HERM_TOL: f64 = 1e-9;
const TRACE_TOL: f64 = 1e-9;
const POSITIVITY_FLOOR: f64 = -1e-8;

/// Basis the density matrix is expressed in.
#[derive(Clone, Debug, PartialEq)]
pub enum Basis {
    PositionGrid(Grid1D),
    Finite(usize),
}

/// Hermitian, trace-one density matrix with a basis descriptor.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    mat: CMatrix,
    basis: Basis,
}

impl DensityMatrix {
    pub fn new(mat: CMatrix, basis: Basis) -> Result<Self> {
        let dim = match &basis {
            Basis::PositionGrid(g) => g.n_points(),
            Basis::Finite(d) => *d,
        };
        if !mat.is_square() || mat.rows() != dim {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} density matrix for basis dimension {dim}",
                mat.rows(),
                mat.cols()
            )));
        }
        let rho = Self { mat, basis };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_pure(psi: &crate::localization::WaveFunction) -> Self {
        Self {
            mat: psi.density(),
            basis: Basis::PositionGrid(*psi.grid()),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn purity(&self) -> f64 {
        self.mat.frobenius_dot(&self.mat).re
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let vals = hermitian_eigenvalues(&self.mat)?;
        Ok(vals[0])
    }

    /// Hermiticity and unit trace within 1e-9; call `check_positivity` for
    /// the (more expensive) spectral floor.
    pub fn validate(&self) -> Result<()> {
        let h = self.mat.hermiticity_defect();
        if h > HERM_TOL {
            return Err(Error::DensityInvariantViolated(format!(
                "hermiticity defect {h:.3e}"
            )));
        }
        let t = self.trace();
        if (t - 1.0).abs() > TRACE_TOL {
            return Err(Error::DensityInvariantViolated(format!(
                "trace = {t} (deviation {:.3e})",
                (t - 1.0).abs()
            )));
        }
        if !self.mat.is_finite() {
            return Err(Error::NonFinite("density matrix".into()));
        }
        Ok(())
    }

    pub fn check_positivity(&self) -> Result<()> {
        let min = self.min_eigenvalue()?;
        if min < POSITIVITY_FLOOR {
            return Err(Error::DensityInvariantViolated(format!(
                "minimum eigenvalue {min:.3e} below {POSITIVITY_FLOOR:.1e}"
            )));
        }
        Ok(())
    }

    /// Diagonal in the position basis (plot-ready |psi(x)|^2 analogue).
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[(i, i)].re).collect()
    }
}

/// Apply H = p^2/2M + V(x) column-wise via spectral differentiation.
fn apply_hamiltonian(m: &CMatrix, grid: &Grid1D, params: &LocalizationParams) -> CMatrix {
    let n = grid.n_points();
    let mut out = CMatrix::zeros(n, n);
    let mut col = vec![C64::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = m[(i, j)];
        }
        let mut hat = fft::fft(&col);
        for (idx, z) in hat.iter_mut().enumerate() {
            let k = grid.wavenumber(idx);
            *z *= k * k / (2.0 * params.mass);
        }
        let kinetic = fft::ifft(&hat);
        for i in 0..n {
            let v = params.potential.value(params.mass, grid.x(i), i);
            out[(i, j)] = kinetic[i] + v * col[i];
        }
    }
    out
}

/// Right-hand side of the master equation.
fn master_rhs(rho: &CMatrix, grid: &Grid1D, params: &LocalizationParams) -> CMatrix {
    let h_rho = apply_hamiltonian(rho, grid, params);
    let rho_h = apply_hamiltonian(&rho.dagger(), grid, params).dagger();
    let mut out = h_rho.sub(&rho_h).scale(-C64::i());
    // double-commutator dissipator, elementwise -lambda (x_i - x_j)^2 rho_ij
    for i in 0..grid.n_points() {
        let xi = grid.x(i);
        for j in 0..grid.n_points() {
            let xj = grid.x(j);
            let damp = -params.lambda * (xi - xj) * (xi - xj);
            out[(i, j)] += damp * rho[(i, j)];
        }
    }
    out
}

/// One RK4 step of the master equation. Errors if the result leaves the
/// Hermitian/trace invariants by more than the type tolerances.
pub fn lindblad_position_step(
    rho: &DensityMatrix,
    params: &LocalizationParams,
    dt: f64,
) -> Result<DensityMatrix> {
    let grid = match &rho.basis {
        Basis::PositionGrid(g) => *g,
        Basis::Finite(_) => {
            return Err(Error::InvalidParameter(
                "position-space step requires a position-grid basis".into(),
            ));
        }
    };
    if rho.dim() > 256 {
        return Err(Error::InvalidParameter(format!(
            "dense oracle limited to 256 grid points, got {}",
            rho.dim()
        )));
    }
    let k1 = master_rhs(&rho.mat, &grid, params);
    let mut stage = rho.mat.clone();
    stage.axpy(C64::new(0.5 * dt, 0.0), &k1);
    let k2 = master_rhs(&stage, &grid, params);
    let mut stage = rho.mat.clone();
    stage.axpy(C64::new(0.5 * dt, 0.0), &k2);
    let k3 = master_rhs(&stage, &grid, params);
    let mut stage = rho.mat.clone();
    stage.axpy(C64::new(dt, 0.0), &k3);
    let k4 = master_rhs(&stage, &grid, params);

    let mut next = rho.mat.clone();
    next.axpy(C64::new(dt / 6.0, 0.0), &k1);
    next.axpy(C64::new(dt / 3.0, 0.0), &k2);
    next.axpy(C64::new(dt / 3.0, 0.0), &k3);
    next.axpy(C64::new(dt / 6.0, 0.0), &k4);

    DensityMatrix::new(next, Basis::PositionGrid(grid))
}

/// Integrate to `t_final`, adapting dt so `max|d rho| * dt <= 1e-3` per step.
/// Positivity is spot-checked every 50 steps and at the end; a violation
/// beyond -1e-8 aborts rather than being clipped.
pub fn integrate(
    rho0: &DensityMatrix,
    params: &LocalizationParams,
    t_final: f64,
    dt_max: f64,
) -> Result<DensityMatrix> {
    let grid = match &rho0.basis {
        Basis::PositionGrid(g) => *g,
        Basis::Finite(_) => {
            return Err(Error::InvalidParameter(
                "position-space integrator requires a grid basis".into(),
            ));
        }
    };
    let positivity_stride = 50;
    let mut rho = rho0.clone();
    let mut t = 0.0;
    let mut step = 0usize;
    while t < t_final - 1e-15 {
        let rate = master_rhs(&rho.mat, &grid, params).max_abs_entry();
        let mut dt = dt_max.min(1e-3 / rate.max(1e-12));
        dt = dt.min(t_final - t);
        rho = lindblad_position_step(&rho, params, dt)?;
        t += dt;
        step += 1;
        if step % positivity_stride == 0 {
            rho.check_positivity()?;
        }
    }
    rho.check_positivity()?;
    Ok(rho)
}

/// Trace distance (1/2) sum |eigenvalues(a - b)|.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "trace distance between dims {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    trace_distance_matrices(&a.mat, &b.mat)
}

/// Trace distance between raw Hermitian matrices (same formula, used by the
/// unravelling oracle where states live in an abstract finite basis).
pub fn trace_distance_matrices(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::ShapeMismatch("trace distance".into()));
    }
    let vals = hermitian_eigenvalues(&a.sub(b))?;
    Ok(0.5 * vals.iter().map(|v| v.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localization::{LocalizationParams, PotentialSpec, WaveFunction};

    fn grid() -> Grid1D {
        Grid1D::centered(64, 0.25).unwrap()
    }

    fn static_params(lambda: f64) -> LocalizationParams {
        // effectively H = 0: infinite mass, flat potential
        LocalizationParams::new(f64::INFINITY, lambda, 1e-3, PotentialSpec::Free).unwrap()
    }

    fn gaussian_rho(g: Grid1D) -> DensityMatrix {
        let psi = WaveFunction::gaussian(g, 0.0, 1.0, 0.0).unwrap();
        DensityMatrix::from_pure(&psi)
    }

    #[test]
    fn stationary_without_coupling_or_hamiltonian() {
        let g = grid();
        let rho = gaussian_rho(g);
        let next = lindblad_position_step(&rho, &static_params(0.0), 1e-2).unwrap();
        let diff = next.matrix().sub(rho.matrix()).max_abs_entry();
        assert!(diff < 1e-14);
    }

    #[test]
    fn diagonal_state_is_stationary() {
        let g = grid();
        let mut m = CMatrix::zeros(64, 64);
        for i in 0..64 {
            m[(i, i)] = C64::new(1.0 / 64.0, 0.0);
        }
        let rho = DensityMatrix::new(m, Basis::PositionGrid(g)).unwrap();
        let next = lindblad_position_step(&rho, &static_params(5.0), 1e-2).unwrap();
        assert!(next.matrix().sub(rho.matrix()).max_abs_entry() < 1e-14);
    }

    #[test]
    fn coherences_decay_at_separation_squared_rate() {
        let g = grid();
        let lambda = 2.0;
        let params = static_params(lambda);
        let rho0 = gaussian_rho(g);
        let mut rho = rho0.clone();
        let dt = 1e-3;
        for _ in 0..50 {
            rho = lindblad_position_step(&rho, &params, dt).unwrap();
        }
        let t = 50.0 * dt;
        // probe a few separations
        let c = 32;
        for offset in [2usize, 5, 8] {
            let i = c - offset / 2;
            let j = i + offset;
            let sep = g.x(i) - g.x(j);
            let expect = rho0.matrix()[(i, j)] * (-lambda * sep * sep * t).exp();
            let got = rho.matrix()[(i, j)];
            let rel = (got - expect).norm() / expect.norm();
            assert!(rel < 1e-3, "offset {offset}: rel err {rel:.3e}");
        }
    }

    #[test]
    fn trace_and_hermiticity_preserved_with_dynamics() {
        let g = grid();
        let params = LocalizationParams::new(1.0, 3.0, 1e-3, PotentialSpec::Free).unwrap();
        let mut rho = gaussian_rho(g);
        for _ in 0..100 {
            rho = lindblad_position_step(&rho, &params, 1e-3).unwrap();
        }
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!(rho.matrix().hermiticity_defect() < 1e-10);
        rho.check_positivity().unwrap();
    }

    #[test]
    fn purity_decreases_monotonically_without_hamiltonian() {
        let g = grid();
        let params = static_params(4.0);
        let mut rho = gaussian_rho(g);
        let mut last = rho.purity();
        for _ in 0..50 {
            rho = lindblad_position_step(&rho, &params, 1e-3).unwrap();
            let p = rho.purity();
            assert!(p <= last + 1e-12, "purity increased: {last} -> {p}");
            last = p;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn commutator_nesting_identity() {
        // [x,[rho,x]] = [[x,rho],x] on random matrices
        use crate::numerics::matrix::commutator;
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(11);
        let n = 12;
        let mut x = CMatrix::zeros(n, n);
        for i in 0..n {
            x[(i, i)] = C64::new(i as f64 * 0.3 - 1.0, 0.0);
        }
        let mut rho = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        let lhs = commutator(&x, &commutator(&rho, &x));
        let rhs = commutator(&commutator(&x, &rho), &x);
        assert!(lhs.sub(&rhs).max_abs_entry() < 1e-12);
    }

    #[test]
    fn trace_distance_examples() {
        let g = grid();
        let a = gaussian_rho(g);
        assert!(trace_distance(&a, &a).unwrap() < 1e-14);

        // orthogonal pure states -> 1
        let psi1 = WaveFunction::gaussian(g, -3.0, 0.5, 0.0).unwrap();
        let psi2 = WaveFunction::gaussian(g, 3.0, 0.5, 0.0).unwrap();
        let r1 = DensityMatrix::from_pure(&psi1);
        let r2 = DensityMatrix::from_pure(&psi2);
        let d = trace_distance(&r1, &r2).unwrap();
        assert!((d - 1.0).abs() < 1e-6, "d = {d}");

        // diag(0.6, 0.4) vs diag(0.5, 0.5) -> 0.1
        let a = DensityMatrix::new(CMatrix::diag_real(&[0.6, 0.4]), Basis::Finite(2)).unwrap();
        let b = DensityMatrix::new(CMatrix::diag_real(&[0.5, 0.5]), Basis::Finite(2)).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_rejects_shape_mismatch() {
        let a = DensityMatrix::new(CMatrix::diag_real(&[1.0]), Basis::Finite(1)).unwrap();
        let b = DensityMatrix::new(CMatrix::diag_real(&[0.5, 0.5]), Basis::Finite(2)).unwrap();
        assert!(trace_distance(&a, &b).is_err());
    }

    #[test]
    fn rejects_invalid_density_matrix() {
        let m = CMatrix::diag_real(&[0.9, 0.9]); // trace 1.8
        assert!(DensityMatrix::new(m, Basis::Finite(2)).is_err());
    }
}
