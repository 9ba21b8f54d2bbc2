//! State-adapted jump unravelling of an arbitrary finite-dimensional
//! Lindblad generator.
//!
//! Given dynamics
//!   d rho/dt = -i [H, rho]
//!              + 1/2 sum_{mu nu} r_{mu nu} (2 F_mu rho F_nu^H
//!                                           - F_nu^H F_mu rho
//!                                           - rho F_nu^H F_mu)
//! and the current pure state psi, an adapted basis (Householder rotation
//! sending psi to the last basis vector) splits the generator into jump
//! channels J_j that send psi to orthogonal states with rates r_j, plus a
//! non-Hermitian effective Hamiltonian driving the no-jump trunk. The
//! channel block of the rotated rate matrix is diagonalized so that
//! <J_j> = 0 and <J_i^H J_j> = r_i delta_ij on the adapted state.

use crate::master::trace_distance_matrices;
use crate::numerics::{self, eig::hermitian_eig, CMatrix, RngStream, C64};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

const PSD_TOL: f64 = 1e-10;
const ORTHO_TOL: f64 = 1e-10;
const RATE_FLOOR: f64 = 1e-12;
pub const BRANCH_PROBABILITY_CAP: f64 = 0.1;

/// A finite-dimensional Lindblad model (H, {F_mu}, r_{mu nu}).
///
/// The operator list must be orthonormal under the Frobenius inner product
/// and the rate matrix Hermitian positive semidefinite.
#[derive(Clone, Debug)]
pub struct LindbladModel {
    dim: usize,
    h: CMatrix,
    ops: Vec<CMatrix>,
    rates: CMatrix,
}

impl LindbladModel {
    pub fn new(h: CMatrix, ops: Vec<CMatrix>, rates: CMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::ShapeMismatch("hamiltonian must be square".into()));
        }
        let dim = h.rows();
        h.check_hermitian(1e-10)?;
        if ops.iter().any(|f| f.rows() != dim || f.cols() != dim) {
            return Err(Error::ShapeMismatch("operator dimensions".into()));
        }
        let k = ops.len();
        if rates.rows() != k || rates.cols() != k {
            return Err(Error::ShapeMismatch(format!(
                "rate matrix is {}x{} for {k} operators",
                rates.rows(),
                rates.cols()
            )));
        }
        // orthonormality of the operator basis
        let mut worst = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let g = ops[i].frobenius_dot(&ops[j]);
                let expect = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g - C64::new(expect, 0.0)).norm());
            }
        }
        if worst > ORTHO_TOL {
            return Err(Error::NotOrthonormal(worst));
        }
        rates.check_hermitian(PSD_TOL)?;
        let eigs = crate::numerics::eig::hermitian_eigenvalues(&rates)?;
        if !eigs.is_empty() && eigs[0] < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite(eigs[0]));
        }
        Ok(Self { dim, h, ops, rates })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn rates(&self) -> &CMatrix {
        &self.rates
    }

    /// Random model for property tests and convergence studies: random
    /// Hermitian H, `n_ops` orthonormalized random operators, and a random
    /// PSD rate matrix with trace `rate_scale`.
    pub fn random(dim: usize, n_ops: usize, rate_scale: f64, rng: &mut RngStream) -> Self {
        assert!(n_ops >= 1 && n_ops <= dim * dim);
        let mut h = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            h[(i, i)] = C64::new(rng.gaussian(), 0.0);
            for j in (i + 1)..dim {
                let z = C64::new(rng.gaussian(), rng.gaussian()) * 0.5;
                h[(i, j)] = z;
                h[(j, i)] = z.conj();
            }
        }
        // random operators, Gram-Schmidt under the Frobenius product
        let mut ops: Vec<CMatrix> = Vec::with_capacity(n_ops);
        while ops.len() < n_ops {
            let mut f = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    f[(i, j)] = C64::new(rng.gaussian(), rng.gaussian());
                }
            }
            for prev in &ops {
                let c = prev.frobenius_dot(&f);
                f.axpy(-c, prev);
            }
            let norm = f.frobenius_norm();
            if norm < 1e-8 {
                continue;
            }
            ops.push(f.scale(C64::new(1.0 / norm, 0.0)));
        }
        // PSD rate matrix A^H A, rescaled to the requested trace
        let mut a = CMatrix::zeros(n_ops, n_ops);
        for i in 0..n_ops {
            for j in 0..n_ops {
                a[(i, j)] = C64::new(rng.gaussian(), rng.gaussian());
            }
        }
        let mut r = a.dagger().matmul(&a);
        let tr = r.trace().re;
        r = r.scale(C64::new(rate_scale / tr, 0.0));
        Self::new(h, ops, r).expect("random model construction")
    }

    /// Full Lindblad right-hand side at `rho`.
    pub fn master_rhs(&self, rho: &CMatrix) -> CMatrix {
        let mut out = crate::numerics::matrix::commutator(&self.h, rho).scale(-C64::i());
        let k = self.ops.len();
        for mu in 0..k {
            for nu in 0..k {
                let r = self.rates[(mu, nu)];
                if r.norm() < 1e-300 {
                    continue;
                }
                let f_mu = &self.ops[mu];
                let f_nu_dag = self.ops[nu].dagger();
                let sandwich = f_mu.matmul(rho).matmul(&f_nu_dag);
                let fdf = f_nu_dag.matmul(f_mu);
                let mut term = sandwich.scale(C64::new(2.0, 0.0));
                term.axpy(-C64::new(1.0, 0.0), &fdf.matmul(rho));
                term.axpy(-C64::new(1.0, 0.0), &rho.matmul(&fdf));
                out.axpy(0.5 * r, &term);
            }
        }
        out
    }

    /// One RK4 step of the master equation.
    pub fn master_step(&self, rho: &CMatrix, dt: f64) -> CMatrix {
        let k1 = self.master_rhs(rho);
        let mut s = rho.clone();
        s.axpy(C64::new(0.5 * dt, 0.0), &k1);
        let k2 = self.master_rhs(&s);
        let mut s = rho.clone();
        s.axpy(C64::new(0.5 * dt, 0.0), &k2);
        let k3 = self.master_rhs(&s);
        let mut s = rho.clone();
        s.axpy(C64::new(dt, 0.0), &k3);
        let k4 = self.master_rhs(&s);
        let mut next = rho.clone();
        next.axpy(C64::new(dt / 6.0, 0.0), &k1);
        next.axpy(C64::new(dt / 3.0, 0.0), &k2);
        next.axpy(C64::new(dt / 3.0, 0.0), &k3);
        next.axpy(C64::new(dt / 6.0, 0.0), &k4);
        next
    }

    /// RK4-integrate the master equation to `t_final`.
    pub fn master_evolve(&self, rho0: &CMatrix, t_final: f64, dt: f64) -> CMatrix {
        let mut rho = rho0.clone();
        let mut t = 0.0;
        while t < t_final - 1e-15 {
            let h = dt.min(t_final - t);
            rho = self.master_step(&rho, h);
            t += h;
        }
        rho
    }
}

/// Unitary Householder rotation sending `psi` to the last basis vector.
fn adapted_rotation(psi: &[C64]) -> CMatrix {
    let n = psi.len();
    let last = psi[n - 1];
    let alpha = if last.norm() > 1e-300 {
        -last / last.norm()
    } else {
        C64::new(-1.0, 0.0)
    };
    let mut v: Vec<C64> = psi.to_vec();
    v[n - 1] -= alpha;
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut b = CMatrix::identity(n);
    if norm2 > 1e-300 {
        for i in 0..n {
            for j in 0..n {
                b[(i, j)] -= 2.0 / norm2 * v[i] * v[j].conj();
            }
        }
    }
    // global phase so that B psi = e_N exactly (not alpha e_N)
    b.scale(alpha.conj())
}

/// Jump channels and effective Hamiltonian adapted to a pure state.
#[derive(Clone, Debug)]
pub struct JumpDecomposition {
    pub h_eff: CMatrix,
    pub jump_ops: Vec<CMatrix>,
    pub rates: Vec<f64>,
}

impl JumpDecomposition {
    pub fn total_rate(&self) -> f64 {
        self.rates.iter().sum()
    }
}

/// Construct the adapted basis, diagonalized jump channels, and effective
/// Hamiltonian for `model` at the pure state `psi`, returned in the original
/// basis. Channels with rates below 1e-12 are dropped as exact zeros.
pub fn adapt_and_decompose(model: &LindbladModel, psi: &[C64]) -> Result<JumpDecomposition> {
    let n = model.dim();
    if psi.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "state length {} for model dimension {n}",
            psi.len()
        )));
    }
    let norm = numerics::vec_norm(psi);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "state norm {norm} is not 1"
        )));
    }

    let b = adapted_rotation(psi);
    let k = model.ops.len();

    // images w_mu = F_mu psi, their adapted coordinates, and means
    let w: Vec<Vec<C64>> = model.ops.iter().map(|f| f.matvec(psi)).collect();
    let wb: Vec<Vec<C64>> = w.iter().map(|wi| b.matvec(wi)).collect();
    let means: Vec<C64> = w.iter().map(|wi| numerics::vec_dot(psi, wi)).collect();

    // channel block of the rotated rate matrix, indices 0..n-1 (adapted
    // basis vectors orthogonal to psi)
    let mut block = CMatrix::zeros(n - 1, n - 1);
    for mu in 0..k {
        for nu in 0..k {
            let r = model.rates[(mu, nu)];
            if r.norm() < 1e-300 {
                continue;
            }
            for i in 0..n - 1 {
                for j in 0..n - 1 {
                    block[(i, j)] += r * wb[mu][i] * wb[nu][j].conj();
                }
            }
        }
    }
    let (block_rates, block_vecs) = hermitian_eig(&block)?;

    let b_dag = b.dagger();
    let mut jump_ops = Vec::new();
    let mut rates = Vec::new();
    for ch in 0..n - 1 {
        let rate = block_rates[ch];
        if rate < -1e-8 {
            return Err(Error::NotPositiveSemidefinite(rate));
        }
        if rate < RATE_FLOOR {
            continue;
        }
        // chi = sqrt(rate) B^H (sum_j V[j][ch] e_j); J = |chi><psi|
        let mut u = vec![C64::new(0.0, 0.0); n];
        for j in 0..n - 1 {
            u[j] = block_vecs[(j, ch)];
        }
        let chi: Vec<C64> = b_dag
            .matvec(&u)
            .into_iter()
            .map(|z| z * rate.sqrt())
            .collect();
        jump_ops.push(CMatrix::outer(&chi, psi));
        rates.push(rate);
    }

    // effective Hamiltonian: H + i (T - M/2 + (tr T / 2 - tau) I), where
    // T = sum r_{mu nu} |w_mu><w_nu|, M = sum r_{mu nu} F_nu^H F_mu,
    // tau = sum r_{mu nu} <F_mu> <F_nu>^*. This collects the channel-basis
    // cross terms of the rotated generator into one closed form; see the
    // unravelling-defect tests for the order check.
    let mut t_mat = CMatrix::zeros(n, n);
    let mut m_mat = CMatrix::zeros(n, n);
    let mut tau = C64::new(0.0, 0.0);
    for mu in 0..k {
        for nu in 0..k {
            let r = model.rates[(mu, nu)];
            if r.norm() < 1e-300 {
                continue;
            }
            t_mat.axpy(r, &CMatrix::outer(&w[mu], &w[nu]));
            m_mat.axpy(r, &model.ops[nu].dagger().matmul(&model.ops[mu]));
            tau += r * means[mu] * means[nu].conj();
        }
    }
    let tr_t = t_mat.trace();
    let mut x = t_mat;
    x.axpy(C64::new(-0.5, 0.0), &m_mat);
    let shift = 0.5 * tr_t - tau;
    for i in 0..n {
        x[(i, i)] += shift;
    }
    let mut h_eff = model.h.clone();
    h_eff.axpy(C64::i(), &x);

    Ok(JumpDecomposition {
        h_eff,
        jump_ops,
        rates,
    })
}

/// One stochastic step: with probability r_j dt jump to the (normalized)
/// channel state J_j psi, otherwise advance the trunk
/// (1 + H_eff dt / i) psi and renormalize. Returns the new state and the
/// index of the channel taken, if any.
pub fn branch_step(
    model: &LindbladModel,
    psi: &[C64],
    dt: f64,
    rng: &mut RngStream,
) -> Result<(Vec<C64>, Option<usize>)> {
    let decomp = adapt_and_decompose(model, psi)?;
    branch_step_with(&decomp, psi, dt, rng)
}

/// Step using a precomputed decomposition (which must be adapted to `psi`).
pub fn branch_step_with(
    decomp: &JumpDecomposition,
    psi: &[C64],
    dt: f64,
    rng: &mut RngStream,
) -> Result<(Vec<C64>, Option<usize>)> {
    let total = decomp.total_rate() * dt;
    if total > BRANCH_PROBABILITY_CAP {
        return Err(Error::StabilityViolated {
            what: "sum r_j * dt",
            value: total,
            limit: BRANCH_PROBABILITY_CAP,
        });
    }
    let u = rng.uniform();
    let mut acc = 0.0;
    for (j, (op, rate)) in decomp.jump_ops.iter().zip(&decomp.rates).enumerate() {
        acc += rate * dt;
        if u < acc {
            let mut next = op.matvec(psi);
            numerics::normalize(&mut next)?;
            return Ok((next, Some(j)));
        }
    }
    let h_psi = decomp.h_eff.matvec(psi);
    let mut next: Vec<C64> = psi
        .iter()
        .zip(&h_psi)
        .map(|(&p, &hp)| p - C64::i() * dt * hp)
        .collect();
    numerics::normalize(&mut next)?;
    Ok((next, None))
}

/// Evolve a single unravelled trajectory to `t_final` with fixed `dt`.
pub fn evolve_trajectory(
    model: &LindbladModel,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    rng: &mut RngStream,
) -> Result<Vec<C64>> {
    let mut psi = psi0.to_vec();
    let mut t = 0.0;
    while t < t_final - 1e-15 {
        let h = dt.min(t_final - t);
        let (next, _) = branch_step(model, &psi, h, rng)?;
        psi = next;
        t += h;
    }
    Ok(psi)
}

/// Average of |psi><psi| over an ensemble of unravelled trajectories, one
/// RNG stream per trajectory index. Deterministic for fixed seed regardless
/// of thread count.
pub fn ensemble_density(
    model: &LindbladModel,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> Result<CMatrix> {
    use rayon::prelude::*;
    let n = model.dim();
    let partials: Result<Vec<CMatrix>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i as u64);
            let psi = evolve_trajectory(model, psi0, t_final, dt, &mut rng)?;
            Ok(CMatrix::outer(&psi, &psi))
        })
        .collect();
    let mut sum = CMatrix::zeros(n, n);
    for p in partials? {
        sum.axpy(C64::new(1.0, 0.0), &p);
    }
    Ok(sum.scale(C64::new(1.0 / n_traj as f64, 0.0)))
}

/// Compare one step of the branch reconstruction
/// `sum_j p_j |phi_j><phi_j| - rho` against one exact master-equation step.
/// Returns the max-entry difference; expected O(dt^2).
pub fn verify_unravelling(model: &LindbladModel, psi: &[C64], dt: f64) -> Result<f64> {
    let decomp = adapt_and_decompose(model, psi)?;
    let n = model.dim();
    let rho = CMatrix::outer(psi, psi);

    let mut recon = CMatrix::zeros(n, n);
    let mut p_trunk = 1.0;
    for (op, rate) in decomp.jump_ops.iter().zip(&decomp.rates) {
        let mut state = op.matvec(psi);
        numerics::normalize(&mut state)?;
        recon.axpy(C64::new(rate * dt, 0.0), &CMatrix::outer(&state, &state));
        p_trunk -= rate * dt;
    }
    let h_psi = decomp.h_eff.matvec(psi);
    let mut trunk: Vec<C64> = psi
        .iter()
        .zip(&h_psi)
        .map(|(&p, &hp)| p - C64::i() * dt * hp)
        .collect();
    numerics::normalize(&mut trunk)?;
    recon.axpy(C64::new(p_trunk, 0.0), &CMatrix::outer(&trunk, &trunk));

    let delta_branch = recon.sub(&rho);
    let delta_exact = model.master_step(&rho, dt).sub(&rho);
    Ok(delta_branch.sub(&delta_exact).max_abs_entry())
}

/// Trace distance between an unravelled ensemble average and the RK4 master
/// solution at `t_final`.
pub fn ensemble_oracle_distance(
    model: &LindbladModel,
    psi0: &[C64],
    t_final: f64,
    dt: f64,
    n_traj: usize,
    seed: u64,
) -> Result<f64> {
    let avg = ensemble_density(model, psi0, t_final, dt, n_traj, seed)?;
    let rho0 = CMatrix::outer(psi0, psi0);
    let oracle = model.master_evolve(&rho0, t_final, dt.min(1e-3));
    trace_distance_matrices(&avg, &oracle)
}

/// Serialized form of a Lindblad model: matrices as nested arrays of
/// [re, im] pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LindbladModelSpec {
    pub dim: usize,
    pub hamiltonian: Vec<Vec<[f64; 2]>>,
    pub ops: Vec<Vec<Vec<[f64; 2]>>>,
    pub rates: Vec<Vec<[f64; 2]>>,
}

fn matrix_from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<CMatrix> {
    CMatrix::from_rows(
        rows.iter()
            .map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect(),
    )
}

fn matrix_to_pairs(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

impl LindbladModelSpec {
    pub fn to_model(&self) -> Result<LindbladModel> {
        let h = matrix_from_pairs(&self.hamiltonian)?;
        if h.rows() != self.dim {
            return Err(Error::ShapeMismatch("hamiltonian vs dim".into()));
        }
        let ops = self
            .ops
            .iter()
            .map(|o| matrix_from_pairs(o))
            .collect::<Result<Vec<_>>>()?;
        let rates = matrix_from_pairs(&self.rates)?;
        LindbladModel::new(h, ops, rates)
    }

    pub fn from_model(model: &LindbladModel) -> Self {
        Self {
            dim: model.dim(),
            hamiltonian: matrix_to_pairs(&model.h),
            ops: model.ops.iter().map(matrix_to_pairs).collect(),
            rates: matrix_to_pairs(&model.rates),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_state(dim: usize, rng: &mut RngStream) -> Vec<C64> {
        let mut v: Vec<C64> = (0..dim)
            .map(|_| c(rng.gaussian(), rng.gaussian()))
            .collect();
        numerics::normalize(&mut v).unwrap();
        v
    }

    #[test]
    fn adapted_rotation_sends_state_to_last_axis() {
        let mut rng = RngStream::new(7, 0);
        for dim in 2..8 {
            let psi = random_state(dim, &mut rng);
            let b = adapted_rotation(&psi);
            b.check_unitary(1e-12).unwrap();
            let e = b.matvec(&psi);
            for i in 0..dim - 1 {
                assert!(e[i].norm() < 1e-12);
            }
            assert!((e[dim - 1] - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_rates_give_plain_hamiltonian() {
        let mut rng = RngStream::new(8, 0);
        let m = LindbladModel::random(3, 2, 1.0, &mut rng);
        let model = LindbladModel::new(m.h.clone(), m.ops.clone(), CMatrix::zeros(2, 2)).unwrap();
        let psi = random_state(3, &mut rng);
        let d = adapt_and_decompose(&model, &psi).unwrap();
        assert!(d.jump_ops.is_empty());
        assert!(d.h_eff.sub(&model.h).max_abs_entry() < 1e-12);
    }

    #[test]
    fn annihilated_state_has_no_channels() {
        // single lowering-type operator; the ground state is annihilated
        let f = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let rates = CMatrix::diag_real(&[0.7]);
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![f], rates).unwrap();
        let ground = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let d = adapt_and_decompose(&model, &ground).unwrap();
        assert!(d.rates.iter().all(|&r| r < 1e-12));
    }

    #[test]
    fn single_channel_decay_from_excited_state() {
        // F = lowering op, rate gamma: from the excited state the jump
        // lands on the ground state and fires at rate gamma
        let gamma = 0.7;
        let f = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let model = LindbladModel::new(CMatrix::zeros(2, 2), vec![f], CMatrix::diag_real(&[gamma]))
            .unwrap();
        let excited = vec![c(0.0, 0.0), c(1.0, 0.0)];
        let d = adapt_and_decompose(&model, &excited).unwrap();
        assert_eq!(d.rates.len(), 1);
        assert!((d.rates[0] - gamma).abs() < 1e-12);
        let jumped = d.jump_ops[0].matvec(&excited);
        assert!((jumped[0].norm_sqr() - gamma).abs() < 1e-12);
        assert!(jumped[1].norm() < 1e-12);
    }

    #[test]
    fn channel_conditions_hold_for_random_models() {
        let mut rng = RngStream::new(21, 0);
        for trial in 0..40 {
            let dim = 2 + (trial % 7);
            let n_ops = 1 + (trial % 3);
            let model = LindbladModel::random(dim, n_ops, 1.5, &mut rng);
            let psi = random_state(dim, &mut rng);
            let d = adapt_and_decompose(&model, &psi).unwrap();
            for (i, ji) in d.jump_ops.iter().enumerate() {
                let ji_psi = ji.matvec(&psi);
                let mean = numerics::vec_dot(&psi, &ji_psi);
                assert!(mean.norm() < 1e-9, "mean {:.3e}", mean.norm());
                for (j, jj) in d.jump_ops.iter().enumerate() {
                    let jj_psi = jj.matvec(&psi);
                    let g = numerics::vec_dot(&ji_psi, &jj_psi);
                    let expect = if i == j { d.rates[i] } else { 0.0 };
                    assert!(
                        (g - c(expect, 0.0)).norm() < 1e-9,
                        "gram defect {:.3e}",
                        (g - c(expect, 0.0)).norm()
                    );
                }
            }
        }
    }

    #[test]
    fn defect_is_second_order_in_dt() {
        let mut rng = RngStream::new(22, 0);
        let model = LindbladModel::random(3, 2, 1.0, &mut rng);
        let psi = random_state(3, &mut rng);
        let d1 = verify_unravelling(&model, &psi, 1e-3).unwrap();
        let d2 = verify_unravelling(&model, &psi, 5e-4).unwrap();
        assert!(d1 <= 1e-5, "defect {d1:.3e}");
        assert!(d1 / d2 >= 3.5, "ratio {}", d1 / d2);
    }

    #[test]
    fn defect_without_dissipation_is_pure_commutator_mismatch() {
        let mut rng = RngStream::new(23, 0);
        let m = LindbladModel::random(3, 2, 1.0, &mut rng);
        let model = LindbladModel::new(m.h.clone(), m.ops.clone(), CMatrix::zeros(2, 2)).unwrap();
        let psi = random_state(3, &mut rng);
        let d = verify_unravelling(&model, &psi, 1e-5).unwrap();
        assert!(d <= 1e-9, "defect {d:.3e}");
    }

    #[test]
    fn trunk_dominates_as_dt_shrinks() {
        let mut rng = RngStream::new(24, 0);
        let model = LindbladModel::random(3, 2, 1.0, &mut rng);
        let psi = random_state(3, &mut rng);
        let mut jumps = 0;
        let n = 20_000;
        let dt = 1e-5;
        for _ in 0..n {
            let (_, jumped) = branch_step(&model, &psi, dt, &mut rng).unwrap();
            if jumped.is_some() {
                jumps += 1;
            }
        }
        let expect = adapt_and_decompose(&model, &psi).unwrap().total_rate() * dt * n as f64;
        assert!(jumps as f64 <= 4.0 * expect.max(1.0), "jumps {jumps}");
    }

    #[test]
    fn symmetric_channels_fire_equally() {
        // two orthonormal operators coupling the same start state with equal
        // rates: channel counts agree within Monte Carlo error
        let f1 = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let f2 = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let model = LindbladModel::new(
            CMatrix::zeros(3, 3),
            vec![f1, f2],
            CMatrix::diag_real(&[1.0, 1.0]),
        )
        .unwrap();
        let psi = vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)];
        let d = adapt_and_decompose(&model, &psi).unwrap();
        assert_eq!(d.rates.len(), 2);
        let mut rng = RngStream::new(31, 0);
        let mut counts = [0usize; 2];
        let n = 10_000;
        let dt = 0.04;
        for _ in 0..n {
            let (_, jumped) = branch_step(&model, &psi, dt, &mut rng).unwrap();
            if let Some(j) = jumped {
                counts[j] += 1;
            }
        }
        let diff = (counts[0] as f64 - counts[1] as f64).abs();
        let total = (counts[0] + counts[1]) as f64;
        assert!(total > 500.0, "too few jumps: {total}");
        assert!(diff < 4.0 * total.sqrt(), "counts {counts:?}");
    }

    #[test]
    fn fixed_seed_reproduces_branch_sequence() {
        let mut rng_model = RngStream::new(40, 0);
        let model = LindbladModel::random(4, 2, 2.0, &mut rng_model);
        let psi0 = random_state(4, &mut rng_model);
        let run = |stream: u64| {
            let mut rng = RngStream::new(41, stream);
            let mut psi = psi0.clone();
            let mut seq = Vec::new();
            for _ in 0..200 {
                let (next, jumped) = branch_step(&model, &psi, 1e-2, &mut rng).unwrap();
                psi = next;
                seq.push(jumped);
            }
            seq
        };
        assert_eq!(run(0), run(0));
    }

    #[test]
    fn stability_cap_enforced() {
        let mut rng = RngStream::new(50, 0);
        let model = LindbladModel::random(3, 2, 5.0, &mut rng);
        let psi = random_state(3, &mut rng);
        let err = branch_step(&model, &psi, 1.0, &mut rng);
        assert!(matches!(err, Err(Error::StabilityViolated { .. })));
    }

    #[test]
    fn model_spec_round_trip() {
        let mut rng = RngStream::new(60, 0);
        let model = LindbladModel::random(3, 2, 1.0, &mut rng);
        let spec = LindbladModelSpec::from_model(&model);
        let json = serde_json::to_string(&spec).unwrap();
        let back: LindbladModelSpec = serde_json::from_str(&json).unwrap();
        let model2 = back.to_model().unwrap();
        assert!(model.h.sub(model2.hamiltonian()).max_abs_entry() < 1e-15);
        assert!(model.rates.sub(model2.rates()).max_abs_entry() < 1e-15);
    }

    #[test]
    fn rejects_non_orthonormal_ops() {
        let f = CMatrix::identity(2).scale(c(2.0, 0.0));
        let err = LindbladModel::new(CMatrix::zeros(2, 2), vec![f], CMatrix::diag_real(&[1.0]));
        assert!(matches!(err, Err(Error::NotOrthonormal(_))));
    }

    #[test]
    fn rejects_non_psd_rates() {
        let f = CMatrix::identity(2).scale(c(0.5f64.sqrt(), 0.0));
        let err = LindbladModel::new(CMatrix::zeros(2, 2), vec![f], CMatrix::diag_real(&[-1.0]));
        assert!(matches!(err, Err(Error::NotPositiveSemidefinite(_))));
    }

    #[test]
    fn position_coupling_reduces_to_localization_model() {
        // single operator proportional to x recovers the continuous model:
        // J psi ~ (x - <x>) psi with rate 2 lambda var_x, and H_eff acts as
        // -i lambda ((x - <x>)^2 - var_x) on psi
        use crate::localization::WaveFunction;
        let n = 16;
        let grid = crate::Grid1D::centered(n, 0.5).unwrap();
        let lambda = 3.0;
        let x_vals = grid.positions();
        let mut x_op = CMatrix::zeros(n, n);
        for i in 0..n {
            x_op[(i, i)] = c(x_vals[i], 0.0);
        }
        let x_norm = x_op.frobenius_norm();
        let f = x_op.scale(c(1.0 / x_norm, 0.0));
        let rate = 2.0 * lambda * x_norm * x_norm;
        let model =
            LindbladModel::new(CMatrix::zeros(n, n), vec![f], CMatrix::diag_real(&[rate])).unwrap();

        let psi_wf = WaveFunction::gaussian(grid, 0.7, 0.9, 0.3).unwrap();
        let psi = psi_wf.amplitudes().to_vec();
        let d = adapt_and_decompose(&model, &psi).unwrap();
        assert_eq!(d.rates.len(), 1, "one active channel");
        let var_x = psi_wf.var_x();
        assert!(
            (d.rates[0] - 2.0 * lambda * var_x).abs() < 1e-6,
            "rate {} vs {}",
            d.rates[0],
            2.0 * lambda * var_x
        );
        // channel state collinear with (x - <x>) psi
        let jumped = d.jump_ops[0].matvec(&psi);
        let mx = psi_wf.mean_x();
        let target: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(i, &z)| (x_vals[i] - mx) * z)
            .collect();
        let overlap = numerics::vec_dot(&jumped, &target).norm();
        let denom = numerics::vec_norm(&jumped) * numerics::vec_norm(&target);
        assert!((overlap / denom - 1.0).abs() < 1e-9);
        // effective Hamiltonian action matches the closed-form model
        let h_psi = d.h_eff.matvec(&psi);
        let expect: Vec<C64> = psi
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let dxi = x_vals[i] - mx;
                -C64::i() * lambda * (dxi * dxi - var_x) * z
            })
            .collect();
        let err = h_psi
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-9, "H_eff action mismatch {err:.3e}");
    }

    #[test]
    fn small_ensemble_tracks_master_equation() {
        let mut rng = RngStream::new(70, 0);
        let model = LindbladModel::random(3, 2, 1.0, &mut rng);
        let psi0 = random_state(3, &mut rng);
        let d = ensemble_oracle_distance(&model, &psi0, 0.5, 1e-3, 800, 71).unwrap();
        assert!(d < 0.12, "trace distance {d}");
    }
}
