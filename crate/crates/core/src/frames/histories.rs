//! History operators over a branch tree: branch-dependent chain operators,
//! the decoherence functional, and the channel (Krauss) operators acting on
//! the frame factor.

use super::layout::{apply_subset_raw, SubsystemLayout, TensorState};
use super::script::EventScript;
use super::tree::{build_branch_tree, BranchNode, BranchTree};
use crate::numerics::{self, CMatrix, C64};
use crate::{Error, Result};
use std::sync::Arc;

/// Branch tree plus the data needed to evaluate history operators.
pub struct HistoryAnalysis {
    initial: TensorState,
    script: EventScript,
    tree: BranchTree,
}

impl HistoryAnalysis {
    pub fn new(initial: TensorState, script: EventScript, frame: &[usize]) -> Result<Self> {
        let tree = build_branch_tree(&initial, &script, frame)?;
        Ok(Self {
            initial,
            script,
            tree,
        })
    }

    pub fn tree(&self) -> &BranchTree {
        &self.tree
    }

    pub fn layout(&self) -> &Arc<SubsystemLayout> {
        &self.tree.layout
    }

    pub fn frame(&self) -> &[usize] {
        &self.tree.frame
    }

    fn node(&self, label: &[usize]) -> Result<&BranchNode> {
        self.tree.node(label)
    }

    /// Apply the chain operator of `label` to a raw state vector:
    /// alternate event unitaries and projectors onto the conditioned total
    /// states along the branch.
    pub fn chain_apply(&self, label: &[usize], vector: &[C64]) -> Result<Vec<C64>> {
        if label.len() > self.script.events.len() {
            return Err(Error::UnknownLabel(label.to_vec()));
        }
        // resolve the path upfront so unknown labels error out
        let mut nodes = Vec::with_capacity(label.len());
        for k in 1..=label.len() {
            nodes.push(self.node(&label[..k])?);
        }
        let layout = self.layout().clone();
        let mut v = vector.to_vec();
        for (step, node) in nodes.iter().enumerate() {
            let event = &self.script.events[step];
            v = apply_subset_raw(&v, &layout, &event.matrix, &event.targets)?;
            let proj = self.tree.total_state(node)?;
            let overlap = numerics::vec_dot(proj.amplitudes(), &v);
            v = proj.amplitudes().iter().map(|&a| overlap * a).collect();
        }
        Ok(v)
    }

    /// Chain operator as a dense matrix on the full space (built column by
    /// column; intended for small systems).
    pub fn chain_operator(&self, label: &[usize]) -> Result<CMatrix> {
        let dim = self.layout().total_dim();
        let mut out = CMatrix::zeros(dim, dim);
        let mut basis = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            basis[j] = C64::new(1.0, 0.0);
            let col = self.chain_apply(label, &basis)?;
            out.set_column(j, &col);
            basis[j] = C64::new(0.0, 0.0);
        }
        Ok(out)
    }

    /// Decoherence functional D(a, b) = <C_a Psi0, C_b Psi0>. The diagonal
    /// equals the tree's branch probabilities.
    pub fn decoherence_functional(&self, a: &[usize], b: &[usize]) -> Result<C64> {
        let ca = self.chain_apply(a, self.initial.amplitudes())?;
        let cb = self.chain_apply(b, self.initial.amplitudes())?;
        Ok(numerics::vec_dot(&ca, &cb))
    }

    /// Generalized functional <C_a Psi0 | (O_S x 1) | C_b Psi0> for an
    /// observable on the frame factor.
    pub fn generalized_functional(
        &self,
        a: &[usize],
        b: &[usize],
        observable: &CMatrix,
    ) -> Result<C64> {
        let ca = self.chain_apply(a, self.initial.amplitudes())?;
        let cb = self.chain_apply(b, self.initial.amplitudes())?;
        let ocb = apply_subset_raw(&cb, self.layout(), observable, self.frame())?;
        Ok(numerics::vec_dot(&ca, &ocb))
    }

    /// Channel operators on the frame factor for step `n` (1-based event
    /// index) below `parent`: one per child branch, each satisfying
    /// K |parent_s> = c |child_s>, plus zero-amplitude completions so that
    /// sum K^H K = 1 exactly for any event unitary.
    ///
    /// Returns (K, child branch amplitude); completion channels carry
    /// amplitude 0.
    pub fn krauss_operators(&self, step: usize, parent: &[usize]) -> Result<Vec<(CMatrix, f64)>> {
        if step == 0 || step > self.script.events.len() {
            return Err(Error::InvalidParameter(format!(
                "step {step} out of range 1..={}",
                self.script.events.len()
            )));
        }
        if parent.len() != step - 1 {
            return Err(Error::InvalidParameter(format!(
                "parent label length {} for step {step}",
                parent.len()
            )));
        }
        let parent_node = self.node(parent)?;
        let layout = self.layout().clone();
        let frame = self.frame().to_vec();
        let env = layout.complement(&frame);
        let ds = layout.subset_dim(&frame);
        let de = layout.subset_dim(&env);
        let event = &self.script.events[step - 1];

        // v_s = U (e_s x parent_env), reshaped to [s', e']
        let mut evolved = Vec::with_capacity(ds);
        for s in 0..ds {
            let mut basis_s = vec![C64::new(0.0, 0.0); ds];
            basis_s[s] = C64::new(1.0, 0.0);
            let full =
                TensorState::from_split(layout.clone(), &frame, &basis_s, &parent_node.state_env)?;
            let out = apply_subset_raw(full.amplitudes(), &layout, &event.matrix, &event.targets)?;
            evolved.push(out);
        }

        // orthonormal env frame: child env states first, then completions
        let mut env_frame: Vec<(Vec<C64>, f64)> = parent_node
            .children
            .iter()
            .map(|c| (c.state_env.clone(), c.coeff))
            .collect();
        let mut basis_candidates: Vec<Vec<C64>> = (0..de)
            .map(|e| {
                let mut v = vec![C64::new(0.0, 0.0); de];
                v[e] = C64::new(1.0, 0.0);
                v
            })
            .collect();
        for cand in basis_candidates.iter_mut() {
            for (prev, _) in &env_frame {
                let overlap = numerics::vec_dot(prev, cand);
                for (a, b) in cand.iter_mut().zip(prev) {
                    *a -= overlap * b;
                }
            }
            let norm = numerics::vec_norm(cand);
            if norm > 1e-8 {
                for z in cand.iter_mut() {
                    *z /= norm;
                }
                env_frame.push((cand.clone(), 0.0));
            }
            if env_frame.len() == de {
                break;
            }
        }

        let mut out = Vec::with_capacity(env_frame.len());
        for (env_state, amp) in env_frame {
            let mut k = CMatrix::zeros(ds, ds);
            for (s, full) in evolved.iter().enumerate() {
                // K[s', s] = sum_e conj(env_state[e]) full[(s', e)]
                let mut col = vec![C64::new(0.0, 0.0); ds];
                for (i, &a) in full.iter().enumerate() {
                    if a != C64::new(0.0, 0.0) {
                        let sp = layout.subset_index(i, &frame);
                        let ep = layout.subset_index(i, &env);
                        col[sp] += env_state[ep].conj() * a;
                    }
                }
                k.set_column(s, &col);
            }
            out.push((k, amp));
        }
        Ok(out)
    }
}
