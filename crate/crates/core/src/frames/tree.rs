//! Conditioned-state branch trees: Schmidt splitting per event, trajectory
//! probabilities, the environment-orthogonality check, and joint-frame
//! consistency.

use super::layout::{SubsystemLayout, TensorState};
use super::script::EventScript;
use crate::numerics::{self, eig::hermitian_eig, CMatrix, C64};
use crate::{Error, Result};
use serde::Serialize;
use std::sync::Arc;

/// Branches with Schmidt coefficient below this are dropped.
pub const BRANCH_PRUNE: f64 = 1e-10;
const DECOHERENCE_TOL: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-9;
const ALIGNMENT_TOL: f64 = 1e-6;

/// One branch of a Schmidt split: real nonnegative coefficient, frame-side
/// state, complement-side state (residual phase carried by the frame side).
#[derive(Clone, Debug)]
pub struct SchmidtBranch {
    pub coeff: f64,
    pub state_s: Vec<C64>,
    pub state_env: Vec<C64>,
}

/// Schmidt decomposition of `state` across the frame/complement cut.
/// Branches are returned in descending coefficient order; coefficients below
/// the pruning threshold are dropped.
pub fn schmidt_split(state: &TensorState, frame: &[usize]) -> Result<Vec<SchmidtBranch>> {
    let layout = state.layout().clone();
    let frame = layout.validate_frame(frame)?;
    let env = layout.complement(&frame);
    let ds = layout.subset_dim(&frame);
    let de = layout.subset_dim(&env);

    // amplitude matrix M[s, e]
    let mut m = CMatrix::zeros(ds, de);
    for (i, &a) in state.amplitudes().iter().enumerate() {
        if a != C64::new(0.0, 0.0) {
            let s = layout.subset_index(i, &frame);
            let e = layout.subset_index(i, &env);
            m[(s, e)] = a;
        }
    }

    // amp[s, e] = sum_k sigma_k state_s_k[s] state_env_k[e]; the smaller
    // side's Gram matrix is diagonalized and the other side derived from it
    let mut branches = Vec::new();
    if ds <= de {
        let gram = m.matmul(&m.dagger());
        let (vals, vecs) = hermitian_eig(&gram)?;
        // rank-deficient directions come back as O(eps) eigenvalue noise;
        // floor them relative to the leading eigenvalue before taking sqrt
        let eig_floor = vals[ds - 1].max(0.0) * 1e-13;
        for k in (0..ds).rev() {
            if vals[k] <= eig_floor {
                continue;
            }
            let sigma = vals[k].max(0.0).sqrt();
            if sigma < BRANCH_PRUNE {
                continue;
            }
            let u = vecs.column(k);
            // env[e] = sum_s conj(u[s]) M[s, e] / sigma
            let mut env = vec![C64::new(0.0, 0.0); de];
            for s in 0..ds {
                let us = u[s].conj();
                if us == C64::new(0.0, 0.0) {
                    continue;
                }
                for (e, val) in env.iter_mut().enumerate() {
                    *val += us * m[(s, e)];
                }
            }
            for z in env.iter_mut() {
                *z /= sigma;
            }
            branches.push(canonicalize(sigma, u, env));
        }
    } else {
        let gram = m.dagger().matmul(&m);
        let (vals, vecs) = hermitian_eig(&gram)?;
        let eig_floor = vals[de - 1].max(0.0) * 1e-13;
        for k in (0..de).rev() {
            if vals[k] <= eig_floor {
                continue;
            }
            let sigma = vals[k].max(0.0).sqrt();
            if sigma < BRANCH_PRUNE {
                continue;
            }
            let v = vecs.column(k);
            // state_s = M v / sigma, env = conj(v)
            let mut u = m.matvec(&v);
            for z in u.iter_mut() {
                *z /= sigma;
            }
            let env = v.iter().map(|z| z.conj()).collect();
            branches.push(canonicalize(sigma, u, env));
        }
    }
    Ok(branches)
}

/// Phase convention: the environment vector's largest-magnitude component is
/// made real positive; the compensating phase goes to the frame side.
fn canonicalize(coeff: f64, mut state_s: Vec<C64>, mut state_env: Vec<C64>) -> SchmidtBranch {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, z) in state_env.iter().enumerate() {
        let mag = z.norm();
        if mag > best_mag + 1e-14 {
            best_mag = mag;
            best = i;
        }
    }
    if best_mag > 0.0 {
        let phase = state_env[best] / best_mag;
        let corr = phase.conj();
        for z in state_env.iter_mut() {
            *z *= corr;
        }
        for z in state_s.iter_mut() {
            *z *= phase;
        }
    }
    SchmidtBranch {
        coeff,
        state_s,
        state_env,
    }
}

/// Node of a conditioned-trajectory tree. `label` collects the outcome
/// indices along the path; `prob` is the cumulative path probability.
#[derive(Clone, Debug)]
pub struct BranchNode {
    pub label: Vec<usize>,
    pub coeff: f64,
    pub prob: f64,
    pub state_s: Vec<C64>,
    pub state_env: Vec<C64>,
    pub children: Vec<BranchNode>,
}

impl BranchNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a BranchNode>) {
        if self.is_leaf() {
            out.push(self);
        } else {
            for c in &self.children {
                c.collect_leaves(out);
            }
        }
    }

    fn find(&self, label: &[usize]) -> Option<&BranchNode> {
        if label.is_empty() {
            return Some(self);
        }
        self.children
            .iter()
            .find(|c| c.label.last() == Some(&label[0]))
            .and_then(|c| c.find(&label[1..]))
    }
}

/// Conditioned-trajectory tree of a frame under an event script.
#[derive(Clone, Debug)]
pub struct BranchTree {
    pub layout: Arc<SubsystemLayout>,
    pub frame: Vec<usize>,
    pub root: BranchNode,
}

impl BranchTree {
    pub fn leaves(&self) -> Vec<&BranchNode> {
        let mut out = Vec::new();
        self.root.collect_leaves(&mut out);
        out
    }

    pub fn node(&self, label: &[usize]) -> Result<&BranchNode> {
        self.root
            .find(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_vec()))
    }

    pub fn leaf_probabilities(&self) -> Vec<(Vec<usize>, f64)> {
        self.leaves()
            .iter()
            .map(|l| (l.label.clone(), l.prob))
            .collect()
    }

    /// Conditioned total state of a node (frame factor tensor complement).
    pub fn total_state(&self, node: &BranchNode) -> Result<TensorState> {
        TensorState::from_split(
            self.layout.clone(),
            &self.frame,
            &node.state_s,
            &node.state_env,
        )
    }

    /// Sum over leaves of p |state_s><state_s| — the frame-side ensemble.
    pub fn frame_ensemble(&self) -> CMatrix {
        let ds = self.layout.subset_dim(&self.frame);
        let mut rho = CMatrix::zeros(ds, ds);
        for leaf in self.leaves() {
            rho.axpy(
                C64::new(leaf.prob, 0.0),
                &CMatrix::outer(&leaf.state_s, &leaf.state_s),
            );
        }
        rho
    }

    /// JSON-serializable view of the tree.
    pub fn to_doc(&self) -> BranchNodeDoc {
        fn convert(node: &BranchNode) -> BranchNodeDoc {
            BranchNodeDoc {
                label: node.label.clone(),
                coeff: node.coeff,
                prob: node.prob,
                state_s: node.state_s.iter().map(|z| [z.re, z.im]).collect(),
                children: node.children.iter().map(convert).collect(),
            }
        }
        convert(&self.root)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchNodeDoc {
    pub label: Vec<usize>,
    pub coeff: f64,
    pub prob: f64,
    pub state_s: Vec<[f64; 2]>,
    pub children: Vec<BranchNodeDoc>,
}

/// Build the conditioned-trajectory tree of `frame` under the script:
/// each event evolves every branch's total conditioned state, which is then
/// Schmidt-split in the frame; children carry the conditional coefficients
/// and cumulative probabilities.
///
/// The initial state must be a product across the frame cut (trajectories
/// start from a definite conditioned state).
pub fn build_branch_tree(
    initial: &TensorState,
    script: &EventScript,
    frame: &[usize],
) -> Result<BranchTree> {
    let layout = initial.layout().clone();
    let frame = layout.validate_frame(frame)?;
    script.validate(&layout)?;

    let first = schmidt_split(initial, &frame)?;
    if first.len() != 1 {
        return Err(Error::EntangledInitialState);
    }
    let mut root = BranchNode {
        label: Vec::new(),
        coeff: 1.0,
        prob: 1.0,
        state_s: first[0].state_s.clone(),
        state_env: first[0].state_env.clone(),
        children: Vec::new(),
    };
    build_children(&mut root, &layout, &frame, script, 0)?;
    Ok(BranchTree {
        layout,
        frame,
        root,
    })
}

fn build_children(
    node: &mut BranchNode,
    layout: &Arc<SubsystemLayout>,
    frame: &[usize],
    script: &EventScript,
    step: usize,
) -> Result<()> {
    if step == script.events.len() {
        return Ok(());
    }
    let total = TensorState::from_split(layout.clone(), frame, &node.state_s, &node.state_env)?;
    let evolved = script.events[step].apply(&total)?;
    let branches = schmidt_split(&evolved, frame)?;
    for (outcome, b) in branches.into_iter().enumerate() {
        let mut label = node.label.clone();
        label.push(outcome);
        let mut child = BranchNode {
            label,
            coeff: b.coeff,
            prob: node.prob * b.coeff * b.coeff,
            state_s: b.state_s,
            state_env: b.state_env,
            children: Vec::new(),
        };
        build_children(&mut child, layout, frame, script, step + 1)?;
        node.children.push(child);
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoherenceReport {
    pub is_decoherent: bool,
    pub max_violation: f64,
}

/// Check the environment-orthogonality condition on the tree leaves: the
/// complement states must be orthogonal across *entire* labels, not just the
/// final outcome. A single-leaf tree is vacuously decoherent.
pub fn decoherence_check(tree: &BranchTree) -> DecoherenceReport {
    let leaves = tree.leaves();
    let mut max_violation = 0.0f64;
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            let overlap = numerics::vec_dot(&leaves[i].state_env, &leaves[j].state_env).norm();
            max_violation = max_violation.max(overlap);
        }
    }
    DecoherenceReport {
        is_decoherent: max_violation < DECOHERENCE_TOL,
        max_violation,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub joint_decoherent: bool,
    pub marginal_defect: f64,
    pub diagnostic: Option<String>,
}

/// Fidelity of a pure candidate state against the reduction of `state_s`
/// (on the joint frame) onto the `part` positions of the joint frame.
fn reduced_fidelity(
    layout: &SubsystemLayout,
    joint_frame: &[usize],
    state_s: &[C64],
    part: &[usize],
    candidate: &[C64],
) -> f64 {
    // positions of `part` subsystems inside the joint frame ordering
    let part_pos: Vec<usize> = part
        .iter()
        .map(|p| joint_frame.iter().position(|q| q == p).unwrap())
        .collect();
    let dims: Vec<usize> = joint_frame.iter().map(|&k| layout.dims()[k]).collect();
    let da: usize = part_pos.iter().map(|&p| dims[p]).product();
    let db = state_s.len() / da;
    // reshape: index of part / rest inside the joint frame factor
    let mut overlaps = vec![C64::new(0.0, 0.0); db];
    for (idx, &amp) in state_s.iter().enumerate() {
        if amp == C64::new(0.0, 0.0) {
            continue;
        }
        // digits of idx in the joint-frame mixed radix
        let mut digits = vec![0usize; dims.len()];
        let mut rem = idx;
        for (p, &d) in dims.iter().enumerate().rev() {
            digits[p] = rem % d;
            rem /= d;
        }
        let mut a_idx = 0;
        for &p in &part_pos {
            a_idx = a_idx * dims[p] + digits[p];
        }
        let mut b_idx = 0;
        for (p, &d) in dims.iter().enumerate() {
            if !part_pos.contains(&p) {
                b_idx = b_idx * d + digits[p];
            }
        }
        overlaps[b_idx] += candidate[a_idx].conj() * amp;
    }
    overlaps.iter().map(|z| z.norm_sqr()).sum()
}

/// Test whether two frames lift consistently to their joint frame: the
/// joint tree must be decoherent and its leaf probabilities must
/// marginalize onto each single-frame tree under branch-label alignment.
/// Alignment maps each joint node to single-frame nodes by reduced-state
/// fidelity; an ambiguous alignment is reported as inconsistent.
pub fn joint_consistency(
    tree_a: &BranchTree,
    tree_b: &BranchTree,
    tree_joint: &BranchTree,
) -> Result<ConsistencyReport> {
    if tree_a.layout != tree_b.layout || tree_a.layout != tree_joint.layout {
        return Err(Error::InvalidFrame("trees on different layouts".into()));
    }
    let mut union = tree_a.frame.clone();
    union.extend_from_slice(&tree_b.frame);
    union.sort_unstable();
    if tree_a.frame.iter().any(|k| tree_b.frame.contains(k)) {
        return Err(Error::InvalidFrame("frames overlap".into()));
    }
    if union != tree_joint.frame {
        return Err(Error::InvalidFrame(
            "joint tree frame is not the union of the component frames".into(),
        ));
    }

    let deco = decoherence_check(tree_joint);

    // accumulate joint probability mass onto aligned single-frame leaves
    let mut mass_a: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    let mut mass_b: std::collections::HashMap<Vec<usize>, f64> = Default::default();
    let mut stack = vec![(&tree_joint.root, &tree_a.root, &tree_b.root)];
    let mut diagnostic = None;

    'walk: while let Some((joint, a_node, b_node)) = stack.pop() {
        if joint.is_leaf() {
            *mass_a.entry(a_node.label.clone()).or_insert(0.0) += joint.prob;
            *mass_b.entry(b_node.label.clone()).or_insert(0.0) += joint.prob;
            continue;
        }
        for child in &joint.children {
            let a_child = match align_child(
                &tree_joint.layout,
                &tree_joint.frame,
                child,
                &tree_a.frame,
                a_node,
            ) {
                Ok(n) => n,
                Err(msg) => {
                    diagnostic = Some(format!("frame A alignment: {msg}"));
                    break 'walk;
                }
            };
            let b_child = match align_child(
                &tree_joint.layout,
                &tree_joint.frame,
                child,
                &tree_b.frame,
                b_node,
            ) {
                Ok(n) => n,
                Err(msg) => {
                    diagnostic = Some(format!("frame B alignment: {msg}"));
                    break 'walk;
                }
            };
            stack.push((child, a_child, b_child));
        }
    }

    if let Some(diag) = diagnostic {
        return Ok(ConsistencyReport {
            consistent: false,
            joint_decoherent: deco.is_decoherent,
            marginal_defect: f64::NAN,
            diagnostic: Some(diag),
        });
    }

    let mut defect = 0.0f64;
    for (label, p) in tree_a.leaf_probabilities() {
        let got = mass_a.get(&label).copied().unwrap_or(0.0);
        defect = defect.max((got - p).abs());
    }
    for (label, p) in tree_b.leaf_probabilities() {
        let got = mass_b.get(&label).copied().unwrap_or(0.0);
        defect = defect.max((got - p).abs());
    }

    let consistent = deco.is_decoherent && defect <= MARGINAL_TOL;
    Ok(ConsistencyReport {
        consistent,
        joint_decoherent: deco.is_decoherent,
        marginal_defect: defect,
        diagnostic: None,
    })
}

fn align_child<'a>(
    layout: &SubsystemLayout,
    joint_frame: &[usize],
    joint_child: &BranchNode,
    part_frame: &[usize],
    part_parent: &'a BranchNode,
) -> std::result::Result<&'a BranchNode, String> {
    let mut matched = None;
    for cand in &part_parent.children {
        let fid = reduced_fidelity(
            layout,
            joint_frame,
            &joint_child.state_s,
            part_frame,
            &cand.state_s,
        );
        if fid > 1.0 - ALIGNMENT_TOL {
            if matched.is_some() {
                return Err(format!(
                    "joint branch {:?} matches multiple children",
                    joint_child.label
                ));
            }
            matched = Some(cand);
        }
    }
    matched.ok_or_else(|| {
        format!(
            "joint branch {:?} has no pure counterpart (reduced state mixed or \
             Schmidt bases degenerate)",
            joint_child.label
        )
    })
}
