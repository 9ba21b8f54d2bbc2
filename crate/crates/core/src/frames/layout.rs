//! Subsystem layouts and tensor-product states.

use crate::numerics::{self, CMatrix, C64};
use crate::{Error, Result};
use std::sync::Arc;

pub const MAX_TOTAL_DIM: usize = 4096;
pub const MAX_LOCAL_DIM: usize = 12;

/// Ordered list of named subsystems with local dimensions. Index convention
/// is row-major: the first subsystem varies slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    names: Vec<String>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl SubsystemLayout {
    pub fn new(subsystems: &[(&str, usize)]) -> Result<Self> {
        let names: Vec<String> = subsystems.iter().map(|(n, _)| n.to_string()).collect();
        let dims: Vec<usize> = subsystems.iter().map(|&(_, d)| d).collect();
        if names.is_empty() {
            return Err(Error::InvalidParameter("empty layout".into()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate subsystem name `{n}`"
                )));
            }
        }
        if dims.iter().any(|&d| d < 2 || d > MAX_LOCAL_DIM) {
            return Err(Error::InvalidParameter(format!(
                "local dimensions must be in 2..={MAX_LOCAL_DIM}"
            )));
        }
        let total: usize = dims.iter().product();
        if total > MAX_TOTAL_DIM {
            return Err(Error::InvalidParameter(format!(
                "total dimension {total} exceeds {MAX_TOTAL_DIM}"
            )));
        }
        let mut strides = vec![1usize; dims.len()];
        for k in (0..dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        Ok(Self {
            names,
            dims,
            strides,
            total,
        })
    }

    pub fn n_subsystems(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownSubsystem(name.to_string()))
    }

    pub fn resolve(&self, names: &[impl AsRef<str>]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.index_of(n.as_ref())).collect()
    }

    /// Decompose a total index into per-subsystem digits.
    pub fn digits(&self, index: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(&d, &s)| (index / s) % d)
            .collect()
    }

    /// Product of local dimensions over a subsystem subset.
    pub fn subset_dim(&self, subset: &[usize]) -> usize {
        subset.iter().map(|&k| self.dims[k]).product()
    }

    /// Complement of a subsystem subset, in layout order.
    pub fn complement(&self, subset: &[usize]) -> Vec<usize> {
        (0..self.dims.len())
            .filter(|k| !subset.contains(k))
            .collect()
    }

    /// Mixed-radix index of the given subset digits (subset in layout
    /// order) for a full index.
    pub fn subset_index(&self, full_index: usize, subset: &[usize]) -> usize {
        let mut idx = 0;
        for &k in subset {
            idx = idx * self.dims[k] + (full_index / self.strides[k]) % self.dims[k];
        }
        idx
    }

    /// Validate a frame: nonempty, proper subset, in-range, no duplicates;
    /// returns it sorted in layout order.
    pub fn validate_frame(&self, frame: &[usize]) -> Result<Vec<usize>> {
        let mut f = frame.to_vec();
        f.sort_unstable();
        f.dedup();
        if f.len() != frame.len() {
            return Err(Error::InvalidFrame("duplicate subsystems".into()));
        }
        if f.is_empty() {
            return Err(Error::InvalidFrame("empty frame".into()));
        }
        if f.iter().any(|&k| k >= self.dims.len()) {
            return Err(Error::InvalidFrame("subsystem index out of range".into()));
        }
        if f.len() == self.dims.len() {
            return Err(Error::InvalidFrame(
                "frame must be a proper subset (nonempty complement)".into(),
            ));
        }
        Ok(f)
    }
}

/// Pure state on a subsystem layout, unit norm.
#[derive(Clone, Debug)]
pub struct TensorState {
    layout: Arc<SubsystemLayout>,
    amp: Vec<C64>,
}

impl TensorState {
    pub fn new(layout: Arc<SubsystemLayout>, mut amp: Vec<C64>) -> Result<Self> {
        if amp.len() != layout.total_dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for total dimension {}",
                amp.len(),
                layout.total_dim()
            )));
        }
        if !numerics::all_finite(&amp) {
            return Err(Error::NonFinite("tensor state".into()));
        }
        numerics::normalize(&mut amp)?;
        Ok(Self { layout, amp })
    }

    /// Product state from per-subsystem factors.
    pub fn product(layout: Arc<SubsystemLayout>, factors: &[Vec<C64>]) -> Result<Self> {
        if factors.len() != layout.n_subsystems() {
            return Err(Error::ShapeMismatch(format!(
                "{} factors for {} subsystems",
                factors.len(),
                layout.n_subsystems()
            )));
        }
        for (k, f) in factors.iter().enumerate() {
            if f.len() != layout.dims()[k] {
                return Err(Error::ShapeMismatch(format!(
                    "factor {k} has length {}, subsystem dimension is {}",
                    f.len(),
                    layout.dims()[k]
                )));
            }
        }
        let total = layout.total_dim();
        let mut amp = vec![C64::new(1.0, 0.0); total];
        for (i, a) in amp.iter_mut().enumerate() {
            let digits = layout.digits(i);
            for (k, &d) in digits.iter().enumerate() {
                *a *= factors[k][d];
            }
        }
        Self::new(layout, amp)
    }

    /// Computational basis state from per-subsystem digit indices.
    pub fn basis_state(layout: Arc<SubsystemLayout>, digits: &[usize]) -> Result<Self> {
        let factors: Vec<Vec<C64>> = digits
            .iter()
            .zip(layout.dims())
            .map(|(&d, &dim)| {
                let mut f = vec![C64::new(0.0, 0.0); dim];
                f[d] = C64::new(1.0, 0.0);
                f
            })
            .collect();
        Self::product(layout, &factors)
    }

    pub fn layout(&self) -> &Arc<SubsystemLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn norm(&self) -> f64 {
        numerics::vec_norm(&self.amp)
    }

    pub fn overlap(&self, other: &TensorState) -> C64 {
        numerics::vec_dot(&self.amp, &other.amp)
    }

    /// Apply an operator on a subsystem subset (matrix indexed in the
    /// subset's layout order), identity elsewhere. Does not renormalize.
    pub fn apply_on_subset(&self, m: &CMatrix, targets: &[usize]) -> Result<TensorState> {
        let out = apply_subset_raw(&self.amp, &self.layout, m, targets)?;
        Ok(TensorState {
            layout: self.layout.clone(),
            amp: out,
        })
    }

    /// Recombine a frame-factor state and a complement-factor state into a
    /// full product state across the frame cut.
    pub fn from_split(
        layout: Arc<SubsystemLayout>,
        frame: &[usize],
        state_s: &[C64],
        state_env: &[C64],
    ) -> Result<TensorState> {
        let env = layout.complement(frame);
        if state_s.len() != layout.subset_dim(frame) || state_env.len() != layout.subset_dim(&env) {
            return Err(Error::ShapeMismatch("split factor dimensions".into()));
        }
        let amp: Vec<C64> = (0..layout.total_dim())
            .map(|i| {
                state_s[layout.subset_index(i, frame)] * state_env[layout.subset_index(i, &env)]
            })
            .collect();
        TensorState::new(layout, amp)
    }
}

/// Apply an operator to a raw amplitude vector on a subsystem subset.
pub(crate) fn apply_subset_raw(
    amp: &[C64],
    layout: &SubsystemLayout,
    m: &CMatrix,
    targets: &[usize],
) -> Result<Vec<C64>> {
    if targets.is_empty() {
        return Err(Error::InvalidParameter("empty target subset".into()));
    }
    let mut seen = targets.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != targets.len() || seen.iter().any(|&k| k >= layout.n_subsystems()) {
        return Err(Error::InvalidParameter("invalid target subset".into()));
    }
    let ds: usize = targets.iter().map(|&k| layout.dims()[k]).product();
    if m.rows() != ds || m.cols() != ds {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} operator for target dimension {ds}",
            m.rows(),
            m.cols()
        )));
    }
    let total = layout.total_dim();
    let strides = &layout.strides;

    // offsets of each target-subset digit combination within a full index
    let mut offsets = vec![0usize; ds];
    for s in 0..ds {
        let mut rem = s;
        let mut off = 0;
        for &k in targets.iter().rev() {
            let d = layout.dims()[k];
            off += (rem % d) * strides[k];
            rem /= d;
        }
        offsets[s] = off;
    }

    let mut out = vec![C64::new(0.0, 0.0); total];
    for base in 0..total {
        // bases are the indices with all-zero digits on the targets; every
        // index is base + offset for exactly one base
        if targets
            .iter()
            .any(|&k| (base / strides[k]) % layout.dims()[k] != 0)
        {
            continue;
        }
        for s_out in 0..ds {
            let mut acc = C64::new(0.0, 0.0);
            for s_in in 0..ds {
                let a = amp[base + offsets[s_in]];
                if a != C64::new(0.0, 0.0) {
                    acc += m[(s_out, s_in)] * a;
                }
            }
            out[base + offsets[s_out]] = acc;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn qubit_pair() -> Arc<SubsystemLayout> {
        Arc::new(SubsystemLayout::new(&[("A", 2), ("B", 2)]).unwrap())
    }

    #[test]
    fn layout_rejects_duplicates_and_bad_dims() {
        assert!(SubsystemLayout::new(&[("A", 2), ("A", 2)]).is_err());
        assert!(SubsystemLayout::new(&[("A", 1)]).is_err());
        assert!(SubsystemLayout::new(&[("A", 13)]).is_err());
    }

    #[test]
    fn layout_rejects_oversized_product() {
        let subsystems: Vec<(&str, usize)> = vec![("A", 8), ("B", 8), ("C", 8), ("D", 8), ("E", 2)];
        assert!(SubsystemLayout::new(&subsystems).is_err());
    }

    #[test]
    fn subset_indexing_round_trip() {
        let layout = SubsystemLayout::new(&[("A", 2), ("B", 3), ("C", 2)]).unwrap();
        for i in 0..layout.total_dim() {
            let digits = layout.digits(i);
            let s = layout.subset_index(i, &[0, 2]);
            assert_eq!(s, digits[0] * 2 + digits[2]);
            let e = layout.subset_index(i, &[1]);
            assert_eq!(e, digits[1]);
        }
    }

    #[test]
    fn product_state_amplitudes() {
        let layout = qubit_pair();
        let plus = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let zero = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let st = TensorState::product(layout, &[plus, zero]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((st.amplitudes()[0].re - s).abs() < 1e-14); // |00>
        assert!(st.amplitudes()[1].norm() < 1e-14); // |01>
        assert!((st.amplitudes()[2].re - s).abs() < 1e-14); // |10>
    }

    #[test]
    fn identity_event_is_identity() {
        let layout = qubit_pair();
        let st = TensorState::basis_state(layout, &[1, 0]).unwrap();
        let out = st.apply_on_subset(&CMatrix::identity(2), &[1]).unwrap();
        assert!((st.overlap(&out).re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn cnot_builds_entangled_pair() {
        let layout = qubit_pair();
        let plus = vec![c(1.0, 0.0), c(1.0, 0.0)];
        let zero = vec![c(1.0, 0.0), c(0.0, 0.0)];
        let st = TensorState::product(layout, &[plus, zero]).unwrap();
        // CNOT on (A, B): |a b> -> |a, b xor a>
        let mut cnot = CMatrix::zeros(4, 4);
        cnot[(0, 0)] = c(1.0, 0.0);
        cnot[(1, 1)] = c(1.0, 0.0);
        cnot[(3, 2)] = c(1.0, 0.0);
        cnot[(2, 3)] = c(1.0, 0.0);
        let out = st.apply_on_subset(&cnot, &[0, 1]).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        assert!((out.amplitudes()[0].re - s).abs() < 1e-14);
        assert!((out.amplitudes()[3].re - s).abs() < 1e-14);
        assert!(out.amplitudes()[1].norm() < 1e-14);
        assert!(out.amplitudes()[2].norm() < 1e-14);
        assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_events_commute() {
        let layout = Arc::new(SubsystemLayout::new(&[("A", 2), ("B", 2), ("C", 2)]).unwrap());
        let st = TensorState::product(
            layout,
            &[
                vec![c(0.8, 0.0), c(0.6, 0.0)],
                vec![c(0.6, 0.0), c(0.8, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0)],
            ],
        )
        .unwrap();
        let h = CMatrix::from_rows(vec![
            vec![c(1.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ])
        .unwrap()
        .scale(c(1.0 / 2.0f64.sqrt(), 0.0));
        let x = CMatrix::from_rows(vec![
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(1.0, 0.0), c(0.0, 0.0)],
        ])
        .unwrap();
        let ab = st
            .apply_on_subset(&h, &[0])
            .unwrap()
            .apply_on_subset(&x, &[2])
            .unwrap();
        let ba = st
            .apply_on_subset(&x, &[2])
            .unwrap()
            .apply_on_subset(&h, &[0])
            .unwrap();
        let diff = ab
            .amplitudes()
            .iter()
            .zip(ba.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(diff < 1e-12);
    }

    #[test]
    fn from_split_reassembles_product() {
        let layout = Arc::new(SubsystemLayout::new(&[("A", 2), ("B", 3), ("C", 2)]).unwrap());
        let st = TensorState::product(
            layout.clone(),
            &[
                vec![c(0.8, 0.0), c(0.6, 0.0)],
                vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
                vec![c(0.0, 0.0), c(1.0, 0.0)],
            ],
        )
        .unwrap();
        let frame = vec![0usize, 2];
        // frame factor: A x C, env: B
        let state_s: Vec<C64> = vec![c(0.0, 0.0), c(0.8, 0.0), c(0.0, 0.0), c(0.6, 0.0)];
        let state_env: Vec<C64> = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let rebuilt = TensorState::from_split(layout, &frame, &state_s, &state_env).unwrap();
        assert!((st.overlap(&rebuilt).norm() - 1.0).abs() < 1e-12);
    }
}
