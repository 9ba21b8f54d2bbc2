//! Exact engine for discrete measurement chains on small tensor-product
//! systems: scattering-event unitaries, Schmidt splitting of a chosen
//! subsystem frame against its complement, conditioned-state branch trees,
//! the environment-orthogonality (decoherence) condition, joint-frame
//! consistency, and the history-operator layer (chain operators,
//! decoherence functionals, channel operators on the frame factor).

mod histories;
mod layout;
pub mod ops;
mod script;
mod tree;

pub use histories::HistoryAnalysis;
pub use layout::{SubsystemLayout, TensorState};
pub use ops::{basis_measurement_unitary, measurement_unitary};
pub use script::{Event, EventDoc, EventScript, InitialSpec, ScriptDoc};
pub use tree::{
    build_branch_tree, decoherence_check, joint_consistency, schmidt_split, BranchNode, BranchTree,
    ConsistencyReport, DecoherenceReport, SchmidtBranch,
};
