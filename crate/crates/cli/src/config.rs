//! Run configurations: one structured JSON document per run. Unknown keys
//! are rejected so config typos fail loudly.

use decolab_core::frames::ScriptDoc;
use decolab_core::localization::PotentialSpec;
use decolab_core::unravel::LindbladModelSpec;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    pub dx: f64,
    /// Left edge; defaults to a grid centered on x = 0.
    #[serde(default)]
    pub x0: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialPacket {
    pub center: f64,
    pub sigma: f64,
    #[serde(default)]
    pub momentum: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizeConfig {
    pub grid: GridSpec,
    pub mass: f64,
    pub lambda: f64,
    pub potential: PotentialSpec,
    /// Timestep; defaults to t_loc / 200 when the coupling is positive.
    #[serde(default)]
    pub dt: Option<f64>,
    /// Duration in localization times (exclusive with `t_final`).
    #[serde(default)]
    pub t_final_t_loc: Option<f64>,
    #[serde(default)]
    pub t_final: Option<f64>,
    pub initial: InitialPacket,
    #[serde(default = "one")]
    pub n_trajectories: usize,
    /// How many trajectory CSVs to write (first k trajectories).
    #[serde(default = "one")]
    pub record_paths: usize,
    /// Wave-function snapshot times for the first trajectory.
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollapseConfig {
    /// Initial weight of the first packet.
    pub w1: f64,
    /// Packet separation.
    pub separation: f64,
    pub lambda: f64,
    pub n_runs: usize,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default = "four")]
    pub record_paths: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpecOrRandom {
    Inline(LindbladModelSpec),
    Random {
        dim: usize,
        n_ops: usize,
        rate_scale: f64,
        model_seed: u64,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnravelConfig {
    pub model: ModelSpecOrRandom,
    pub dt: f64,
    pub t_final: f64,
    pub n_trajectories: usize,
    /// Step sizes for the branch-reconstruction defect report.
    #[serde(default = "default_defect_dts")]
    pub defect_dts: Vec<f64>,
    /// Initial pure state amplitudes; defaults to the first basis state.
    #[serde(default)]
    pub initial: Option<Vec<[f64; 2]>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn default_defect_dts() -> Vec<f64> {
    vec![1e-3, 5e-4, 2.5e-4]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FramesConfig {
    /// Named bundled scenario: "epr" | "wigner" | "chsh" | "fr".
    #[serde(default)]
    pub scenario: Option<String>,
    /// Mixing angle for the single-superobserver scenario.
    #[serde(default)]
    pub phi: Option<f64>,
    /// Mixing angle for the correlation test.
    #[serde(default)]
    pub theta: Option<f64>,
    /// User-supplied measurement-chain script (alternative to `scenario`).
    #[serde(default)]
    pub script: Option<ScriptDoc>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleRow {
    pub label: String,
    pub inertia: f64,
    pub lambda: f64,
    #[serde(default)]
    pub lyapunov: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    pub rows: Vec<ScaleRow>,
    #[serde(default)]
    pub threads: Option<usize>,
}

fn one() -> usize {
    1
}

fn four() -> usize {
    4
}
