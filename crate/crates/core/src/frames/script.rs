//! Event scripts: ordered lists of unitary scattering events acting on
//! subsystem subsets, plus the JSON document format they load from.

use super::layout::{SubsystemLayout, TensorState};
use crate::numerics::{CMatrix, C64};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const UNITARY_TOL: f64 = 1e-10;

/// One scattering event: a unitary on a subsystem subset, identity
/// elsewhere. The optional frame records which subsystems constitute the
/// split side declared for this step (informational; tree construction uses
/// the frame passed to `build_branch_tree`).
#[derive(Clone, Debug)]
pub struct Event {
    pub matrix: CMatrix,
    pub targets: Vec<usize>,
    pub frame_hint: Option<Vec<usize>>,
}

impl Event {
    pub fn new(
        matrix: CMatrix,
        targets: Vec<usize>,
        frame_hint: Option<Vec<usize>>,
    ) -> Result<Self> {
        matrix.check_unitary(UNITARY_TOL)?;
        Ok(Self {
            matrix,
            targets,
            frame_hint,
        })
    }

    pub fn apply(&self, state: &TensorState) -> Result<TensorState> {
        state.apply_on_subset(&self.matrix, &self.targets)
    }
}

/// Ordered scattering events; one event per coarse-grained time step.
#[derive(Clone, Debug)]
pub struct EventScript {
    pub events: Vec<Event>,
}

impl EventScript {
    pub fn validate(&self, layout: &SubsystemLayout) -> Result<()> {
        for (k, e) in self.events.iter().enumerate() {
            if e.targets.iter().any(|&t| t >= layout.n_subsystems()) {
                return Err(Error::InvalidParameter(format!(
                    "event {k} targets out of range"
                )));
            }
            let ds: usize = e.targets.iter().map(|&t| layout.dims()[t]).product();
            if e.matrix.rows() != ds {
                return Err(Error::ShapeMismatch(format!(
                    "event {k}: {}x{} matrix for target dimension {ds}",
                    e.matrix.rows(),
                    e.matrix.cols()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

/// Initial state in a script document: either dense amplitudes over the
/// full product space or per-subsystem factors.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSpec {
    Dense(Vec<[f64; 2]>),
    Product(Vec<Vec<[f64; 2]>>),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventDoc {
    pub targets: Vec<String>,
    pub matrix: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<Vec<String>>,
}

/// JSON document describing a measurement-chain script.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptDoc {
    pub layout: Vec<(String, usize)>,
    pub initial: InitialSpec,
    pub events: Vec<EventDoc>,
    /// Named frames for which branch trees should be built.
    #[serde(default)]
    pub frames: std::collections::BTreeMap<String, Vec<String>>,
}

fn complex_row(row: &[[f64; 2]]) -> Vec<C64> {
    row.iter().map(|&[re, im]| C64::new(re, im)).collect()
}

impl ScriptDoc {
    pub fn build(&self) -> Result<(TensorState, EventScript)> {
        let subsystems: Vec<(&str, usize)> =
            self.layout.iter().map(|(n, d)| (n.as_str(), *d)).collect();
        let layout = Arc::new(SubsystemLayout::new(&subsystems)?);
        let initial = match &self.initial {
            InitialSpec::Dense(amp) => TensorState::new(layout.clone(), complex_row(amp))?,
            InitialSpec::Product(factors) => {
                let parts: Vec<Vec<C64>> = factors.iter().map(|f| complex_row(f)).collect();
                TensorState::product(layout.clone(), &parts)?
            }
        };
        let events = self
            .events
            .iter()
            .map(|e| {
                let targets = layout.resolve(&e.targets)?;
                let matrix = CMatrix::from_rows(e.matrix.iter().map(|r| complex_row(r)).collect())?;
                let frame_hint = e.frame.as_ref().map(|f| layout.resolve(f)).transpose()?;
                Event::new(matrix, targets, frame_hint)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((initial, EventScript { events }))
    }

    pub fn resolve_frame(&self, state: &TensorState, name: &str) -> Result<Vec<usize>> {
        let frame_names = self
            .frames
            .get(name)
            .ok_or_else(|| Error::InvalidFrame(format!("unknown frame `{name}`")))?;
        state.layout().resolve(frame_names)
    }
}
