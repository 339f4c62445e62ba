//! Wire types shared by the session service and its client.

use serde::{Deserialize, Serialize};

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableInput {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Overrides for the server's defaults.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSession {
    pub table: TableInput,
    pub question: String,
    pub answer: Vec<String>,
    #[serde(default)]
    pub config: SessionConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionState {
    Searching,
    AwaitingAnnotation,
    Resolved,
    Exhausted,
    AllPruned,
    /// The search itself could not run, e.g. the table had no usable cells.
    Failed,
}

impl SessionState {
    pub fn is_terminal(self) -> bool {
        matches!(self, SessionState::Resolved | SessionState::Exhausted | SessionState::AllPruned | SessionState::Failed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub pass1_cells: usize,
    pub pass2_cells: usize,
    pub consistent_forms: usize,
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    pub classes_initial: usize,
    pub classes_surviving: usize,
    pub annotations: usize,
    pub worlds: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationView {
    pub world_id: usize,
    pub answer: Vec<String>,
    pub annotator: String,
    pub ts: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub state: SessionState,
    pub question: String,
    pub stats: Option<SearchStats>,
    pub progress: Progress,
    pub annotations: Vec<AnnotationView>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorldPayload {
    pub world_id: usize,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// `world` is set for greedy mode, `worlds` for batch mode; both are empty
/// once no further annotation is needed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextWorld {
    pub done: bool,
    pub state: SessionState,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world: Option<WorldPayload>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub worlds: Vec<WorldPayload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    pub progress: Progress,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRequest {
    pub world_id: usize,
    pub answer: Vec<String>,
    #[serde(default)]
    pub annotator: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSummary {
    pub id: usize,
    pub representative: String,
    pub members: usize,
    pub forms: Vec<String>,
    pub surviving: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultView {
    pub state: SessionState,
    pub all_pruned: bool,
    /// Surviving classes, largest first.
    pub classes: Vec<ClassSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassesView {
    pub state: SessionState,
    pub classes: Vec<ClassSummary>,
}

/// An RFC 7807 problem document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    #[serde(rename = "type")]
    pub kind: String,
    pub title: String,
    pub status: u16,
    #[serde(default)]
    pub detail: String,
}
