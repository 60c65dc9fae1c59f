use std::fmt;

use hpcready_pipeline::{ContainerConfig, Digest};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum JobState {
    Pending,
    Building,
    Converting,
    Finished,
    Failed,
}

impl JobState {
    pub fn is_terminal(self) -> bool {
        matches!(self, JobState::Finished | JobState::Failed)
    }

    /// PENDING→BUILDING→CONVERTING→FINISHED, PENDING→FINISHED (reuse), and
    /// any non-terminal state →FAILED.
    pub fn can_transition(self, to: JobState) -> bool {
        use JobState::*;
        match (self, to) {
            (Pending, Building) | (Building, Converting) | (Converting, Finished) => true,
            (Pending, Finished) => true,
            (from, Failed) => !from.is_terminal(),
            _ => false,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            JobState::Pending => "PENDING",
            JobState::Building => "BUILDING",
            JobState::Converting => "CONVERTING",
            JobState::Finished => "FINISHED",
            JobState::Failed => "FAILED",
        }
    }
}

impl fmt::Display for JobState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether `states` (starting at PENDING) follows the job state machine.
pub fn is_legal_sequence(states: &[JobState]) -> bool {
    states.first().map_or(true, |s| *s == JobState::Pending) && states.windows(2).all(|w| w[0].can_transition(w[1]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub state: JobState,
    /// Milliseconds since the Unix epoch.
    pub at_ms: u64,
}

/// A build request and its progress. `image_id` is set iff FINISHED.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildJob {
    pub job_id: String,
    pub config: ContainerConfig,
    pub state: JobState,
    pub image_id: Option<String>,
    pub canonical_digest: Option<Digest>,
    pub reused: bool,
    pub log: String,
    pub history: Vec<Transition>,
}

impl BuildJob {
    pub fn new(job_id: String, config: ContainerConfig, now_ms: u64) -> Self {
        Self {
            job_id,
            config,
            state: JobState::Pending,
            image_id: None,
            canonical_digest: None,
            reused: false,
            log: String::new(),
            history: vec![Transition { state: JobState::Pending, at_ms: now_ms }],
        }
    }

    /// Applies a legal transition; returns false (and changes nothing) otherwise.
    pub fn advance(&mut self, to: JobState, now_ms: u64) -> bool {
        if !self.state.can_transition(to) {
            return false;
        }
        self.state = to;
        self.history.push(Transition { state: to, at_ms: now_ms });
        true
    }

    pub fn view(&self, tail_bytes: usize) -> JobView {
        let mut start = self.log.len().saturating_sub(tail_bytes);
        while !self.log.is_char_boundary(start) {
            start += 1;
        }
        JobView {
            job_id: self.job_id.clone(),
            state: self.state,
            reused: self.reused,
            image_id: self.image_id.clone(),
            canonical_digest: self.canonical_digest,
            log_tail: self.log[start..].to_string(),
            history: self.history.clone(),
        }
    }
}

/// What `GET /status/<id>` returns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobView {
    pub job_id: String,
    pub state: JobState,
    pub reused: bool,
    pub image_id: Option<String>,
    pub canonical_digest: Option<Digest>,
    pub log_tail: String,
    pub history: Vec<Transition>,
}
