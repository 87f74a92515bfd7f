//! Per-run traces emitted by the planners.

use serde::{Deserialize, Serialize};

/// `c_best` after `iteration`; a trace holds one point per strict improvement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    FirstSolution {
        cost: f64,
    },
    /// Guidance computed before the first iteration.
    GuidanceInitial {
        guide_size: usize,
        connected: bool,
        rounds: usize,
    },
    /// Guidance recomputed because `c_best` dropped below `alpha * c_update`.
    GuidanceRetrigger {
        c_curr: f64,
        guide_size: usize,
        connected: bool,
        rounds: usize,
    },
    /// The provider failed; the rest of the run samples without guidance.
    GuidanceUnavailable {
        reason: String,
    },
    /// The cloud could not be built; the previous guide is kept.
    GuidanceDegenerate {
        reason: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub iteration: usize,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// How many samples each branch produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub uniform: usize,
    pub informed: usize,
    pub guide: usize,
    /// Guide branch drawn while the guide was empty.
    pub guide_fallback: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub planner: String,
    pub problem: String,
    pub seed: u64,
    pub iterations: usize,
    pub trace: Vec<TracePoint>,
    pub events: Vec<RunEvent>,
    pub samples: SampleCounts,
    pub vertices: usize,
    /// Wall-clock duration; excluded from serialized results.
    #[serde(skip)]
    pub wall_ms: f64,
}

impl RunRecord {
    /// `c_best` after `iteration` (infinity before the first solution).
    pub fn cost_at(&self, iteration: usize) -> f64 {
        let k = self.trace.partition_point(|p| p.iteration <= iteration);
        if k == 0 {
            f64::INFINITY
        } else {
            self.trace[k - 1].cost
        }
    }

    pub fn first_solution(&self) -> Option<TracePoint> {
        self.trace.first().copied()
    }

    pub fn final_cost(&self) -> f64 {
        self.trace.last().map_or(f64::INFINITY, |p| p.cost)
    }

    pub fn retriggers(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::GuidanceRetrigger { .. }))
            .count()
    }

    /// Iterations strictly increase and costs strictly decrease.
    pub fn trace_is_monotone(&self) -> bool {
        self.trace
            .windows(2)
            .all(|w| w[0].iteration < w[1].iteration && w[1].cost < w[0].cost)
    }
}
