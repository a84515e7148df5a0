//! Error type carrying the process exit code.

use std::fmt;

use wisprkit::engine::EngineError;
use wisprkit::netsim::SimError;
use wisprkit::paths::PathError;
use wisprkit::planner::PlanError;
use wisprkit::topo::TopologyError;

pub const INPUT: u8 = 2;
pub const INFEASIBLE: u8 = 3;
pub const IO: u8 = 4;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: INPUT, error: error.into() }
    }

    pub fn io(error: impl Into<anyhow::Error>) -> Self {
        Failure { code: IO, error: error.into() }
    }

    pub fn context(self, what: impl fmt::Display + Send + Sync + 'static) -> Self {
        Failure { code: self.code, error: self.error.context(what) }
    }
}

impl fmt::Debug for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exit {}: {:#}", self.code, self.error)
    }
}

fn topology_code(e: &TopologyError) -> u8 {
    match e {
        TopologyError::Io { .. } => IO,
        _ => INPUT,
    }
}

impl From<TopologyError> for Failure {
    fn from(e: TopologyError) -> Self {
        Failure { code: topology_code(&e), error: e.into() }
    }
}

impl From<PlanError> for Failure {
    fn from(e: PlanError) -> Self {
        let code = match &e {
            PlanError::CeilingBelowCost { .. } => INFEASIBLE,
            PlanError::Io(_) => IO,
            PlanError::Topology(t) => topology_code(t),
            _ => INPUT,
        };
        Failure { code, error: e.into() }
    }
}

impl From<PathError> for Failure {
    fn from(e: PathError) -> Self {
        let code = match &e {
            PathError::Topology(t) => topology_code(t),
            _ => INPUT,
        };
        Failure { code, error: e.into() }
    }
}

fn engine_code(e: &EngineError) -> u8 {
    match e {
        EngineError::Io { .. } => IO,
        EngineError::Topology(t) => topology_code(t),
        _ => INPUT,
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::Io { .. } => IO,
            SimError::Topology(t) => topology_code(t),
            SimError::Engine(inner) => engine_code(inner),
            _ => INPUT,
        };
        Failure { code, error: e.into() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::input(e)
    }
}
