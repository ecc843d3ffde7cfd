//! Pluggable exact-MILP solving for [`ModelDescription`] instances, plus an
//! exhaustive oracle for tiny instances used to certify whichever backend is
//! plugged in.

mod backend;
pub mod oracle;

pub use backend::HighsBackend;
pub use oracle::{exhaustive_oracle, OracleError, ORACLE_CELL_BUDGET};

use thiserror::Error;

use crate::model::{ModelDescription, VarId};

/// Environment variable that selects the backend adapter by name.
pub const SOLVER_ENV_VAR: &str = "EVMARKET_SOLVER";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Proven optimal within the requested gap and tolerances.
    Optimal,
    /// No feasible assignment exists.
    Infeasible,
    /// Time limit expired; the assignment holds the best incumbent, if any.
    LimitReached,
}

/// A solved (or attempted) model: status, objective, and one value per
/// declared variable. Immutable after return.
#[derive(Debug, Clone)]
pub struct Solution {
    status: SolveStatus,
    objective: f64,
    values: Vec<f64>,
}

impl Solution {
    pub fn new(status: SolveStatus, objective: f64, values: Vec<f64>) -> Self {
        Self {
            status,
            objective,
            values,
        }
    }

    pub fn infeasible() -> Self {
        Self {
            status: SolveStatus::Infeasible,
            objective: f64::NAN,
            values: Vec::new(),
        }
    }

    pub fn status(&self) -> SolveStatus {
        self.status
    }

    /// Objective value of the assignment; NaN when there is none.
    pub fn objective(&self) -> f64 {
        self.objective
    }

    /// True when the solution carries a usable variable assignment.
    pub fn has_assignment(&self) -> bool {
        !self.values.is_empty()
    }

    pub fn value(&self, id: VarId) -> f64 {
        self.values[id.index()]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_by_name(&self, model: &ModelDescription, name: &str) -> Option<f64> {
        model.var(name).map(|id| self.value(id))
    }
}

/// Knobs shared by every backend.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Wall-clock limit per solve, seconds.
    pub time_limit_secs: f64,
    /// Solver thread count; keep at 1 and parallelize across scenarios.
    pub threads: u32,
    /// Primal feasibility tolerance handed to the backend.
    pub feasibility_tolerance: f64,
    /// Seed for backend-internal tie breaking.
    pub random_seed: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            time_limit_secs: 60.0,
            threads: 1,
            feasibility_tolerance: 1e-6,
            random_seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("time limit must be positive, got {0}")]
    BadTimeLimit(f64),
    #[error("solver backend failed: {0}")]
    Backend(String),
    #[error("unknown solver backend {name:?}; available: {available}")]
    UnknownBackend { name: String, available: &'static str },
}

/// An exact MILP engine adapted to [`ModelDescription`].
pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Solves to proven optimality (relative gap 0) within tolerances, or
    /// reports infeasibility / time limit.
    fn solve(&self, model: &ModelDescription, options: &SolverOptions)
        -> Result<Solution, SolveError>;
}

/// The backend used when nothing is configured.
pub fn default_backend() -> Box<dyn SolverBackend> {
    Box::new(HighsBackend)
}

/// Resolves the backend from [`SOLVER_ENV_VAR`], defaulting to HiGHS.
pub fn backend_from_env() -> Result<Box<dyn SolverBackend>, SolveError> {
    match std::env::var(SOLVER_ENV_VAR) {
        Ok(name) if name.eq_ignore_ascii_case("highs") || name.is_empty() => Ok(default_backend()),
        Ok(name) => Err(SolveError::UnknownBackend {
            name,
            available: "highs",
        }),
        Err(_) => Ok(default_backend()),
    }
}

/// Solves with the default backend.
pub fn solve(model: &ModelDescription, options: &SolverOptions) -> Result<Solution, SolveError> {
    HighsBackend.solve(model, options)
}
