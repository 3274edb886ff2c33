use thiserror::Error;

use crate::model::Role;

pub type Result<T, E = TrapError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrapError {
    #[error("unknown trap preset {0} (expected 1, 2 or 3)")]
    UnknownPreset(u32),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("geometry has {} violation(s): {}", .0.len(), .0.join("; "))]
    InvalidGeometry(Vec<String>),

    #[error("geometry cannot be meshed: {0}")]
    Unmeshable(String),

    #[error("boundary system is singular or ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("point ({:.3}, {:.3}, {:.3}) um lies inside a conductor", .0[0] * 1e6, .0[1] * 1e6, .0[2] * 1e6)]
    InsideConductor([f64; 3]),

    #[error("electrode role {0:?} is not present in the model")]
    MissingRole(Role),

    #[error("no trapping minimum found: {0}")]
    NoMinimum(String),

    #[error("stationary point is a saddle (Hessian eigenvalues {eigenvalues:?} J/m^2)")]
    Saddle { eigenvalues: [f64; 3] },

    #[error("dc configuration is unbounded from below inside the analysis domain")]
    Unbounded,

    #[error("{0} did not converge")]
    NonConvergence(String),

    #[error("actuator matrix has rank {rank} < 3; unreachable field directions {null_space:?}")]
    RankDeficient {
        rank: usize,
        null_space: Vec<[f64; 3]>,
    },

    #[error("heating rate is zero; force sensitivity is unbounded in this idealisation")]
    ZeroHeatingRate,

    #[error("baseline efficiency is zero")]
    ZeroBaseline,
}
