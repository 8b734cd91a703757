//! Resilience analysis for stochastic games with disturbances.
//!
//! Player-1 strategies are scored by their *breaking point*: the least disturbance effort
//! an adversary needs to violate a safety or reachability objective, measured as an
//! expected or almost-sure number of disturbances and, when no finite number suffices, as
//! a long-run disturbance frequency.

pub mod arena;
pub mod chain;
pub mod eval;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod lp;
pub mod model;
pub mod numeric;
pub mod oracle;
pub mod qp;
pub mod solvers;
pub mod synthesis;
pub mod transforms;
pub mod verify;
