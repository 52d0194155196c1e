//! Opinion dynamics on networks under a limited influence budget.
//!
//! A population of M individuals holds binary opinions. At each discrete
//! slot one uniformly chosen individual observes a fraction of Yes
//! opinions, either from a random sample or from its graph neighborhood,
//! and flips with probability proportional to the opposing share. An
//! external influencer may claim a limited number of slots; in those
//! slots the chosen individual flips with fixed override probabilities
//! instead. The question throughout is where in the horizon those slots
//! are best spent.
//!
//! The crate offers four views of the same process, kept deliberately
//! independent so they can cross-check each other:
//!
//! - [`dynamics`]: the one-slot stochastic kernel itself, plus an exact
//!   enumeration of the one-step change distribution.
//! - [`meanfield`]: the large-population ODE limit with closed-form and
//!   Runge-Kutta solvers, including hub-spoke reductions.
//! - [`montecarlo`]: trial simulation with common random numbers across
//!   schedules and deterministic parallel estimation.
//! - [`oracle`]: exact evolution of the full state distribution for small
//!   populations, with exhaustive schedule comparison.

pub mod dynamics;
pub mod error;
pub mod graph;
pub mod meanfield;
pub mod montecarlo;
pub mod opinion;
pub mod oracle;
pub mod rng;
pub mod schedule;
pub mod trajectory;
mod util;

pub use dynamics::{
    flip_probabilities, one_step_delta_distribution, step, DeltaPmf, DynamicsParams,
    InteractionMode, KDistribution, StepOutcome, MAX_ENUMERATED_K,
};
pub use error::{Error, Result};
pub use graph::{generate, GraphKind, GraphSpec, GraphTopology, NodeId};
pub use meanfield::{
    hub_spoke_case_a, hub_spoke_case_b, hub_spoke_case_c, hub_spoke_rk4, rk4_schedule, solve_free,
    solve_influenced, solve_schedule, OdeParams, PiecewisePlan, MAX_RK4_DT,
};
pub use montecarlo::{
    compare_strategies, estimate, estimate_conditioned_hub, estimate_conditioned_hub_at,
    run_conditioned_hub_trial, run_trial, EstimateSummary, InitialState, TrialConfig,
};
pub use opinion::{Fraction, OpinionVector};
pub use oracle::{
    evolve_exact, expected_terminal, verify_ordering, OrderingReport, ScheduleValue,
    StateDistribution, TrichotomyPrediction,
};
pub use schedule::{
    consecutive, enumerate_all, first_slots, last_slots, Horizon, InfluenceSchedule,
};
pub use trajectory::Trajectory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
