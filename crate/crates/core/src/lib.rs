//! Equilibrium solver for two-agent stopping games on finite event trees.
//!
//! The library models a filtered probability space as a finite [`EventTree`],
//! Bermudan stopping strategies as exact cuts of that tree restricted to an
//! [`ExerciseSchedule`], and preference functionals as node-local, monotone,
//! constant-preserving [`EvaluationOperator`]s (probability-weighted mean,
//! entropic certainty equivalent, or worst/best-case over finite prior sets).
//! On top of these it provides:
//!
//! * backward-induction value families for unilateral stopping problems with
//!   an opponent-imposed cap ([`value_family`], [`minimal_optimal`]), plus
//!   enumeration oracles ([`brute_force_value`]) to certify them;
//! * an alternating best-response recursion that constructs a Nash
//!   equilibrium point of the two-agent stopping game ([`solve`]);
//! * independent certification of solver output by exhaustive deviation
//!   checks and structural trace invariants ([`nash_check`],
//!   [`trace_invariants`], [`all_nash_pairs`]);
//! * a randomized conformance harness for the evaluation-operator laws
//!   ([`axiom_check`]) and a deterministic random-instance generator
//!   ([`gen`]).
//!
//! All public containers are immutable after construction and safe to share
//! across threads.

pub mod axioms;
pub mod error;
pub mod evaluation;
pub mod game;
pub mod gen;
pub mod stopping;
pub mod strategy;
pub mod tree;
pub mod verify;

pub use axioms::{axiom_check, AxiomCheck, AxiomReport, Counterexample, TOL_AXIOM};
pub use error::{Error, Result};
pub use evaluation::{Direction, EvaluationOperator, OperatorDescription};
pub use game::{
    assessment, best_response, best_response_payoff, realized_payoff, solve, Agent, BestResponse,
    EquilibriumResult, GameInstance, IterationRecord, SolveConfig,
};
pub use gen::{generate, GenSpec, GeneratedInstance, OperatorSpec};
pub use stopping::{
    brute_force_value, localized_value, minimal_optimal, minimal_optimal_via_raw_region,
    value_family, ValueFamily,
};
pub use strategy::{
    enumerate_strategies, evaluate_family_at, first_hitting, random_stopping_time, strategy_count,
    BermudanStoppingTime, CanonicalPartition, ExerciseSchedule,
};
pub use tree::{AdaptedProcess, EventTree, NodeId, NodeSpec, EPS_PROB};
pub use verify::{
    all_nash_pairs, invariant_check_names, nash_check, trace_invariants, DeviationSummary,
    InvariantCheck, InvariantReport, NashReport,
};
