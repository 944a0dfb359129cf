use thiserror::Error;

/// Errors raised by tree construction, strategy algebra, evaluation and the
/// equilibrium solver. Variants carry the offending node ids so callers can
/// surface precise diagnostics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate node id {id}")]
    DuplicateNodeId { id: u32 },

    #[error("node {parent} references unknown child {child}")]
    DanglingChild { parent: u32, child: u32 },

    #[error("node {child} has more than one parent")]
    MultipleParents { child: u32 },

    #[error("tree must have exactly one root, found {count}")]
    RootCount { count: usize },

    #[error("root {id} must sit at stage 0, found stage {stage}")]
    RootNotAtStageZero { id: u32, stage: u32 },

    #[error("node {id} is not reachable from the root")]
    UnreachableNode { id: u32 },

    #[error("child {child} of node {parent} must sit exactly one stage deeper")]
    StageSkip { parent: u32, child: u32 },

    #[error("leaf {id} sits at stage {stage}, expected terminal stage {expected}")]
    LeafAtWrongStage { id: u32, stage: u32, expected: u32 },

    #[error("probability {prob} on edge {parent} -> {child} lies outside (0, 1]")]
    InvalidProbability { parent: u32, child: u32, prob: f64 },

    #[error("child probabilities of node {node} sum to {sum:.17}, expected 1")]
    ProbabilitySumViolation { node: u32, sum: f64 },

    #[error("expected one date per stage ({expected}), found {found}")]
    DateCountMismatch { expected: usize, found: usize },

    #[error(
        "dates must be finite, non-negative and strictly increasing; violation at stage {stage}"
    )]
    NonIncreasingDates { stage: u32 },

    #[error("unknown node id {id}")]
    UnknownNode { id: u32 },

    #[error("stage {stage} out of range, tree horizon is {max}")]
    StageOutOfRange { stage: u32, max: u32 },

    #[error("value at node {node} is not finite")]
    NonFiniteValue { node: u32 },

    #[error("missing value for node {node}")]
    MissingPayoff { node: u32 },

    #[error("invalid exercise schedule: {detail}")]
    InvalidSchedule { detail: String },

    #[error("invalid stopping time: {detail}")]
    InvalidStoppingTime { detail: String },

    #[error("operands belong to different trees or exercise schedules")]
    SchemaMismatch,

    #[error("event is not measurable at the required stopping stage: {detail}")]
    NotMeasurable { detail: String },

    #[error("strategy enumeration exceeded the limit of {limit}")]
    EnumerationLimitExceeded { limit: usize },

    #[error("evaluation start time must not come after the stop time")]
    OrderViolation,

    #[error("missing evaluation input at stop node {node}")]
    MissingValues { node: u32 },

    #[error("entropic parameter gamma must be finite and non-zero, got {gamma}")]
    BadGamma { gamma: f64 },

    #[error("invalid prior set at node {node}: {detail}")]
    BadPrior { node: u32, detail: String },

    #[error("stop payoff exceeds continuation payoff at node {node}: X = {x}, Y = {y}")]
    LowerExceedsUpper { node: u32, x: f64, y: f64 },

    #[error("terminal payoffs must coincide at leaf {node}: X = {x}, Y = {y}")]
    TerminalMismatch { node: u32, x: f64, y: f64 },

    #[error("best-response iteration did not stabilize within {iterations} steps")]
    NoConvergence { iterations: usize },

    #[error("invalid generator parameters: {detail}")]
    InvalidGenSpec { detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
