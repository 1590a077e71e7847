use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad magic: expected BRDGMDP1 or JSON object")]
    BadMagic,

    #[error("size inconsistency: {0}")]
    SizeMismatch(String),

    #[error("malformed MDP file: {0}")]
    Format(String),

    #[error("state cap exceeded: {limit} states (frontier size {frontier})")]
    CapExceeded { limit: usize, frontier: usize },

    #[error("action-sequence cap exceeded: {count} sequences > {limit}")]
    SequenceCap { count: u128, limit: usize },

    #[error("simulator is nondeterministic at depth {depth}, action {action}")]
    Nondeterministic { depth: usize, action: usize },

    #[error("MDP is not {k}-QVI-solvable under the given exploration policy")]
    NotSolvable { k: usize },

    #[error("rewards must be nonnegative (state {state}, action {action})")]
    NegativeReward { state: usize, action: usize },

    #[error("not a goal MDP: {0}")]
    NotGoalMdp(String),

    #[error("method not applicable: {0}")]
    MethodNotApplicable(String),

    #[error("policy has no action distribution at t={t}, state {state}")]
    MissingPolicyRow { t: usize, state: usize },

    #[error("policy assigns zero probability to action {action} at t={t}, state {state}")]
    ZeroProbability { t: usize, state: usize, action: usize },

    #[error("unknown environment name: {0}")]
    UnknownEnv(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
