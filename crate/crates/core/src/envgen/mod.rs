//! Analytical MDP families, the simulator contract and a MiniGrid-style gridworld.

mod chains;
mod grid;
mod tree;

pub use chains::{
    make_adversarial_kt, make_delayed_chain, make_dense_chain, make_distractor, make_lowerbound_periodic,
    make_needle_chain, lowerbound_hidden_sequence,
};
pub use grid::{make_empty_grid, GridWorld};
pub use tree::TreeSim;

/// Default cap on generated state counts.
pub const DEFAULT_MAX_STATES: usize = 10_000_000;

/// Result of one simulator step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next: Vec<u8>,
    pub reward: f64,
    pub terminal: bool,
}

/// A deterministic environment addressed by opaque state blobs.
///
/// `step` must be a pure function of `(state, action)`.
pub trait Simulator: Clone + Send + Sync {
    fn num_actions(&self) -> usize;

    fn initial_state(&self) -> Vec<u8>;

    fn step(&self, state: &[u8], action: usize) -> Step;

    /// Bytes used to decide which states may be merged; the full blob by default.
    fn observation_key(&self, state: &[u8]) -> Vec<u8> {
        state.to_vec()
    }
}
