use super::{Simulator, Step};
use crate::mdp::TabularMdp;

/// Unrolls a tabular MDP into its full action-history tree.
///
/// The blob is the underlying state (u32, little endian) followed by the
/// action history, so every distinct history is a distinct simulator state.
/// Entering a terminal state of the wrapped MDP ends the episode.
#[derive(Clone, Debug)]
pub struct TreeSim {
    pub mdp: TabularMdp,
}

impl TreeSim {
    pub fn new(mdp: TabularMdp) -> Self {
        assert!(mdp.num_actions <= 256, "tree blobs store actions as bytes");
        TreeSim { mdp }
    }
}

impl Simulator for TreeSim {
    fn num_actions(&self) -> usize {
        self.mdp.num_actions
    }

    fn initial_state(&self) -> Vec<u8> {
        (self.mdp.start_state as u32).to_le_bytes().to_vec()
    }

    fn step(&self, state: &[u8], action: usize) -> Step {
        let s = u32::from_le_bytes(state[..4].try_into().unwrap()) as usize;
        let n = self.mdp.next(s, action);
        let mut next = Vec::with_capacity(state.len() + 1);
        next.extend_from_slice(&(n as u32).to_le_bytes());
        next.extend_from_slice(&state[4..]);
        next.push(action as u8);
        Step { next, reward: self.mdp.reward(s, action), terminal: self.mdp.is_terminal(n) }
    }

    /// Uniform keys: any bisimilar histories may be merged.
    fn observation_key(&self, _state: &[u8]) -> Vec<u8> {
        Vec::new()
    }
}
