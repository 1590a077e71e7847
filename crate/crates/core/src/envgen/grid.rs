use super::{Simulator, Step};

pub const TURN_LEFT: usize = 0;
pub const TURN_RIGHT: usize = 1;
pub const FORWARD: usize = 2;

/// MiniGrid-style gridworld with an oriented agent.
///
/// Directions: 0 = +x (right), 1 = +y (down), 2 = −x, 3 = −y. A right turn
/// adds one to the direction. Moving into a wall leaves the agent in place;
/// moving onto the goal pays 1 and ends the episode. The blob is `[x, y, dir]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<bool>,
    pub goal: (usize, usize),
    pub start: (usize, usize),
    pub start_dir: u8,
}

impl GridWorld {
    pub fn is_wall(&self, x: usize, y: usize) -> bool {
        self.walls[y * self.width + x]
    }

    pub fn validate(&self) -> Result<(), String> {
        let inside = |(x, y): (usize, usize)| x < self.width && y < self.height;
        if self.walls.len() != self.width * self.height {
            return Err("wall mask has the wrong size".into());
        }
        if !inside(self.start) || self.is_wall(self.start.0, self.start.1) {
            return Err("start must be an open cell".into());
        }
        if !inside(self.goal) || self.is_wall(self.goal.0, self.goal.1) {
            return Err("goal must be an open cell".into());
        }
        if self.width > 256 || self.height > 256 || self.start_dir > 3 {
            return Err("grid too large for byte-encoded states".into());
        }
        Ok(())
    }
}

/// `n × n` grid with an outer wall ring; start top-left facing right, goal bottom-right.
pub fn make_empty_grid(n: usize) -> GridWorld {
    assert!(n >= 3, "empty grid needs n ≥ 3");
    let mut walls = vec![false; n * n];
    for i in 0..n {
        walls[i] = true;
        walls[(n - 1) * n + i] = true;
        walls[i * n] = true;
        walls[i * n + n - 1] = true;
    }
    GridWorld { width: n, height: n, walls, goal: (n - 2, n - 2), start: (1, 1), start_dir: 0 }
}

impl Simulator for GridWorld {
    fn num_actions(&self) -> usize {
        3
    }

    fn initial_state(&self) -> Vec<u8> {
        vec![self.start.0 as u8, self.start.1 as u8, self.start_dir]
    }

    fn step(&self, state: &[u8], action: usize) -> Step {
        let (x, y, dir) = (state[0] as usize, state[1] as usize, state[2]);
        let stay = |d: u8| Step { next: vec![x as u8, y as u8, d], reward: 0.0, terminal: false };
        match action {
            TURN_LEFT => stay((dir + 3) % 4),
            TURN_RIGHT => stay((dir + 1) % 4),
            FORWARD => {
                let (nx, ny) = match dir {
                    0 => (x + 1, y),
                    1 => (x, y + 1),
                    2 => (x.wrapping_sub(1), y),
                    _ => (x, y.wrapping_sub(1)),
                };
                if nx >= self.width || ny >= self.height || self.is_wall(nx, ny) {
                    return stay(dir);
                }
                let terminal = (nx, ny) == self.goal;
                Step {
                    next: vec![nx as u8, ny as u8, dir],
                    reward: if terminal { 1.0 } else { 0.0 },
                    terminal,
                }
            }
            _ => panic!("gridworld has 3 actions, got {action}"),
        }
    }
}
