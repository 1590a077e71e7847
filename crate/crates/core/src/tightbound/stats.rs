//! Exact statistics of the reward-to-go after a fixed action sequence.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::mdp::{Policy, Reachability, TabularMdp};

/// Default cap on the number of action sequences `A^k` examined at one state.
pub const DEFAULT_SEQUENCE_CAP: usize = 4096;

/// Distribution summary of one sequence's return.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReturnDistStats {
    pub mean: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    pub variance: f64,
    /// Third central moment.
    pub central_moment3: f64,
    /// `E[X³]`; only meaningful as an absolute moment when `support_lo ≥ 0`.
    pub raw_moment3: f64,
    /// `Some(C)` when all mass sits on `{0, C}`; `Some(0)` for a point mass at 0.
    pub two_point: Option<f64>,
}

/// Up to two support values, or `None` once the support grows past two.
type Support = Option<([f64; 2], usize)>;

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn support_insert(sup: &mut Support, v: f64) {
    if let Some((vals, n)) = sup {
        if vals[..*n].iter().any(|&x| same(x, v)) {
            return;
        }
        if *n == 2 {
            *sup = None;
        } else {
            vals[*n] = v;
            *n += 1;
        }
    }
}

fn affine_support(sup: &Support, shift: f64, scale: f64) -> Support {
    let (vals, n) = (*sup)?;
    let mut out: Support = Some(([0.0; 2], 0));
    for &v in &vals[..n] {
        support_insert(&mut out, shift + scale * v);
    }
    out
}

fn two_point_of(sup: &Support) -> Option<f64> {
    let (vals, n) = (*sup)?;
    let nonzero: Vec<f64> = vals[..n].iter().copied().filter(|&v| !same(v, 0.0)).collect();
    match (n, nonzero.len()) {
        (1, 0) => Some(0.0),
        (1, 1) => Some(nonzero[0]),
        (2, 1) => Some(nonzero[0]),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug)]
struct Tail {
    mean: f64,
    var: f64,
    m3: f64,
    lo: f64,
    hi: f64,
    support: Support,
}

const ZERO_TAIL: Tail = Tail { mean: 0.0, var: 0.0, m3: 0.0, lo: 0.0, hi: 0.0, support: Some(([0.0, 0.0], 1)) };

impl Tail {
    fn shifted(&self, shift: f64, scale: f64) -> Tail {
        Tail {
            mean: shift + scale * self.mean,
            var: scale * scale * self.var,
            m3: scale * scale * scale * self.m3,
            lo: shift + scale * self.lo,
            hi: shift + scale * self.hi,
            support: affine_support(&self.support, shift, scale),
        }
    }

    fn into_stats(self) -> ReturnDistStats {
        let var = self.var.max(0.0);
        let mu = self.mean;
        ReturnDistStats {
            mean: mu,
            support_lo: self.lo.min(mu),
            support_hi: self.hi.max(mu),
            variance: var,
            central_moment3: self.m3,
            raw_moment3: self.m3 + 3.0 * mu * var + mu * mu * mu,
            two_point: two_point_of(&self.support),
        }
    }
}

/// Return-to-go statistics of the exploration policy at every reachable `(t, s)`.
///
/// Built once by a backward pass; sequence statistics are then an affine
/// shift of the tail reached after the sequence's deterministic prefix.
pub struct ExplorationStats {
    reach: Arc<Reachability>,
    tails: Vec<Vec<Tail>>,
}

impl ExplorationStats {
    pub fn new(mdp: &TabularMdp, expl: &Policy) -> Result<Self> {
        Self::with_reach(mdp, mdp.reachability(), expl)
    }

    pub fn with_reach(mdp: &TabularMdp, reach: Arc<Reachability>, expl: &Policy) -> Result<Self> {
        let horizon = reach.horizon();
        let gamma = mdp.discount;
        let mut tails: Vec<Vec<Tail>> = vec![Vec::new(); horizon];
        for t in (0..horizon).rev() {
            let mut level = Vec::with_capacity(reach.level(t).len());
            for &s in reach.level(t) {
                if !expl.is_defined(t, s) {
                    return Err(Error::MissingPolicyRow { t, state: s });
                }
                let comps: Vec<(f64, Tail)> = (0..mdp.num_actions)
                    .filter_map(|a| {
                        let p = expl.prob(t, s, a);
                        (p > 0.0).then(|| {
                            let child = if t + 1 < horizon {
                                let j = reach.index(t + 1, mdp.next(s, a)).expect("successor reachable");
                                tails[t + 1][j]
                            } else {
                                ZERO_TAIL
                            };
                            (p, child.shifted(mdp.reward(s, a), gamma))
                        })
                    })
                    .collect();
                let total: f64 = comps.iter().map(|c| c.0).sum();
                let mean = comps.iter().map(|(p, c)| p * c.mean).sum::<f64>() / total;
                let mut var = 0.0;
                let mut m3 = 0.0;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                let mut support: Support = Some(([0.0; 2], 0));
                for (p, c) in &comps {
                    let w = p / total;
                    let d = c.mean - mean;
                    var += w * (c.var + d * d);
                    m3 += w * (c.m3 + 3.0 * c.var * d + d * d * d);
                    lo = lo.min(c.lo);
                    hi = hi.max(c.hi);
                    match (&mut support, c.support) {
                        (Some(_), Some((vals, n))) => {
                            for &v in &vals[..n] {
                                support_insert(&mut support, v);
                            }
                        }
                        _ => support = None,
                    }
                }
                level.push(Tail { mean, var: var.max(0.0), m3, lo, hi, support });
            }
            tails[t] = level;
        }
        Ok(ExplorationStats { reach, tails })
    }

    /// Statistics of the exploration policy's return-to-go from `(t, s)`.
    pub fn state_stats(&self, t: usize, s: usize) -> Option<ReturnDistStats> {
        let i = self.reach.index(t, s)?;
        Some(self.tails[t][i].into_stats())
    }

    /// Stats for every sequence in `A^k` at `(t, s)`, indexed with the first
    /// action as the most significant base-`A` digit. Actions past the
    /// horizon are ignored.
    pub fn sequence_stats(&self, mdp: &TabularMdp, t: usize, s: usize, k: usize, cap: usize) -> Result<Vec<ReturnDistStats>> {
        let a_n = mdp.num_actions;
        let count = sequence_count(a_n, k, cap)?;
        let horizon = self.reach.horizon();
        if self.reach.index(t, s).is_none() {
            return Err(Error::Invalid(format!("state {s} is not reachable at t={t}")));
        }
        let mut out = Vec::with_capacity(count);
        let mut seq = vec![0usize; k];
        for idx in 0..count {
            decode_sequence(idx, a_n, &mut seq);
            let mut state = s;
            let mut shift = 0.0;
            let mut scale = 1.0;
            let mut tt = t;
            for &a in &seq {
                if tt >= horizon {
                    break;
                }
                shift += scale * mdp.reward(state, a);
                scale *= mdp.discount;
                state = mdp.next(state, a);
                tt += 1;
            }
            let tail = if tt < horizon {
                let j = self.reach.index(tt, state).expect("successor reachable");
                self.tails[tt][j]
            } else {
                ZERO_TAIL
            };
            out.push(tail.shifted(shift, scale).into_stats());
        }
        Ok(out)
    }
}

pub fn sequence_count(num_actions: usize, k: usize, cap: usize) -> Result<usize> {
    let count = (num_actions as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if count > cap as u128 {
        return Err(Error::SequenceCap { count, limit: cap });
    }
    Ok(count as usize)
}

/// Writes the base-`A` digits of `idx` into `seq`, most significant first.
pub fn decode_sequence(mut idx: usize, num_actions: usize, seq: &mut [usize]) {
    for slot in seq.iter_mut().rev() {
        *slot = idx % num_actions;
        idx /= num_actions;
    }
}

/// Statistics for all sequences of length `k` at `(t, s)`.
pub fn return_stats(mdp: &TabularMdp, expl: &Policy, t: usize, s: usize, k: usize) -> Result<Vec<ReturnDistStats>> {
    sequence_count(mdp.num_actions, k, DEFAULT_SEQUENCE_CAP)?;
    ExplorationStats::new(mdp, expl)?.sequence_stats(mdp, t, s, k, DEFAULT_SEQUENCE_CAP)
}
