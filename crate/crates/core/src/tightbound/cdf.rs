//! Bounds on the probability that each action sequence wins the empirical argmax.
//!
//! For sequence `x` with `m`-sample mean `Q̂_x`, `p_lo` bounds
//! `P(Q̂_x > Q̂_y ∀y≠x)` from below and `p_hi` bounds `P(Q̂_x ≥ Q̂_y ∀y≠x)` from above.

use serde::Serialize;
use statrs::distribution::{Binomial, DiscreteCDF};
use statrs::function::erf::{erf_inv, erfc};
use statrs::function::gamma::ln_gamma;

use super::stats::ReturnDistStats;
use crate::dp::in_argmax;
use crate::error::{Error, Result};

pub const DEFAULT_PARTITION: usize = 100;
/// Largest `m` handled by the binomial method.
pub const BINOMIAL_MAX_M: f64 = 1e6;
/// Largest `m` for which binomial quantiles come from the exact inverse CDF.
pub const BINOMIAL_EXACT_QUANTILE_M: f64 = 1e4;
/// Largest `A^k` handled by the Berry-Esseen and Bernstein methods.
pub const SMALL_SEQUENCE_COUNT: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Bennett,
    Bernstein,
    BerryEsseen,
    Binomial,
}

impl Method {
    /// In tie-preference order (cheapest first).
    pub const ALL: [Method; 4] = [Method::Bennett, Method::Bernstein, Method::BerryEsseen, Method::Binomial];
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChoiceProbBounds {
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
    pub method: Method,
}

/// Checks the named precondition of `method` for these sequences.
pub fn applicable(stats: &[ReturnDistStats], m: f64, k: usize, method: Method) -> Result<()> {
    let fail = |msg: &str| Err(Error::MethodNotApplicable(format!("{method:?}: {msg}")));
    match method {
        Method::Bennett => Ok(()),
        Method::Bernstein => {
            if stats.len() > SMALL_SEQUENCE_COUNT {
                return fail("needs A^k ≤ 100");
            }
            Ok(())
        }
        Method::BerryEsseen => {
            if stats.len() > SMALL_SEQUENCE_COUNT {
                return fail("needs A^k ≤ 100");
            }
            if stats.iter().any(|s| s.support_lo < 0.0) {
                return fail("needs nonnegative returns");
            }
            Ok(())
        }
        Method::Binomial => {
            if k != 1 {
                return fail("needs k = 1");
            }
            if m > BINOMIAL_MAX_M || m.fract() != 0.0 {
                return fail("needs integer m ≤ 10^6");
            }
            if common_two_point(stats).is_none() {
                return fail("needs every return supported on {0, C} for one C > 0");
            }
            Ok(())
        }
    }
}

/// Common `C > 0` if every sequence's return lives on `{0, C}`.
fn common_two_point(stats: &[ReturnDistStats]) -> Option<f64> {
    let mut c: Option<f64> = None;
    for s in stats {
        let v = s.two_point?;
        if v == 0.0 {
            continue;
        }
        match c {
            None => c = Some(v),
            Some(prev) if (prev - v).abs() <= 1e-12 * prev.abs().max(1.0) => {}
            Some(_) => return None,
        }
    }
    match c {
        Some(v) if v > 0.0 => Some(v),
        Some(_) => None,
        None => Some(1.0),
    }
}

pub fn choice_prob_bounds(stats: &[ReturnDistStats], m: f64, k: usize, method: Method, partition: usize) -> Result<ChoiceProbBounds> {
    applicable(stats, m, k, method)?;
    let (p_lo, p_hi) = match method {
        Method::Bennett => bennett(stats, m),
        Method::Bernstein => {
            let cdfs: Vec<Bernstein> = stats.iter().map(|s| Bernstein::new(s, m)).collect();
            riemann_generic(&cdfs, partition)
        }
        Method::BerryEsseen => {
            let cdfs: Vec<BerryEsseen> = stats.iter().map(|s| BerryEsseen::new(s, m)).collect();
            riemann_generic(&cdfs, partition)
        }
        Method::Binomial => binomial(stats, m as u64, partition),
    };
    Ok(ChoiceProbBounds { p_lo, p_hi, method })
}

/// CDF bounds for one empirical mean.
pub trait CdfBounds {
    /// Support `[α, β]` of the empirical mean.
    fn support(&self) -> (f64, f64);
    /// Upper bound on `P(Q̂ ≤ z)` inside the support.
    fn upper_raw(&self, z: f64) -> f64;
    /// Lower bound on `P(Q̂ < z)` inside the support.
    fn lower_raw(&self, z: f64) -> f64;

    fn weak_upper(&self, z: f64) -> f64 {
        let (a, b) = self.support();
        if z < a {
            0.0
        } else if z >= b {
            1.0
        } else {
            self.upper_raw(z).clamp(0.0, 1.0)
        }
    }

    fn strict_lower(&self, z: f64) -> f64 {
        let (a, b) = self.support();
        if z <= a {
            0.0
        } else if z > b {
            1.0
        } else {
            self.lower_raw(z).clamp(0.0, 1.0)
        }
    }

    /// Lower bound on the weak CDF `P(Q̂ ≤ z)`.
    fn weak_lower(&self, z: f64) -> f64 {
        if z >= self.support().1 {
            1.0
        } else {
            self.strict_lower(z)
        }
    }
}

/// `(lo, hi)` bracketing `inf{z ∈ [α, β] : f(z) ≥ u}` to 1e-12, for nondecreasing `f`.
fn invert(f: impl Fn(f64) -> f64, u: f64, alpha: f64, beta: f64) -> (f64, f64) {
    if f(alpha) >= u {
        return (alpha, alpha);
    }
    let (mut lo, mut hi) = (alpha, beta);
    while hi - lo > 1e-12 && hi > lo {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= u {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Quantile-grid Riemann sums over CDF bounds.
///
/// Lower: `Q̂_x` stochastically dominates the law with CDF `weak_upper_x`, so
/// evaluating the others' strict lower bounds at that law's `(i−1)/N`
/// quantiles underestimates the strict-win probability. Upper: symmetric, with
/// `weak_lower_x` and the `i/N` quantiles.
pub fn riemann_generic<C: CdfBounds>(cdfs: &[C], partition: usize) -> (Vec<f64>, Vec<f64>) {
    let n = cdfs.len();
    let nf = partition as f64;
    let mut p_lo = vec![0.0; n];
    let mut p_hi = vec![0.0; n];
    for x in 0..n {
        let (a, b) = cdfs[x].support();
        let mut lo_sum = 0.0;
        let mut hi_sum = 0.0;
        for i in 1..=partition {
            if i > 1 {
                let z = invert(|z| cdfs[x].weak_upper(z), (i - 1) as f64 / nf, a, b).0;
                lo_sum += (0..n).filter(|&y| y != x).map(|y| cdfs[y].strict_lower(z)).product::<f64>();
            }
            let w = invert(|z| cdfs[x].weak_lower(z), i as f64 / nf, a, b).1;
            hi_sum += (0..n).filter(|&y| y != x).map(|y| cdfs[y].weak_upper(w)).product::<f64>();
        }
        p_lo[x] = (lo_sum / nf).clamp(0.0, 1.0);
        p_hi[x] = (hi_sum / nf).clamp(0.0, 1.0);
    }
    (p_lo, p_hi)
}

/// Bernstein tail bounds with the exact variance and range `β − α`.
pub struct Bernstein {
    mean: f64,
    var: f64,
    range: f64,
    m: f64,
    lo: f64,
    hi: f64,
}

impl Bernstein {
    pub fn new(s: &ReturnDistStats, m: f64) -> Self {
        Bernstein {
            mean: s.mean,
            var: s.variance,
            range: s.support_hi - s.support_lo,
            m,
            lo: s.support_lo,
            hi: s.support_hi,
        }
    }

    fn tail(&self, u: f64) -> f64 {
        let denom = self.var + self.range * u / 3.0;
        if denom <= 0.0 {
            return 0.0;
        }
        (-self.m * u * u / 2.0 / denom).exp()
    }
}

impl CdfBounds for Bernstein {
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn upper_raw(&self, z: f64) -> f64 {
        if z >= self.mean {
            1.0
        } else {
            self.tail(self.mean - z)
        }
    }

    fn lower_raw(&self, z: f64) -> f64 {
        if z <= self.mean {
            0.0
        } else {
            1.0 - self.tail(z - self.mean)
        }
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

pub fn normal_quantile(p: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * p - 1.0)
}

/// Berry-Esseen band around the normal approximation, with `ρ = E[X³]`.
pub struct BerryEsseen {
    mean: f64,
    sd: f64,
    eps: f64,
    lo: f64,
    hi: f64,
}

impl BerryEsseen {
    pub fn new(s: &ReturnDistStats, m: f64) -> Self {
        let sigma = s.variance.sqrt();
        let eps = if sigma > 0.0 {
            let ratio = s.raw_moment3 / (sigma * sigma * sigma);
            (0.3328 * (ratio + 0.429)).min(0.33554 * (ratio + 0.415)) / m.sqrt()
        } else {
            0.0
        };
        BerryEsseen { mean: s.mean, sd: sigma / m.sqrt(), eps, lo: s.support_lo, hi: s.support_hi }
    }

    fn phi(&self, z: f64) -> f64 {
        if self.sd > 0.0 {
            normal_cdf((z - self.mean) / self.sd)
        } else if z >= self.mean {
            1.0
        } else {
            0.0
        }
    }
}

impl CdfBounds for BerryEsseen {
    fn support(&self) -> (f64, f64) {
        if self.sd == 0.0 {
            (self.mean, self.mean)
        } else {
            (self.lo, self.hi)
        }
    }

    fn upper_raw(&self, z: f64) -> f64 {
        self.phi(z) + self.eps
    }

    fn lower_raw(&self, z: f64) -> f64 {
        self.phi(z) - self.eps
    }
}

/// Bennett tail `P(mean − μ ≥ t)` bound for `t > 0`.
fn bennett_tail(var: f64, range: f64, m: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    if var <= 0.0 || range <= 0.0 {
        return 0.0;
    }
    let x = range * t / var;
    let h = (1.0 + x) * x.ln_1p() - x;
    (-(m * var / (range * range)) * h).exp()
}

/// Midpoint construction: only upper bounds for non-maximal sequences.
pub fn bennett(stats: &[ReturnDistStats], m: f64) -> (Vec<f64>, Vec<f64>) {
    let n = stats.len();
    let best = stats.iter().map(|s| s.mean).fold(f64::NEG_INFINITY, f64::max);
    let is_max: Vec<bool> = stats.iter().map(|s| in_argmax(best, s.mean)).collect();
    let second = stats
        .iter()
        .zip(&is_max)
        .filter(|(_, &mx)| !mx)
        .map(|(s, _)| s.mean)
        .fold(f64::NEG_INFINITY, f64::max);
    let p_lo = vec![0.0; n];
    if second == f64::NEG_INFINITY {
        return (p_lo, vec![1.0; n]);
    }
    let u = 0.5 * (best + second);
    let range = |s: &ReturnDistStats| s.support_hi - s.support_lo;
    let keep_best: f64 = stats
        .iter()
        .zip(&is_max)
        .filter(|(_, &mx)| mx)
        .map(|(s, _)| 1.0 - bennett_tail(s.variance, range(s), m, s.mean - u))
        .product();
    let p_hi = stats
        .iter()
        .zip(&is_max)
        .map(|(s, &mx)| {
            if mx {
                1.0
            } else {
                let stays_below = 1.0 - bennett_tail(s.variance, range(s), m, u - s.mean);
                (1.0 - stays_below * keep_best).clamp(0.0, 1.0)
            }
        })
        .collect();
    (p_lo, p_hi)
}

/// Exact `Binomial(m, p)` CDF evaluator, tabulated for moderate `m`.
struct BinomialCdf {
    m: u64,
    p: f64,
    table: Option<Vec<f64>>,
    dist: Option<Binomial>,
}

impl BinomialCdf {
    fn new(m: u64, p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        if m as f64 <= BINOMIAL_EXACT_QUANTILE_M {
            BinomialCdf { m, p, table: Some(binomial_cdf_table(m, p)), dist: None }
        } else {
            BinomialCdf { m, p, table: None, dist: Some(Binomial::new(p, m).expect("valid binomial")) }
        }
    }

    /// `P(X ≤ j)` for integer `j` (negative gives 0).
    fn cdf(&self, j: i64) -> f64 {
        if j < 0 {
            return 0.0;
        }
        if j as u64 >= self.m {
            return 1.0;
        }
        match &self.table {
            Some(t) => t[j as usize],
            None => self.dist.as_ref().unwrap().cdf(j as u64),
        }
    }

    /// Smallest `j` with `P(X ≤ j) ≥ u`.
    fn quantile(&self, u: f64) -> i64 {
        if let Some(t) = &self.table {
            return t.partition_point(|&c| c < u) as i64;
        }
        // normal approximation for the grid, then snapped to the exact CDF nearby
        let mu = self.m as f64 * self.p;
        let sd = (self.m as f64 * self.p * (1.0 - self.p)).sqrt();
        let guess = (mu + sd * normal_quantile(u.clamp(1e-300, 1.0 - 1e-16))).round();
        guess.clamp(0.0, self.m as f64) as i64
    }
}

fn binomial_cdf_table(m: u64, p: f64) -> Vec<f64> {
    let n = m as usize;
    let mut pmf = vec![0.0; n + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
    } else if p >= 1.0 {
        pmf[n] = 1.0;
    } else {
        let (lp, lq) = (p.ln(), (1.0 - p).ln());
        let lg_n = ln_gamma(n as f64 + 1.0);
        for (j, v) in pmf.iter_mut().enumerate() {
            let jf = j as f64;
            *v = (lg_n - ln_gamma(jf + 1.0) - ln_gamma((n - j) as f64 + 1.0) + jf * lp + (n - j) as f64 * lq).exp();
        }
    }
    let mut acc = 0.0;
    pmf.iter()
        .map(|&v| {
            acc += v;
            acc.min(1.0)
        })
        .collect()
}

/// Riemann sums over the binomial lattice (`Q̂ = C·X/m`).
///
/// With `m + 1 ≤ N` every lattice point is a partition point and the sums are
/// the exact strict/weak win probabilities; otherwise the points are the
/// `i/N` quantiles of the sequence's own count distribution.
pub fn binomial(stats: &[ReturnDistStats], m: u64, partition: usize) -> (Vec<f64>, Vec<f64>) {
    let c = common_two_point(stats).expect("checked by applicable");
    let n = stats.len();
    let cdfs: Vec<BinomialCdf> = stats.iter().map(|s| BinomialCdf::new(m, s.mean / c)).collect();
    let mut p_lo = vec![0.0; n];
    let mut p_hi = vec![0.0; n];
    for x in 0..n {
        let mut points: Vec<i64> = if (m as usize) < partition {
            (0..=m as i64).collect()
        } else {
            let mut q: Vec<i64> = (1..partition).map(|i| cdfs[x].quantile(i as f64 / partition as f64)).collect();
            q.push(m as i64);
            q
        };
        points.sort_unstable();
        points.dedup();
        let mut prev: i64 = -1;
        let mut prev_cdf = 0.0;
        let mut lo = 0.0;
        let mut hi = 0.0;
        for &q in &points {
            if q <= prev {
                continue;
            }
            let cur_cdf = cdfs[x].cdf(q);
            let mass = (cur_cdf - prev_cdf).max(0.0);
            if mass > 0.0 {
                // a strict win from this slice needs every other count ≤ prev
                if prev >= 0 {
                    lo += mass * (0..n).filter(|&y| y != x).map(|y| cdfs[y].cdf(prev)).product::<f64>();
                }
                hi += mass * (0..n).filter(|&y| y != x).map(|y| cdfs[y].cdf(q)).product::<f64>();
            }
            prev = q;
            prev_cdf = cur_cdf;
        }
        p_lo[x] = lo.clamp(0.0, 1.0);
        p_hi[x] = hi.clamp(0.0, 1.0);
    }
    (p_lo, p_hi)
}
