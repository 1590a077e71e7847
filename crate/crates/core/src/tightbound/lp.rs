/// Result of maximising `Σ c·p` over `lo ≤ p ≤ hi`, `Σ p = 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpValue {
    pub value: f64,
    /// The constraints admit no distribution; `value` is then the clamp 1.
    pub infeasible: bool,
}

/// Greedy solution of the bounded-variable LP: start at the lower bounds and
/// spend the remaining mass on the largest coefficients first.
pub fn aggregate_failure_lp(c: &[f64], lo: &[f64], hi: &[f64]) -> LpValue {
    assert!(c.len() == lo.len() && c.len() == hi.len(), "mismatched LP sizes");
    let sum_lo: f64 = lo.iter().sum();
    let sum_hi: f64 = hi.iter().sum();
    if sum_lo > 1.0 + 1e-12 || sum_hi < 1.0 - 1e-12 {
        return LpValue { value: 1.0, infeasible: true };
    }
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| c[b].total_cmp(&c[a]));
    let mut remaining = 1.0 - sum_lo;
    let mut value: f64 = c.iter().zip(lo).map(|(ci, li)| ci * li).sum();
    for i in order {
        if remaining <= 0.0 {
            break;
        }
        let add = (hi[i] - lo[i]).max(0.0).min(remaining);
        value += c[i] * add;
        remaining -= add;
    }
    LpValue { value, infeasible: false }
}
