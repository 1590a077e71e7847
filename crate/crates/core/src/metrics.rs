//! Summary statistics for comparing bounds against empirical sample complexity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Paired log10 values for one environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    pub names: Vec<String>,
    pub bound_log10: Vec<f64>,
    pub empirical_log10: Vec<f64>,
}

impl PairedSeries {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn spearman(&self) -> Result<f64> {
        spearman(&self.bound_log10, &self.empirical_log10)
    }

    pub fn median_ratio(&self) -> Result<f64> {
        median_ratio(&self.bound_log10, &self.empirical_log10)
    }
}

/// Ranks starting at 1, with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman rank correlation with average ranks for ties. Needs at least 3
/// finite pairs; NaN when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pairs(x, y, 3)?;
    Ok(pearson(&average_ranks(x), &average_ranks(y)))
}

fn check_pairs(x: &[f64], y: &[f64], min: usize) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Invalid(format!("unpaired series: {} vs {}", x.len(), y.len())));
    }
    if x.len() < min {
        return Err(Error::Invalid(format!("need at least {min} pairs, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("non-finite value in paired series".into()));
    }
    Ok(())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

/// `10^median |log10 bound − log10 empirical|`: the typical multiplicative gap.
pub fn median_ratio(bound_log10: &[f64], empirical_log10: &[f64]) -> Result<f64> {
    check_pairs(bound_log10, empirical_log10, 1)?;
    let diffs: Vec<f64> = bound_log10.iter().zip(empirical_log10).map(|(a, b)| (a - b).abs()).collect();
    Ok(10f64.powf(median(&diffs).expect("nonempty")))
}

/// Area under the ROC curve of `score` for predicting `label`, via the
/// Mann–Whitney statistic with average ranks. `None` when only one class occurs.
pub fn auroc(score: &[f64], label: &[bool]) -> Option<f64> {
    assert_eq!(score.len(), label.len(), "unpaired auroc input");
    let pos = label.iter().filter(|&&l| l).count();
    let neg = label.len() - pos;
    if pos == 0 || neg == 0 {
        return None;
    }
    let ranks = average_ranks(score);
    let rank_sum: f64 = ranks.iter().zip(label).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Some(u / (pos * neg) as f64)
}

/// Best accuracy of the rule `score ≥ θ ⇒ true` over all thresholds, with the threshold.
pub fn best_threshold_accuracy(score: &[f64], label: &[bool]) -> Option<(f64, f64)> {
    assert_eq!(score.len(), label.len(), "unpaired threshold input");
    if score.is_empty() {
        return None;
    }
    let mut candidates: Vec<f64> = score.to_vec();
    candidates.push(f64::INFINITY);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    let n = score.len() as f64;
    candidates
        .into_iter()
        .map(|theta| {
            let correct = score.iter().zip(label).filter(|(&s, &l)| (s >= theta) == l).count();
            (correct as f64 / n, theta)
        })
        .fold(None, |best: Option<(f64, f64)>, cur| match best {
            Some(b) if b.0 >= cur.0 => Some(b),
            _ => Some(cur),
        })
}

/// AUROC of "smaller bound ⇒ converged within budget".
pub fn convergence_auroc(bound_log10: &[f64], converged: &[bool]) -> Option<f64> {
    let score: Vec<f64> = bound_log10.iter().map(|b| -b).collect();
    auroc(&score, converged)
}

/// Best accuracy of the rule `bound ≤ θ ⇒ converged`, with the threshold `θ`.
pub fn convergence_accuracy(bound_log10: &[f64], converged: &[bool]) -> Option<(f64, f64)> {
    let score: Vec<f64> = bound_log10.iter().map(|b| -b).collect();
    best_threshold_accuracy(&score, converged).map(|(acc, theta)| (acc, -theta))
}
