//! External clustering quality: NMI, ACC, pairwise F-measure and ARI.
//!
//! All four are computed from a contingency table between ground-truth
//! classes and predicted clusters, so they are invariant to how either side
//! names its labels.

mod hungarian;

pub use hungarian::min_cost_assignment;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts `n_ij` of samples in truth class `i` and predicted cluster `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub row_sums: Vec<u64>,
    pub col_sums: Vec<u64>,
    pub total: u64,
}

fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

impl ContingencyTable {
    pub fn new(truth: &[usize], pred: &[usize]) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::dims("label vectors", truth.len(), pred.len()));
        }
        if truth.is_empty() {
            return Err(Error::InvalidDataset("label vectors are empty".into()));
        }
        let (t, r) = compact(truth);
        let (p, s) = compact(pred);
        let mut counts = vec![vec![0u64; s]; r];
        for (&i, &j) in t.iter().zip(&p) {
            counts[i][j] += 1;
        }
        let row_sums = counts.iter().map(|row| row.iter().sum()).collect();
        let col_sums = (0..s).map(|j| counts.iter().map(|row| row[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: truth.len() as u64,
        })
    }

    /// True when the two partitions coincide up to renaming.
    pub fn is_bijective(&self) -> bool {
        self.counts.len() == self.col_sums.len()
            && self
                .counts
                .iter()
                .all(|row| row.iter().filter(|&&c| c > 0).count() == 1)
    }
}

fn entropy(marginals: &[u64], n: f64) -> f64 {
    marginals
        .iter()
        .filter(|&&a| a > 0)
        .map(|&a| {
            let p = a as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// `I(l; c) / max(H(l), H(c))` with natural logarithms. When both
/// partitions are a single cluster the ratio is 0/0 and 1 is returned.
pub fn nmi(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(truth, pred)?;
    let n = t.total as f64;
    let mut mi = 0.0;
    for (i, row) in t.counts.iter().enumerate() {
        for (j, &nij) in row.iter().enumerate() {
            if nij > 0 {
                let nij = nij as f64;
                mi += nij / n * (n * nij / (t.row_sums[i] as f64 * t.col_sums[j] as f64)).ln();
            }
        }
    }
    let denom = entropy(&t.row_sums, n).max(entropy(&t.col_sums, n));
    if denom == 0.0 {
        return Ok(if t.is_bijective() { 1.0 } else { 0.0 });
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// Best-map accuracy: the fraction of samples whose cluster maps to their
/// class under the optimal one-to-one cluster-to-class assignment.
pub fn acc(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(truth, pred)?;
    let size = t.counts.len().max(t.col_sums.len());
    let max = t.counts.iter().flatten().copied().max().unwrap_or(0) as i64;
    // Square matrix indexed [cluster][class]; padding entries have zero overlap.
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|j| {
            (0..size)
                .map(|i| {
                    let overlap = t.counts.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0);
                    max - overlap as i64
                })
                .collect()
        })
        .collect();
    let assignment = min_cost_assignment(&cost);
    let matched: i64 = assignment.iter().enumerate().map(|(j, &i)| max - cost[j][i]).sum();
    Ok(matched as f64 / t.total as f64)
}

/// Pair-counting precision, recall and their harmonic mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairwiseF {
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    /// False when either partition has no co-clustered pair, in which case
    /// the affected ratio is taken as 0.
    pub defined: bool,
}

fn choose2(x: u64) -> u64 {
    x * x.saturating_sub(1) / 2
}

pub fn pairwise_f(truth: &[usize], pred: &[usize]) -> Result<PairwiseF> {
    let t = ContingencyTable::new(truth, pred)?;
    let together_both: u64 = t.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let together_pred: u64 = t.col_sums.iter().map(|&c| choose2(c)).sum();
    let together_truth: u64 = t.row_sums.iter().map(|&c| choose2(c)).sum();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(together_both, together_pred);
    let recall = ratio(together_both, together_truth);
    let f_measure = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(PairwiseF {
        precision,
        recall,
        f_measure,
        defined: together_pred > 0 && together_truth > 0,
    })
}

pub fn f_measure(truth: &[usize], pred: &[usize]) -> Result<f64> {
    Ok(pairwise_f(truth, pred)?.f_measure)
}

/// Adjusted Rand index. If the chance-corrected denominator vanishes the
/// result is 1 for identical partitions and 0 otherwise.
pub fn ari(truth: &[usize], pred: &[usize]) -> Result<f64> {
    let t = ContingencyTable::new(truth, pred)?;
    let index = t.counts.iter().flatten().map(|&c| choose2(c) as f64).sum::<f64>();
    let sum_a = t.row_sums.iter().map(|&c| choose2(c) as f64).sum::<f64>();
    let sum_b = t.col_sums.iter().map(|&c| choose2(c) as f64).sum::<f64>();
    let pairs = choose2(t.total) as f64;
    let expected = if pairs > 0.0 { sum_a * sum_b / pairs } else { 0.0 };
    let max_index = 0.5 * (sum_a + sum_b);
    let denom = max_index - expected;
    if denom == 0.0 {
        return Ok(if t.is_bijective() { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / denom)
}

/// The four reported scores, serialized with the short column names.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub nmi: f64,
    pub acc: f64,
    pub ar: f64,
    pub f_measure: f64,
}

pub fn evaluate(truth: &[usize], pred: &[usize]) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        nmi: nmi(truth, pred)?,
        acc: acc(truth, pred)?,
        ar: ari(truth, pred)?,
        f_measure: f_measure(truth, pred)?,
    })
}
