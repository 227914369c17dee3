//! Result aggregation and the paired significance test.
//!
//! The Wilcoxon signed-rank implementation drops zero differences, assigns
//! average ranks to tied magnitudes, and computes exact p-values for m ≤ 20
//! via the rank-sum distribution (counting over doubled ranks so ties stay
//! integral). The brute-force 2^m sign enumeration lives in the tests as an
//! independent oracle. For m > 20 a normal approximation with tie
//! correction is used.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("test undefined: all paired differences are zero")]
    UndefinedTest,
    #[error("paired samples must have equal length ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Ranked metric values with top-k mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    /// The metric values as given.
    pub values: Vec<f64>,
    /// Indices into `values`, best first (stable for ties).
    pub ranking: Vec<usize>,
    /// How many of the best entries the statistics cover.
    pub k: usize,
    /// Mean of the k best values.
    pub mean: f64,
    /// Population standard deviation of the k best values.
    pub std: f64,
}

impl SampleSummary {
    /// The k best values, best first.
    pub fn top_values(&self) -> Vec<f64> {
        self.ranking[..self.k].iter().map(|&i| self.values[i]).collect()
    }
}

/// Rank `values` descending and summarize the k best with mean ± population
/// standard deviation.
pub fn top_k_mean(values: &[f64], k: usize) -> Result<SampleSummary, StatsError> {
    if values.len() < k {
        return Err(StatsError::InsufficientData(format!(
            "need at least {k} values, got {}",
            values.len()
        )));
    }
    let mut ranking: Vec<usize> = (0..values.len()).collect();
    ranking.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let top: Vec<f64> = ranking[..k].iter().map(|&i| values[i]).collect();
    let mean = top.iter().sum::<f64>() / k as f64;
    let var = top.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / k as f64;
    Ok(SampleSummary {
        values: values.to_vec(),
        ranking,
        k,
        mean,
        std: var.sqrt(),
    })
}

/// Test statistic and p-value of a Wilcoxon signed-rank test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Sum of ranks of positive differences.
    pub w: f64,
    pub p_value: f64,
    /// Pairs remaining after zero differences are dropped.
    pub n_used: usize,
    /// Whether the exact distribution was used (m ≤ 20).
    pub exact: bool,
}

/// Largest m for which the exact distribution is enumerated.
pub const WILCOXON_EXACT_LIMIT: usize = 20;

/// Paired Wilcoxon signed-rank test of x against y.
pub fn wilcoxon_signed_rank(
    x: &[f64],
    y: &[f64],
    two_sided: bool,
) -> Result<WilcoxonResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::InsufficientData("no pairs".into()));
    }
    let diffs: Vec<f64> = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let m = diffs.len();
    if m == 0 {
        return Err(StatsError::UndefinedTest);
    }

    // rank |d| ascending with average ranks on ties
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| diffs[a].abs().total_cmp(&diffs[b].abs()));
    let mut ranks = vec![0.0; m];
    let mut tie_sizes = Vec::new();
    let mut i = 0;
    while i < m {
        let mut j = i + 1;
        while j < m && diffs[order[j]].abs() == diffs[order[i]].abs() {
            j += 1;
        }
        let avg = (i + 1..=j).sum::<usize>() as f64 / (j - i) as f64;
        for &o in &order[i..j] {
            ranks[o] = avg;
        }
        tie_sizes.push(j - i);
        i = j;
    }

    let w: f64 = diffs
        .iter()
        .zip(ranks.iter())
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();

    let p_value = if m <= WILCOXON_EXACT_LIMIT {
        exact_p(&ranks, w, two_sided)
    } else {
        approx_p(&ranks, &tie_sizes, w, two_sided)
    };

    Ok(WilcoxonResult {
        w,
        p_value,
        n_used: m,
        exact: m <= WILCOXON_EXACT_LIMIT,
    })
}

/// Exact tail probabilities by dynamic programming over the distribution of
/// the positive-rank sum under random signs. Ranks are doubled so average
/// ranks stay integral; counts are exact integers in f64 (max 2^20).
fn exact_p(ranks: &[f64], w: f64, two_sided: bool) -> f64 {
    let m = ranks.len();
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in &doubled {
        reach += r;
        for s in (r..=reach).rev() {
            counts[s] += counts[s - r];
        }
    }
    let denom = (1u64 << m) as f64;
    let w2 = (2.0 * w).round() as usize;
    let p_le: f64 = counts[..=w2].iter().sum::<f64>() / denom;
    let p_ge: f64 = counts[w2..].iter().sum::<f64>() / denom;
    if two_sided {
        (2.0 * p_le.min(p_ge)).min(1.0)
    } else {
        p_ge
    }
}

/// Normal approximation with tie correction, for m > 20.
fn approx_p(ranks: &[f64], tie_sizes: &[usize], w: f64, two_sided: bool) -> f64 {
    let m = ranks.len() as f64;
    let mean = m * (m + 1.0) / 4.0;
    let tie_term: f64 = tie_sizes
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = m * (m + 1.0) * (2.0 * m + 1.0) / 24.0 - tie_term;
    let z = (w - mean) / var.sqrt();
    let upper = 1.0 - normal_cdf(z.abs());
    if two_sided {
        (2.0 * upper).min(1.0)
    } else {
        1.0 - normal_cdf(z)
    }
}

/// Φ(x) via the Abramowitz-Stegun 7.1.26 erf approximation (|ε| < 1.5e-7);
/// only the approximate Wilcoxon path uses it.
fn normal_cdf(x: f64) -> f64 {
    let t = x / std::f64::consts::SQRT_2;
    0.5 * (1.0 + erf(t))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}
