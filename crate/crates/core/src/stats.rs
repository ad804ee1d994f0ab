//! Paired two-sided Wilcoxon signed-rank test.

use num_traits::Float;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

/// Largest sample size that gets the exact null distribution.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum StatsError {
    #[error("samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least 5 non-zero differences, got {0}")]
    TooFewPairs(usize),
    #[error("samples contain NaN")]
    NotANumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult<T> {
    /// Smaller of the positive and negative signed-rank sums.
    pub statistic: T,
    pub p_value: T,
    /// Pairs left after dropping zero differences.
    pub n: usize,
    pub exact: bool,
}

/// Doubled mid-ranks of `|d|` (integers even with ties) and the tie group sizes.
fn doubled_ranks<T: Float>(abs: &[T]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].partial_cmp(&abs[j]).expect("no NaN"));
    let mut ranks = vec![0u64; abs.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && abs[order[j]] == abs[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j share (i+1+j)/2; doubled that is i+1+j.
        for &k in &order[i..j] {
            ranks[k] = (i + 1 + j) as u64;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Number of sign assignments per doubled positive-rank sum.
fn null_counts(ranks: &[u64]) -> Vec<f64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Two-sided paired test on `a - b`. Zero differences are dropped, tied
/// magnitudes get mid-ranks. The p-value is exact for up to
/// [`EXACT_MAX_N`] pairs and uses the continuity-corrected normal
/// approximation (with tie correction) beyond that.
pub fn wilcoxon_signed_rank<T: Float>(a: &[T], b: &[T]) -> Result<WilcoxonResult<T>, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    let mut diffs = Vec::with_capacity(a.len());
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        if d.is_nan() {
            return Err(StatsError::NotANumber);
        }
        if d != T::zero() {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n < 5 {
        return Err(StatsError::TooFewPairs(n));
    }
    let abs: Vec<T> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&abs);
    let total: u64 = ranks.iter().sum();
    let plus: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > T::zero())
        .map(|(_, r)| r)
        .sum();
    let stat2 = plus.min(total - plus);
    let statistic = stat2 as f64 / 2.0;

    let (p, exact) = if n <= EXACT_MAX_N {
        let counts = null_counts(&ranks);
        let tail: f64 = counts[..=stat2 as usize].iter().sum();
        ((2.0 * tail / 2f64.powi(n as i32)).min(1.0), true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / sd;
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        ((2.0 * normal.sf(z)).min(1.0), false)
    };
    let cast = |x: f64| T::from(x).expect("representable");
    Ok(WilcoxonResult {
        statistic: cast(statistic),
        p_value: cast(p),
        n,
        exact,
    })
}
