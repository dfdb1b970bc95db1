use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of non-zero differences evaluated with the exact null
/// distribution; above it the normal approximation is used.
pub const EXACT_MAX_N: usize = 12;
/// Fewest non-zero differences accepted.
pub const MIN_NONZERO: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Number of non-zero differences.
    pub n: usize,
    /// Sum of ranks of positive differences `a - b`.
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Midranks (1-based) of `values`; ties share their average rank. Returned
/// doubled so that every rank is an integer.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end, doubled average = start + 1 + end
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        start = end;
    }
    ranks
}

/// Two-sided paired signed-rank test of `a` against `b`.
///
/// Zero differences are dropped and tied magnitudes get midranks. Up to
/// [`EXACT_MAX_N`] non-zero differences the p-value comes from the exact
/// permutation distribution of the (midranked) statistic; above that a
/// normal approximation with tie-corrected variance and no continuity
/// correction is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n < MIN_NONZERO {
        return Err(Error::InsufficientData {
            nonzero: n,
            required: MIN_NONZERO,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&magnitudes);
    let total: u64 = ranks.iter().sum();
    let plus: u64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| *r).sum();
    let w_plus = plus as f64 / 2.0;
    let w_minus = (total - plus) as f64 / 2.0;

    let (p_value, method) = if n <= EXACT_MAX_N {
        (exact_p(&ranks, plus), WilcoxonMethod::Exact)
    } else {
        (normal_p(&magnitudes, &ranks, w_plus), WilcoxonMethod::Normal)
    };
    Ok(WilcoxonResult {
        n,
        w_plus,
        w_minus,
        p_value,
        method,
    })
}

/// Null distribution of the doubled statistic by dynamic programming over
/// sign assignments.
fn exact_p(ranks: &[u64], observed: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut ways = vec![0u64; total as usize + 1];
    ways[0] = 1;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if ways[s] > 0 {
                ways[s + r] += ways[s];
            }
        }
        reach += r;
    }
    let all = (1u64 << ranks.len()) as f64;
    let lower: u64 = ways[..=observed as usize].iter().sum();
    let upper: u64 = ways[observed as usize..].iter().sum();
    (2.0 * lower.min(upper) as f64 / all).min(1.0)
}

fn normal_p(magnitudes: &[f64], ranks: &[u64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = magnitudes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = (w_plus - mean) / libm::sqrt(var);
    libm::erfc(z.abs() / core::f64::consts::SQRT_2).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples_are_insufficient() {
        let a = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(
            wilcoxon_signed_rank(&a, &a),
            Err(Error::InsufficientData { nonzero: 0, required: 5 })
        );
    }

    #[test]
    fn six_positive_differences() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = [0.0; 6];
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Exact);
        assert_eq!(r.w_plus, 21.0);
        assert_eq!(r.p_value, 2.0 / 64.0);
    }

    #[test]
    fn two_sided_symmetry() {
        let a = [0.3, 0.9, 0.4, 0.75, 0.1, 0.65, 0.8];
        let b = [0.2, 0.5, 0.45, 0.7, 0.3, 0.6, 0.2];
        let ab = wilcoxon_signed_rank(&a, &b).unwrap();
        let ba = wilcoxon_signed_rank(&b, &a).unwrap();
        assert_eq!(ab.p_value, ba.p_value);
        assert_eq!(ab.w_plus, ba.w_minus);
    }

    #[test]
    fn midranks() {
        assert_eq!(doubled_midranks(&[3.0, 1.0, 3.0, 2.0]), vec![7, 2, 7, 4]);
    }

    #[test]
    fn uniform_improvement_over_24_subjects() {
        let a: Vec<f64> = (0..24).map(|i| 0.7 + i as f64 * 0.001).collect();
        let b: Vec<f64> = (0..24).map(|i| 0.6 + i as f64 * 0.0005).collect();
        let r = wilcoxon_signed_rank(&a, &b).unwrap();
        assert_eq!(r.method, WilcoxonMethod::Normal);
        // z = (300 - 150) / 35
        let expected = libm::erfc((150.0 / 35.0) / core::f64::consts::SQRT_2);
        assert!((r.p_value - expected).abs() < 1e-15);
        assert!(r.p_value < 0.001);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            wilcoxon_signed_rank(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }
}
