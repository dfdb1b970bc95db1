//! Amplitude-distribution, sample and permutation entropies.

use crate::error::{Error, Result};

/// Value returned by sample entropy when no template of length `m + 1`
/// matches.
pub const SAMPLE_ENTROPY_MAX: f64 = 10.0;

/// Bin probabilities of an equal-width histogram over `[min, max]` of `x`.
/// A constant series puts all mass in one bin.
pub fn histogram(x: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Err(Error::Invalid("empty window".into()));
    }
    if n_bins < 2 {
        return Err(Error::Invalid("histogram needs at least 2 bins".into()));
    }
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let mut counts = vec![0usize; n_bins];
    if hi > lo {
        let width = (hi - lo) / n_bins as f64;
        for &v in x {
            let b = (((v - lo) / width) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
    } else {
        counts[0] = x.len();
    }
    let n = x.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / n).collect())
}

pub fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&q| q > 0.0).map(|q| q * q.ln()).sum::<f64>()
}

pub fn renyi(p: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || alpha == 1.0 {
        return Err(Error::Invalid(format!("Renyi order {alpha} must be positive and not 1")));
    }
    let s: f64 = p.iter().filter(|&&q| q > 0.0).map(|q| q.powf(alpha)).sum();
    Ok(s.ln() / (1.0 - alpha))
}

pub fn tsallis(p: &[f64], q: f64) -> Result<f64> {
    if q == 1.0 || !q.is_finite() {
        return Err(Error::Invalid(format!("Tsallis index {q} must be finite and not 1")));
    }
    let s: f64 = p.iter().filter(|&&v| v > 0.0).map(|v| v.powf(q)).sum();
    Ok((1.0 - s) / (q - 1.0))
}

pub fn shannon_entropy(x: &[f64], n_bins: usize) -> Result<f64> {
    Ok(shannon(&histogram(x, n_bins)?))
}

pub fn renyi_entropy(x: &[f64], alpha: f64, n_bins: usize) -> Result<f64> {
    renyi(&histogram(x, n_bins)?, alpha)
}

pub fn tsallis_entropy(x: &[f64], q: f64, n_bins: usize) -> Result<f64> {
    tsallis(&histogram(x, n_bins)?, q)
}

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// `-ln(A / B)` with tolerance `r_factor * std(x)` (population standard
/// deviation) and Chebyshev distance.
///
/// Both counts range over the first `N - m` templates so that every
/// length-`m` template has a length-`m + 1` extension; self-matches are
/// excluded. Returns [`SAMPLE_ENTROPY_MAX`] when `A == 0`.
pub fn sample_entropy(x: &[f64], m: usize, r_factor: f64) -> Result<f64> {
    Ok(sample_entropy_batch(x, &[(m, r_factor)])?[0])
}

/// Sample entropy for several `(m, r_factor)` pairs in one pass over the
/// template pairs.
pub fn sample_entropy_batch(x: &[f64], params: &[(usize, f64)]) -> Result<Vec<f64>> {
    let n = x.len();
    for &(m, r) in params {
        if m == 0 || n <= m + 1 {
            return Err(Error::Invalid(format!("sample entropy with m = {m} needs more than {} samples", m + 1)));
        }
        if !(r >= 0.0) {
            return Err(Error::Invalid("sample entropy tolerance must be non-negative".into()));
        }
    }
    if params.is_empty() {
        return Ok(Vec::new());
    }
    let sd = population_std(x);
    let tolerances: Vec<f64> = params.iter().map(|&(_, r)| r * sd).collect();
    let r_max = tolerances.iter().cloned().fold(0.0, f64::max);
    let depth = params.iter().map(|&(m, _)| m + 1).max().unwrap();
    let m_min = params.iter().map(|&(m, _)| m).min().unwrap();

    let mut a = vec![0u64; params.len()];
    let mut b = vec![0u64; params.len()];
    // dist[k] = Chebyshev distance over the first k + 1 template points
    let mut dist = vec![0.0f64; depth];
    for i in 0..n - m_min {
        for j in i + 1..n - m_min {
            let mut reached = 0;
            let mut d = 0.0f64;
            while reached < depth && j + reached < n {
                d = d.max((x[i + reached] - x[j + reached]).abs());
                if d > r_max {
                    break;
                }
                dist[reached] = d;
                reached += 1;
            }
            for (p, &(m, _)) in params.iter().enumerate() {
                if j >= n - m {
                    continue;
                }
                let r = tolerances[p];
                if reached >= m && dist[m - 1] <= r {
                    b[p] += 1;
                    if reached > m && dist[m] <= r {
                        a[p] += 1;
                    }
                }
            }
        }
    }
    Ok(a.iter()
        .zip(&b)
        .map(|(&a, &b)| {
            if a == 0 || b == 0 {
                SAMPLE_ENTROPY_MAX
            } else {
                -(a as f64 / b as f64).ln()
            }
        })
        .collect())
}

/// Normalized Shannon entropy of ordinal patterns, in `[0, 1]`.
///
/// The pattern of `(x[i], x[i + delay], ..)` is the permutation that sorts
/// it, equal values ordered by position.
pub fn permutation_entropy(x: &[f64], order: usize, delay: usize) -> Result<f64> {
    if order < 2 || delay == 0 {
        return Err(Error::Invalid("permutation entropy needs order >= 2 and delay >= 1".into()));
    }
    if x.len() <= order * delay {
        return Err(Error::Invalid(format!(
            "permutation entropy of order {order}, delay {delay} needs more than {} samples",
            order * delay
        )));
    }
    let factorial: usize = (1..=order).product();
    let mut counts = vec![0u64; factorial];
    let span = (order - 1) * delay;
    let mut idx: Vec<usize> = Vec::with_capacity(order);
    for start in 0..x.len() - span {
        idx.clear();
        idx.extend(0..order);
        idx.sort_by(|&p, &q| x[start + p * delay].total_cmp(&x[start + q * delay]).then(p.cmp(&q)));
        counts[lehmer_code(&idx)] += 1;
    }
    let total = (x.len() - span) as f64;
    let h = -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * p.ln()
        })
        .sum::<f64>();
    Ok(h / (factorial as f64).ln())
}

/// Rank of a permutation of `0..n` in lexicographic order.
fn lehmer_code(perm: &[usize]) -> usize {
    let n = perm.len();
    let mut code = 0;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&v| v < perm[i]).count();
        code = code * (n - i) + smaller;
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    /// Direct transcription of the definition: all ordered template pairs.
    fn sample_entropy_oracle(x: &[f64], m: usize, r_factor: f64) -> f64 {
        let r = r_factor * population_std(x);
        let n = x.len();
        let count = |len: usize| {
            let mut c = 0u64;
            for i in 0..n - m {
                for j in 0..n - m {
                    if i != j && (0..len).all(|k| (x[i + k] - x[j + k]).abs() <= r) {
                        c += 1;
                    }
                }
            }
            c
        };
        let (a, b) = (count(m + 1), count(m));
        if a == 0 {
            SAMPLE_ENTROPY_MAX
        } else {
            -(a as f64 / b as f64).ln()
        }
    }

    #[test]
    fn distribution_entropies_closed_forms() {
        let p = [0.5, 0.5];
        assert!((shannon(&p) - 2f64.ln()).abs() < 1e-15);
        assert!((renyi(&p, 2.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((tsallis(&p, 2.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_histogram_has_log_k_entropy() {
        let x: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert!((shannon_entropy(&x, 10).unwrap() - 10f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_zero_entropies() {
        let x = [3.5; 64];
        assert_eq!(shannon_entropy(&x, 100).unwrap(), 0.0);
        assert_eq!(renyi_entropy(&x, 2.0, 100).unwrap(), 0.0);
        assert_eq!(tsallis_entropy(&x, 2.0, 100).unwrap(), 0.0);
        assert_eq!(sample_entropy(&x, 2, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn invalid_parameters() {
        assert!(renyi(&[1.0], 1.0).is_err());
        assert!(tsallis(&[1.0], 1.0).is_err());
        assert!(histogram(&[], 10).is_err());
        assert!(histogram(&[1.0], 1).is_err());
        assert!(sample_entropy(&[1.0, 2.0, 3.0], 2, 0.2).is_err());
        assert!(permutation_entropy(&[1.0, 2.0, 3.0], 3, 1).is_err());
    }

    #[test]
    fn ramp_has_no_sample_entropy_matches() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        // std of 0..50 is ~14.4, so r = 0.05 * std < 1 = step
        assert_eq!(sample_entropy(&x, 2, 0.05).unwrap(), SAMPLE_ENTROPY_MAX);
    }

    #[test]
    fn sample_entropy_matches_oracle_on_fixed_sequence() {
        let x: Vec<f64> = (0..30).map(|i| ((i * 7919) % 13) as f64 + 0.25 * (i % 4) as f64).collect();
        for (m, r) in [(2, 0.2), (2, 0.3), (3, 0.2), (1, 0.1)] {
            let v = sample_entropy(&x, m, r).unwrap();
            assert!((v - sample_entropy_oracle(&x, m, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_equals_individual_calls() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let x: Vec<f64> = (0..300).map(|_| StandardNormal.sample(&mut rng)).collect();
        let params = [(2, 0.1), (2, 0.2), (3, 0.3), (3, 0.1)];
        let batch = sample_entropy_batch(&x, &params).unwrap();
        for (v, &(m, r)) in batch.iter().zip(&params) {
            assert_eq!(*v, sample_entropy(&x, m, r).unwrap());
            assert!((v - sample_entropy_oracle(&x, m, r)).abs() < 1e-12);
        }
    }

    #[test]
    fn permutation_entropy_hand_enumeration() {
        // windows 4,7,9 / 7,9,10 / 9,10,6 / 10,6,11 / 6,11,3 give sorting
        // permutations 012, 012, 201, 102, 201
        let x = [4.0, 7.0, 9.0, 10.0, 6.0, 11.0, 3.0];
        let expected = -(2.0 * 0.4 * 0.4f64.ln() + 0.2 * 0.2f64.ln()) / 6f64.ln();
        assert!((permutation_entropy(&x, 3, 1).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn monotone_series_has_zero_permutation_entropy() {
        let x: Vec<f64> = (0..100).map(|i| (i as f64).sqrt()).collect();
        for order in [3, 5, 7] {
            assert_eq!(permutation_entropy(&x, order, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn iid_noise_permutation_entropy_near_one() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(8);
        let x: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert!(permutation_entropy(&x, 3, 1).unwrap() >= 0.95);
    }

    #[test]
    fn lehmer_codes_are_a_bijection() {
        let mut seen = [false; 24];
        let mut perm = [0, 1, 2, 3];
        loop {
            let c = lehmer_code(&perm);
            assert!(!seen[c]);
            seen[c] = true;
            // next lexicographic permutation
            let Some(i) = (0..3).rev().find(|&i| perm[i] < perm[i + 1]) else { break };
            let j = (i + 1..4).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
        assert!(seen.iter().all(|&s| s));
    }
}
