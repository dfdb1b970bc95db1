use hdc_core::evaluation::{
    duration_metrics, episode_metrics, merge_events, postprocess, wilcoxon_signed_rank, LabelSequence, PostProcess,
    WilcoxonMethod,
};
use hdc_core::hypervector::{random_hv, Accumulator, Hypervector, Sign, Weight};
use proptest::prelude::*;

fn runs(mask: u32, n: usize) -> Vec<u32> {
    let mut out = Vec::new();
    let mut cur = 0u32;
    for i in 0..n {
        if mask >> i & 1 == 1 {
            cur |= 1 << i;
        } else if cur != 0 {
            out.push(cur);
            cur = 0;
        }
    }
    if cur != 0 {
        out.push(cur);
    }
    out
}

fn rate(num: u32, den: u32, empty: f64) -> f64 {
    if den == 0 {
        empty
    } else {
        num as f64 / den as f64
    }
}

fn f1(tpr: f64, ppv: f64) -> f64 {
    if tpr + ppv == 0.0 {
        0.0
    } else {
        2.0 * tpr * ppv / (tpr + ppv)
    }
}

/// (tpr, ppv, f1) from bitmask overlap counting.
fn episode_oracle(pred: u32, truth: u32, n: usize) -> (f64, f64, f64) {
    let t = runs(truth, n);
    let p = runs(pred, n);
    let tp = t.iter().filter(|b| **b & pred != 0).count() as u32;
    let fp = p.iter().filter(|b| **b & truth == 0).count() as u32;
    let tpr = rate(tp, t.len() as u32, if p.is_empty() { 1.0 } else { 0.0 });
    let ppv = rate(tp, tp + fp, if t.is_empty() { 1.0 } else { 0.0 });
    (tpr, ppv, f1(tpr, ppv))
}

fn duration_oracle(pred: u32, truth: u32) -> (f64, f64, f64) {
    let tp = (pred & truth).count_ones();
    let t = truth.count_ones();
    let p = pred.count_ones();
    let tpr = rate(tp, t, if p == 0 { 1.0 } else { 0.0 });
    let ppv = rate(tp, p, if t == 0 { 1.0 } else { 0.0 });
    (tpr, ppv, f1(tpr, ppv))
}

fn seq(mask: u32, n: usize) -> LabelSequence {
    LabelSequence::new((0..n).map(|i| (mask >> i & 1) as u8).collect(), 1.0).unwrap()
}

#[test]
fn metrics_match_oracles_exhaustively() {
    for n in 1..=12usize {
        let seqs: Vec<LabelSequence> = (0..1u32 << n).map(|m| seq(m, n)).collect();
        for truth in 0..1u32 << n {
            for pred in 0..1u32 << n {
                let (p, t) = (&seqs[pred as usize], &seqs[truth as usize]);
                let e = episode_metrics(p, t).unwrap();
                let d = duration_metrics(p, t).unwrap();
                assert_eq!((e.tpr, e.ppv, e.f1), episode_oracle(pred, truth, n), "{n} {pred:b} {truth:b}");
                assert_eq!((d.tpr, d.ppv, d.f1), duration_oracle(pred, truth));
                assert!((0.0..=1.0).contains(&d.tpr) && (0.0..=1.0).contains(&d.ppv));
            }
        }
    }
}

/// p-value by enumerating all 2^n sign assignments of the midranks.
fn wilcoxon_enumeration(diffs: &[f64]) -> f64 {
    let d: Vec<f64> = diffs.iter().cloned().filter(|x| *x != 0.0).collect();
    let n = d.len();
    let mags: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let ranks: Vec<f64> = mags
        .iter()
        .map(|m| {
            let below = mags.iter().filter(|o| *o < m).count() as f64;
            let equal = mags.iter().filter(|o| *o == m).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = ranks.iter().zip(&d).filter(|(_, x)| **x > 0.0).map(|(r, _)| r).sum();
    let (mut le, mut ge) = (0u64, 0u64);
    for signs in 0..1u32 << n {
        let w: f64 = (0..n).filter(|i| signs >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w <= observed + 1e-9 {
            le += 1;
        }
        if w >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * le.min(ge) as f64 / (1u64 << n) as f64).min(1.0)
}

proptest! {
    #[test]
    fn bind_is_self_inverse(a in any::<u64>(), b in any::<u64>(), big in any::<bool>()) {
        let dim = if big { 10_000 } else { 64 };
        let x = random_hv(dim, a).unwrap();
        let y = random_hv(dim, b).unwrap();
        let bound = x.bind(&y).unwrap();
        prop_assert_eq!(bound.dim(), dim);
        prop_assert_eq!(bound.bind(&y).unwrap(), x);
    }

    #[test]
    fn binarize_is_bitwise_majority(
        rows in prop::collection::vec(prop::collection::vec(any::<bool>(), 37), 1..12),
        tie_seed in any::<u64>(),
    ) {
        let tie = random_hv(37, tie_seed).unwrap();
        let mut acc = Accumulator::new(37).unwrap();
        for r in &rows {
            acc.accumulate(&Hypervector::from_bits(r).unwrap(), Weight::ONE, Sign::Add).unwrap();
        }
        let expected: Vec<bool> = (0..37)
            .map(|i| {
                let ones = rows.iter().filter(|r| r[i]).count();
                match (2 * ones).cmp(&rows.len()) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => tie.get(i),
                }
            })
            .collect();
        prop_assert_eq!(acc.binarize(&tie).unwrap(), Hypervector::from_bits(&expected).unwrap());
    }

    #[test]
    fn merge_is_idempotent(labels in prop::collection::vec(0u8..2, 1..200), gap in 0.0f64..40.0) {
        let s = LabelSequence::new(labels, 0.5).unwrap();
        let once = merge_events(&s, gap);
        prop_assert_eq!(merge_events(&once, gap), once);
    }

    #[test]
    fn postprocess_preserves_length(labels in prop::collection::vec(0u8..2, 1..300)) {
        let s = LabelSequence::new(labels, 0.5).unwrap();
        let out = postprocess(&s, &PostProcess::default()).unwrap();
        prop_assert_eq!(out.len(), s.len());
        prop_assert_eq!(postprocess(&s, &PostProcess::default()).unwrap(), out);
    }

    #[test]
    fn exact_wilcoxon_matches_enumeration(
        a in prop::collection::vec(0u8..6, 5..=12),
        b_seed in prop::collection::vec(0u8..6, 12),
    ) {
        let a: Vec<f64> = a.iter().map(|&v| v as f64 / 5.0).collect();
        let b: Vec<f64> = b_seed[..a.len()].iter().map(|&v| v as f64 / 5.0).collect();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        match wilcoxon_signed_rank(&a, &b) {
            Ok(r) => {
                prop_assert_eq!(r.method, WilcoxonMethod::Exact);
                prop_assert!((r.p_value - wilcoxon_enumeration(&diffs)).abs() < 1e-12);
            }
            Err(_) => prop_assert!(diffs.iter().filter(|d| **d != 0.0).count() < 5),
        }
    }
}
