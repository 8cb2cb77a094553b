use mlgcn_core::metrics::{
    average_precision, decide_labels, evaluate, knn_retrieve, mean_average_precision, DecisionRule,
};
use mlgcn_core::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Position of item `i` when sorted by descending score, ascending index on ties.
fn rank_of(scores: &[f64], i: usize) -> usize {
    (0..scores.len())
        .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
        .count()
}

fn oracle_decide(scores: &[f64], b: usize, c: usize, rule: DecisionRule) -> Vec<bool> {
    let mut out = vec![false; b * c];
    for row in 0..b {
        let r = &scores[row * c..(row + 1) * c];
        for j in 0..c {
            out[row * c + j] = match rule {
                DecisionRule::Threshold(t) => 1.0 / (1.0 + (-r[j]).exp()) > t,
                DecisionRule::TopK(k) => rank_of(r, j) < k,
            };
        }
    }
    out
}

fn div(a: usize, b: usize) -> f64 {
    if b == 0 { 0.0 } else { a as f64 / b as f64 }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) }
}

/// (CP, CR, CF1, OP, OR, OF1, mAP) by explicit confusion counting and prefix precision.
fn oracle_metrics(scores: &[f64], truth: &[bool], b: usize, c: usize, rule: DecisionRule) -> [f64; 7] {
    let decided = oracle_decide(scores, b, c, rule);
    let (mut ttp, mut tfp, mut tfn) = (0, 0, 0);
    let (mut cp, mut cr) = (0.0, 0.0);
    for j in 0..c {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for row in 0..b {
            match (decided[row * c + j], truth[row * c + j]) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        cp += div(tp, tp + fp);
        cr += div(tp, tp + fn_);
        ttp += tp;
        tfp += fp;
        tfn += fn_;
    }
    let (cp, cr) = (cp / c as f64, cr / c as f64);
    let (op, or) = (div(ttp, ttp + tfp), div(ttp, ttp + tfn));

    let mut aps = Vec::new();
    for j in 0..c {
        let col: Vec<f64> = (0..b).map(|row| scores[row * c + j]).collect();
        let mut ranked = vec![false; b];
        for row in 0..b {
            ranked[rank_of(&col, row)] = truth[row * c + j];
        }
        let positives = ranked.iter().filter(|&&x| x).count();
        if positives == 0 {
            continue;
        }
        let mut sum = 0.0;
        for k in 1..=b {
            if ranked[k - 1] {
                sum += ranked[..k].iter().filter(|&&x| x).count() as f64 / k as f64;
            }
        }
        aps.push(sum / positives as f64);
    }
    let map = aps.iter().sum::<f64>() / aps.len() as f64;
    [cp, cr, f1(cp, cr), op, or, f1(op, or), map]
}

fn random_instance(rng: &mut ChaCha8Rng) -> (usize, usize, Vec<f64>, Vec<bool>) {
    let b = rng.random_range(1..=50);
    let c = rng.random_range(1..=15);
    // coarse grid so ties actually happen
    let scores = (0..b * c).map(|_| (rng.random_range(-8i32..=8) as f64) * 0.5).collect();
    let mut truth: Vec<bool> = (0..b * c).map(|_| rng.random_bool(0.3)).collect();
    truth[0] = true;
    (b, c, scores, truth)
}

#[test]
fn thousand_random_instances_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    for case in 0..1000 {
        let (b, c, scores, truth) = random_instance(&mut rng);
        let rule = if case % 2 == 0 {
            DecisionRule::Threshold(0.5)
        } else {
            DecisionRule::TopK(rng.random_range(1..=4))
        };
        let st = Tensor::new([b, c], scores.clone()).unwrap();
        let tt = Tensor::new([b, c], truth.iter().map(|&t| f64::from(u8::from(t))).collect()).unwrap();
        let r = evaluate(&st, &tt, rule).unwrap();
        let got = [r.cp, r.cr, r.cf1, r.op, r.or, r.of1, r.map];
        let want = oracle_metrics(&scores, &truth, b, c, rule);
        for (k, (g, w)) in got.iter().zip(want).enumerate() {
            assert!((g - w).abs() <= 1e-9, "case {case}, metric {k}: {g} vs {w}");
            assert!((0.0..=1.0).contains(g));
        }
    }
}

#[test]
fn ranked_one_zero_one() {
    let ap = average_precision(&[0.9, 0.5, 0.1], &[true, false, true]).unwrap();
    assert!((ap - 0.833_333_333_333_333_4).abs() < 1e-9);
}

proptest! {
    #[test]
    fn top_k_row_sums(b in 1usize..8, c in 1usize..10, k in 1usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores = Tensor::new([b, c], (0..b * c).map(|_| rng.random_range(-3i32..3) as f64).collect()).unwrap();
        let pred = decide_labels(&scores, DecisionRule::TopK(k)).unwrap();
        for row in 0..b {
            prop_assert_eq!(pred.decided_row(row).iter().filter(|&&d| d).count(), k.min(c));
        }
    }

    #[test]
    fn map_is_rank_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b, c, scores, mut truth) = random_instance(&mut rng);
        truth[0] = true;
        let tt = Tensor::new([b, c], truth.iter().map(|&t| f64::from(u8::from(t))).collect()).unwrap();
        let st = Tensor::new([b, c], scores.clone()).unwrap();
        // strictly increasing transform keeps every tie and every order
        let warped = Tensor::new([b, c], scores.iter().map(|s| 3.0 * s.powi(3) + s - 7.0).collect()).unwrap();
        let (_, a) = mean_average_precision(&st, &tt).unwrap();
        let (_, w) = mean_average_precision(&warped, &tt).unwrap();
        for (x, y) in a.iter().zip(&w) {
            prop_assert_eq!(x.map(f64::to_bits), y.map(f64::to_bits));
        }
    }

    #[test]
    fn knn_distances_non_decreasing(seed in any::<u64>(), n in 1usize..30, d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gallery: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let k = rng.random_range(0..=n);
        let hits = knn_retrieve(&q, &gallery, k).unwrap();
        prop_assert_eq!(hits.len(), k);
        for w in hits.windows(2) {
            prop_assert!(w[0].distance <= w[1].distance);
        }
    }

    #[test]
    fn f1_is_harmonic_mean(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (b, c, scores, truth) = random_instance(&mut rng);
        let tt = Tensor::new([b, c], truth.iter().map(|&t| f64::from(u8::from(t))).collect()).unwrap();
        let r = evaluate(&Tensor::new([b, c], scores).unwrap(), &tt, DecisionRule::Threshold(0.5)).unwrap();
        prop_assert!((r.cf1 - f1(r.cp, r.cr)).abs() <= 1e-12);
        prop_assert!((r.of1 - f1(r.op, r.or)).abs() <= 1e-12);
    }
}

#[test]
fn knn_top_five() {
    let gallery: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, 0.0]).collect();
    let hits = knn_retrieve(&gallery[4], &gallery, 5).unwrap();
    assert_eq!(hits.len(), 5);
    assert_eq!(hits[0].index, 4);
    assert_eq!(hits[0].distance, 0.0);
    // 3 and 5 tie at distance 1; lower index first
    assert_eq!(hits.iter().map(|h| h.index).collect::<Vec<_>>(), vec![4, 3, 5, 2, 6]);
}
