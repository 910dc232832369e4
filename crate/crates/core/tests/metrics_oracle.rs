use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topirank_core::evaluation::{
    average_click_position, average_precision, evaluate, precision_at_1, reciprocal_rank, RankedImpression,
};

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("d{i}")).collect()
}

fn ranked(ranking: Vec<String>, clicked: &[String]) -> RankedImpression {
    let candidates = {
        let mut c = ranking.clone();
        c.sort();
        c
    };
    RankedImpression::new(ranking, &candidates, clicked).unwrap()
}

// Oracles written against a 0/1 relevance vector in rank order.

fn rel(r: &RankedImpression) -> Vec<bool> {
    r.ranking.iter().map(|d| r.clicked.contains(d)).collect()
}

fn ap_oracle(rel: &[bool]) -> f64 {
    let total = rel.iter().filter(|&&x| x).count() as f64;
    let mut sum = 0.0;
    for k in 1..=rel.len() {
        if rel[k - 1] {
            let hits = rel[..k].iter().filter(|&&x| x).count() as f64;
            sum += hits / k as f64;
        }
    }
    sum / total
}

fn rr_oracle(rel: &[bool]) -> f64 {
    for (k, &r) in rel.iter().enumerate() {
        if r {
            return 1.0 / (k + 1) as f64;
        }
    }
    unreachable!()
}

fn random_impressions(seed: u64, count: usize) -> Vec<RankedImpression> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.random_range(1..=12);
            let mut order = ids(n);
            order.shuffle(&mut rng);
            let clicks = rng.random_range(1..=n.min(3));
            let mut pool = ids(n);
            pool.shuffle(&mut rng);
            ranked(order, &pool[..clicks])
        })
        .collect()
}

#[test]
fn metrics_match_definitions() {
    let imps = random_impressions(21, 50);
    let n = imps.len() as f64;
    let map = imps.iter().map(|r| ap_oracle(&rel(r))).sum::<f64>() / n;
    let mrr = imps.iter().map(|r| rr_oracle(&rel(r))).sum::<f64>() / n;
    let p1 = imps.iter().filter(|r| rel(r)[0]).count() as f64 / n;
    let (mut pos, mut clicks) = (0.0, 0.0);
    for r in &imps {
        for (k, &x) in rel(r).iter().enumerate() {
            if x {
                pos += (k + 1) as f64;
                clicks += 1.0;
            }
        }
    }
    let report = evaluate(&imps).unwrap();
    assert!((report.map - map).abs() <= 1e-12);
    assert!((report.mrr - mrr).abs() <= 1e-12);
    assert!((report.p_at_1 - p1).abs() <= 1e-12);
    assert!((report.a_clk - pos / clicks).abs() <= 1e-12);
    assert_eq!(report.query_count, 50);
    for r in &imps {
        assert!((average_precision(r).unwrap() - ap_oracle(&rel(r))).abs() <= 1e-12);
        assert!((reciprocal_rank(r).unwrap() - rr_oracle(&rel(r))).abs() <= 1e-12);
    }
}

#[test]
fn hand_cases_are_exact() {
    let d = ids(5);
    let r = ranked(d.clone(), &[d[0].clone(), d[2].clone()]);
    assert_eq!(average_precision(&r), Some(5.0 / 6.0));
    let r = ranked(d.clone(), &[d[1].clone()]);
    assert_eq!(reciprocal_rank(&r), Some(0.5));
    assert_eq!(precision_at_1(&r), Some(0.0));
    assert_eq!(average_click_position(&[r]), Some(2.0));
}

#[test]
fn clickless_impressions_are_excluded() {
    let mut imps = random_impressions(22, 10);
    let before = evaluate(&imps).unwrap();
    imps.push(ranked(ids(4), &[]));
    let after = evaluate(&imps).unwrap();
    assert_eq!(after.excluded, 1);
    assert_eq!(before.map, after.map);
    assert_eq!(before.a_clk, after.a_clk);
}

proptest! {
    #[test]
    fn metrics_stay_in_range(seed in any::<u64>()) {
        let imps = random_impressions(seed, 20);
        let r = evaluate(&imps).unwrap();
        for v in [r.map, r.mrr, r.p_at_1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.a_clk >= 1.0);
        // a single click makes AP equal RR
        for imp in &imps {
            if imp.clicked.len() == 1 {
                prop_assert_eq!(average_precision(imp), reciprocal_rank(imp));
            }
        }
    }

    #[test]
    fn moving_a_click_up_never_hurts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..=10);
        let mut order = ids(n);
        order.shuffle(&mut rng);
        let clicked = vec![order[rng.random_range(1..n)].clone()];
        let pos = order.iter().position(|d| *d == clicked[0]).unwrap();
        let before = ranked(order.clone(), &clicked);
        order.swap(pos, pos - 1);
        let after = ranked(order, &clicked);
        prop_assert!(average_precision(&after) > average_precision(&before));
        prop_assert!(average_click_position(&[after]) < average_click_position(&[before]));
    }
}
