//! Ranking metrics over clicked impressions: MAP, MRR, P@1 and A.Clk.
//!
//! Ranks are 1-based. Impressions without clicks are skipped and counted.
//! A.Clk pools every click of every evaluated impression.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("ranking is not a permutation of the candidates")]
    NotAPermutation,
    #[error("no impression with a click to evaluate")]
    NothingToEvaluate,
}

/// A ranking of an impression's candidates together with its clicks.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedImpression {
    pub ranking: Vec<String>,
    pub clicked: BTreeSet<String>,
}

impl RankedImpression {
    /// Checks that `ranking` permutes `candidates` and that every click is a
    /// candidate.
    pub fn new(ranking: Vec<String>, candidates: &[String], clicked: &[String]) -> Result<Self, EvalError> {
        let a: BTreeSet<&str> = ranking.iter().map(String::as_str).collect();
        let b: BTreeSet<&str> = candidates.iter().map(String::as_str).collect();
        if a != b || a.len() != ranking.len() || b.len() != candidates.len() {
            return Err(EvalError::NotAPermutation);
        }
        if clicked.iter().any(|c| !b.contains(c.as_str())) {
            return Err(EvalError::NotAPermutation);
        }
        Ok(Self {
            ranking,
            clicked: clicked.iter().cloned().collect(),
        })
    }

    /// 1-based ranks of clicked documents, ascending.
    pub fn click_ranks(&self) -> Vec<usize> {
        self.ranking
            .iter()
            .enumerate()
            .filter(|(_, d)| self.clicked.contains(*d))
            .map(|(i, _)| i + 1)
            .collect()
    }
}

/// Mean over clicked ranks r of (clicks at rank ≤ r) / r.
///
/// Summed as an exact fraction while it fits in u128, so short lists give the
/// correctly rounded value (5/6, not 5/6 minus an ulp).
pub fn average_precision(ranked: &RankedImpression) -> Option<f64> {
    let ranks = ranked.click_ranks();
    if ranks.is_empty() {
        return None;
    }
    let n = ranks.len() as u128;
    let exact = ranks
        .iter()
        .enumerate()
        .try_fold((0u128, 1u128), |(num, den), (hits, &r)| {
            add_fraction(num, den, hits as u128 + 1, r as u128)
        })
        .and_then(|(num, den)| Some((num, den.checked_mul(n)?)));
    Some(match exact {
        Some((num, den)) => {
            let g = gcd(num, den);
            (num / g) as f64 / (den / g) as f64
        }
        None => {
            let sum: f64 = ranks
                .iter()
                .enumerate()
                .map(|(hits, &r)| (hits + 1) as f64 / r as f64)
                .sum();
            sum / ranks.len() as f64
        }
    })
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// a/b + c/d, reduced; `None` on overflow.
fn add_fraction(a: u128, b: u128, c: u128, d: u128) -> Option<(u128, u128)> {
    let g = gcd(b, d);
    let den = (b / g).checked_mul(d)?;
    let num = a.checked_mul(d / g)?.checked_add(c.checked_mul(b / g)?)?;
    let h = gcd(num, den).max(1);
    Some((num / h, den / h))
}

pub fn reciprocal_rank(ranked: &RankedImpression) -> Option<f64> {
    ranked.click_ranks().first().map(|&r| 1.0 / r as f64)
}

pub fn precision_at_1(ranked: &RankedImpression) -> Option<f64> {
    if ranked.clicked.is_empty() {
        return None;
    }
    let top = ranked.ranking.first()?;
    Some(if ranked.clicked.contains(top) { 1.0 } else { 0.0 })
}

/// Mean 1-based position of every click across `ranked`.
pub fn average_click_position(ranked: &[RankedImpression]) -> Option<f64> {
    let mut sum = 0usize;
    let mut n = 0usize;
    for r in ranked {
        for rank in r.click_ranks() {
            sum += rank;
            n += 1;
        }
    }
    (n > 0).then(|| sum as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricReport {
    pub map: f64,
    pub mrr: f64,
    pub p_at_1: f64,
    pub a_clk: f64,
    /// Impressions evaluated.
    pub query_count: usize,
    /// Impressions skipped for having no click.
    pub excluded: usize,
}

pub fn evaluate(ranked: &[RankedImpression]) -> Result<MetricReport, EvalError> {
    let mut map = 0.0;
    let mut mrr = 0.0;
    let mut p1 = 0.0;
    let mut count = 0usize;
    let mut excluded = 0usize;
    let mut clicks = 0usize;
    let mut positions = 0usize;
    for r in ranked {
        let ranks = r.click_ranks();
        if ranks.is_empty() {
            excluded += 1;
            continue;
        }
        map += average_precision(r).unwrap_or(0.0);
        mrr += 1.0 / ranks[0] as f64;
        p1 += if ranks[0] == 1 { 1.0 } else { 0.0 };
        clicks += ranks.len();
        positions += ranks.iter().sum::<usize>();
        count += 1;
    }
    if count == 0 {
        return Err(EvalError::NothingToEvaluate);
    }
    let n = count as f64;
    Ok(MetricReport {
        map: map / n,
        mrr: mrr / n,
        p_at_1: p1 / n,
        a_clk: positions as f64 / clicks as f64,
        query_count: count,
        excluded,
    })
}

/// Mean reciprocal rank only; `None` when nothing has a click.
pub fn mean_reciprocal_rank(ranked: &[RankedImpression]) -> Option<f64> {
    let rr: Vec<f64> = ranked.iter().filter_map(reciprocal_rank).collect();
    (!rr.is_empty()).then(|| rr.iter().sum::<f64>() / rr.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    /// `n` candidates d1..dn ranked in order, clicks at the given 1-based ranks.
    fn ranked(n: usize, clicks: &[usize]) -> RankedImpression {
        let ids: Vec<String> = (1..=n).map(|i| format!("d{i}")).collect();
        let clicked: Vec<String> = clicks.iter().map(|&r| ids[r - 1].clone()).collect();
        RankedImpression::new(ids.clone(), &ids, &clicked).unwrap()
    }

    #[test]
    fn average_precision_cases() {
        assert_eq!(average_precision(&ranked(3, &[1])), Some(1.0));
        assert_eq!(average_precision(&ranked(5, &[1, 3])), Some(5.0 / 6.0));
        assert_eq!(average_precision(&ranked(4, &[1, 2, 3, 4])), Some(1.0));
        assert_eq!(average_precision(&ranked(4, &[])), None);
    }

    #[test]
    fn reciprocal_rank_cases() {
        assert_eq!(reciprocal_rank(&ranked(3, &[1])), Some(1.0));
        assert_eq!(reciprocal_rank(&ranked(3, &[2])), Some(0.5));
        assert_eq!(reciprocal_rank(&ranked(5, &[3, 4])), Some(1.0 / 3.0));
    }

    #[test]
    fn precision_at_one_cases() {
        assert_eq!(precision_at_1(&ranked(3, &[1])), Some(1.0));
        assert_eq!(precision_at_1(&ranked(3, &[2])), Some(0.0));
        assert_eq!(precision_at_1(&ranked(3, &[])), None);
    }

    #[test]
    fn click_position_cases() {
        assert_eq!(average_click_position(&[ranked(3, &[1])]), Some(1.0));
        assert_eq!(average_click_position(&[ranked(5, &[2, 4])]), Some(3.0));
        // pooled, not averaged per impression
        assert_eq!(
            average_click_position(&[ranked(5, &[1]), ranked(5, &[2, 3, 4])]),
            Some(2.5)
        );
    }

    #[test]
    fn reversal_moves_click_to_mirror_position() {
        let r = ranked(7, &[2]);
        let mut rev = r.clone();
        rev.ranking.reverse();
        assert_eq!(rev.click_ranks(), vec![7 + 1 - 2]);
    }

    #[test]
    fn evaluate_skips_clickless() {
        let rep = evaluate(&[ranked(3, &[1]), ranked(3, &[])]).unwrap();
        assert_eq!(rep.query_count, 1);
        assert_eq!(rep.excluded, 1);
        assert_eq!((rep.map, rep.mrr, rep.p_at_1, rep.a_clk), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(evaluate(&[ranked(3, &[])]), Err(EvalError::NothingToEvaluate));
    }

    #[test]
    fn permutation_is_checked() {
        let c = vec!["a".to_string(), "b".to_string()];
        assert!(RankedImpression::new(vec!["a".into()], &c, &[]).is_err());
        assert!(RankedImpression::new(vec!["a".into(), "a".into()], &c, &[]).is_err());
        assert!(RankedImpression::new(vec!["b".into(), "a".into()], &c, &["z".into()]).is_err());
    }
}
