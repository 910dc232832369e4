//! Synthetic click logs with known topical structure.
//!
//! The vocabulary is a block of shared words plus one disjoint block per
//! topic. Each document has a dominant topic and draws its words from that
//! block (Zipf-weighted), a random other topic, or the shared block. Queries
//! are one or two shared words, so lexical overlap tells which candidates
//! match the query but not which one the user wants. Each user prefers one
//! topic, and clicks go to the candidate with the highest lexical overlap plus
//! topical affinity, except that with probability `click_noise` a uniformly
//! random candidate is clicked instead.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::{Document, Impression, Query};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyntheticError {
    #[error("vocabulary of {vocab} terms is too small for {topics} topics ({shared} shared words, 5 per topic minimum)")]
    VocabTooSmall {
        vocab: usize,
        topics: usize,
        shared: usize,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    pub user_count: usize,
    pub true_topic_count: usize,
    pub vocab_size: usize,
    /// Documents in the pool per user.
    pub docs_per_user: usize,
    pub impressions_per_user: usize,
    pub candidates_per_impression: usize,
    /// Probability that a click lands on a uniformly random candidate.
    pub click_noise: f64,
    /// Mass of a user's preference on their own topic; the rest is uniform.
    pub preference_strength: f64,
    pub doc_len: usize,
    pub shared_words: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            user_count: 60,
            true_topic_count: 5,
            vocab_size: 600,
            docs_per_user: 20,
            impressions_per_user: 40,
            candidates_per_impression: 10,
            click_noise: 0.1,
            preference_strength: 0.7,
            doc_len: 40,
            shared_words: 20,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        if self.user_count == 0
            || self.true_topic_count == 0
            || self.docs_per_user == 0
            || self.impressions_per_user == 0
            || self.candidates_per_impression == 0
            || self.doc_len == 0
            || self.shared_words == 0
        {
            return Err(SyntheticError::InvalidSpec("all counts must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.click_noise) {
            return Err(SyntheticError::InvalidSpec("click noise must lie in [0, 1)"));
        }
        if !(0.0..=1.0).contains(&self.preference_strength) {
            return Err(SyntheticError::InvalidSpec("preference strength must lie in [0, 1]"));
        }
        let needed = self.shared_words + 5 * self.true_topic_count;
        if self.vocab_size < needed {
            return Err(SyntheticError::VocabTooSmall {
                vocab: self.vocab_size,
                topics: self.true_topic_count,
                shared: self.shared_words,
            });
        }
        if self.candidates_per_impression > self.user_count * self.docs_per_user {
            return Err(SyntheticError::InvalidSpec("more candidates than documents"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub documents: Vec<Document>,
    /// Chronological within each user; users interleave.
    pub impressions: Vec<Impression>,
    /// Preferred topic of every user.
    pub user_topic: BTreeMap<String, usize>,
    /// Dominant topic of every document.
    pub doc_topic: BTreeMap<String, usize>,
}

// mass of a document's dominant topic and of the shared block
const DOMINANT_MASS: f64 = 0.85;
const SHARED_MASS: f64 = 0.1;
const SECOND_CLICK: f64 = 0.15;
const START_TS: i64 = 1_141_171_200;
const SPAN_SECS: i64 = 13 * 7 * 86_400;

struct Layout {
    shared: Vec<String>,
    topics: Vec<Vec<String>>,
    // Zipf cumulative weights within a topic block
    zipf: Vec<f64>,
}

impl Layout {
    fn new(spec: &SyntheticSpec) -> Self {
        let per_topic = (spec.vocab_size - spec.shared_words) / spec.true_topic_count;
        let mut next = 0usize;
        let mut word = || {
            next += 1;
            format!("w{next:04}")
        };
        let shared = (0..spec.shared_words).map(|_| word()).collect();
        let topics = (0..spec.true_topic_count)
            .map(|_| (0..per_topic).map(|_| word()).collect())
            .collect();
        let mut acc = 0.0;
        let zipf = (0..per_topic)
            .map(|r| {
                acc += 1.0 / (r + 1) as f64;
                acc
            })
            .collect();
        Self { shared, topics, zipf }
    }

    fn topic_word(&self, topic: usize, rng: &mut ChaCha8Rng) -> &str {
        let u = rng.random::<f64>() * self.zipf[self.zipf.len() - 1];
        let r = self.zipf.iter().position(|&c| u < c).unwrap_or(self.zipf.len() - 1);
        &self.topics[topic][r]
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SyntheticError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let k = spec.true_topic_count;
    let layout = Layout::new(spec);

    // documents
    let n_docs = spec.user_count * spec.docs_per_user;
    let mut documents = Vec::with_capacity(n_docs);
    let mut doc_dominant = Vec::with_capacity(n_docs);
    let mut doc_mix = Vec::with_capacity(n_docs);
    let mut doc_words: Vec<BTreeSet<String>> = Vec::with_capacity(n_docs);
    let mut shared_index: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for d in 0..n_docs {
        let topic = rng.random_range(0..k);
        let len = (spec.doc_len * 3 / 4 + rng.random_range(0..=spec.doc_len / 2)).max(1);
        let mut counts = vec![0usize; k];
        let mut tokens = Vec::with_capacity(len);
        for _ in 0..len {
            let u = rng.random::<f64>();
            if u < SHARED_MASS {
                tokens.push(layout.shared[rng.random_range(0..layout.shared.len())].clone());
                continue;
            }
            let t = if u < SHARED_MASS + DOMINANT_MASS || k == 1 {
                topic
            } else {
                let other = rng.random_range(0..k - 1);
                if other >= topic { other + 1 } else { other }
            };
            counts[t] += 1;
            tokens.push(String::from(layout.topic_word(t, &mut rng)));
        }
        let topical: usize = counts.iter().sum::<usize>().max(1);
        doc_mix.push(counts.iter().map(|&c| c as f64 / topical as f64).collect::<Vec<f64>>());
        doc_dominant.push(topic);
        doc_words.push(tokens.iter().cloned().collect());
        documents.push(Document {
            doc_id: format!("doc_{d:05}"),
            tokens,
        });
    }
    for (d, words) in doc_words.iter().enumerate() {
        for s in &layout.shared {
            if words.contains(s) {
                shared_index.entry(s.as_str()).or_default().push(d);
            }
        }
    }

    // users
    let user_ids: Vec<String> = (0..spec.user_count).map(|u| format!("user_{u:03}")).collect();
    let user_topic: Vec<usize> = (0..spec.user_count).map(|u| u % k).collect();
    let preference = |u: usize| -> Vec<f64> {
        let mut p = vec![(1.0 - spec.preference_strength) / k as f64; k];
        p[user_topic[u]] += spec.preference_strength;
        p
    };

    let mut impressions = Vec::with_capacity(spec.user_count * spec.impressions_per_user);
    let c = spec.candidates_per_impression;
    for u in 0..spec.user_count {
        let pref = preference(u);
        let mut times: Vec<i64> = (0..spec.impressions_per_user)
            .map(|_| START_TS + rng.random_range(0..SPAN_SECS))
            .collect();
        times.sort_unstable();
        for ts in times {
            // intent topic drawn from the preference
            let mut x = rng.random::<f64>();
            let mut intent = k - 1;
            for (t, &p) in pref.iter().enumerate() {
                if x < p {
                    intent = t;
                    break;
                }
                x -= p;
            }

            let n_query = rng.random_range(1..=2usize).min(layout.shared.len());
            let mut query: Vec<&str> = Vec::with_capacity(n_query);
            while query.len() < n_query {
                let w = layout.shared[rng.random_range(0..layout.shared.len())].as_str();
                if !query.contains(&w) {
                    query.push(w);
                }
            }
            let matching: Vec<usize> = {
                let mut m: BTreeSet<usize> = BTreeSet::new();
                for w in &query {
                    if let Some(ds) = shared_index.get(w) {
                        m.extend(ds.iter().copied());
                    }
                }
                m.into_iter().collect()
            };

            let mut chosen: Vec<usize> = Vec::with_capacity(c);
            // one matching document of the intent topic, when one exists
            let targets: Vec<usize> = matching.iter().copied().filter(|&d| doc_dominant[d] == intent).collect();
            if !targets.is_empty() {
                chosen.push(targets[rng.random_range(0..targets.len())]);
            }
            let lexical = c / 2;
            let mut guard = 0;
            while chosen.len() < lexical && !matching.is_empty() && guard < 20 * c {
                let d = matching[rng.random_range(0..matching.len())];
                if !chosen.contains(&d) {
                    chosen.push(d);
                }
                guard += 1;
            }
            while chosen.len() < c {
                let d = rng.random_range(0..n_docs);
                if !chosen.contains(&d) {
                    chosen.push(d);
                }
            }
            // shuffle the logged order
            for i in (1..chosen.len()).rev() {
                let j = rng.random_range(0..=i);
                chosen.swap(i, j);
            }

            let utility: Vec<f64> = chosen
                .iter()
                .map(|&d| {
                    let overlap =
                        query.iter().filter(|w| doc_words[d].contains(**w)).count() as f64 / query.len() as f64;
                    let affinity: f64 = pref.iter().zip(&doc_mix[d]).map(|(p, m)| p * m).sum();
                    overlap + affinity + 0.01 * rng.random::<f64>()
                })
                .collect();
            let mut order: Vec<usize> = (0..chosen.len()).collect();
            order.sort_by(|&a, &b| utility[b].total_cmp(&utility[a]));
            let mut clicked = Vec::with_capacity(2);
            if rng.random::<f64>() < spec.click_noise {
                clicked.push(chosen[rng.random_range(0..chosen.len())]);
            } else {
                clicked.push(chosen[order[0]]);
                if chosen.len() > 1
                    && doc_dominant[chosen[order[1]]] == doc_dominant[chosen[order[0]]]
                    && rng.random::<f64>() < SECOND_CLICK
                {
                    clicked.push(chosen[order[1]]);
                }
            }

            let text = query.join(" ");
            let q = Query {
                tokens: text.split(' ').map(String::from).collect(),
                user_id: user_ids[u].clone(),
                timestamp: ts,
            };
            let imp = Impression::new(
                q,
                chosen.iter().map(|&d| documents[d].doc_id.clone()).collect(),
                clicked.iter().map(|&d| documents[d].doc_id.clone()).collect(),
            )
            .expect("generated impressions are valid");
            impressions.push(imp);
        }
    }
    crate::corpus::order_impressions(&mut impressions);

    Ok(SyntheticCorpus {
        user_topic: user_ids.iter().cloned().zip(user_topic).collect(),
        doc_topic: documents.iter().map(|d| d.doc_id.clone()).zip(doc_dominant).collect(),
        documents,
        impressions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_vocab() {
        let spec = SyntheticSpec {
            vocab_size: 30,
            ..Default::default()
        };
        assert!(matches!(generate(&spec), Err(SyntheticError::VocabTooSmall { .. })));
    }

    #[test]
    fn deterministic() {
        let spec = SyntheticSpec {
            user_count: 5,
            impressions_per_user: 5,
            ..Default::default()
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
    }

    #[test]
    fn noiseless_disjoint_users_click_own_topic() {
        let spec = SyntheticSpec {
            user_count: 2,
            true_topic_count: 2,
            docs_per_user: 50,
            impressions_per_user: 30,
            click_noise: 0.0,
            preference_strength: 1.0,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        for imp in &s.impressions {
            let own = s.user_topic[imp.user_id()];
            for c in &imp.clicked {
                assert_eq!(s.doc_topic[c], own, "{} clicked {}", imp.user_id(), c);
            }
        }
    }

    #[test]
    fn shapes() {
        let spec = SyntheticSpec {
            user_count: 4,
            impressions_per_user: 3,
            ..Default::default()
        };
        let s = generate(&spec).unwrap();
        assert_eq!(s.documents.len(), 80);
        assert_eq!(s.impressions.len(), 12);
        assert!(s.impressions.iter().all(|i| i.candidates.len() == 10 && !i.clicked.is_empty()));
        assert!(s.impressions.windows(2).all(|w| w[0].timestamp() <= w[1].timestamp()));
    }
}
