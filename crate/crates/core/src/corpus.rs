//! Click-log domain types, tokenization and the history/train/validation/test
//! partitioning.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("impression has an empty candidate list")]
    EmptyCandidates,
    #[error("clicked doc_id {0:?} is not among the candidates")]
    ClickNotInCandidates(String),
    #[error("candidate doc_id {0:?} listed twice")]
    DuplicateCandidate(String),
    #[error("history fraction {0} must lie strictly between 0 and 1")]
    InvalidHistoryFraction(f64),
    #[error("split ratios must be positive, got {0}:{1}:{2}")]
    InvalidRatios(u32, u32, u32),
}

/// Maximum token counts applied at ingest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_query_len: usize,
    pub max_doc_len: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_query_len: 10,
            max_doc_len: 500,
        }
    }
}

/// Lowercases `text` and splits it on Unicode whitespace and ASCII
/// punctuation, dropping empty pieces.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c.is_ascii_punctuation())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_lowercase())
        .collect()
}

/// [`tokenize`] keeping at most `max` leading tokens.
pub fn tokenize_truncated(text: &str, max: usize) -> Vec<String> {
    let mut tokens = tokenize(text);
    tokens.truncate(max);
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub doc_id: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, text: &str, limits: &Limits) -> Self {
        Self {
            doc_id: doc_id.into(),
            tokens: tokenize_truncated(text, limits.max_doc_len),
        }
    }
}

/// Documents keyed by id. The first occurrence of an id wins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DocumentTable {
    docs: Vec<Document>,
    index: BTreeMap<String, usize>,
}

impl DocumentTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts `doc` unless its id is already present. Returns whether it was
    /// inserted.
    pub fn insert(&mut self, doc: Document) -> bool {
        if self.index.contains_key(&doc.doc_id) {
            return false;
        }
        self.index.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        true
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.index.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn as_slice(&self) -> &[Document] {
        &self.docs
    }
}

impl FromIterator<Document> for DocumentTable {
    fn from_iter<I: IntoIterator<Item = Document>>(iter: I) -> Self {
        let mut table = Self::new();
        for doc in iter {
            table.insert(doc);
        }
        table
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub tokens: Vec<String>,
    pub user_id: String,
    /// Epoch seconds.
    pub timestamp: i64,
}

impl Query {
    pub fn new(user_id: impl Into<String>, timestamp: i64, text: &str, limits: &Limits) -> Self {
        Self {
            tokens: tokenize_truncated(text, limits.max_query_len),
            user_id: user_id.into(),
            timestamp,
        }
    }
}

/// One logged result list with its clicks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Impression {
    pub query: Query,
    pub candidates: Vec<String>,
    pub clicked: Vec<String>,
}

impl Impression {
    /// Validates `clicked ⊆ candidates`, non-empty and duplicate-free
    /// candidates. Repeated clicks on one document collapse to one.
    pub fn new(
        query: Query,
        candidates: Vec<String>,
        clicked: Vec<String>,
    ) -> Result<Self, CorpusError> {
        if candidates.is_empty() {
            return Err(CorpusError::EmptyCandidates);
        }
        let mut seen = BTreeSet::new();
        for c in &candidates {
            if !seen.insert(c.as_str()) {
                return Err(CorpusError::DuplicateCandidate(c.clone()));
            }
        }
        let mut clicks = Vec::with_capacity(clicked.len());
        for c in clicked {
            if !seen.contains(c.as_str()) {
                return Err(CorpusError::ClickNotInCandidates(c));
            }
            if !clicks.contains(&c) {
                clicks.push(c);
            }
        }
        Ok(Self {
            query,
            candidates,
            clicked: clicks,
        })
    }

    pub fn user_id(&self) -> &str {
        &self.query.user_id
    }

    pub fn timestamp(&self) -> i64 {
        self.query.timestamp
    }

    pub fn is_clicked(&self, doc_id: &str) -> bool {
        self.clicked.iter().any(|c| c == doc_id)
    }

    pub fn unclicked(&self) -> impl Iterator<Item = &String> + '_ {
        self.candidates.iter().filter(move |c| !self.is_clicked(c))
    }

    /// At least one clicked and one unclicked candidate.
    pub fn has_pair(&self) -> bool {
        !self.clicked.is_empty() && self.clicked.len() < self.candidates.len()
    }
}

/// Stable chronological order: timestamp, then user id, then input order.
pub fn order_impressions(impressions: &mut [Impression]) {
    impressions.sort_by(|a, b| {
        a.timestamp()
            .cmp(&b.timestamp())
            .then_with(|| a.user_id().cmp(b.user_id()))
    });
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitRatios {
    pub train: u32,
    pub validation: u32,
    pub test: u32,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 6,
            validation: 1,
            test: 1,
        }
    }
}

impl SplitRatios {
    /// Partition sizes for `n` impressions: validation and test are floored,
    /// train takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let total = (self.train + self.validation + self.test) as u128;
        let validation = (n as u128 * self.validation as u128 / total) as usize;
        let test = (n as u128 * self.test as u128 / total) as usize;
        (n - validation - test, validation, test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitConfig {
    /// Leading fraction of the log's time span assigned to history.
    pub history_fraction: f64,
    pub ratios: SplitRatios,
}

impl Default for SplitConfig {
    fn default() -> Self {
        // five of thirteen weeks
        Self {
            history_fraction: 0.38,
            ratios: SplitRatios::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitCorpus {
    pub history: BTreeMap<String, Vec<Impression>>,
    pub train: Vec<Impression>,
    pub validation: Vec<Impression>,
    pub test: Vec<Impression>,
    /// Users with post-history impressions but no history.
    pub cold_users: Vec<String>,
}

impl SplitCorpus {
    /// Every user id appearing in any partition, sorted.
    pub fn users(&self) -> Vec<String> {
        let mut users: BTreeSet<&str> = self.history.keys().map(String::as_str).collect();
        for imp in self.train.iter().chain(&self.validation).chain(&self.test) {
            users.insert(imp.user_id());
        }
        users.into_iter().map(String::from).collect()
    }

    /// Clicked doc ids of `user`'s history impressions in chronological order,
    /// repeats included.
    pub fn history_clicks(&self, user: &str) -> Vec<String> {
        self.history
            .get(user)
            .map(|imps| imps.iter().flat_map(|i| i.clicked.iter().cloned()).collect())
            .unwrap_or_default()
    }

    pub fn history_len(&self) -> usize {
        self.history.values().map(Vec::len).sum()
    }

    pub fn partition(&self, which: Partition) -> &[Impression] {
        match which {
            Partition::Train => &self.train,
            Partition::Validation => &self.validation,
            Partition::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Partition {
    Train,
    Validation,
    Test,
}

/// Splits a click log into per-user history and chronological
/// train/validation/test partitions.
///
/// Impressions in the leading `history_fraction` of the global time span go to
/// history. The rest are ordered by time and cut according to `ratios`.
pub fn split(mut impressions: Vec<Impression>, config: &SplitConfig) -> Result<SplitCorpus, CorpusError> {
    let f = config.history_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(CorpusError::InvalidHistoryFraction(f));
    }
    let r = config.ratios;
    if r.train == 0 || r.validation == 0 || r.test == 0 {
        return Err(CorpusError::InvalidRatios(r.train, r.validation, r.test));
    }
    order_impressions(&mut impressions);

    let mut out = SplitCorpus::default();
    let (Some(first), Some(last)) = (impressions.first(), impressions.last()) else {
        return Ok(out);
    };
    let t_min = first.timestamp();
    let span = (last.timestamp() - t_min) as f64;
    let cutoff = f * span;

    let mut rest = Vec::new();
    for imp in impressions {
        if ((imp.timestamp() - t_min) as f64) < cutoff {
            out.history.entry(imp.user_id().into()).or_default().push(imp);
        } else {
            rest.push(imp);
        }
    }

    let cold: BTreeSet<&str> = rest
        .iter()
        .map(Impression::user_id)
        .filter(|u| !out.history.contains_key(*u))
        .collect();
    out.cold_users = cold.into_iter().map(String::from).collect();

    let (n_train, n_val, _) = r.sizes(rest.len());
    let test = rest.split_off(n_train + n_val);
    let validation = rest.split_off(n_train);
    out.train = rest;
    out.validation = validation;
    out.test = test;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::string::ToString;
    use alloc::vec;

    fn imp(user: &str, ts: i64, cands: &[&str], clicks: &[&str]) -> Impression {
        Impression::new(
            Query::new(user, ts, "q", &Limits::default()),
            cands.iter().map(|s| s.to_string()).collect(),
            clicks.iter().map(|s| s.to_string()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn tokenizes_lowercase_and_punctuation() {
        assert_eq!(tokenize("Suzuki  Bikes, for-SALE!"), vec!["suzuki", "bikes", "for", "sale"]);
        assert!(tokenize(" ,. ").is_empty());
    }

    #[test]
    fn query_truncated_to_prefix() {
        let text: Vec<String> = (0..15).map(|i| format!("t{i}")).collect();
        let q = Query::new("u", 0, &text.join(" "), &Limits::default());
        assert_eq!(q.tokens.len(), 10);
        assert_eq!(q.tokens[9], "t9");
    }

    #[test]
    fn impression_validation() {
        let q = Query::new("u", 0, "x", &Limits::default());
        assert_eq!(
            Impression::new(q.clone(), vec![], vec![]),
            Err(CorpusError::EmptyCandidates)
        );
        assert_eq!(
            Impression::new(q.clone(), vec!["a".into()], vec!["b".into()]),
            Err(CorpusError::ClickNotInCandidates("b".into()))
        );
        let i = Impression::new(q, vec!["a".into(), "b".into()], vec!["a".into(), "a".into()]).unwrap();
        assert_eq!(i.clicked, vec!["a"]);
        assert!(i.has_pair());
    }

    #[test]
    fn document_table_keeps_first() {
        let l = Limits::default();
        let t: DocumentTable = [Document::new("d", "a b", &l), Document::new("d", "c", &l)]
            .into_iter()
            .collect();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("d").unwrap().tokens, vec!["a", "b"]);
    }

    #[test]
    fn ratio_sizes_floor_with_remainder_to_train() {
        let r = SplitRatios::default();
        assert_eq!(r.sizes(8), (6, 1, 1));
        assert_eq!(r.sizes(800), (600, 100, 100));
        assert_eq!(r.sizes(15), (13, 1, 1));
        assert_eq!(r.sizes(0), (0, 0, 0));
    }

    #[test]
    fn eight_post_history_impressions() {
        // history: one impression at t=0 for user a; the rest late
        let mut imps = vec![imp("a", 0, &["d1"], &["d1"])];
        for t in 0..8 {
            imps.push(imp("a", 100 + t, &["d1"], &["d1"]));
        }
        let s = split(imps, &SplitConfig::default()).unwrap();
        assert_eq!(s.history_len(), 1);
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (6, 1, 1));
        assert!(s.cold_users.is_empty());
    }

    #[test]
    fn user_without_history_is_flagged() {
        let imps = vec![
            imp("a", 0, &["d1"], &["d1"]),
            imp("b", 90, &["d1"], &["d1"]),
            imp("a", 100, &["d1"], &["d1"]),
        ];
        let s = split(imps, &SplitConfig::default()).unwrap();
        assert!(s.history.get("b").is_none());
        assert_eq!(s.cold_users, vec!["b"]);
        assert_eq!(s.users(), vec!["a", "b"]);
    }

    #[test]
    fn rejects_bad_config() {
        let c = SplitConfig {
            history_fraction: 1.0,
            ..Default::default()
        };
        assert!(split(vec![], &c).is_err());
    }
}
