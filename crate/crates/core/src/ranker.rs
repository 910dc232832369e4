//! Affine scoring head over `[θ; φ]`, trained with pairwise hinge loss.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::corpus::Impression;
use crate::evaluation::{self, RankedImpression};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RankError {
    #[error("feature vector has {found} entries, head expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no training impression has both a clicked and an unclicked candidate")]
    NoEligibleImpressions,
    #[error("non-finite loss at epoch {epoch}, batch {batch} (weight norm {weight_norm})")]
    NonFiniteLoss {
        epoch: usize,
        batch: usize,
        weight_norm: f64,
    },
    #[error("cannot rank an empty candidate list")]
    EmptyCandidates,
    #[error("invalid training config: {0}")]
    InvalidConfig(&'static str),
    #[error("feature table has {found} impressions, expected {expected}")]
    TableMismatch { expected: usize, found: usize },
}

/// Sizes of the feature blocks: `kernels` interest features followed by
/// `layers · kernels` semantic features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub kernels: usize,
    pub layers: usize,
}

impl FeatureLayout {
    pub fn dim(&self) -> usize {
        self.kernels * (1 + self.layers)
    }

    pub fn interest(&self) -> core::ops::Range<usize> {
        0..self.kernels
    }

    pub fn semantic(&self) -> core::ops::Range<usize> {
        self.kernels..self.dim()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoringHead {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl ScoringHead {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    /// Weights uniform in [-0.01, 0.01], bias 0.
    pub fn init(dim: usize, rng: &mut impl Rng) -> Self {
        Self {
            weights: (0..dim).map(|_| rng.random_range(-0.01..=0.01)).collect(),
            bias: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// w · x + b over the concatenated feature vector.
    pub fn score_features(&self, x: &[f64]) -> Result<f64, RankError> {
        if x.len() != self.weights.len() {
            return Err(RankError::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// w · [θ; φ] + b.
pub fn score(head: &ScoringHead, theta: &[f64], phi: &[f64]) -> Result<f64, RankError> {
    let found = theta.len() + phi.len();
    if found != head.dim() {
        return Err(RankError::DimensionMismatch {
            expected: head.dim(),
            found,
        });
    }
    let (wt, wp) = head.weights.split_at(theta.len());
    Ok(dot(wt, theta) + dot(wp, phi) + head.bias)
}

/// max(0, margin − s_pos + s_neg)
pub fn hinge_loss(s_pos: f64, s_neg: f64, margin: f64) -> f64 {
    let l = margin - s_pos + s_neg;
    if l > 0.0 {
        l
    } else {
        0.0
    }
}

/// Hinge loss of one pair; adds ∂loss/∂w into `grad`. The bias cancels in the
/// score difference and has no gradient.
pub fn pair_loss_gradient(head: &ScoringHead, pos: &[f64], neg: &[f64], margin: f64, grad: &mut [f64]) -> f64 {
    let s_pos = dot(&head.weights, pos);
    let s_neg = dot(&head.weights, neg);
    let loss = hinge_loss(s_pos, s_neg, margin);
    if loss > 0.0 {
        for ((g, p), n) in grad.iter_mut().zip(pos).zip(neg) {
            *g += n - p;
        }
    }
    loss
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batches_per_epoch: usize,
    pub pairs_per_batch: usize,
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    pub margin: f64,
    pub seed: u64,
    /// Grow the epoch so it draws at least one pair per eligible impression.
    pub scale_to_corpus: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batches_per_epoch: 16,
            pairs_per_batch: 8,
            learning_rate: 1e-3,
            optimizer: Optimizer::default(),
            margin: 1.0,
            seed: 7,
            scale_to_corpus: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RankError> {
        if self.epochs == 0 || self.batches_per_epoch == 0 || self.pairs_per_batch == 0 {
            return Err(RankError::InvalidConfig("epoch, batch and pair counts must be at least 1"));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(RankError::InvalidConfig("learning rate must be non-negative"));
        }
        if !(self.margin > 0.0) {
            return Err(RankError::InvalidConfig("margin must be positive"));
        }
        Ok(())
    }

    fn batches_for(&self, eligible: usize) -> usize {
        if self.scale_to_corpus {
            self.batches_per_epoch.max(eligible.div_ceil(self.pairs_per_batch))
        } else {
            self.batches_per_epoch
        }
    }
}

/// A clicked and an unclicked candidate of one impression, by candidate index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub impression: usize,
    pub positive: usize,
    pub negative: usize,
}

impl TrainingPair {
    pub fn positive_id<'a>(&self, impressions: &'a [Impression]) -> &'a str {
        &impressions[self.impression].candidates[self.positive]
    }

    pub fn negative_id<'a>(&self, impressions: &'a [Impression]) -> &'a str {
        &impressions[self.impression].candidates[self.negative]
    }
}

/// Draws one epoch of batches: an eligible impression uniformly, then a
/// clicked and an unclicked candidate uniformly within it.
pub fn sample_pairs(
    train: &[Impression],
    config: &TrainConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<TrainingPair>>, RankError> {
    let eligible: Vec<(usize, Vec<usize>, Vec<usize>)> = train
        .iter()
        .enumerate()
        .filter(|(_, imp)| imp.has_pair())
        .map(|(i, imp)| {
            let (pos, neg): (Vec<usize>, Vec<usize>) =
                (0..imp.candidates.len()).partition(|&c| imp.is_clicked(&imp.candidates[c]));
            (i, pos, neg)
        })
        .collect();
    if eligible.is_empty() {
        return Err(RankError::NoEligibleImpressions);
    }
    let batches = config.batches_for(eligible.len());
    Ok((0..batches)
        .map(|_| {
            (0..config.pairs_per_batch)
                .map(|_| {
                    let (i, pos, neg) = &eligible[rng.random_range(0..eligible.len())];
                    TrainingPair {
                        impression: *i,
                        positive: pos[rng.random_range(0..pos.len())],
                        negative: neg[rng.random_range(0..neg.len())],
                    }
                })
                .collect()
        })
        .collect())
}

/// Feature vectors for every candidate of a list of impressions.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    layout: FeatureLayout,
    offsets: Vec<usize>,
    values: Vec<f64>,
}

impl FeatureTable {
    pub fn new(layout: FeatureLayout) -> Self {
        Self {
            layout,
            offsets: vec![0],
            values: Vec::new(),
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    /// Appends the next impression's candidate features, concatenated in
    /// candidate order.
    pub fn push(&mut self, features: &[f64]) -> Result<(), RankError> {
        let dim = self.layout.dim();
        if features.len() % dim != 0 {
            return Err(RankError::DimensionMismatch {
                expected: dim,
                found: features.len() % dim,
            });
        }
        self.values.extend_from_slice(features);
        self.offsets.push(self.values.len());
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn candidates(&self, impression: usize) -> usize {
        (self.offsets[impression + 1] - self.offsets[impression]) / self.layout.dim()
    }

    pub fn get(&self, impression: usize, candidate: usize) -> &[f64] {
        let dim = self.layout.dim();
        let start = self.offsets[impression] + candidate * dim;
        &self.values[start..start + dim]
    }

    pub fn get_mut(&mut self, impression: usize, candidate: usize) -> &mut [f64] {
        let dim = self.layout.dim();
        let start = self.offsets[impression] + candidate * dim;
        &mut self.values[start..start + dim]
    }

    /// Zeroes the interest block of every row.
    pub fn ablate_interest(&mut self) {
        let dim = self.layout.dim();
        let r = self.layout.interest();
        for row in self.values.chunks_exact_mut(dim) {
            row[r.clone()].fill(0.0);
        }
    }
}

/// Orders `doc_ids` by descending score, ties by ascending id.
pub fn rank_by_scores(doc_ids: &[String], scores: &[f64]) -> Vec<(String, f64)> {
    let mut out: Vec<(String, f64)> = doc_ids.iter().cloned().zip(scores.iter().copied()).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}

/// Scores and orders candidates given one feature row per candidate.
pub fn rank<'a>(
    head: &ScoringHead,
    doc_ids: &[String],
    features: impl IntoIterator<Item = &'a [f64]>,
) -> Result<Vec<(String, f64)>, RankError> {
    if doc_ids.is_empty() {
        return Err(RankError::EmptyCandidates);
    }
    let scores = features
        .into_iter()
        .map(|x| head.score_features(x))
        .collect::<Result<Vec<_>, _>>()?;
    if scores.len() != doc_ids.len() {
        return Err(RankError::DimensionMismatch {
            expected: doc_ids.len(),
            found: scores.len(),
        });
    }
    Ok(rank_by_scores(doc_ids, &scores))
}

/// Ranks every impression of `impressions` with `head`.
pub fn rank_table(
    head: &ScoringHead,
    impressions: &[Impression],
    table: &FeatureTable,
) -> Result<Vec<RankedImpression>, RankError> {
    if impressions.len() != table.len() {
        return Err(RankError::TableMismatch {
            expected: impressions.len(),
            found: table.len(),
        });
    }
    impressions
        .iter()
        .enumerate()
        .map(|(i, imp)| {
            let rows = (0..imp.candidates.len()).map(|c| table.get(i, c));
            let order = rank(head, &imp.candidates, rows)?;
            Ok(RankedImpression {
                ranking: order.into_iter().map(|(d, _)| d).collect(),
                clicked: imp.clicked.iter().cloned().collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    /// 1-based.
    pub epoch: usize,
    pub pairs: usize,
    pub mean_loss: f64,
    pub validation_mrr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub head: ScoringHead,
    pub initial: ScoringHead,
    /// Epoch whose head was returned (1-based).
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

struct OptimizerState {
    kind: Optimizer,
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimizerState {
    fn new(kind: Optimizer, lr: f64, dim: usize) -> Self {
        Self {
            kind,
            lr,
            step: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        }
    }

    fn apply(&mut self, weights: &mut [f64], grad: &[f64]) {
        match self.kind {
            Optimizer::Sgd => {
                for (w, g) in weights.iter_mut().zip(grad) {
                    *w -= self.lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, epsilon } => {
                self.step += 1;
                let c1 = 1.0 - libm::pow(beta1, self.step as f64);
                let c2 = 1.0 - libm::pow(beta2, self.step as f64);
                for (((w, g), m), v) in weights.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *w -= self.lr * (*m / c1) / (libm::sqrt(*v / c2) + epsilon);
                }
            }
        }
    }
}

/// Trains a head on `train`, selecting the epoch with the best validation MRR
/// (earliest on ties). With no evaluable validation impression the last
/// epoch's head is returned.
pub fn train(
    train: &[Impression],
    train_features: &FeatureTable,
    validation: &[Impression],
    validation_features: &FeatureTable,
    config: &TrainConfig,
) -> Result<TrainOutcome, RankError> {
    config.validate()?;
    if train.len() != train_features.len() {
        return Err(RankError::TableMismatch {
            expected: train.len(),
            found: train_features.len(),
        });
    }
    let dim = train_features.layout().dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = ScoringHead::init(dim, &mut rng);
    let mut head = initial.clone();
    let mut opt = OptimizerState::new(config.optimizer, config.learning_rate, dim);
    let mut grad = vec![0.0; dim];
    let mut log = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize, ScoringHead)> = None;

    for epoch in 1..=config.epochs {
        let batches = sample_pairs(train, config, &mut rng)?;
        let mut total_loss = 0.0;
        let mut pairs = 0usize;
        for (b, batch) in batches.iter().enumerate() {
            grad.fill(0.0);
            let mut batch_loss = 0.0;
            for p in batch {
                let pos = train_features.get(p.impression, p.positive);
                let neg = train_features.get(p.impression, p.negative);
                batch_loss += pair_loss_gradient(&head, pos, neg, config.margin, &mut grad);
            }
            if !batch_loss.is_finite() {
                return Err(RankError::NonFiniteLoss {
                    epoch,
                    batch: b,
                    weight_norm: libm::sqrt(dot(&head.weights, &head.weights)),
                });
            }
            let n = batch.len() as f64;
            for g in &mut grad {
                *g /= n;
            }
            opt.apply(&mut head.weights, &grad);
            total_loss += batch_loss;
            pairs += batch.len();
        }

        let ranked = rank_table(&head, validation, validation_features)?;
        let mrr = evaluation::mean_reciprocal_rank(&ranked);
        log.push(EpochLog {
            epoch,
            pairs,
            mean_loss: total_loss / pairs as f64,
            validation_mrr: mrr,
        });
        match (mrr, &best) {
            (Some(m), Some((b, _, _))) if m <= *b => {}
            (Some(m), _) => best = Some((m, epoch, head.clone())),
            (None, _) => {}
        }
    }
    let (best_epoch, head) = match best {
        Some((_, e, h)) => (e, h),
        None => (config.epochs, head),
    };
    Ok(TrainOutcome {
        head,
        initial,
        best_epoch,
        log,
    })
}
