//! Topic-profile personalized ranking.
//!
//! The crate is `no_std` (with `alloc`) and holds every numeric piece of the
//! ranking pipeline: click-log partitioning, collapsed-Gibbs LDA, user topical
//! profiles, synthetic contextual embeddings, Gaussian kernel pooling over
//! profile/topic cosines and query/document translation matrices, the
//! pairwise-trained scoring head, and the ranking metrics. File formats, IO
//! and the command line live in the `topirank` crate.
#![no_std]

extern crate alloc;

pub mod corpus;
pub mod embeddings;
pub mod evaluation;
pub mod hash;
pub mod matching;
pub mod profiles;
pub mod ranker;
pub mod synthetic;
pub mod topics;

pub use corpus::{Document, Impression, Limits, Query, SplitCorpus};
pub use embeddings::{EmbeddingProvider, LayeredEmbeddings, SyntheticProvider};
pub use evaluation::MetricReport;
pub use matching::{InterestFeatures, KernelBank, SemanticFeatures};
pub use profiles::UserProfile;
pub use ranker::{FeatureLayout, ScoringHead, TrainConfig};
pub use topics::{TopicModel, TopicModelConfig, TopicModelState};
