//! Per-layer contextual token vectors behind a provider interface.
//!
//! The ranking pipeline consumes vectors only; where they come from (an
//! external encoder's exported cache, or the seeded synthetic provider here)
//! is the provider's business.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::hash;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbeddingError {
    #[error("{0} token sequence is empty")]
    EmptySequence(&'static str),
    #[error("embedding data has {found} values, expected {expected}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("embedding contains a non-finite value")]
    NonFinite,
    #[error("no cached embeddings for query hash {query_hash:016x} and doc {doc_id:?}")]
    CacheMiss { query_hash: u64, doc_id: String },
    #[error("layer count and dimension must be at least 1")]
    InvalidConfig,
    #[error("layer or dimension mismatch: query {query:?} vs document {doc:?} (layers, dim)")]
    LayerMismatch {
        query: (usize, usize),
        doc: (usize, usize),
    },
}

/// `layers` matrices of shape `tokens × dim`, stored layer-major then
/// token-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredEmbeddings {
    layers: usize,
    tokens: usize,
    dim: usize,
    data: Vec<f32>,
}

impl LayeredEmbeddings {
    pub fn new(layers: usize, tokens: usize, dim: usize, data: Vec<f32>) -> Result<Self, EmbeddingError> {
        if layers == 0 || dim == 0 {
            return Err(EmbeddingError::InvalidConfig);
        }
        let expected = layers * tokens * dim;
        if data.len() != expected {
            return Err(EmbeddingError::ShapeMismatch {
                expected,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite);
        }
        Ok(Self {
            layers,
            tokens,
            dim,
            data,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn tokens(&self) -> usize {
        self.tokens
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Layer `l` (0-based) as a `tokens × dim` row-major slice.
    pub fn layer(&self, l: usize) -> &[f32] {
        let size = self.tokens * self.dim;
        &self.data[l * size..(l + 1) * size]
    }

    pub fn vector(&self, l: usize, token: usize) -> &[f32] {
        let start = (l * self.tokens + token) * self.dim;
        &self.data[start..start + self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            data: self.data.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Source of contextual embeddings for (query, document) pairs.
pub trait EmbeddingProvider {
    fn layers(&self) -> usize;

    fn dim(&self) -> usize;

    /// Embeds `query` and `doc` as one paired context.
    fn embed_pair(
        &self,
        query: &[String],
        doc_id: &str,
        doc: &[String],
    ) -> Result<(LayeredEmbeddings, LayeredEmbeddings), EmbeddingError>;
}

impl<P: EmbeddingProvider + ?Sized> EmbeddingProvider for &P {
    fn layers(&self) -> usize {
        (**self).layers()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_pair(
        &self,
        query: &[String],
        doc_id: &str,
        doc: &[String],
    ) -> Result<(LayeredEmbeddings, LayeredEmbeddings), EmbeddingError> {
        (**self).embed_pair(query, doc_id, doc)
    }
}

/// Cache key for a query: FNV-1a of its tokens joined by single spaces.
pub fn query_hash<S: AsRef<str>>(tokens: &[S]) -> u64 {
    hash::tokens_hash(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyntheticConfig {
    pub layers: usize,
    pub dim: usize,
    pub seed: u64,
    /// Neighbors on each side mixed in per layer.
    pub window: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            layers: 12,
            dim: 768,
            seed: 7,
            window: 2,
        }
    }
}

// per-layer weight of each neighbor, and of the layer-specific token salt
const NEIGHBOR_WEIGHT: f64 = 0.25;
const SALT_WEIGHT: f64 = 0.1;

/// Seeded hash vectors contextualized by per-layer neighbor averaging over
/// the concatenated query+document sequence.
///
/// Layer `l` of token `i` is `normalize(h[l-1][i] + 0.25 Σ neighbors within
/// window + 0.1 salt(l, token))`, starting from the token's unit hash vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntheticProvider {
    config: SyntheticConfig,
}

impl SyntheticProvider {
    pub fn new(config: SyntheticConfig) -> Result<Self, EmbeddingError> {
        if config.layers == 0 || config.dim == 0 {
            return Err(EmbeddingError::InvalidConfig);
        }
        Ok(Self { config })
    }

    pub fn config(&self) -> &SyntheticConfig {
        &self.config
    }

    fn hash_vector(&self, token: &str, layer: u64, out: &mut [f64]) {
        let mut key = hash::mix(self.config.seed ^ hash::mix(hash::fnv1a(token.as_bytes()) ^ layer));
        for v in out.iter_mut() {
            // SplitMix64 stream, top 53 bits mapped to [-1, 1)
            key = key.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let bits = hash::mix(key) >> 11;
            *v = bits as f64 * (2.0 / (1u64 << 53) as f64) - 1.0;
        }
        normalize(out);
    }

    /// Embeds one token sequence; the result has `layers` layers.
    pub fn embed_sequence<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<f64> {
        let (layers, dim, window) = (self.config.layers, self.config.dim, self.config.window);
        let n = tokens.len();
        let mut prev = vec![0.0f64; n * dim];
        for (i, t) in tokens.iter().enumerate() {
            self.hash_vector(t.as_ref(), 0, &mut prev[i * dim..(i + 1) * dim]);
        }
        let mut out = Vec::with_capacity(layers * n * dim);
        let mut salt = vec![0.0f64; dim];
        let mut cur = vec![0.0f64; n * dim];
        for l in 1..=layers {
            for i in 0..n {
                let row = &mut cur[i * dim..(i + 1) * dim];
                row.copy_from_slice(&prev[i * dim..(i + 1) * dim]);
                let lo = i.saturating_sub(window);
                let hi = (i + window).min(n - 1);
                for k in (lo..=hi).filter(|&k| k != i) {
                    for (r, p) in row.iter_mut().zip(&prev[k * dim..(k + 1) * dim]) {
                        *r += NEIGHBOR_WEIGHT * p;
                    }
                }
                self.hash_vector(tokens[i].as_ref(), l as u64, &mut salt);
                for (r, s) in row.iter_mut().zip(&salt) {
                    *r += SALT_WEIGHT * s;
                }
                normalize(row);
            }
            out.extend_from_slice(&cur);
            core::mem::swap(&mut prev, &mut cur);
        }
        out
    }
}

fn normalize(v: &mut [f64]) {
    let norm = libm::sqrt(v.iter().map(|x| x * x).sum::<f64>());
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

impl EmbeddingProvider for SyntheticProvider {
    fn layers(&self) -> usize {
        self.config.layers
    }

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn embed_pair(
        &self,
        query: &[String],
        _doc_id: &str,
        doc: &[String],
    ) -> Result<(LayeredEmbeddings, LayeredEmbeddings), EmbeddingError> {
        if query.is_empty() {
            return Err(EmbeddingError::EmptySequence("query"));
        }
        if doc.is_empty() {
            return Err(EmbeddingError::EmptySequence("document"));
        }
        let seq: Vec<&str> = query.iter().chain(doc).map(String::as_str).collect();
        let all = self.embed_sequence(&seq);
        let (layers, dim) = (self.config.layers, self.config.dim);
        let (m, n) = (query.len(), doc.len());
        let mut q = Vec::with_capacity(layers * m * dim);
        let mut d = Vec::with_capacity(layers * n * dim);
        for l in 0..layers {
            let layer = &all[l * (m + n) * dim..(l + 1) * (m + n) * dim];
            q.extend(layer[..m * dim].iter().map(|&v| v as f32));
            d.extend(layer[m * dim..].iter().map(|&v| v as f32));
        }
        Ok((
            LayeredEmbeddings::new(layers, m, dim, q)?,
            LayeredEmbeddings::new(layers, n, dim, d)?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    fn provider(window: usize) -> SyntheticProvider {
        SyntheticProvider::new(SyntheticConfig {
            layers: 3,
            dim: 32,
            seed: 7,
            window,
        })
        .unwrap()
    }

    #[test]
    fn deterministic() {
        let p = provider(2);
        let a = p.embed_pair(&toks(&["a", "b"]), "d", &toks(&["c", "a", "e"])).unwrap();
        let b = p.embed_pair(&toks(&["a", "b"]), "d", &toks(&["c", "a", "e"])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.tokens(), 2);
        assert_eq!(a.1.tokens(), 3);
    }

    #[test]
    fn window_zero_first_layer_is_context_free() {
        let p = provider(0);
        let (_, d1) = p.embed_pair(&toks(&["q"]), "x", &toks(&["x", "apple", "y"])).unwrap();
        let (_, d2) = p.embed_pair(&toks(&["z", "w"]), "x", &toks(&["apple", "car"])).unwrap();
        assert_eq!(d1.vector(0, 1), d2.vector(0, 0));
    }

    #[test]
    fn context_changes_deep_layers() {
        let p = provider(2);
        let (_, d1) = p.embed_pair(&toks(&["q"]), "x", &toks(&["x", "apple", "y"])).unwrap();
        let (_, d2) = p.embed_pair(&toks(&["q"]), "x", &toks(&["road", "apple", "car"])).unwrap();
        for l in 1..3 {
            assert_ne!(d1.vector(l, 1), d2.vector(l, 1));
        }
    }

    #[test]
    fn unit_norm_vectors() {
        let p = provider(2);
        let (q, d) = p.embed_pair(&toks(&["a", "b", "c"]), "x", &toks(&["d", "e"])).unwrap();
        for e in [&q, &d] {
            for l in 0..e.layers() {
                for i in 0..e.tokens() {
                    let n: f64 = e.vector(l, i).iter().map(|&v| (v as f64) * (v as f64)).sum();
                    assert!((libm::sqrt(n) - 1.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn empty_sequences_rejected() {
        let p = provider(2);
        assert_eq!(
            p.embed_pair(&[], "x", &toks(&["a"])),
            Err(EmbeddingError::EmptySequence("query"))
        );
        assert_eq!(
            p.embed_pair(&toks(&["a"]), "x", &[]),
            Err(EmbeddingError::EmptySequence("document"))
        );
    }

    #[test]
    fn shape_is_checked() {
        assert!(LayeredEmbeddings::new(2, 2, 2, vec![0.0; 7]).is_err());
        assert_eq!(
            LayeredEmbeddings::new(1, 1, 1, vec![f32::NAN]),
            Err(EmbeddingError::NonFinite)
        );
    }
}
