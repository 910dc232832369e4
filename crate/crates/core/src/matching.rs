//! Gaussian kernel pooling.
//!
//! Two feature paths share one [`KernelBank`]:
//!
//! * interest: the cosine between a user profile and a document's topic
//!   distribution, passed through every kernel, then log-ed (`Z` values);
//! * semantic: per layer, the query×document cosine translation matrix is
//!   pooled row-wise (sum over document tokens), log-ed, and summed over query
//!   tokens; layers are concatenated shallow to deep (`L·Z` values).
//!
//! Every logarithm is floored at [`LOG_FLOOR`] so kernels far from all
//! similarity values contribute `ln 1e-10` instead of `-inf`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::embeddings::LayeredEmbeddings;

pub const LOG_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("kernel bank needs at least one kernel with equal mu/sigma lengths and positive sigmas")]
    InvalidBank,
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("query has {query} layers of width {query_dim}, document has {doc} of width {doc_dim}")]
    LayerMismatch {
        query: usize,
        doc: usize,
        query_dim: usize,
        doc_dim: usize,
    },
    #[error("empty token sequence")]
    EmptySequence,
    #[error("output buffer has {found} slots, expected {expected}")]
    OutputLength { expected: usize, found: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    // 1 / (2 sigma^2)
    inv_two_var: Vec<f64>,
}

impl KernelBank {
    pub fn new(mus: Vec<f64>, sigmas: Vec<f64>) -> Result<Self, MatchError> {
        if mus.is_empty()
            || mus.len() != sigmas.len()
            || sigmas.iter().any(|&s| !(s > 0.0) || !s.is_finite())
            || mus.iter().any(|m| !m.is_finite())
        {
            return Err(MatchError::InvalidBank);
        }
        let inv_two_var = sigmas.iter().map(|s| 1.0 / (2.0 * s * s)).collect();
        Ok(Self {
            mus,
            sigmas,
            inv_two_var,
        })
    }

    pub fn len(&self) -> usize {
        self.mus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mus.is_empty()
    }

    pub fn mus(&self) -> &[f64] {
        &self.mus
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// exp(-(x - mu_z)^2 / (2 sigma_z^2))
    #[inline]
    pub fn kernel(&self, z: usize, x: f64) -> f64 {
        let d = x - self.mus[z];
        libm::exp(-d * d * self.inv_two_var[z])
    }
}

impl Default for KernelBank {
    /// Ten soft kernels at -0.9, -0.7, …, 0.9 with sigma 0.1 and an
    /// exact-match kernel at 1.0 with sigma 1e-3.
    fn default() -> Self {
        let mut mus: Vec<f64> = (0..10).map(|i| -0.9 + 0.2 * i as f64).collect();
        // keep the centers at their shortest decimal values
        for m in &mut mus {
            *m = libm::round(*m * 10.0) / 10.0;
        }
        mus.push(1.0);
        let mut sigmas = vec![0.1; 10];
        sigmas.push(1e-3);
        Self::new(mus, sigmas).expect("default kernel bank is valid")
    }
}

#[inline]
fn floored_ln(x: f64) -> f64 {
    libm::log(if x > LOG_FLOOR { x } else { LOG_FLOOR })
}

/// Cosine similarity; 0 when either vector is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let c = dot / (libm::sqrt(na) * libm::sqrt(nb));
    c.clamp(-1.0, 1.0)
}

/// User–document interest features.
#[derive(Debug, Clone, PartialEq)]
pub struct InterestFeatures {
    pub theta: Vec<f64>,
    /// cos(p_u, t_d)
    pub similarity: f64,
    /// One of the vectors was all zeros.
    pub degenerate: bool,
}

/// Writes the interest features into `out` and returns the cosine.
pub fn interest_features_into(
    profile: &[f64],
    topics: &[f64],
    bank: &KernelBank,
    out: &mut [f64],
) -> Result<f64, MatchError> {
    if profile.len() != topics.len() {
        return Err(MatchError::LengthMismatch(profile.len(), topics.len()));
    }
    if out.len() != bank.len() {
        return Err(MatchError::OutputLength {
            expected: bank.len(),
            found: out.len(),
        });
    }
    let m = cosine(profile, topics);
    for (z, o) in out.iter_mut().enumerate() {
        *o = floored_ln(bank.kernel(z, m));
    }
    Ok(m)
}

pub fn interest_features(profile: &[f64], topics: &[f64], bank: &KernelBank) -> Result<InterestFeatures, MatchError> {
    let mut theta = vec![0.0; bank.len()];
    let similarity = interest_features_into(profile, topics, bank, &mut theta)?;
    let zero = |v: &[f64]| v.iter().all(|&x| x == 0.0);
    Ok(InterestFeatures {
        theta,
        similarity,
        degenerate: zero(profile) || zero(topics),
    })
}

/// Cosine similarities between the rows of two token matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct TranslationMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl TranslationMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
}

/// Normalizes `rows` vectors of width `dim` from `src` into `dst`; zero
/// vectors stay zero. Returns the number of zero vectors.
fn normalize_rows(src: &[f32], dim: usize, dst: &mut Vec<f64>) -> usize {
    dst.clear();
    dst.extend(src.iter().map(|&v| v as f64));
    let mut zeros = 0;
    for row in dst.chunks_exact_mut(dim) {
        let norm = libm::sqrt(row.iter().map(|x| x * x).sum::<f64>());
        if norm > 0.0 {
            for x in row.iter_mut() {
                *x /= norm;
            }
        } else {
            zeros += 1;
        }
    }
    zeros
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Translation matrix of one layer: `query` is `m × dim`, `doc` is `n × dim`,
/// both row-major.
pub fn translation_matrix(query: &[f32], doc: &[f32], dim: usize) -> Result<TranslationMatrix, MatchError> {
    if dim == 0 || query.len() % dim != 0 || doc.len() % dim != 0 {
        return Err(MatchError::LengthMismatch(query.len(), doc.len()));
    }
    let mut qn = Vec::new();
    let mut dn = Vec::new();
    normalize_rows(query, dim, &mut qn);
    normalize_rows(doc, dim, &mut dn);
    let (rows, cols) = (query.len() / dim, doc.len() / dim);
    let mut values = Vec::with_capacity(rows * cols);
    for q in qn.chunks_exact(dim) {
        for d in dn.chunks_exact(dim) {
            values.push(dot(q, d).clamp(-1.0, 1.0));
        }
    }
    Ok(TranslationMatrix { rows, cols, values })
}

/// Query–document semantic features, `layers × kernels` values layer-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SemanticFeatures {
    pub phi: Vec<f64>,
    pub layers: usize,
    /// Token vectors that were all zeros (treated as cosine 0).
    pub zero_vectors: usize,
}

impl SemanticFeatures {
    pub fn layer(&self, l: usize) -> &[f64] {
        let z = self.phi.len() / self.layers;
        &self.phi[l * z..(l + 1) * z]
    }
}

/// Reusable buffers for the semantic path, so repeated pairs do not allocate.
#[derive(Debug, Clone, Default)]
pub struct SemanticScratch {
    query: Vec<f64>,
    doc: Vec<f64>,
    row: Vec<f64>,
}

fn check_pair(q: &LayeredEmbeddings, d: &LayeredEmbeddings) -> Result<(), MatchError> {
    if q.layers() != d.layers() || q.dim() != d.dim() {
        return Err(MatchError::LayerMismatch {
            query: q.layers(),
            doc: d.layers(),
            query_dim: q.dim(),
            doc_dim: d.dim(),
        });
    }
    if q.tokens() == 0 || d.tokens() == 0 {
        return Err(MatchError::EmptySequence);
    }
    Ok(())
}

impl SemanticScratch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Writes φ for `(q, d)` into `out` (length `L·Z`). Returns the number of
    /// zero token vectors encountered.
    pub fn features_into(
        &mut self,
        q: &LayeredEmbeddings,
        d: &LayeredEmbeddings,
        bank: &KernelBank,
        out: &mut [f64],
    ) -> Result<usize, MatchError> {
        check_pair(q, d)?;
        let z_len = bank.len();
        let expected = q.layers() * z_len;
        if out.len() != expected {
            return Err(MatchError::OutputLength {
                expected,
                found: out.len(),
            });
        }
        let dim = q.dim();
        let mut zeros = 0;
        self.row.resize(z_len, 0.0);
        for l in 0..q.layers() {
            zeros += normalize_rows(q.layer(l), dim, &mut self.query);
            zeros += normalize_rows(d.layer(l), dim, &mut self.doc);
            let phi = &mut out[l * z_len..(l + 1) * z_len];
            phi.fill(0.0);
            for qv in self.query.chunks_exact(dim) {
                self.row.fill(0.0);
                for dv in self.doc.chunks_exact(dim) {
                    let m = dot(qv, dv).clamp(-1.0, 1.0);
                    for (z, r) in self.row.iter_mut().enumerate() {
                        *r += bank.kernel(z, m);
                    }
                }
                for (p, &r) in phi.iter_mut().zip(&self.row) {
                    *p += floored_ln(r);
                }
            }
        }
        Ok(zeros)
    }

    /// Raw kernel mass per layer: Σ_i Σ_j K_z(M_ij), `L × Z` layer-major.
    pub fn activations(
        &mut self,
        q: &LayeredEmbeddings,
        d: &LayeredEmbeddings,
        bank: &KernelBank,
    ) -> Result<Vec<f64>, MatchError> {
        check_pair(q, d)?;
        let z_len = bank.len();
        let dim = q.dim();
        let mut out = vec![0.0; q.layers() * z_len];
        for l in 0..q.layers() {
            normalize_rows(q.layer(l), dim, &mut self.query);
            normalize_rows(d.layer(l), dim, &mut self.doc);
            let acc = &mut out[l * z_len..(l + 1) * z_len];
            for qv in self.query.chunks_exact(dim) {
                for dv in self.doc.chunks_exact(dim) {
                    let m = dot(qv, dv).clamp(-1.0, 1.0);
                    for (z, a) in acc.iter_mut().enumerate() {
                        *a += bank.kernel(z, m);
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn semantic_features(
    q: &LayeredEmbeddings,
    d: &LayeredEmbeddings,
    bank: &KernelBank,
) -> Result<SemanticFeatures, MatchError> {
    let mut phi = vec![0.0; q.layers() * bank.len()];
    let zero_vectors = SemanticScratch::new().features_into(q, d, bank, &mut phi)?;
    Ok(SemanticFeatures {
        phi,
        layers: q.layers(),
        zero_vectors,
    })
}
