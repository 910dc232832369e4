//! Binary embedding cache.
//!
//! Header: magic `EMBCACHE`, then version, L and dim as little-endian `u32`.
//! Each record: query hash (`u64`), doc_id length (`u32`) and UTF-8 bytes,
//! m and n (`u32`), then the query block (`L·m·dim` `f32`) and the document
//! block (`L·n·dim` `f32`), each layer-major then token-major. All integers
//! and floats are little-endian.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use topirank_core::embeddings::{query_hash, EmbeddingError, EmbeddingProvider, LayeredEmbeddings};

use super::write_with;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"EMBCACHE";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 8 + 3 * 4;

/// Bytes taken by one record.
pub fn record_len(doc_id: &str, m: usize, n: usize, layers: usize, dim: usize) -> usize {
    8 + 4 + doc_id.len() + 4 + 4 + (m + n) * layers * dim * 4
}

/// A (query, document) pair to embed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSpec {
    pub query: Vec<String>,
    pub doc_id: String,
    pub doc: Vec<String>,
}

fn put_f32s(w: &mut dyn Write, values: &[f32]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

/// Embeds every pair with `provider` and writes the cache. Pairs repeating an
/// earlier (query hash, doc_id) key are skipped. Returns the records written.
pub fn write_cache<P: EmbeddingProvider + ?Sized>(path: &Path, provider: &P, pairs: &[PairSpec]) -> Result<usize> {
    let (layers, dim) = (provider.layers(), provider.dim());
    let mut seen = std::collections::HashSet::new();
    let mut records = Vec::new();
    for p in pairs {
        let key = (query_hash(&p.query), p.doc_id.clone());
        if !seen.insert(key.clone()) {
            continue;
        }
        let (q, d) = provider.embed_pair(&p.query, &p.doc_id, &p.doc)?;
        for e in [&q, &d] {
            if e.layers() != layers || e.dim() != dim {
                return Err(EmbeddingError::LayerMismatch {
                    query: (q.layers(), q.dim()),
                    doc: (layers, dim),
                }
                .into());
            }
        }
        records.push((key, q, d));
    }
    let count = records.len();
    write_with(path, |w| {
        w.write_all(MAGIC)?;
        for v in [VERSION, layers as u32, dim as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for ((hash, doc_id), q, d) in &records {
            w.write_all(&hash.to_le_bytes())?;
            w.write_all(&(doc_id.len() as u32).to_le_bytes())?;
            w.write_all(doc_id.as_bytes())?;
            w.write_all(&(q.tokens() as u32).to_le_bytes())?;
            w.write_all(&(d.tokens() as u32).to_le_bytes())?;
            put_f32s(w, q.as_slice())?;
            put_f32s(w, d.as_slice())?;
        }
        Ok(())
    })?;
    Ok(count)
}

struct Reader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                self.path,
                format!("truncated at byte {} (needed {n} more)", self.pos),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::format(self.path, "record too large"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

/// Provider serving the pairs stored in a cache file.
#[derive(Debug, Clone)]
pub struct CachedProvider {
    layers: usize,
    dim: usize,
    entries: HashMap<(u64, String), (LayeredEmbeddings, LayeredEmbeddings)>,
}

impl CachedProvider {
    pub fn open(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(path, &bytes)
    }

    pub fn from_bytes(path: &Path, bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { path, bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::format(path, "not an embedding cache (bad magic)"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported cache version {version}")));
        }
        let layers = r.u32()? as usize;
        let dim = r.u32()? as usize;
        if layers == 0 || dim == 0 {
            return Err(Error::format(path, "layer count and dim must be positive"));
        }
        let mut entries = HashMap::new();
        while r.pos < bytes.len() {
            let hash = r.u64()?;
            let len = r.u32()? as usize;
            let doc_id = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format(path, "doc_id is not UTF-8"))?
                .to_string();
            let m = r.u32()? as usize;
            let n = r.u32()? as usize;
            let q = LayeredEmbeddings::new(layers, m, dim, r.f32s(layers * m * dim)?)?;
            let d = LayeredEmbeddings::new(layers, n, dim, r.f32s(layers * n * dim)?)?;
            entries.insert((hash, doc_id), (q, d));
        }
        Ok(Self { layers, dim, entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl EmbeddingProvider for CachedProvider {
    fn layers(&self) -> usize {
        self.layers
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_pair(
        &self,
        query: &[String],
        doc_id: &str,
        doc: &[String],
    ) -> std::result::Result<(LayeredEmbeddings, LayeredEmbeddings), EmbeddingError> {
        if query.is_empty() {
            return Err(EmbeddingError::EmptySequence("query"));
        }
        if doc.is_empty() {
            return Err(EmbeddingError::EmptySequence("document"));
        }
        let key = (query_hash(query), doc_id.to_string());
        self.entries.get(&key).cloned().ok_or(EmbeddingError::CacheMiss {
            query_hash: key.0,
            doc_id: key.1,
        })
    }
}
