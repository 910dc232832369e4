//! Scoring head checkpoint.
//!
//! ```text
//! topirank-head 1
//! dim 143
//! T 5
//! L 12
//! ablate_interest false
//! kernel_bank -0.9:0.1 -0.7:0.1 … 1.0:0.001
//! weights <dim reals>
//! bias 0.0
//! corpus <path>                          (optional, as are the next lines)
//! model <path>
//! profiles <path>
//! provider synthetic <seed> <window> <dim>  |  provider cache <path>
//! ```
//!
//! The trailing lines record where the features came from, so `rank` and
//! `evaluate` can rebuild them without repeating every path.

use std::path::{Path, PathBuf};

use topirank_core::matching::KernelBank;
use topirank_core::ranker::{FeatureLayout, ScoringHead};

use super::{join_f64, read_text, write_with, KeyValueLines};
use crate::error::{Error, Result};

const MAGIC: &str = "topirank-head";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ProviderSource {
    Synthetic { seed: u64, window: usize, dim: usize },
    Cache(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub corpus: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub provider: Option<ProviderSource>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub head: ScoringHead,
    pub topics: usize,
    pub layers: usize,
    pub bank: KernelBank,
    /// The head was trained with the interest block zeroed.
    pub ablate_interest: bool,
    pub provenance: Provenance,
}

impl Checkpoint {
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            kernels: self.bank.len(),
            layers: self.layers,
        }
    }
}

pub fn write_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let bank: Vec<String> = ckpt
        .bank
        .mus()
        .iter()
        .zip(ckpt.bank.sigmas())
        .map(|(m, s)| format!("{m:?}:{s:?}"))
        .collect();
    let prov = &ckpt.provenance;
    write_with(path, |w| {
        writeln!(w, "{MAGIC} {VERSION}")?;
        writeln!(w, "dim {}", ckpt.head.dim())?;
        writeln!(w, "T {}", ckpt.topics)?;
        writeln!(w, "L {}", ckpt.layers)?;
        writeln!(w, "ablate_interest {}", ckpt.ablate_interest)?;
        writeln!(w, "kernel_bank {}", bank.join(" "))?;
        writeln!(w, "weights {}", join_f64(&ckpt.head.weights, " "))?;
        writeln!(w, "bias {:?}", ckpt.head.bias)?;
        for (key, p) in [("corpus", &prov.corpus), ("model", &prov.model), ("profiles", &prov.profiles)] {
            if let Some(p) = p {
                writeln!(w, "{key} {}", p.display())?;
            }
        }
        match &prov.provider {
            Some(ProviderSource::Synthetic { seed, window, dim }) => {
                writeln!(w, "provider synthetic {seed} {window} {dim}")?
            }
            Some(ProviderSource::Cache(p)) => writeln!(w, "provider cache {}", p.display())?,
            None => {}
        }
        Ok(())
    })
}

/// Reads a checkpoint; with `expected`, a layout mismatch is an error.
pub fn read_checkpoint(path: &Path, expected: Option<FeatureLayout>) -> Result<Checkpoint> {
    let text = read_text(path)?;
    let mut r = KeyValueLines::new(path, &text);
    let version: u32 = r.parsed(MAGIC)?;
    if version != VERSION {
        return Err(r.error(format!("unsupported checkpoint version {version}")));
    }
    let dim: usize = r.parsed("dim")?;
    let topics: usize = r.parsed("T")?;
    let layers: usize = r.parsed("L")?;
    let ablate_interest: bool = r.parsed("ablate_interest")?;
    let bank_line = r.value("kernel_bank")?;
    let mut mus = Vec::new();
    let mut sigmas = Vec::new();
    for k in bank_line.split_whitespace() {
        let (m, s) = k
            .split_once(':')
            .ok_or_else(|| r.error(format!("kernel {k:?} is not `mu:sigma`")))?;
        let v = r.floats(&format!("{m} {s}"))?;
        mus.push(v[0]);
        sigmas.push(v[1]);
    }
    let bank = KernelBank::new(mus, sigmas).map_err(|e| r.error(e.to_string()))?;
    let weights_line = r.value("weights")?;
    let weights = r.floats(weights_line)?;
    let bias_line = r.value("bias")?;
    let bias = *r
        .floats(bias_line)?
        .first()
        .ok_or_else(|| r.error("missing bias value"))?;
    let layout = FeatureLayout {
        kernels: bank.len(),
        layers,
    };
    if weights.len() != dim || layout.dim() != dim {
        return Err(r.error(format!(
            "dim {dim} disagrees with {} weights or Z(1+L) = {}",
            weights.len(),
            layout.dim()
        )));
    }
    let mut provenance = Provenance::default();
    while let Some(key) = r.peek_key() {
        if key.trim().is_empty() {
            r.next_line()?;
            continue;
        }
        let v = r.value(key)?;
        match key {
            "corpus" => provenance.corpus = Some(v.into()),
            "model" => provenance.model = Some(v.into()),
            "profiles" => provenance.profiles = Some(v.into()),
            "provider" => {
                let parts: Vec<&str> = v.splitn(2, ' ').collect();
                provenance.provider = Some(match parts.as_slice() {
                    ["cache", p] => ProviderSource::Cache(p.into()),
                    ["synthetic", rest] => {
                        let nums: Vec<&str> = rest.split_whitespace().collect();
                        match nums.as_slice() {
                            [s, w, d] => ProviderSource::Synthetic {
                                seed: s.parse().map_err(|_| r.error("invalid provider seed"))?,
                                window: w.parse().map_err(|_| r.error("invalid provider window"))?,
                                dim: d.parse().map_err(|_| r.error("invalid provider dim"))?,
                            },
                            _ => return Err(r.error("expected `provider synthetic <seed> <window> <dim>`")),
                        }
                    }
                    _ => return Err(r.error(format!("unknown provider {v:?}"))),
                });
            }
            other => return Err(r.error(format!("unknown key {other:?}"))),
        }
    }
    if let Some(exp) = expected {
        if exp != layout {
            return Err(Error::format(
                path,
                format!(
                    "checkpoint has dim {dim} (Z = {}, L = {layers}), pipeline expects dim {} (Z = {}, L = {})",
                    bank.len(),
                    exp.dim(),
                    exp.kernels,
                    exp.layers
                ),
            ));
        }
    }
    Ok(Checkpoint {
        head: ScoringHead { weights, bias },
        topics,
        layers,
        bank,
        ablate_interest,
        provenance,
    })
}
