//! User topical profiles: the mean topic distribution of a user's clicked
//! history documents, and their 2-D principal-component projection.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::corpus::SplitCorpus;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("doc_id {0:?} has no topic distribution")]
    MissingDocument(String),
    #[error("topic vector of {doc_id:?} has {found} entries, expected {expected}")]
    DimensionMismatch {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    #[error("a profile needs at least one topic")]
    NoTopics,
    #[error("projection needs at least 2 profiles with at least 2 topics")]
    TooFewProfiles,
}

/// How repeated clicks on one document count toward the average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ClickWeighting {
    /// Each distinct document counts once.
    #[default]
    Set,
    /// Each click counts.
    Multiset,
}

/// Documents a user clicked during the history window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickHistory {
    pub user_id: String,
    pub docs: Vec<String>,
}

impl ClickHistory {
    pub fn from_split(corpus: &SplitCorpus, user_id: &str) -> Self {
        Self {
            user_id: user_id.into(),
            docs: corpus.history_clicks(user_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub user_id: String,
    pub weights: Vec<f64>,
    /// No history clicks; `weights` is uniform.
    pub cold_start: bool,
}

impl UserProfile {
    pub fn uniform(user_id: impl Into<String>, topics: usize) -> Self {
        Self {
            user_id: user_id.into(),
            weights: vec![1.0 / topics as f64; topics],
            cold_start: true,
        }
    }
}

/// Averages the topic vectors of `history.docs`.
///
/// Documents are accumulated in sorted id order so the result does not depend
/// on click order.
pub fn build_profile<'a, F>(
    history: &ClickHistory,
    topics: usize,
    weighting: ClickWeighting,
    lookup: F,
) -> Result<UserProfile, ProfileError>
where
    F: Fn(&str) -> Option<&'a [f64]>,
{
    if topics == 0 {
        return Err(ProfileError::NoTopics);
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &history.docs {
        *counts.entry(d.as_str()).or_default() += 1;
    }
    if counts.is_empty() {
        return Ok(UserProfile::uniform(history.user_id.clone(), topics));
    }
    let mut sum = vec![0.0f64; topics];
    let mut n = 0usize;
    for (doc_id, count) in counts {
        let td = lookup(doc_id).ok_or_else(|| ProfileError::MissingDocument(doc_id.into()))?;
        if td.len() != topics {
            return Err(ProfileError::DimensionMismatch {
                doc_id: doc_id.into(),
                expected: topics,
                found: td.len(),
            });
        }
        let w = match weighting {
            ClickWeighting::Set => 1,
            ClickWeighting::Multiset => count,
        };
        for (s, &t) in sum.iter_mut().zip(td) {
            *s += w as f64 * t;
        }
        n += w;
    }
    for s in &mut sum {
        *s /= n as f64;
    }
    Ok(UserProfile {
        user_id: history.user_id.clone(),
        weights: sum,
        cold_start: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub user_id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub points: Vec<ScatterPoint>,
    /// Variance along the two components.
    pub variance: [f64; 2],
    /// All profiles were identical; every coordinate is zero.
    pub degenerate: bool,
}

/// Projects profiles onto their top two principal components.
///
/// Each component's sign is chosen so its largest-magnitude loading is
/// positive.
pub fn profile_scatter(profiles: &[UserProfile]) -> Result<Scatter, ProfileError> {
    let n = profiles.len();
    let t = profiles.first().map_or(0, |p| p.weights.len());
    if n < 2 || t < 2 {
        return Err(ProfileError::TooFewProfiles);
    }
    if let Some(p) = profiles.iter().find(|p| p.weights.len() != t) {
        return Err(ProfileError::DimensionMismatch {
            doc_id: p.user_id.clone(),
            expected: t,
            found: p.weights.len(),
        });
    }
    let mut mean = vec![0.0; t];
    for p in profiles {
        for (m, &w) in mean.iter_mut().zip(&p.weights) {
            *m += w;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, t, |i, j| profiles[i].weights[j] - mean[j]);
    let zero = |degenerate| Scatter {
        points: profiles
            .iter()
            .map(|p| ScatterPoint {
                user_id: p.user_id.clone(),
                x: 0.0,
                y: 0.0,
            })
            .collect(),
        variance: [0.0, 0.0],
        degenerate,
    };
    if centered.iter().all(|&v| v == 0.0) {
        return Ok(zero(true));
    }
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut axes = [vec![0.0; t], vec![0.0; t]];
    for (axis, &col) in axes.iter_mut().zip(&order) {
        for j in 0..t {
            axis[j] = eig.eigenvectors[(j, col)];
        }
        let lead = axis
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if libm::fabs(v) > libm::fabs(best) { v } else { best });
        if lead < 0.0 {
            for v in axis.iter_mut() {
                *v = -*v;
            }
        }
    }
    let project = |i: usize, axis: &[f64]| (0..t).map(|j| centered[(i, j)] * axis[j]).sum::<f64>();
    Ok(Scatter {
        points: profiles
            .iter()
            .enumerate()
            .map(|(i, p)| ScatterPoint {
                user_id: p.user_id.clone(),
                x: project(i, &axes[0]),
                y: project(i, &axes[1]),
            })
            .collect(),
        variance: [
            libm::fmax(eig.eigenvalues[order[0]], 0.0),
            libm::fmax(eig.eigenvalues[order[1]], 0.0),
        ],
        degenerate: false,
    })
}
