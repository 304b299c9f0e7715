//! Word-level drift scores from nearest-neighbor overlap between the review
//! and description embedding spaces, and evaluation against annotated drift
//! words.
//!
//! A word w is scored `S(w) = ln(min(f_r, f_d)) · (1 − J(N_r, N_d))^p` where
//! `f_*` are its frequencies in the balanced (mixed) corpus and `N_*` its k
//! nearest neighbors in each space.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::embed::{EmbedError, EmbeddingSpace};
use crate::textprep::VocabStats;
use crate::FxSet;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DriftError {
    #[error("Jaccard coefficient of two empty sets is undefined")]
    EmptySets,
    #[error("'{0}' has zero frequency in the balanced corpus")]
    ZeroFrequency(String),
    #[error("the two embedding spaces share no vocabulary")]
    NoSharedVocabulary,
    #[error("ground-truth words missing from the ranking: {}", .0.join(", "))]
    MissingGroundTruth(Vec<String>),
    #[error("no ground-truth words given")]
    EmptyGroundTruth,
    #[error("invalid drift parameter: {0}")]
    InvalidParams(&'static str),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DriftParams {
    /// Neighbors compared per word.
    pub k: usize,
    /// Exponent applied to (1 − Jaccard).
    pub p: u32,
}

impl Default for DriftParams {
    fn default() -> Self {
        DriftParams { k: 30, p: 5 }
    }
}

impl DriftParams {
    pub fn validate(&self) -> Result<(), DriftError> {
        if self.k == 0 {
            return Err(DriftError::InvalidParams("k must be at least 1"));
        }
        if self.p == 0 {
            return Err(DriftError::InvalidParams("p must be at least 1"));
        }
        Ok(())
    }
}

/// |a ∩ b| / |a ∪ b| over distinct elements.
pub fn jaccard<A, B>(a: &[A], b: &[B]) -> Result<f64, DriftError>
where
    A: AsRef<str>,
    B: AsRef<str>,
{
    let sa: FxSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let sb: FxSet<&str> = b.iter().map(AsRef::as_ref).collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return Err(DriftError::EmptySets);
    }
    Ok(sa.intersection(&sb).count() as f64 / union as f64)
}

/// S from the two frequencies and an already computed Jaccard coefficient.
pub fn score_from_jaccard(f_r: u64, f_d: u64, jaccard: f64, p: u32) -> f64 {
    let f = f_r.min(f_d) as f64;
    libm::log(f) * libm::pow(1.0 - jaccard, f64::from(p))
}

pub fn score_word<A, B>(
    word: &str,
    f_r: u64,
    f_d: u64,
    nbrs_r: &[A],
    nbrs_d: &[B],
    params: &DriftParams,
) -> Result<f64, DriftError>
where
    A: AsRef<str>,
    B: AsRef<str>,
{
    if f_r == 0 || f_d == 0 {
        return Err(DriftError::ZeroFrequency(word.into()));
    }
    let j = jaccard(nbrs_r, nbrs_d)?;
    Ok(score_from_jaccard(f_r, f_d, j, params.p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftRecord {
    pub word: String,
    pub f_r: u64,
    pub f_d: u64,
    pub nbrs_r: Vec<String>,
    pub nbrs_d: Vec<String>,
    pub jaccard: f64,
    pub score: f64,
    /// 1-based position in the ranking.
    pub rank: usize,
}

impl DriftRecord {
    pub fn min_frequency(&self) -> u64 {
        self.f_r.min(self.f_d)
    }
}

/// Descending score, then higher min frequency, then word.
pub fn ranking_order(a: &DriftRecord, b: &DriftRecord) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| b.min_frequency().cmp(&a.min_frequency()))
        .then_with(|| a.word.cmp(&b.word))
}

/// Sorts records into ranking order and assigns ranks.
pub fn assign_ranks(records: &mut [DriftRecord]) {
    records.sort_by(ranking_order);
    for (i, r) in records.iter_mut().enumerate() {
        r.rank = i + 1;
    }
}

/// Scores every word present in both embedding spaces. Words that never
/// occur on one side of the balanced corpus cannot be scored and are left
/// out.
pub fn rank_words(
    space_r: &EmbeddingSpace,
    space_d: &EmbeddingSpace,
    balanced: &VocabStats,
    params: &DriftParams,
) -> Result<Vec<DriftRecord>, DriftError> {
    params.validate()?;
    let shared: Vec<&str> = space_r
        .vocab()
        .words()
        .iter()
        .map(String::as_str)
        .filter(|w| space_d.contains(w))
        .collect();
    if shared.is_empty() {
        return Err(DriftError::NoSharedVocabulary);
    }
    let mut records = Vec::with_capacity(shared.len());
    for word in shared {
        let counts = balanced.counts(word);
        if counts.reviews == 0 || counts.descriptions == 0 {
            continue;
        }
        let nbrs_r: Vec<String> = space_r.nearest_neighbors(word, params.k)?.into_iter().map(|n| n.word).collect();
        let nbrs_d: Vec<String> = space_d.nearest_neighbors(word, params.k)?.into_iter().map(|n| n.word).collect();
        let j = jaccard(&nbrs_r, &nbrs_d)?;
        records.push(DriftRecord {
            word: word.into(),
            f_r: counts.reviews,
            f_d: counts.descriptions,
            score: score_from_jaccard(counts.reviews, counts.descriptions, j, params.p),
            jaccard: j,
            nbrs_r,
            nbrs_d,
            rank: 0,
        });
    }
    if records.is_empty() {
        return Err(DriftError::NoSharedVocabulary);
    }
    assign_ranks(&mut records);
    Ok(records)
}

/// Aggregates over the shortest ranking prefix containing every
/// ground-truth word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrefixAverage {
    /// Mean S over the prefix.
    pub mean_score: f64,
    /// Mean Jaccard coefficient over the prefix.
    pub mean_jaccard: f64,
    pub prefix_len: usize,
    pub m: usize,
}

/// Averages over the minimal prefix of `ranked` that retrieves the first `m`
/// ground-truth words.
pub fn avg_score_at_gt<S: AsRef<str>>(
    ranked: &[DriftRecord],
    ground_truth: &[S],
    m: usize,
) -> Result<PrefixAverage, DriftError> {
    let wanted: Vec<&str> = ground_truth.iter().map(AsRef::as_ref).take(m).collect();
    if wanted.is_empty() {
        return Err(DriftError::EmptyGroundTruth);
    }
    let positions: BTreeMap<&str, usize> = ranked.iter().enumerate().map(|(i, r)| (r.word.as_str(), i)).collect();
    let missing: Vec<String> = wanted
        .iter()
        .filter(|w| !positions.contains_key(*w))
        .map(|w| String::from(*w))
        .collect();
    if !missing.is_empty() {
        return Err(DriftError::MissingGroundTruth(missing));
    }
    let prefix_len = wanted.iter().map(|w| positions[w] + 1).max().unwrap_or(0);
    let prefix = &ranked[..prefix_len];
    let n = prefix_len as f64;
    Ok(PrefixAverage {
        mean_score: prefix.iter().map(|r| r.score).sum::<f64>() / n,
        mean_jaccard: prefix.iter().map(|r| r.jaccard).sum::<f64>() / n,
        prefix_len,
        m: wanted.len(),
    })
}

/// Probability that a random planted word outscores a random unplanted one
/// (ties count half). `None` when either class is empty.
pub fn retrieval_auc<S: AsRef<str>>(ranked: &[DriftRecord], planted: &[S]) -> Option<f64> {
    let planted: FxSet<&str> = planted.iter().map(AsRef::as_ref).collect();
    let (mut pos, mut neg): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for r in ranked {
        if planted.contains(r.word.as_str()) {
            pos.push(r.score);
        } else {
            neg.push(r.score);
        }
    }
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    // Rank-sum form of the Mann-Whitney statistic.
    let mut all: Vec<(f64, bool)> = pos.iter().map(|&s| (s, true)).chain(neg.iter().map(|&s| (s, false))).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j + 1 < all.len() && all[j + 1].0 == all[i].0 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * all[i..=j].iter().filter(|e| e.1).count() as f64;
        i = j + 1;
    }
    let np = pos.len() as f64;
    let nn = neg.len() as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * nn))
}

/// How many of `words` sit within the first `fraction` of the ranking.
pub fn hits_in_top_fraction<S: AsRef<str>>(ranked: &[DriftRecord], words: &[S], fraction: f64) -> usize {
    let cutoff = libm::ceil(ranked.len() as f64 * fraction) as usize;
    let top: FxSet<&str> = ranked.iter().take(cutoff).map(|r| r.word.as_str()).collect();
    words.iter().filter(|w| top.contains(w.as_ref())).count()
}
