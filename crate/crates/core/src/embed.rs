//! CBOW word embeddings with negative sampling, and cosine nearest-neighbor
//! queries over the trained input vectors.
//!
//! Training follows the reference word2vec recipe: per-position random
//! window shrinking, context vectors averaged, unigram^0.75 noise
//! distribution, frequent-word subsampling and a linearly decaying learning
//! rate. Single-threaded training is bitwise deterministic for a seed.

use alloc::string::String;
use alloc::vec::Vec;
use core::cell::Cell;
use core::sync::atomic::{AtomicU32, Ordering as AtomicOrdering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::FxMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("no word reaches min_count {0}")]
    EmptyVocabulary(u64),
    #[error("invalid training parameter: {0}")]
    InvalidParams(&'static str),
    #[error("'{0}' is not in the vocabulary")]
    OutOfVocabulary(String),
    #[error("k = {k} but only {available} other words exist")]
    KTooLarge { k: usize, available: usize },
    #[error("vector data does not match vocabulary size and dimension")]
    ShapeMismatch,
    #[error("'{0}' appears twice in the vocabulary")]
    DuplicateWord(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainParams {
    pub dim: usize,
    /// Maximum context half-width.
    pub window: usize,
    pub epochs: usize,
    pub min_count: u64,
    /// Noise words per target.
    pub negative: usize,
    /// Subsampling threshold; 0 disables subsampling.
    pub subsample_threshold: f64,
    pub lr_start: f32,
    pub lr_end: f32,
    pub seed: u64,
}

impl TrainParams {
    /// Review-corpus defaults: 200 dimensions, 5 epochs, min_count 50.
    pub fn reviews() -> Self {
        TrainParams {
            dim: 200,
            window: 5,
            epochs: 5,
            min_count: 50,
            negative: 5,
            subsample_threshold: 1e-3,
            lr_start: 0.025,
            lr_end: 0.0001,
            seed: 1,
        }
    }

    /// Description-corpus defaults: 50 dimensions, 10 epochs, min_count 10.
    pub fn descriptions() -> Self {
        TrainParams {
            dim: 50,
            epochs: 10,
            min_count: 10,
            ..Self::reviews()
        }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::InvalidParams("dim must be at least 1"));
        }
        if self.window == 0 {
            return Err(EmbedError::InvalidParams("window must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(EmbedError::InvalidParams("epochs must be at least 1"));
        }
        if !(self.lr_start > self.lr_end && self.lr_end > 0.0) {
            return Err(EmbedError::InvalidParams("need lr_start > lr_end > 0"));
        }
        if self.subsample_threshold < 0.0 {
            return Err(EmbedError::InvalidParams("subsample_threshold must be non-negative"));
        }
        Ok(())
    }
}

impl Default for TrainParams {
    fn default() -> Self {
        Self::reviews()
    }
}

/// Words sorted by descending frequency (ties lexicographic), with counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocab {
    words: Vec<String>,
    counts: Vec<u64>,
    index: FxMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from (word, count) pairs, keeping counts ≥ `min_count`.
    pub fn from_counts<I, S>(counts: I, min_count: u64) -> Self
    where
        I: IntoIterator<Item = (S, u64)>,
        S: Into<String>,
    {
        let mut entries: Vec<(String, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_count && *c > 0)
            .map(|(w, c)| (w.into(), c))
            .collect();
        entries.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let (words, counts) = entries.into_iter().unzip();
        Vocab { words, counts, index }
    }

    /// Rebuilds a vocabulary from entries already in vocabulary order.
    pub fn from_ordered(entries: Vec<(String, u64)>) -> Result<Self, EmbedError> {
        let mut index = FxMap::default();
        for (i, (w, _)) in entries.iter().enumerate() {
            if index.insert(w.clone(), i as u32).is_some() {
                return Err(EmbedError::DuplicateWord(w.clone()));
            }
        }
        let (words, counts) = entries.into_iter().unzip();
        Ok(Vocab { words, counts, index })
    }

    pub fn count_corpus<T, S>(sentences: &[T], min_count: u64) -> Self
    where
        T: AsRef<[S]>,
        S: AsRef<str>,
    {
        let mut counts: FxMap<&str, u64> = FxMap::default();
        for sentence in sentences {
            for token in sentence.as_ref() {
                *counts.entry(token.as_ref()).or_default() += 1;
            }
        }
        Self::from_counts(counts, min_count)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).map(|&i| i as usize)
    }

    pub fn word(&self, index: usize) -> &str {
        &self.words[index]
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts[index]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Diagnostics collected while training.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    /// Mean negative-sampling log-loss per trained target, one per epoch.
    pub epoch_losses: Vec<f64>,
    /// In-vocabulary tokens in the training corpus.
    pub corpus_tokens: u64,
    /// Set when the corpus has fewer than ten tokens per dimension.
    pub undersized: bool,
}

/// Trained word vectors with their vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    vocab: Vocab,
    dim: usize,
    vectors: Vec<f32>,
    norms: Vec<f32>,
    pub params: Option<TrainParams>,
    pub report: TrainReport,
}

/// One neighbor of a query word.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub word: String,
    pub similarity: f64,
}

fn l2(v: &[f32]) -> f32 {
    libm::sqrtf(v.iter().map(|x| x * x).sum())
}

impl EmbeddingSpace {
    pub fn from_parts(vocab: Vocab, dim: usize, vectors: Vec<f32>) -> Result<Self, EmbedError> {
        if dim == 0 || vectors.len() != vocab.len() * dim {
            return Err(EmbedError::ShapeMismatch);
        }
        let norms = vectors.chunks_exact(dim).map(l2).collect();
        Ok(EmbeddingSpace {
            vocab,
            dim,
            vectors,
            norms,
            params: None,
            report: TrainReport::default(),
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.index_of(word).is_some()
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row(&self, index: usize) -> &[f32] {
        &self.vectors[index * self.dim..(index + 1) * self.dim]
    }

    pub fn vector(&self, word: &str) -> Option<&[f32]> {
        self.vocab.index_of(word).map(|i| self.row(i))
    }

    fn cosine_rows(&self, a: usize, b: usize) -> f64 {
        let denom = f64::from(self.norms[a]) * f64::from(self.norms[b]);
        if denom == 0.0 {
            return 0.0;
        }
        let dot: f64 = self
            .row(a)
            .iter()
            .zip(self.row(b))
            .map(|(x, y)| f64::from(*x) * f64::from(*y))
            .sum();
        dot / denom
    }

    pub fn cosine(&self, a: &str, b: &str) -> Result<f64, EmbedError> {
        let ia = self.lookup(a)?;
        let ib = self.lookup(b)?;
        Ok(self.cosine_rows(ia, ib))
    }

    fn lookup(&self, word: &str) -> Result<usize, EmbedError> {
        self.vocab
            .index_of(word)
            .ok_or_else(|| EmbedError::OutOfVocabulary(word.into()))
    }

    /// The `k` words with the highest cosine similarity to `word`, excluding
    /// `word` itself. Ties go to the more frequent word, then the
    /// lexicographically smaller one.
    pub fn nearest_neighbors(&self, word: &str, k: usize) -> Result<Vec<Neighbor>, EmbedError> {
        let query = self.lookup(word)?;
        let available = self.len() - 1;
        if k > available {
            return Err(EmbedError::KTooLarge { k, available });
        }
        let mut scored: Vec<(f64, usize)> = (0..self.len())
            .filter(|&i| i != query)
            .map(|i| (self.cosine_rows(query, i), i))
            .collect();
        // Vocabulary order already encodes (frequency desc, word asc).
        let order = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
        if k < scored.len() && k > 0 {
            scored.select_nth_unstable_by(k - 1, order);
            scored.truncate(k);
        } else {
            scored.truncate(k);
        }
        scored.sort_unstable_by(order);
        Ok(scored
            .into_iter()
            .map(|(similarity, i)| Neighbor {
                word: self.vocab.word(i).into(),
                similarity,
            })
            .collect())
    }

    /// Applies `f` to every vector component (e.g. uniform rescaling).
    pub fn map_vectors(&self, f: impl Fn(f32) -> f32) -> Self {
        let vectors = self.vectors.iter().map(|&x| f(x)).collect();
        let mut out = EmbeddingSpace::from_parts(self.vocab.clone(), self.dim, vectors)
            .expect("same shape");
        out.params = self.params;
        out.report = self.report.clone();
        out
    }
}

/// Shared parameter storage for the training kernel. `Cell` storage serves
/// the deterministic single-threaded path; relaxed atomics allow racy
/// lock-free updates from several threads.
pub trait Store {
    fn load(&self, i: usize) -> f32;
    fn store(&self, i: usize, v: f32);
}

impl Store for [Cell<f32>] {
    #[inline(always)]
    fn load(&self, i: usize) -> f32 {
        self[i].get()
    }
    #[inline(always)]
    fn store(&self, i: usize, v: f32) {
        self[i].set(v)
    }
}

impl Store for [AtomicU32] {
    #[inline(always)]
    fn load(&self, i: usize) -> f32 {
        f32::from_bits(self[i].load(AtomicOrdering::Relaxed))
    }
    #[inline(always)]
    fn store(&self, i: usize, v: f32) {
        self[i].store(v.to_bits(), AtomicOrdering::Relaxed)
    }
}

/// Loss and target counts accumulated over a stretch of training.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ShardStats {
    pub loss: f64,
    pub targets: u64,
    pub words: u64,
}

impl ShardStats {
    pub fn merge(&mut self, other: ShardStats) {
        self.loss += other.loss;
        self.targets += other.targets;
        self.words += other.words;
    }
}

/// A corpus encoded against its vocabulary, with everything the kernel
/// needs precomputed.
#[derive(Debug, Clone)]
pub struct CbowTrainer {
    pub params: TrainParams,
    vocab: Vocab,
    tokens: Vec<u32>,
    offsets: Vec<usize>,
    keep_prob: Vec<f32>,
    noise: Option<WeightedIndex<f64>>,
}

#[inline(always)]
fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + libm::expf(-x))
}

#[inline(always)]
fn log_sigmoid(x: f32) -> f64 {
    // log σ(x) = -log(1 + e^{-x}), stable for large |x|.
    let x = f64::from(x);
    if x >= 0.0 {
        -libm::log1p(libm::exp(-x))
    } else {
        x - libm::log1p(libm::exp(x))
    }
}

impl CbowTrainer {
    pub fn new<T, S>(sentences: &[T], params: TrainParams) -> Result<Self, EmbedError>
    where
        T: AsRef<[S]>,
        S: AsRef<str>,
    {
        params.validate()?;
        let vocab = Vocab::count_corpus(sentences, params.min_count);
        if vocab.is_empty() {
            return Err(EmbedError::EmptyVocabulary(params.min_count));
        }
        let mut tokens = Vec::new();
        let mut offsets = alloc::vec![0usize];
        for sentence in sentences {
            tokens.extend(
                sentence
                    .as_ref()
                    .iter()
                    .filter_map(|t| vocab.index_of(t.as_ref()).map(|i| i as u32)),
            );
            if tokens.len() > *offsets.last().unwrap() {
                offsets.push(tokens.len());
            }
        }
        let total = vocab.total() as f64;
        let keep_prob = vocab
            .counts()
            .iter()
            .map(|&c| {
                if params.subsample_threshold <= 0.0 {
                    return 1.0;
                }
                let threshold = params.subsample_threshold * total;
                let c = c as f64;
                ((libm::sqrt(c / threshold) + 1.0) * threshold / c).min(1.0) as f32
            })
            .collect();
        let noise = if params.negative > 0 {
            let weights = vocab.counts().iter().map(|&c| libm::pow(c as f64, 0.75));
            Some(WeightedIndex::new(weights).map_err(|_| EmbedError::EmptyVocabulary(params.min_count))?)
        } else {
            None
        };
        Ok(CbowTrainer {
            params,
            vocab,
            tokens,
            offsets,
            keep_prob,
            noise,
        })
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn n_sentences(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn sentence(&self, i: usize) -> &[u32] {
        &self.tokens[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Initial (input, output) weights: inputs uniform in ±0.5/dim, outputs zero.
    pub fn initial_weights(&self) -> (Vec<f32>, Vec<f32>) {
        let dim = self.params.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let input = (0..self.vocab.len() * dim)
            .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
            .collect();
        (input, alloc::vec![0.0; self.vocab.len() * dim])
    }

    /// Learning rate after `done` of `total` planned words.
    pub fn learning_rate(&self, done: u64, total: u64) -> f32 {
        let progress = (done as f64 / total.max(1) as f64).min(1.0) as f32;
        let p = &self.params;
        (p.lr_start - (p.lr_start - p.lr_end) * progress).max(p.lr_end)
    }

    pub fn planned_words(&self) -> u64 {
        self.params.epochs as u64 * self.tokens.len() as u64
    }

    /// Trains on sentences `range` of the corpus. `words_before` is the
    /// global word count already processed, used for the learning rate.
    pub fn train_range<S: Store + ?Sized, R: Rng>(
        &self,
        input: &S,
        output: &S,
        range: core::ops::Range<usize>,
        words_before: u64,
        rng: &mut R,
    ) -> ShardStats {
        let dim = self.params.dim;
        let window = self.params.window;
        let total = self.planned_words();
        let mut neu1 = alloc::vec![0f32; dim];
        let mut neu1e = alloc::vec![0f32; dim];
        let mut kept: Vec<u32> = Vec::new();
        let mut stats = ShardStats::default();
        for s in range {
            let sentence = self.sentence(s);
            let lr = self.learning_rate(words_before + stats.words, total);
            stats.words += sentence.len() as u64;
            kept.clear();
            for &w in sentence {
                let keep = self.keep_prob[w as usize];
                if keep >= 1.0 || rng.random::<f32>() < keep {
                    kept.push(w);
                }
            }
            for pos in 0..kept.len() {
                let shrink = rng.random_range(0..window);
                let half = window - shrink;
                let lo = pos.saturating_sub(half);
                let hi = (pos + half).min(kept.len() - 1);
                let count = hi - lo;
                if count == 0 {
                    continue;
                }
                neu1.fill(0.0);
                for (c, &ctx) in kept[lo..=hi].iter().enumerate() {
                    if lo + c == pos {
                        continue;
                    }
                    let base = ctx as usize * dim;
                    for (j, v) in neu1.iter_mut().enumerate() {
                        *v += input.load(base + j);
                    }
                }
                let inv = 1.0 / count as f32;
                neu1.iter_mut().for_each(|v| *v *= inv);
                neu1e.fill(0.0);

                let target = kept[pos];
                for d in 0..=self.params.negative {
                    let (word, label) = if d == 0 {
                        (target, 1.0f32)
                    } else {
                        let sample = self.noise.as_ref().expect("negative > 0").sample(rng) as u32;
                        if sample == target {
                            continue;
                        }
                        (sample, 0.0f32)
                    };
                    let base = word as usize * dim;
                    let mut f = 0.0f32;
                    for (j, v) in neu1.iter().enumerate() {
                        f += v * output.load(base + j);
                    }
                    stats.loss -= if label > 0.5 { log_sigmoid(f) } else { log_sigmoid(-f) };
                    let g = (label - sigmoid(f)) * lr;
                    for (j, e) in neu1e.iter_mut().enumerate() {
                        *e += g * output.load(base + j);
                    }
                    for (j, v) in neu1.iter().enumerate() {
                        output.store(base + j, output.load(base + j) + g * v);
                    }
                }
                stats.targets += 1;

                for (c, &ctx) in kept[lo..=hi].iter().enumerate() {
                    if lo + c == pos {
                        continue;
                    }
                    let base = ctx as usize * dim;
                    for (j, e) in neu1e.iter().enumerate() {
                        input.store(base + j, input.load(base + j) + e);
                    }
                }
            }
        }
        stats
    }

    /// Wraps trained input vectors into an embedding space.
    pub fn into_space(self, input: Vec<f32>, report: TrainReport) -> EmbeddingSpace {
        let mut space = EmbeddingSpace::from_parts(self.vocab, self.params.dim, input).expect("trainer shapes agree");
        space.params = Some(self.params);
        space.report = report;
        space
    }

    pub fn base_report(&self) -> TrainReport {
        TrainReport {
            epoch_losses: Vec::new(),
            corpus_tokens: self.tokens.len() as u64,
            undersized: (self.tokens.len() as u64) < 10 * self.params.dim as u64,
        }
    }

    /// Random generator for epoch `epoch` of shard `shard`.
    pub fn rng_for(&self, epoch: usize, shard: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(((epoch as u64) << 32) | shard as u64);
        rng
    }
}

/// Trains CBOW vectors on one corpus, single-threaded and deterministic.
pub fn train_cbow<T, S>(sentences: &[T], params: TrainParams) -> Result<EmbeddingSpace, EmbedError>
where
    T: AsRef<[S]>,
    S: AsRef<str>,
{
    let trainer = CbowTrainer::new(sentences, params)?;
    let (mut input, mut output) = trainer.initial_weights();
    let mut report = trainer.base_report();
    let mut words = 0u64;
    {
        let input = Cell::from_mut(input.as_mut_slice()).as_slice_of_cells();
        let output = Cell::from_mut(output.as_mut_slice()).as_slice_of_cells();
        for epoch in 0..params.epochs {
            let mut rng = trainer.rng_for(epoch, 0);
            let stats = trainer.train_range(input, output, 0..trainer.n_sentences(), words, &mut rng);
            words += stats.words;
            report
                .epoch_losses
                .push(if stats.targets > 0 { stats.loss / stats.targets as f64 } else { 0.0 });
        }
    }
    Ok(trainer.into_space(input, report))
}
