//! Interleaved review/description corpora, target vocabulary selection and
//! the True/Rand source labeling.
//!
//! The serialized form is one sentence per line, tokens joined by a single
//! space, and every occurrence of a target word suffixed with `_R` or `_D`.
//! Both labels are two bytes, so every variant of one mixed corpus has the
//! same byte length.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::textprep::{Source, VocabStats};
use crate::FxMap;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MixError {
    #[error("cannot mix: the {0:?} source is empty")]
    EmptySource(Source),
    #[error("swap probability {0} is outside [0, 1]")]
    BadProbability(f64),
    #[error("at least one randomization trial is required")]
    NoTrials,
    #[error("min_count must be at least 1")]
    BadMinCount,
}

/// One position of the interleaved corpus. Descriptions are referenced by
/// index into the (materialized) description list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MixedSlot<R> {
    Review(R),
    Description(usize),
}

/// Review, description, review, description, ... starting with a review.
/// Descriptions are cycled from the first one when exhausted and the
/// sequence ends with the description that pairs the last review.
#[derive(Debug, Clone)]
pub struct Interleave<I> {
    reviews: I,
    n_descriptions: usize,
    next_description: usize,
    owe_description: bool,
}

impl<I: Iterator> Interleave<I> {
    pub fn new(reviews: I, n_descriptions: usize) -> Result<Self, MixError> {
        if n_descriptions == 0 {
            return Err(MixError::EmptySource(Source::Description));
        }
        Ok(Interleave {
            reviews,
            n_descriptions,
            next_description: 0,
            owe_description: false,
        })
    }
}

impl<I: Iterator> Iterator for Interleave<I> {
    type Item = MixedSlot<I::Item>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.owe_description {
            self.owe_description = false;
            let idx = self.next_description;
            self.next_description = (self.next_description + 1) % self.n_descriptions;
            return Some(MixedSlot::Description(idx));
        }
        let review = self.reviews.next()?;
        self.owe_description = true;
        Some(MixedSlot::Review(review))
    }
}

/// Materializes the interleaving of two in-memory sentence lists.
pub fn build_mixed<T: Clone>(reviews: &[T], descriptions: &[T]) -> Result<Vec<(Source, T)>, MixError> {
    if reviews.is_empty() {
        return Err(MixError::EmptySource(Source::Review));
    }
    let slots = Interleave::new(reviews.iter(), descriptions.len())?;
    Ok(slots
        .map(|slot| match slot {
            MixedSlot::Review(r) => (Source::Review, r.clone()),
            MixedSlot::Description(i) => (Source::Description, descriptions[i].clone()),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetSelectionParams {
    /// How many of the most frequent common words are left unlabeled.
    pub top_exclude: usize,
    /// Minimum frequency in the mixed corpus.
    pub min_count: u64,
}

impl Default for TargetSelectionParams {
    fn default() -> Self {
        TargetSelectionParams {
            top_exclude: 500,
            min_count: 50,
        }
    }
}

/// The set W of words whose occurrences receive source labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetVocabulary {
    words: Vec<String>,
    lookup: FxMap<String, u32>,
    pub params: TargetSelectionParams,
}

impl TargetVocabulary {
    pub fn from_words<I, S>(words: I, params: TargetSelectionParams) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut words: Vec<String> = words.into_iter().map(Into::into).collect();
        words.sort_unstable();
        words.dedup();
        let lookup = words.iter().enumerate().map(|(i, w)| (w.clone(), i as u32)).collect();
        TargetVocabulary { words, lookup, params }
    }

    pub fn empty() -> Self {
        Self::from_words(core::iter::empty::<String>(), TargetSelectionParams::default())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.lookup.contains_key(word)
    }

    /// Position of `word` in [`TargetVocabulary::words`].
    pub fn index_of(&self, word: &str) -> Option<u32> {
        self.lookup.get(word).copied()
    }

    /// Target words in lexicographic order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Common vocabulary minus the `top_exclude` most frequent common words minus
/// words below `min_count`, all frequencies taken on the mixed corpus.
/// Frequency ties at the exclusion boundary go to the lexicographically
/// smaller word (it is excluded first).
pub fn select_targets(stats: &VocabStats, params: TargetSelectionParams) -> Result<TargetVocabulary, MixError> {
    if params.min_count == 0 {
        return Err(MixError::BadMinCount);
    }
    let common = stats
        .sorted_by_frequency()
        .into_iter()
        .filter(|(_, counts)| counts.is_common());
    let words = common
        .skip(params.top_exclude)
        .filter(|(_, counts)| counts.mixed() >= params.min_count)
        .map(|(word, _)| word);
    Ok(TargetVocabulary::from_words(words, params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomizationParams {
    pub swap_probability: f64,
    pub seed: u64,
    pub trials: u32,
}

impl Default for RandomizationParams {
    fn default() -> Self {
        RandomizationParams {
            swap_probability: 0.5,
            seed: 0,
            trials: 5,
        }
    }
}

impl RandomizationParams {
    pub fn validate(&self) -> Result<(), MixError> {
        if !(0.0..=1.0).contains(&self.swap_probability) {
            return Err(MixError::BadProbability(self.swap_probability));
        }
        if self.trials == 0 {
            return Err(MixError::NoTrials);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    True,
    /// Randomized labels for the given trial index.
    Rand(u32),
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Variant::True => f.write_str("true"),
            Variant::Rand(t) => write!(f, "rand-t{t}"),
        }
    }
}

/// Counter-based flip decisions: whether the k-th occurrence of target word
/// w flips depends only on (seed, trial, w, k). Corpora that differ only in
/// where a few words occur therefore share every other flip.
#[derive(Debug, Clone)]
pub struct FlipStream {
    rng: ChaCha8Rng,
    probability: f64,
}

impl FlipStream {
    pub fn new(seed: u64, trial: u32, probability: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::from(trial));
        FlipStream { rng, probability }
    }

    /// Decision for occurrence `k` of the target word with index `word`.
    pub fn flip(&mut self, word: u32, k: u64) -> bool {
        // 2 stream words per draw; 44 bits of occurrence index per word.
        self.rng.set_word_pos(((u128::from(word) << 44) | u128::from(k & ((1 << 44) - 1))) * 2);
        let draw = self.rng.next_u64();
        if self.probability >= 1.0 {
            true
        } else if self.probability <= 0.0 {
            false
        } else {
            ((draw >> 11) as f64) * (1.0 / (1u64 << 53) as f64) < self.probability
        }
    }
}

/// Label counts of one labeled corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelSummary {
    pub n_r: u64,
    pub n_d: u64,
    pub flipped: u64,
    pub bytes: u64,
    pub sentences: u64,
}

impl LabelSummary {
    pub fn labeled(&self) -> u64 {
        self.n_r + self.n_d
    }
}

/// Streams sentences of a mixed corpus into serialized labeled lines.
#[derive(Debug, Clone)]
pub struct Labeler<'t> {
    targets: &'t TargetVocabulary,
    variant: Variant,
    flips: Option<FlipStream>,
    /// Occurrences seen so far per target word (Rand variants only).
    seen: Vec<u64>,
    summary: LabelSummary,
}

impl<'t> Labeler<'t> {
    pub fn new(targets: &'t TargetVocabulary, variant: Variant, params: &RandomizationParams) -> Result<Self, MixError> {
        let flips = match variant {
            Variant::True => None,
            Variant::Rand(trial) => {
                params.validate()?;
                Some(FlipStream::new(params.seed, trial, params.swap_probability))
            }
        };
        let seen = if flips.is_some() { alloc::vec![0; targets.len()] } else { Vec::new() };
        Ok(Labeler {
            targets,
            variant,
            flips,
            seen,
            summary: LabelSummary::default(),
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    fn label_for(&mut self, source: Source, word: u32) -> Source {
        let flip = match self.flips.as_mut() {
            Some(stream) => {
                let k = &mut self.seen[word as usize];
                *k += 1;
                stream.flip(word, *k - 1)
            }
            None => false,
        };
        let label = if flip {
            self.summary.flipped += 1;
            source.flipped()
        } else {
            source
        };
        match label {
            Source::Review => self.summary.n_r += 1,
            Source::Description => self.summary.n_d += 1,
        }
        label
    }

    /// Labels one sentence, returning the label (if any) of each token.
    pub fn label_tokens<S: AsRef<str>>(&mut self, tokens: &[S], source: Source) -> Vec<Option<Source>> {
        self.summary.sentences += 1;
        let labels: Vec<_> = tokens
            .iter()
            .map(|t| self.targets.index_of(t.as_ref()).map(|w| self.label_for(source, w)))
            .collect();
        self.summary.bytes += serialized_len(tokens, &labels);
        labels
    }

    /// Appends the serialized, labeled sentence (with its `\n`) to `out`.
    pub fn write_sentence<S: AsRef<str>>(&mut self, tokens: &[S], source: Source, out: &mut Vec<u8>) {
        let start = out.len();
        for (i, token) in tokens.iter().enumerate() {
            let token = token.as_ref();
            if i > 0 {
                out.push(b' ');
            }
            out.extend_from_slice(token.as_bytes());
            if let Some(w) = self.targets.index_of(token) {
                let label = self.label_for(source, w);
                out.push(b'_');
                out.push(label.code() as u8);
            }
        }
        out.push(b'\n');
        self.summary.sentences += 1;
        self.summary.bytes += (out.len() - start) as u64;
    }

    pub fn summary(&self) -> LabelSummary {
        self.summary
    }
}

fn serialized_len<S: AsRef<str>>(tokens: &[S], labels: &[Option<Source>]) -> u64 {
    let text: usize = tokens.iter().map(|t| t.as_ref().len()).sum();
    let spaces = tokens.len().saturating_sub(1);
    let suffixes = 2 * labels.iter().filter(|l| l.is_some()).count();
    (text + spaces + suffixes + 1) as u64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledToken {
    pub word: String,
    pub label: Option<Source>,
}

/// An in-memory labeled corpus, for corpora small enough to hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    pub variant: Variant,
    pub sentences: Vec<Vec<LabeledToken>>,
    pub summary: LabelSummary,
}

impl LabeledCorpus {
    pub fn byte_len(&self) -> u64 {
        self.summary.bytes
    }
}

/// Labels every target occurrence of a mixed corpus. `Variant::True` keeps
/// source-faithful labels; `Variant::Rand(t)` flips each one independently
/// with the configured probability.
pub fn label_corpus<S: AsRef<str>>(
    mixed: &[(Source, Vec<S>)],
    targets: &TargetVocabulary,
    variant: Variant,
    params: &RandomizationParams,
) -> Result<LabeledCorpus, MixError> {
    let mut labeler = Labeler::new(targets, variant, params)?;
    let sentences = mixed
        .iter()
        .map(|(source, tokens)| {
            let labels = labeler.label_tokens(tokens, *source);
            tokens
                .iter()
                .zip(labels)
                .map(|(t, label)| LabeledToken {
                    word: String::from(t.as_ref()),
                    label,
                })
                .collect()
        })
        .collect();
    Ok(LabeledCorpus {
        variant,
        sentences,
        summary: labeler.summary(),
    })
}

pub fn serialize_labeled(corpus: &LabeledCorpus) -> Vec<u8> {
    let mut out = Vec::with_capacity(corpus.byte_len() as usize);
    for sentence in &corpus.sentences {
        for (i, token) in sentence.iter().enumerate() {
            if i > 0 {
                out.push(b' ');
            }
            out.extend_from_slice(token.word.as_bytes());
            if let Some(label) = token.label {
                out.push(b'_');
                out.push(label.code() as u8);
            }
        }
        out.push(b'\n');
    }
    out
}

/// Removes `_R`/`_D` suffixes from serialized labeled text.
pub fn strip_labels(serialized: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(serialized.len());
    let mut i = 0;
    while i < serialized.len() {
        let b = serialized[i];
        if b == b'_'
            && matches!(serialized.get(i + 1), Some(b'R' | b'D'))
            && matches!(serialized.get(i + 2), None | Some(b' ' | b'\n'))
        {
            i += 2;
            continue;
        }
        out.push(b);
        i += 1;
    }
    out
}

/// Serializes an unlabeled corpus in the labeled-corpus layout.
pub fn serialize_plain<S: AsRef<str>>(mixed: &[(Source, Vec<S>)]) -> Vec<u8> {
    let mut out = Vec::new();
    for (_, tokens) in mixed {
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                out.push(b' ');
            }
            out.extend_from_slice(t.as_ref().as_bytes());
        }
        out.push(b'\n');
    }
    out
}
