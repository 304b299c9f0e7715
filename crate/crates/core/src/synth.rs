//! Synthetic review/description corpora with planted semantic drift.
//!
//! Each non-background word belongs to one topic; a sentence picks a topic
//! and draws each token either from the shared background words or from its
//! topic. Topic and token probabilities are arranged so the marginal word
//! distribution is exactly Zipf. A planted word keeps its home topic in
//! reviews but, in descriptions, a fraction `drift_strength` of its weight
//! moves to a different topic: its usage context changes while its
//! frequency does not.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(&'static str),
    #[error("only {eligible} words can reach the planted-word min counts, {wanted} requested")]
    Infeasible { eligible: usize, wanted: usize },
    #[error("a suite needs at least 3 domains, got {0}")]
    TooFewDomains(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub vocab_size: usize,
    pub n_topics: usize,
    pub n_review_sentences: usize,
    pub n_description_sentences: usize,
    /// Mean tokens per sentence; lengths are uniform on [len/2, 3len/2].
    pub sentence_length: usize,
    /// Number of planted drift words (m).
    pub planted_words: usize,
    /// 0 keeps planted words in their home topic, 1 moves them entirely.
    pub drift_strength: f64,
    /// Drop in mean rating per unit of drift strength.
    pub rating_coupling: f64,
    /// Standard deviation of a per-domain offset of the mean rating.
    pub rating_noise: f64,
    pub base_rating: f64,
    pub n_ratings: usize,
    pub zipf_exponent: f64,
    /// The most frequent words, shared by every topic.
    pub background_words: usize,
    /// Planted words come from outside this many most frequent words of the
    /// interleaved review/description corpus.
    pub planted_min_rank: usize,
    /// Planted words must occur at least this often in each source.
    pub min_count_reviews: u64,
    pub min_count_descriptions: u64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            vocab_size: 3000,
            n_topics: 50,
            n_review_sentences: 83_334,
            n_description_sentences: 8_334,
            sentence_length: 12,
            planted_words: 100,
            drift_strength: 1.0,
            rating_coupling: 0.0,
            rating_noise: 0.0,
            base_rating: 4.2,
            n_ratings: 2000,
            zipf_exponent: 1.0,
            background_words: 50,
            planted_min_rank: 510,
            min_count_reviews: 50,
            min_count_descriptions: 10,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.vocab_size <= self.background_words + self.n_topics {
            return Err(SynthError::Invalid("vocab_size must exceed background words plus topics"));
        }
        if self.n_topics < 2 {
            return Err(SynthError::Invalid("need at least two topics"));
        }
        if self.planted_words > self.vocab_size / 10 {
            return Err(SynthError::Invalid("planted_words must be at most vocab_size/10"));
        }
        if !(0.0..=1.0).contains(&self.drift_strength) {
            return Err(SynthError::Invalid("drift_strength must lie in [0, 1]"));
        }
        if self.n_review_sentences == 0 || self.n_description_sentences == 0 {
            return Err(SynthError::Invalid("both sources need sentences"));
        }
        if self.sentence_length < 2 {
            return Err(SynthError::Invalid("sentence_length must be at least 2"));
        }
        if !(self.zipf_exponent > 0.0) {
            return Err(SynthError::Invalid("zipf_exponent must be positive"));
        }
        if !(1.0..=5.0).contains(&self.base_rating) || self.rating_noise < 0.0 {
            return Err(SynthError::Invalid("base_rating must lie in [1, 5] and rating_noise be non-negative"));
        }
        Ok(())
    }

    /// Unnormalized Zipf weight of rank `r` (0-based).
    fn weight(&self, r: usize) -> f64 {
        1.0 / libm::pow((r + 1) as f64, self.zipf_exponent)
    }

    /// Probability of rank `r` under the configured Zipf profile.
    pub fn zipf_probabilities(&self) -> Vec<f64> {
        let w: Vec<f64> = (0..self.vocab_size).map(|r| self.weight(r)).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

/// Deterministic pronounceable name for word index `i`; all lowercase letters.
pub fn word_name(i: usize) -> String {
    const C: &[u8] = b"bdfgklmnprstvz";
    const V: &[u8] = b"aeiou";
    let syllables = C.len() * V.len();
    let mut digits = Vec::new();
    let mut n = i;
    loop {
        digits.push(n % syllables);
        n /= syllables;
        if n == 0 {
            break;
        }
    }
    // Pad to two syllables; three-syllable names start past 70² words, so
    // lengths alone keep the padded and unpadded ranges distinct.
    while digits.len() < 2 {
        digits.push(0);
    }
    let mut s = String::with_capacity(digits.len() * 2);
    for d in digits.into_iter().rev() {
        s.push(C[d / V.len()] as char);
        s.push(V[d % V.len()] as char);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthTruth {
    pub domain: String,
    /// Planted words in the order they were chosen; the first m of a larger
    /// plant are the plant of size m.
    pub planted: Vec<String>,
    pub drift_level: f64,
    pub zipf_exponent: f64,
    pub rating_coupling: f64,
    /// Configured mean rating including the per-domain offset.
    pub target_mean_rating: f64,
    /// Mean of the generated ratings.
    pub mean_rating: f64,
    pub seed: u64,
}

/// One generated domain. Sentences are stored as indices into `words`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDomain {
    pub name: String,
    pub words: Vec<String>,
    pub reviews: Vec<Vec<u32>>,
    pub descriptions: Vec<Vec<u32>>,
    pub ratings: Vec<u8>,
    /// Topic of every non-background word (background words map to `None`).
    pub topic_of: Vec<Option<u16>>,
    pub truth: SynthTruth,
}

impl SynthDomain {
    fn texts(&self, sentences: &[Vec<u32>]) -> Vec<Vec<&str>> {
        sentences
            .iter()
            .map(|s| s.iter().map(|&i| self.words[i as usize].as_str()).collect())
            .collect()
    }

    pub fn review_tokens(&self) -> Vec<Vec<&str>> {
        self.texts(&self.reviews)
    }

    pub fn description_tokens(&self) -> Vec<Vec<&str>> {
        self.texts(&self.descriptions)
    }
}

struct TopicSampler {
    topics: WeightedIndex<f64>,
    per_topic: Vec<(Vec<u32>, WeightedIndex<f64>)>,
}

impl TopicSampler {
    fn new(members: &[Vec<(u32, f64)>]) -> Self {
        let totals: Vec<f64> = members.iter().map(|m| m.iter().map(|e| e.1).sum()).collect();
        let per_topic = members
            .iter()
            .map(|m| {
                let ids = m.iter().map(|e| e.0).collect();
                let dist = WeightedIndex::new(m.iter().map(|e| e.1)).expect("every topic owns a word");
                (ids, dist)
            })
            .collect();
        TopicSampler {
            topics: WeightedIndex::new(totals).expect("topic weights are positive"),
            per_topic,
        }
    }
}

/// Probabilities over ratings 1..=5 of the form p(k) ∝ exp(θk) with the
/// given mean.
pub fn rating_distribution(mean: f64) -> [f64; 5] {
    let mean = mean.clamp(1.0 + 1e-6, 5.0 - 1e-6);
    let probs = |theta: f64| {
        let w: Vec<f64> = (1..=5).map(|k| libm::exp(theta * k as f64)).collect();
        let z: f64 = w.iter().sum();
        let mut p = [0.0; 5];
        for (i, v) in w.into_iter().enumerate() {
            p[i] = v / z;
        }
        p
    };
    let mean_of = |p: &[f64; 5]| p.iter().enumerate().map(|(i, v)| (i + 1) as f64 * v).sum::<f64>();
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_of(&probs(mid)) < mean {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    probs(0.5 * (lo + hi))
}

/// Deterministic per-index seed derivation.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index.wrapping_add(1));
    rng.random()
}

fn sample_sentence<R: Rng>(
    rng: &mut R,
    len: usize,
    sampler: &TopicSampler,
    background: &(Vec<u32>, WeightedIndex<f64>),
    background_share: f64,
    out: &mut Vec<u32>,
) -> u16 {
    let topic = sampler.topics.sample(rng);
    let (ids, dist) = &sampler.per_topic[topic];
    out.clear();
    for _ in 0..len {
        if rng.random::<f64>() < background_share {
            out.push(background.0[background.1.sample(rng)]);
        } else {
            out.push(ids[dist.sample(rng)]);
        }
    }
    topic as u16
}

fn count_tokens(sentences: &[Vec<u32>], vocab_size: usize) -> Vec<u64> {
    let mut counts = alloc::vec![0u64; vocab_size];
    for &t in sentences.iter().flatten() {
        counts[t as usize] += 1;
    }
    counts
}

/// Word counts of the interleaved corpus: every review sentence is paired
/// with the next description sentence, descriptions cycling as needed.
fn interleaved_counts(reviews: &[Vec<u32>], descriptions: &[Vec<u32>], vocab_size: usize) -> Vec<u64> {
    let mut counts = count_tokens(reviews, vocab_size);
    let (n_r, n_d) = (reviews.len(), descriptions.len());
    for (j, s) in descriptions.iter().enumerate() {
        let times = (n_r / n_d + usize::from(j < n_r % n_d)) as u64;
        for &t in s {
            counts[t as usize] += times;
        }
    }
    counts
}

/// Moves a `strength` share of the description occurrences of `word` into
/// sentences of topic `to`. Each moved occurrence trades places with a
/// background token of a `to` sentence, so word counts and sentence lengths
/// are preserved, and byte offsets too while every name has four letters.
fn relocate<R: Rng>(
    descriptions: &mut [Vec<u32>],
    by_topic: &[Vec<usize>],
    word: u32,
    to: u16,
    strength: f64,
    background: u32,
    rng: &mut R,
) {
    let mut targets = by_topic[to as usize].clone();
    let mut sources = Vec::new();
    for (s, sentence) in descriptions.iter().enumerate() {
        for (p, &t) in sentence.iter().enumerate() {
            if t == word {
                sources.push((s, p));
            }
        }
    }
    for (s, p) in sources {
        if rng.random::<f64>() >= strength {
            continue;
        }
        let (dest, slots) = loop {
            if targets.is_empty() {
                return;
            }
            let i = rng.random_range(0..targets.len());
            let dest = targets[i];
            let slots: Vec<usize> = (0..descriptions[dest].len())
                .filter(|&q| descriptions[dest][q] < background)
                .collect();
            if slots.is_empty() {
                targets.swap_remove(i);
            } else {
                break (dest, slots);
            }
        };
        let q = slots[rng.random_range(0..slots.len())];
        descriptions[s][p] = descriptions[dest][q];
        descriptions[dest][q] = word;
    }
}

/// Generates one domain named `name` at drift level `spec.drift_strength`.
///
/// The base corpus depends only on the seed and the sizes; planting and
/// drift strength change nothing but where planted words sit in
/// descriptions, so domains with different `planted_words` or
/// `drift_strength` share every other token.
pub fn generate_domain(name: &str, spec: &SynthSpec) -> Result<SynthDomain, SynthError> {
    spec.validate()?;
    let stream = |n: u64| {
        let mut r = ChaCha8Rng::seed_from_u64(spec.seed);
        r.set_stream(n);
        r
    };
    let words: Vec<String> = (0..spec.vocab_size).map(word_name).collect();
    let weights: Vec<f64> = (0..spec.vocab_size).map(|r| spec.weight(r)).collect();
    let total: f64 = weights.iter().sum();
    let bg = spec.background_words;
    let background_share = weights[..bg].iter().sum::<f64>() / total;
    let topic_of: Vec<Option<u16>> = (0..spec.vocab_size)
        .map(|r| (r >= bg).then(|| ((r - bg) % spec.n_topics) as u16))
        .collect();

    let mut members: Vec<Vec<(u32, f64)>> = alloc::vec![Vec::new(); spec.n_topics];
    for r in bg..spec.vocab_size {
        members[topic_of[r].unwrap() as usize].push((r as u32, weights[r]));
    }
    let sampler = TopicSampler::new(&members);
    let background = (
        (0..bg as u32).collect::<Vec<_>>(),
        WeightedIndex::new(&weights[..bg]).map_err(|_| SynthError::Invalid("need background words"))?,
    );
    let lo = (spec.sentence_length / 2).max(1);
    let hi = spec.sentence_length + spec.sentence_length / 2;
    let generate = |n: usize, rng: &mut ChaCha8Rng| {
        let mut sentences = Vec::with_capacity(n);
        let mut topics = Vec::with_capacity(n);
        let mut buf = Vec::new();
        for _ in 0..n {
            let len = rng.random_range(lo..=hi);
            topics.push(sample_sentence(rng, len, &sampler, &background, background_share, &mut buf));
            sentences.push(buf.clone());
        }
        (sentences, topics)
    };
    let (reviews, _) = generate(spec.n_review_sentences, &mut stream(2));
    let (mut descriptions, desc_topics) = generate(spec.n_description_sentences, &mut stream(3));

    // Candidates: topical words outside the interleaved top `planted_min_rank`
    // that meet both min counts, most frequent first. Smaller plants are
    // therefore prefixes of larger ones.
    let counts_r = count_tokens(&reviews, spec.vocab_size);
    let counts_d = count_tokens(&descriptions, spec.vocab_size);
    let mixed = interleaved_counts(&reviews, &descriptions, spec.vocab_size);
    let mut by_mixed: Vec<usize> = (0..spec.vocab_size).collect();
    by_mixed.sort_by(|&a, &b| mixed[b].cmp(&mixed[a]).then(a.cmp(&b)));
    let eligible: Vec<usize> = by_mixed
        .iter()
        .skip(spec.planted_min_rank)
        .copied()
        .filter(|&r| {
            r >= bg && counts_r[r] >= spec.min_count_reviews && counts_d[r] >= spec.min_count_descriptions
        })
        .collect();
    if eligible.len() < spec.planted_words {
        return Err(SynthError::Infeasible {
            eligible: eligible.len(),
            wanted: spec.planted_words,
        });
    }
    let planted = &eligible[..spec.planted_words];

    let mut by_topic: Vec<Vec<usize>> = alloc::vec![Vec::new(); spec.n_topics];
    for (i, &t) in desc_topics.iter().enumerate() {
        by_topic[t as usize].push(i);
    }
    for (i, &r) in planted.iter().enumerate() {
        let mut rng = stream(1000 + i as u64);
        let home = topic_of[r].expect("planted words are topical") as usize;
        let alt = ((home + 1 + rng.random_range(0..spec.n_topics - 1)) % spec.n_topics) as u16;
        if spec.drift_strength > 0.0 {
            relocate(&mut descriptions, &by_topic, r as u32, alt, spec.drift_strength, bg as u32, &mut rng);
        }
    }

    let mut rng = stream(4);
    let offset = if spec.rating_noise > 0.0 {
        Normal::new(0.0, spec.rating_noise)
            .map_err(|_| SynthError::Invalid("bad rating_noise"))?
            .sample(&mut rng)
    } else {
        0.0
    };
    let target = (spec.base_rating - spec.rating_coupling * spec.drift_strength + offset).clamp(1.0, 5.0);
    let rating_dist = WeightedIndex::new(rating_distribution(target)).expect("valid probabilities");
    let ratings: Vec<u8> = (0..spec.n_ratings).map(|_| rating_dist.sample(&mut rng) as u8 + 1).collect();
    let mean_rating = if ratings.is_empty() {
        f64::NAN
    } else {
        ratings.iter().map(|&r| f64::from(r)).sum::<f64>() / ratings.len() as f64
    };

    Ok(SynthDomain {
        name: name.into(),
        truth: SynthTruth {
            domain: name.into(),
            planted: planted.iter().map(|&r| words[r].clone()).collect(),
            drift_level: spec.drift_strength,
            zipf_exponent: spec.zipf_exponent,
            rating_coupling: spec.rating_coupling,
            target_mean_rating: target,
            mean_rating,
            seed: spec.seed,
        },
        words,
        reviews,
        descriptions,
        ratings,
        topic_of,
    })
}

/// Per-domain specs of a suite: one domain per drift level, each with its
/// own derived seed and, when `zipf_jitter > 0`, a Zipf exponent drawn
/// uniformly from `base ± zipf_jitter` so domains differ in compressibility
/// independently of their drift level.
pub fn suite_specs(levels: &[f64], base: &SynthSpec, zipf_jitter: f64) -> Result<Vec<(String, SynthSpec)>, SynthError> {
    if levels.len() < 3 {
        return Err(SynthError::TooFewDomains(levels.len()));
    }
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(derive_seed(base.seed, u64::MAX - 1));
    levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let jitter = if zipf_jitter > 0.0 {
                jitter_rng.random_range(-zipf_jitter..=zipf_jitter)
            } else {
                0.0
            };
            let spec = SynthSpec {
                drift_strength: level,
                seed: derive_seed(base.seed, i as u64),
                zipf_exponent: base.zipf_exponent + jitter,
                ..base.clone()
            };
            spec.validate()?;
            Ok((format!("synth{i:02}"), spec))
        })
        .collect()
}

/// Generates every domain of [`suite_specs`].
pub fn generate_suite(levels: &[f64], base: &SynthSpec, zipf_jitter: f64) -> Result<Vec<SynthDomain>, SynthError> {
    suite_specs(levels, base, zipf_jitter)?
        .iter()
        .map(|(name, spec)| generate_domain(name, spec))
        .collect()
}
