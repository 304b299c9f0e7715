//! Sentence segmentation, alphabetic tokenization and vocabulary counting.

use alloc::string::String;
use alloc::vec::Vec;
use core::ops::AddAssign;

use crate::FxMap;

/// Which community produced a piece of text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Review,
    Description,
}

impl Source {
    /// One-letter code used for intermediate file prefixes and label suffixes.
    pub const fn code(self) -> char {
        match self {
            Source::Review => 'R',
            Source::Description => 'D',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        match c {
            'R' => Some(Source::Review),
            'D' => Some(Source::Description),
            _ => None,
        }
    }

    pub const fn flipped(self) -> Self {
        match self {
            Source::Review => Source::Description,
            Source::Description => Source::Review,
        }
    }

    const fn slot(self) -> usize {
        match self {
            Source::Review => 0,
            Source::Description => 1,
        }
    }
}

/// One tokenized sentence tagged with its community and domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceRecord {
    pub tokens: Vec<String>,
    pub source: Source,
    pub domain: String,
}

impl SentenceRecord {
    pub fn from_text(text: &str, source: Source, domain: &str) -> Self {
        SentenceRecord {
            tokens: tokenize(text),
            source,
            domain: domain.into(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercased words (without the trailing period) that never end a sentence.
pub const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "dr", "st", "vs", "etc", "e.g", "i.e", "in", "oz", "ft",
];

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}')
}

/// The word immediately before byte offset `end` (exclusive), without
/// leading opening punctuation.
fn word_before(text: &str, end: usize) -> &str {
    let head = &text[..end];
    let start = head
        .char_indices()
        .rev()
        .find(|&(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    head[start..].trim_start_matches(|c: char| !c.is_alphanumeric())
}

fn is_abbreviation(word: &str) -> bool {
    if word.is_empty() {
        return false;
    }
    ABBREVIATIONS
        .iter()
        .any(|abbr| abbr.len() == word.len() && abbr.eq_ignore_ascii_case(word))
}

fn push_trimmed<'a>(out: &mut Vec<&'a str>, piece: &'a str) {
    let piece = piece.trim();
    if !piece.is_empty() {
        out.push(piece);
    }
}

/// Splits one line of prose at `. ! ?` runs followed by whitespace and then an
/// uppercase letter, a digit, or the end of the text.
fn split_prose<'a>(text: &'a str, out: &mut Vec<&'a str>) {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut start = 0usize;
    let mut i = 0usize;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if !is_terminal(c) {
            i += 1;
            continue;
        }
        let mark_pos = pos;
        let mut j = i;
        while j < chars.len() && is_terminal(chars[j].1) {
            j += 1;
        }
        while j < chars.len() && is_closer(chars[j].1) {
            j += 1;
        }
        let end = chars.get(j).map_or(text.len(), |&(p, _)| p);
        let mut k = j;
        while k < chars.len() && chars[k].1.is_whitespace() {
            k += 1;
        }
        let followed_by_space = k > j;
        let boundary = if k == chars.len() {
            true
        } else {
            let next = chars[k].1;
            followed_by_space && (next.is_uppercase() || next.is_ascii_digit())
        };
        let guarded = c == '.' && j == i + 1 && is_abbreviation(word_before(text, mark_pos));
        if boundary && !guarded {
            push_trimmed(out, &text[start..end]);
            start = end;
        }
        i = j.max(i + 1);
    }
    push_trimmed(out, &text[start..]);
}

/// Rule-based sentence splitter.
///
/// With `tabular_hint`, every newline is a hard boundary (each row of a
/// tabular description is its own sentence); prose rules still apply within
/// a row. Without it, newlines are ordinary whitespace.
pub fn split_sentences(text: &str, tabular_hint: bool) -> Vec<&str> {
    let mut out = Vec::new();
    if tabular_hint {
        for line in text.lines() {
            split_prose(line, &mut out);
        }
    } else {
        split_prose(text, &mut out);
    }
    out
}

/// Maximal runs of alphabetic characters, lowercased. Everything else,
/// digits included, separates tokens and is dropped.
pub fn tokenize(sentence: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in sentence.chars() {
        if c.is_alphabetic() {
            for lower in c.to_lowercase() {
                if lower.is_alphabetic() {
                    current.push(lower);
                }
            }
        } else if !current.is_empty() {
            tokens.push(core::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

/// Per-word counts split by source.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WordCounts {
    pub reviews: u64,
    pub descriptions: u64,
}

impl WordCounts {
    pub fn mixed(&self) -> u64 {
        self.reviews + self.descriptions
    }

    pub fn get(&self, source: Source) -> u64 {
        match source {
            Source::Review => self.reviews,
            Source::Description => self.descriptions,
        }
    }

    /// True when the word occurs in both communities.
    pub fn is_common(&self) -> bool {
        self.reviews > 0 && self.descriptions > 0
    }
}

/// Exact word counts per source. Counts from disjoint streams merge by
/// addition, so partial stats can be computed independently and summed.
#[derive(Debug, Clone, Default)]
pub struct VocabStats {
    counts: FxMap<String, WordCounts>,
    totals: [u64; 2],
    sentences: [u64; 2],
}

impl VocabStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tokens<S: AsRef<str>>(&mut self, tokens: &[S], source: Source) {
        let slot = source.slot();
        for token in tokens {
            let token = token.as_ref();
            let entry = match self.counts.get_mut(token) {
                Some(entry) => entry,
                None => self.counts.entry(String::from(token)).or_default(),
            };
            match source {
                Source::Review => entry.reviews += 1,
                Source::Description => entry.descriptions += 1,
            }
        }
        self.totals[slot] += tokens.len() as u64;
        self.sentences[slot] += 1;
    }

    pub fn add(&mut self, sentence: &SentenceRecord) {
        self.add_tokens(&sentence.tokens, sentence.source);
    }

    pub fn merge(&mut self, other: &VocabStats) {
        for (word, counts) in &other.counts {
            let entry = self.counts.entry(word.clone()).or_default();
            entry.reviews += counts.reviews;
            entry.descriptions += counts.descriptions;
        }
        for slot in 0..2 {
            self.totals[slot] += other.totals[slot];
            self.sentences[slot] += other.sentences[slot];
        }
    }

    pub fn counts(&self, word: &str) -> WordCounts {
        self.counts.get(word).copied().unwrap_or_default()
    }

    pub fn freq_reviews(&self, word: &str) -> u64 {
        self.counts(word).reviews
    }

    pub fn freq_descriptions(&self, word: &str) -> u64 {
        self.counts(word).descriptions
    }

    pub fn freq_mixed(&self, word: &str) -> u64 {
        self.counts(word).mixed()
    }

    pub fn total_tokens(&self, source: Source) -> u64 {
        self.totals[source.slot()]
    }

    pub fn total_sentences(&self, source: Source) -> u64 {
        self.sentences[source.slot()]
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, WordCounts)> {
        self.counts.iter().map(|(w, c)| (w.as_str(), *c))
    }

    /// Words sorted by descending mixed frequency, then lexicographically.
    pub fn sorted_by_frequency(&self) -> Vec<(&str, WordCounts)> {
        let mut words: Vec<_> = self.iter().collect();
        words.sort_unstable_by(|a, b| b.1.mixed().cmp(&a.1.mixed()).then_with(|| a.0.cmp(b.0)));
        words
    }
}

impl AddAssign<&VocabStats> for VocabStats {
    fn add_assign(&mut self, rhs: &VocabStats) {
        self.merge(rhs);
    }
}

impl PartialEq for VocabStats {
    fn eq(&self, other: &Self) -> bool {
        self.totals == other.totals
            && self.sentences == other.sentences
            && self.counts.len() == other.counts.len()
            && self.counts.iter().all(|(w, c)| other.counts.get(w) == Some(c))
    }
}

/// Counts every token of every sentence in the stream.
pub fn count_vocab<'a, I>(sentences: I) -> VocabStats
where
    I: IntoIterator<Item = &'a SentenceRecord>,
{
    let mut stats = VocabStats::new();
    for sentence in sentences {
        stats.add(sentence);
    }
    stats
}
