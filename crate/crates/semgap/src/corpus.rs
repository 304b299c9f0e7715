//! Intermediate sentence files: one tokenized sentence per line, prefixed
//! with its source code and a tab (`R\t` or `D\t`).

use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use semgap_core::mixer::build_mixed;
use semgap_core::textprep::{split_sentences, tokenize, Source, VocabStats};

use crate::error::{Error, Result};
use crate::ingest::open_lines;

pub type Sentences = Vec<Vec<String>>;

/// Tokenized sentences of a review; newlines are ordinary whitespace.
pub fn review_sentences(text: &str) -> impl Iterator<Item = Vec<String>> + '_ {
    split_sentences(text, false).into_iter().map(tokenize).filter(|t| !t.is_empty())
}

/// Tokenized sentences of a description; every line is its own sentence.
pub fn description_sentences(text: &str) -> impl Iterator<Item = Vec<String>> + '_ {
    split_sentences(text, true).into_iter().map(tokenize).filter(|t| !t.is_empty())
}

pub struct SentenceWriter {
    out: BufWriter<File>,
    source: Source,
    pub sentences: u64,
    pub tokens: u64,
}

impl SentenceWriter {
    pub fn create(path: &Path, source: Source) -> Result<Self> {
        let file = File::create(path).map_err(Error::io(path))?;
        Ok(SentenceWriter {
            out: BufWriter::with_capacity(1 << 16, file),
            source,
            sentences: 0,
            tokens: 0,
        })
    }

    pub fn write<S: AsRef<str>>(&mut self, tokens: &[S]) -> std::io::Result<()> {
        if tokens.is_empty() {
            return Ok(());
        }
        write!(self.out, "{}\t", self.source.code())?;
        for (i, t) in tokens.iter().enumerate() {
            if i > 0 {
                self.out.write_all(b" ")?;
            }
            self.out.write_all(t.as_ref().as_bytes())?;
        }
        self.out.write_all(b"\n")?;
        self.sentences += 1;
        self.tokens += tokens.len() as u64;
        Ok(())
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.out.flush()
    }
}

/// Writes a whole sentence list to `path`.
pub fn write_sentences<T: AsRef<[S]>, S: AsRef<str>>(path: &Path, source: Source, sentences: &[T]) -> Result<()> {
    let mut w = SentenceWriter::create(path, source)?;
    for s in sentences {
        w.write(s.as_ref()).map_err(Error::io(path))?;
    }
    w.finish().map_err(Error::io(path))
}

/// Reads a sentence file, checking that every line carries `expected`'s code.
pub fn read_sentences(path: &Path, expected: Source) -> Result<Sentences> {
    let reader = open_lines(path)?;
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.is_empty() {
            continue;
        }
        let (code, body) = line
            .split_once('\t')
            .ok_or_else(|| Error::Data(format!("{}:{}: missing source prefix", path.display(), i + 1)))?;
        let mut chars = code.chars();
        let source = match (chars.next().and_then(Source::from_code), chars.next()) {
            (Some(s), None) => s,
            _ => return Err(Error::Data(format!("{}:{}: bad source code {code:?}", path.display(), i + 1))),
        };
        if source != expected {
            return Err(Error::Data(format!(
                "{}:{}: expected {} sentences, found {}",
                path.display(),
                i + 1,
                expected.code(),
                source.code()
            )));
        }
        let tokens: Vec<String> = body.split(' ').filter(|t| !t.is_empty()).map(str::to_owned).collect();
        if !tokens.is_empty() {
            out.push(tokens);
        }
    }
    Ok(out)
}

/// Both corpora of one domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainCorpus {
    pub domain: String,
    pub reviews: Sentences,
    pub descriptions: Sentences,
}

impl DomainCorpus {
    pub fn paths(dir: &Path, domain: &str) -> (std::path::PathBuf, std::path::PathBuf) {
        (
            dir.join(format!("{domain}.reviews.txt")),
            dir.join(format!("{domain}.descriptions.txt")),
        )
    }

    pub fn load(dir: &Path, domain: &str) -> Result<Self> {
        let (r, d) = Self::paths(dir, domain);
        for p in [&r, &d] {
            if !p.exists() {
                return Err(Error::Data(format!(
                    "domain {domain}: missing prepared corpus {} (run prep first)",
                    p.display()
                )));
            }
        }
        Ok(DomainCorpus {
            domain: domain.into(),
            reviews: read_sentences(&r, Source::Review)?,
            descriptions: read_sentences(&d, Source::Description)?,
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let (r, d) = Self::paths(dir, &self.domain);
        write_sentences(&r, Source::Review, &self.reviews)?;
        write_sentences(&d, Source::Description, &self.descriptions)
    }

    /// The interleaved corpus: review, description, review, ... with
    /// descriptions cycling until the reviews run out.
    pub fn mixed(&self) -> Result<Vec<(Source, &[String])>> {
        let r: Vec<&[String]> = self.reviews.iter().map(Vec::as_slice).collect();
        let d: Vec<&[String]> = self.descriptions.iter().map(Vec::as_slice).collect();
        build_mixed(&r, &d).map_err(|e| Error::Data(format!("domain {}: {e}", self.domain)))
    }

    /// Counts over the interleaved corpus (the balanced frequencies).
    pub fn mixed_stats(&self) -> Result<VocabStats> {
        let mut stats = VocabStats::new();
        for (source, tokens) in self.mixed()? {
            stats.add_tokens(tokens, source);
        }
        Ok(stats)
    }

    /// Counts over each corpus as prepared (no cycling).
    pub fn raw_stats(&self) -> VocabStats {
        let mut stats = VocabStats::new();
        for s in &self.reviews {
            stats.add_tokens(s, Source::Review);
        }
        for s in &self.descriptions {
            stats.add_tokens(s, Source::Description);
        }
        stats
    }
}

/// Vocabulary table: word, review count, description count; most frequent
/// first.
pub fn write_vocab(path: &Path, stats: &VocabStats) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "word\tf_r\tf_d")?;
        for (word, c) in stats.sorted_by_frequency() {
            writeln!(out, "{word}\t{}\t{}", c.reviews, c.descriptions)?;
        }
        out.flush()
    };
    write(&mut out).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sentence_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = DomainCorpus {
            domain: "toys".into(),
            reviews: vec![vec!["great".into(), "fit".into()], vec!["ok".into()]],
            descriptions: vec![vec!["timex".into(), "radio".into()]],
        };
        corpus.save(dir.path()).unwrap();
        assert_eq!(DomainCorpus::load(dir.path(), "toys").unwrap(), corpus);
        let (r, _) = DomainCorpus::paths(dir.path(), "toys");
        assert_eq!(std::fs::read_to_string(&r).unwrap(), "R\tgreat fit\nR\tok\n");
        assert!(read_sentences(&r, Source::Description).is_err());
        assert!(DomainCorpus::load(dir.path(), "other").is_err());
    }

    #[test]
    fn description_rows_are_sentences() {
        let got: Vec<_> = description_sentences("Timex cd clock radio\n12\nGreat sound. Small size").collect();
        assert_eq!(got, vec![vec!["timex", "cd", "clock", "radio"], vec!["great", "sound"], vec!["small", "size"]]);
        let got: Vec<_> = review_sentences("Fits well\nand looks good. Buy it!").collect();
        assert_eq!(got, vec![vec!["fits", "well", "and", "looks", "good"], vec!["buy", "it"]]);
    }

    #[test]
    fn mixed_cycles_descriptions() {
        let corpus = DomainCorpus {
            domain: "d".into(),
            reviews: vec![vec!["a".into()], vec!["b".into()], vec!["c".into()]],
            descriptions: vec![vec!["x".into()], vec!["y".into()]],
        };
        let stats = corpus.mixed_stats().unwrap();
        assert_eq!(stats.freq_descriptions("x"), 2);
        assert_eq!(stats.freq_descriptions("y"), 1);
        assert_eq!(corpus.raw_stats().freq_descriptions("x"), 1);
    }
}
