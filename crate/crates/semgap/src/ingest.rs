//! Review and product-metadata JSON lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReviewRecord {
    pub text: String,
    pub rating: u8,
    pub verified: bool,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptionRecord {
    pub text: String,
    pub domain: String,
}

/// Metadata fields that make up a description, in concatenation order.
pub const DESCRIPTION_FIELDS: [&str; 5] = ["title", "tech1", "description", "feature", "similar_item"];

#[derive(Debug, Deserialize)]
struct RawReview {
    #[serde(rename = "reviewText")]
    review_text: Option<Value>,
    overall: Option<Value>,
    verified: Option<Value>,
}

fn parse_rating(v: &Value) -> Option<u8> {
    let x = match v {
        Value::Number(n) => n.as_f64()?,
        Value::String(s) => s.trim().parse::<f64>().ok()?,
        _ => return None,
    };
    (x.fract() == 0.0 && (1.0..=5.0).contains(&x)).then_some(x as u8)
}

/// Parses one review line. `Ok(None)` is a skip: no usable text or a rating
/// outside 1..=5.
pub fn parse_review_line(line: &str, domain: &str) -> Result<Option<ReviewRecord>, serde_json::Error> {
    let raw: RawReview = serde_json::from_str(line)?;
    let text = match raw.review_text {
        Some(Value::String(s)) if !s.trim().is_empty() => s,
        _ => return Ok(None),
    };
    let Some(rating) = raw.overall.as_ref().and_then(parse_rating) else {
        return Ok(None);
    };
    let verified = matches!(raw.verified, Some(Value::Bool(true)));
    Ok(Some(ReviewRecord {
        text,
        rating,
        verified,
        domain: domain.into(),
    }))
}

fn push_field(parts: &mut Vec<String>, v: &Value) {
    match v {
        Value::String(s) if !s.trim().is_empty() => parts.push(s.clone()),
        Value::Array(items) => items.iter().for_each(|item| push_field(parts, item)),
        _ => {}
    }
}

/// Parses one metadata line into newline-joined description text.
/// `Ok(None)` is a skip: none of the description fields carry text.
pub fn parse_meta_line(line: &str, domain: &str) -> Result<Option<DescriptionRecord>, serde_json::Error> {
    let raw: serde_json::Map<String, Value> = serde_json::from_str(line)?;
    let mut parts = Vec::new();
    for field in DESCRIPTION_FIELDS {
        if let Some(v) = raw.get(field) {
            push_field(&mut parts, v);
        }
    }
    if parts.is_empty() {
        return Ok(None);
    }
    Ok(Some(DescriptionRecord {
        text: parts.join("\n"),
        domain: domain.into(),
    }))
}

/// Star counts; merging is associative and order-free, so summaries are
/// exact regardless of how a stream is sharded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingCounts {
    pub stars: [u64; 5],
}

impl RatingCounts {
    pub fn add(&mut self, rating: u8) {
        self.stars[usize::from(rating - 1)] += 1;
    }

    pub fn merge(&mut self, other: &RatingCounts) {
        for (a, b) in self.stars.iter_mut().zip(other.stars) {
            *a += b;
        }
    }

    pub fn summary(&self) -> RatingSummary {
        let n: u64 = self.stars.iter().sum();
        if n == 0 {
            return RatingSummary {
                n_verified: 0,
                mean: None,
                std: None,
            };
        }
        let nf = n as f64;
        let mean = self.stars.iter().enumerate().map(|(i, &c)| (i + 1) as f64 * c as f64).sum::<f64>() / nf;
        let var = self
            .stars
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = (i + 1) as f64 - mean;
                d * d * c as f64
            })
            .sum::<f64>()
            / nf;
        let distinct = self.stars.iter().filter(|&&c| c > 0).count();
        RatingSummary {
            n_verified: n,
            mean: Some(mean),
            std: Some(if distinct == 1 { 0.0 } else { var.sqrt() }),
        }
    }
}

/// Mean and population standard deviation of the kept ratings; both are
/// `None` when no rating was kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingSummary {
    pub n_verified: u64,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

pub fn summarize_ratings<'a>(records: impl IntoIterator<Item = &'a ReviewRecord>, verified_only: bool) -> RatingSummary {
    let mut counts = RatingCounts::default();
    for r in records {
        if r.verified || !verified_only {
            counts.add(r.rating);
        }
    }
    counts.summary()
}

/// Opens a file for line reading, transparently decompressing gzip input
/// (recognized by its magic bytes, not its name).
pub fn open_lines(path: &Path) -> Result<Box<dyn BufRead + Send>> {
    let mut file = File::open(path).map_err(Error::io(path))?;
    let mut magic = [0u8; 2];
    let mut got = 0;
    while got < 2 {
        let n = file.read(&mut magic[got..]).map_err(Error::io(path))?;
        if n == 0 {
            break;
        }
        got += n;
    }
    let head = io::Cursor::new(magic[..got].to_vec());
    let chained = head.chain(file);
    Ok(if got == 2 && magic == [0x1f, 0x8b] {
        Box::new(BufReader::new(MultiGzDecoder::new(chained)))
    } else {
        Box::new(BufReader::with_capacity(1 << 16, chained))
    })
}

/// Line accounting of one input file: `lines = records + skipped + malformed`
/// (blank lines are not counted).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestCounts {
    pub lines: u64,
    pub records: u64,
    pub skipped: u64,
    pub malformed: u64,
    /// 1-based line number of the first malformed line, if any.
    pub first_malformed_line: Option<u64>,
}

fn read_jsonl<T>(
    path: &Path,
    domain: &str,
    parse: impl Fn(&str, &str) -> Result<Option<T>, serde_json::Error>,
    mut sink: impl FnMut(T),
) -> Result<IngestCounts> {
    let mut counts = IngestCounts::default();
    let reader = open_lines(path)?;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        if line.trim().is_empty() {
            continue;
        }
        counts.lines += 1;
        match parse(&line, domain) {
            Ok(Some(rec)) => {
                counts.records += 1;
                sink(rec);
            }
            Ok(None) => counts.skipped += 1,
            Err(_) => {
                counts.malformed += 1;
                counts.first_malformed_line.get_or_insert(i as u64 + 1);
            }
        }
    }
    Ok(counts)
}

/// Streams review records of one file into `sink`.
pub fn read_reviews(path: &Path, domain: &str, sink: impl FnMut(ReviewRecord)) -> Result<IngestCounts> {
    read_jsonl(path, domain, parse_review_line, sink)
}

/// Streams description records of one file into `sink`.
pub fn read_descriptions(path: &Path, domain: &str, sink: impl FnMut(DescriptionRecord)) -> Result<IngestCounts> {
    read_jsonl(path, domain, parse_meta_line, sink)
}
