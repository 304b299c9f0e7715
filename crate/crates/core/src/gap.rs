//! The compression differential between True and Rand labeled corpora and
//! its conversion into per-domain gap scores.
//!
//! For one domain, δ = mean C(Rand) − C(True) where C is the compressed
//! size. The relative differential δ / C(True) is regressed on the
//! compression ratio C(True) / raw size across domains; the residual of each
//! domain is its gap score.

use alloc::string::String;
use alloc::vec::Vec;
use core::convert::Infallible;
use core::fmt;

use thiserror::Error;

use crate::mixer::{LabelSummary, Labeler, MixError, RandomizationParams, TargetVocabulary, Variant};
use crate::stats::{self, StatsError};
use crate::textprep::Source;

/// Which codec and settings produce compressed sizes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressorSpec {
    pub format: String,
    /// Work factor; for bzip2 this is the block size in units of 100k.
    pub level: u32,
}

impl Default for CompressorSpec {
    fn default() -> Self {
        CompressorSpec {
            format: String::from("bzip2"),
            level: 9,
        }
    }
}

/// Receives bytes and reports how many compressed bytes they produced.
pub trait SizeSink {
    type Error;
    fn write(&mut self, bytes: &[u8]) -> Result<(), Self::Error>;
    fn finish(self) -> Result<u64, Self::Error>;
}

/// A compressor whose only observable output is the compressed length.
pub trait Compressor {
    type Error;
    type Sink: SizeSink<Error = Self::Error>;

    fn sink(&self) -> Result<Self::Sink, Self::Error>;

    /// Human-readable codec identity for run manifests.
    fn identity(&self) -> String;

    fn compressed_size(&self, data: &[u8]) -> Result<u64, Self::Error> {
        let mut sink = self.sink()?;
        sink.write(data)?;
        sink.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GapError<E: fmt::Debug + fmt::Display> {
    #[error("compressor failed: {0}")]
    Compressor(E),
    #[error(transparent)]
    Mix(#[from] MixError),
    #[error("{variant} corpus serialized to {got} bytes but True has {expected}")]
    RawSizeMismatch { variant: Variant, expected: u64, got: u64 },
    #[error("the True corpus is empty")]
    EmptyCorpus,
    #[error("no Rand trial sizes supplied")]
    NoTrials,
    #[error("trend fit needs at least 3 domains, got {0}")]
    TooFewDomains(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Raw and compressed size of one labeled variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariantSize {
    pub variant: Variant,
    pub raw_size: u64,
    pub compressed: u64,
    pub labels: LabelSummary,
}

/// Failure while producing one labeled variant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VariantError<C: fmt::Debug + fmt::Display, I: fmt::Debug + fmt::Display> {
    #[error("compressor failed: {0}")]
    Compressor(C),
    #[error("reading the corpus failed: {0}")]
    Input(I),
    #[error(transparent)]
    Mix(#[from] MixError),
}

/// Labels a mixed-corpus stream and feeds it straight into the compressor.
pub fn compress_variant<C, I, T, S, E>(
    compressor: &C,
    targets: &TargetVocabulary,
    variant: Variant,
    params: &RandomizationParams,
    sentences: I,
) -> Result<VariantSize, VariantError<C::Error, E>>
where
    C: Compressor,
    C::Error: fmt::Debug + fmt::Display,
    I: IntoIterator<Item = Result<(Source, T), E>>,
    T: AsRef<[S]>,
    S: AsRef<str>,
    E: fmt::Debug + fmt::Display,
{
    let mut labeler = Labeler::new(targets, variant, params)?;
    let mut sink = compressor.sink().map_err(VariantError::Compressor)?;
    let mut buf = Vec::with_capacity(1 << 16);
    for item in sentences {
        let (source, tokens) = item.map_err(VariantError::Input)?;
        labeler.write_sentence(tokens.as_ref(), source, &mut buf);
        if buf.len() >= 1 << 16 {
            sink.write(&buf).map_err(VariantError::Compressor)?;
            buf.clear();
        }
    }
    if !buf.is_empty() {
        sink.write(&buf).map_err(VariantError::Compressor)?;
    }
    let compressed = sink.finish().map_err(VariantError::Compressor)?;
    let labels = labeler.summary();
    Ok(VariantSize {
        variant,
        raw_size: labels.bytes,
        compressed,
        labels,
    })
}

/// Compression measurements of one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct GapMeasurement {
    pub domain: String,
    pub raw_size: u64,
    pub c_true: u64,
    pub c_rand_mean: f64,
    /// Sample standard deviation over Rand trials (0 for a single trial).
    pub c_rand_std: f64,
    pub delta: f64,
    pub rel_delta: f64,
    pub compression_ratio: f64,
    pub trials: u32,
    /// Labeled target occurrences per variant.
    pub labeled: u64,
    pub targets: usize,
}

impl GapMeasurement {
    /// Combines variant sizes, checking that every variant serialized to the
    /// same number of bytes.
    pub fn from_sizes<E: fmt::Debug + fmt::Display>(
        domain: &str,
        targets: usize,
        truth: &VariantSize,
        rand: &[VariantSize],
    ) -> Result<Self, GapError<E>> {
        if rand.is_empty() {
            return Err(GapError::NoTrials);
        }
        if truth.raw_size == 0 || truth.compressed == 0 {
            return Err(GapError::EmptyCorpus);
        }
        for r in rand {
            if r.raw_size != truth.raw_size || r.labels.labeled() != truth.labels.labeled() {
                return Err(GapError::RawSizeMismatch {
                    variant: r.variant,
                    expected: truth.raw_size,
                    got: r.raw_size,
                });
            }
        }
        let sizes: Vec<f64> = rand.iter().map(|r| r.compressed as f64).collect();
        let c_rand_mean = stats::mean(&sizes);
        let c_rand_std = if sizes.len() > 1 {
            let ss: f64 = sizes.iter().map(|s| (s - c_rand_mean) * (s - c_rand_mean)).sum();
            libm::sqrt(ss / (sizes.len() - 1) as f64)
        } else {
            0.0
        };
        let c_true = truth.compressed;
        let delta = c_rand_mean - c_true as f64;
        Ok(GapMeasurement {
            domain: domain.into(),
            raw_size: truth.raw_size,
            c_true,
            c_rand_mean,
            c_rand_std,
            delta,
            rel_delta: delta / c_true as f64,
            compression_ratio: c_true as f64 / truth.raw_size as f64,
            trials: rand.len() as u32,
            labeled: truth.labels.labeled(),
            targets,
        })
    }
}

/// Runs the True variant and every Rand trial over an in-memory mixed
/// corpus.
pub fn measure_gap<C, S>(
    domain: &str,
    mixed: &[(Source, Vec<S>)],
    targets: &TargetVocabulary,
    params: &RandomizationParams,
    compressor: &C,
) -> Result<GapMeasurement, GapError<C::Error>>
where
    C: Compressor,
    C::Error: fmt::Debug + fmt::Display,
    S: AsRef<str>,
{
    params.validate()?;
    let run = |variant| {
        compress_variant(
            compressor,
            targets,
            variant,
            params,
            mixed.iter().map(|(s, t)| Ok::<_, Infallible>((*s, t.as_slice()))),
        )
        .map_err(|e| match e {
            VariantError::Compressor(c) => GapError::Compressor(c),
            VariantError::Mix(m) => GapError::Mix(m),
            VariantError::Input(never) => match never {},
        })
    };
    let truth = run(Variant::True)?;
    let rand = (0..params.trials)
        .map(|t| run(Variant::Rand(t)))
        .collect::<Result<Vec<_>, _>>()?;
    GapMeasurement::from_sizes(domain, targets.len(), &truth, &rand)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapScore {
    pub domain: String,
    pub compression_ratio: f64,
    pub rel_delta: f64,
    pub gap_score: f64,
    /// 1 for the largest gap.
    pub rank: usize,
}

/// Trend-line residuals across domains, ranked by descending gap score.
#[derive(Debug, Clone, PartialEq)]
pub struct GapScoreTable {
    pub scores: Vec<GapScore>,
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
    /// Set when every compression ratio was identical and the scores are
    /// deviations from the mean relative differential instead.
    pub degenerate: bool,
}

impl GapScoreTable {
    pub fn get(&self, domain: &str) -> Option<&GapScore> {
        self.scores.iter().find(|s| s.domain == domain)
    }
}

/// Fits rel_delta = a + b·compression_ratio by least squares and scores each
/// domain by its residual.
pub fn fit_gap_scores<E: fmt::Debug + fmt::Display>(
    measurements: &[GapMeasurement],
) -> Result<GapScoreTable, GapError<E>> {
    if measurements.len() < 3 {
        return Err(GapError::TooFewDomains(measurements.len()));
    }
    let x: Vec<f64> = measurements.iter().map(|m| m.compression_ratio).collect();
    let y: Vec<f64> = measurements.iter().map(|m| m.rel_delta).collect();
    let (intercept, slope, r_squared, residuals, degenerate) = match stats::ols(&x, &y) {
        Ok(fit) => (fit.intercept, fit.slope, fit.r_squared, fit.residuals, false),
        Err(StatsError::ConstantX) => {
            let my = stats::mean(&y);
            (my, 0.0, 0.0, y.iter().map(|v| v - my).collect(), true)
        }
        Err(e) => return Err(e.into()),
    };
    let mut scores: Vec<GapScore> = measurements
        .iter()
        .zip(residuals)
        .map(|(m, r)| GapScore {
            domain: m.domain.clone(),
            compression_ratio: m.compression_ratio,
            rel_delta: m.rel_delta,
            gap_score: r,
            rank: 0,
        })
        .collect();
    scores.sort_by(|a, b| b.gap_score.total_cmp(&a.gap_score).then_with(|| a.domain.cmp(&b.domain)));
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(GapScoreTable {
        scores,
        intercept,
        slope,
        r_squared,
        degenerate,
    })
}
