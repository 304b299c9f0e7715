//! Run configuration: a TOML file with one section per stage, overridable
//! from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use semgap_core::drift::DriftParams;
use semgap_core::embed::TrainParams;
use semgap_core::gap::CompressorSpec;
use semgap_core::mixer::{RandomizationParams, TargetSelectionParams};
use semgap_core::synth::{derive_seed, SynthSpec};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainInput {
    pub name: String,
    pub reviews: PathBuf,
    pub meta: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepConfig {
    /// Only verified reviews contribute to the rating summary.
    pub verified_only: bool,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig { verified_only: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetsConfig {
    pub top_exclude: usize,
    pub min_count: u64,
}

impl Default for TargetsConfig {
    fn default() -> Self {
        let d = TargetSelectionParams::default();
        TargetsConfig {
            top_exclude: d.top_exclude,
            min_count: d.min_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    pub swap_probability: f64,
    pub trials: u32,
    pub compressor: String,
    pub level: u32,
    /// Report rel_delta only, without the cross-domain trend fit.
    pub no_trend: bool,
    /// Also write every labeled corpus to `labeled/`.
    pub write_labeled: bool,
}

impl Default for GapConfig {
    fn default() -> Self {
        let r = RandomizationParams::default();
        let c = CompressorSpec::default();
        GapConfig {
            swap_probability: r.swap_probability,
            trials: r.trials,
            compressor: c.format,
            level: c.level,
            no_trend: false,
            write_labeled: false,
        }
    }
}

/// Overrides for one embedding space; unset fields keep that space's
/// defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub negative: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subsample_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_start: Option<f32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_end: Option<f32>,
}

impl TrainConfig {
    pub fn params(&self, base: TrainParams, seed: u64) -> TrainParams {
        TrainParams {
            dim: self.dim.unwrap_or(base.dim),
            window: self.window.unwrap_or(base.window),
            epochs: self.epochs.unwrap_or(base.epochs),
            min_count: self.min_count.unwrap_or(base.min_count),
            negative: self.negative.unwrap_or(base.negative),
            subsample_threshold: self.subsample_threshold.unwrap_or(base.subsample_threshold),
            lr_start: self.lr_start.unwrap_or(base.lr_start),
            lr_end: self.lr_end.unwrap_or(base.lr_end),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub reviews: TrainConfig,
    pub descriptions: TrainConfig,
    /// Training threads per space. More than one trades determinism for
    /// speed.
    pub threads: usize,
    /// Persist trained spaces under `embeddings/`.
    pub save: bool,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            reviews: TrainConfig::default(),
            descriptions: TrainConfig::default(),
            threads: 1,
            save: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftConfig {
    pub k: usize,
    pub p: u32,
    /// Ground-truth words per domain for the prefix averages.
    pub m: usize,
    /// TSV with columns domain, word, note.
    pub ground_truth: Option<PathBuf>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        let d = DriftParams::default();
        DriftConfig {
            k: d.k,
            p: d.p,
            m: 10,
            ground_truth: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    /// Inputs default to the tables written by earlier stages.
    pub gap: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub avgj: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// One domain per drift level.
    pub levels: Vec<f64>,
    /// Each domain's Zipf exponent is jittered uniformly by up to this much.
    pub zipf_jitter: f64,
    pub vocab_size: usize,
    pub n_topics: usize,
    pub background_words: usize,
    pub n_review_sentences: usize,
    pub n_description_sentences: usize,
    pub sentence_length: usize,
    pub planted_words: usize,
    pub planted_min_rank: usize,
    pub zipf_exponent: f64,
    pub rating_coupling: f64,
    pub rating_noise: f64,
    pub base_rating: f64,
    pub n_ratings: usize,
    pub min_count_reviews: u64,
    pub min_count_descriptions: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        let s = SynthSpec::default();
        SynthConfig {
            levels: vec![0.0, 0.5, 1.0],
            zipf_jitter: 0.0,
            vocab_size: s.vocab_size,
            n_topics: s.n_topics,
            background_words: s.background_words,
            n_review_sentences: s.n_review_sentences,
            n_description_sentences: s.n_description_sentences,
            sentence_length: s.sentence_length,
            planted_words: s.planted_words,
            planted_min_rank: s.planted_min_rank,
            zipf_exponent: s.zipf_exponent,
            rating_coupling: s.rating_coupling,
            rating_noise: s.rating_noise,
            base_rating: s.base_rating,
            n_ratings: s.n_ratings,
            min_count_reviews: s.min_count_reviews,
            min_count_descriptions: s.min_count_descriptions,
        }
    }
}

impl SynthConfig {
    /// The base spec of the suite; drift strength is set per domain.
    pub fn base_spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            vocab_size: self.vocab_size,
            n_topics: self.n_topics,
            background_words: self.background_words,
            n_review_sentences: self.n_review_sentences,
            n_description_sentences: self.n_description_sentences,
            sentence_length: self.sentence_length,
            planted_words: self.planted_words,
            planted_min_rank: self.planted_min_rank,
            drift_strength: 0.0,
            zipf_exponent: self.zipf_exponent,
            rating_coupling: self.rating_coupling,
            rating_noise: self.rating_noise,
            base_rating: self.base_rating,
            n_ratings: self.n_ratings,
            min_count_reviews: self.min_count_reviews,
            min_count_descriptions: self.min_count_descriptions,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Output directory; not part of the reproducibility snapshot.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    #[serde(skip_serializing)]
    pub jobs: usize,
    #[serde(rename = "domain")]
    pub domains: Vec<DomainInput>,
    pub prep: PrepConfig,
    pub targets: TargetsConfig,
    pub gap: GapConfig,
    pub embed: EmbedConfig,
    pub drift: DriftConfig,
    pub stats: StatsConfig,
    pub synth: Option<SynthConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 7,
            out: PathBuf::from("out"),
            jobs: 1,
            domains: Vec::new(),
            prep: PrepConfig::default(),
            targets: TargetsConfig::default(),
            gap: GapConfig::default(),
            embed: EmbedConfig::default(),
            drift: DriftConfig::default(),
            stats: StatsConfig::default(),
            synth: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("invalid config: {e}")))
    }

    /// Loads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut cfg.out);
        for d in &mut cfg.domains {
            resolve(base, &mut d.reviews);
            resolve(base, &mut d.meta);
        }
        for p in [
            &mut cfg.drift.ground_truth,
            &mut cfg.stats.gap,
            &mut cfg.stats.ratings,
            &mut cfg.stats.avgj,
        ]
        .into_iter()
        .flatten()
        {
            resolve(base, p);
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(j) = o.jobs {
            self.jobs = j;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let usage = |m: &str| Err(Error::Usage(m.into()));
        if self.jobs == 0 {
            return usage("jobs must be at least 1");
        }
        if self.embed.threads == 0 {
            return usage("embed.threads must be at least 1");
        }
        let mut names: Vec<&str> = self.domains.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return usage("domain names must be unique");
        }
        for d in &self.domains {
            if d.name.is_empty() || d.name.contains(['/', '\\', '\t', ',']) {
                return Err(Error::Usage(format!("domain name {:?} is not usable as a file name", d.name)));
            }
        }
        self.randomization().validate().map_err(|e| Error::Usage(e.to_string()))?;
        self.train_params().0.validate().map_err(|e| Error::Usage(e.to_string()))?;
        self.train_params().1.validate().map_err(|e| Error::Usage(e.to_string()))?;
        self.drift_params().validate().map_err(|e| Error::Usage(e.to_string()))?;
        if self.drift.m == 0 {
            return usage("drift.m must be at least 1");
        }
        Ok(())
    }

    pub fn target_params(&self) -> TargetSelectionParams {
        TargetSelectionParams {
            top_exclude: self.targets.top_exclude,
            min_count: self.targets.min_count,
        }
    }

    pub fn randomization(&self) -> RandomizationParams {
        RandomizationParams {
            swap_probability: self.gap.swap_probability,
            seed: self.seed,
            trials: self.gap.trials,
        }
    }

    pub fn compressor_spec(&self) -> CompressorSpec {
        CompressorSpec {
            format: self.gap.compressor.clone(),
            level: self.gap.level,
        }
    }

    /// (reviews, descriptions) training parameters with seeds derived from
    /// the run seed.
    pub fn train_params(&self) -> (TrainParams, TrainParams) {
        (
            self.embed.reviews.params(TrainParams::reviews(), derive_seed(self.seed, 1)),
            self.embed.descriptions.params(TrainParams::descriptions(), derive_seed(self.seed, 2)),
        )
    }

    pub fn drift_params(&self) -> DriftParams {
        DriftParams {
            k: self.drift.k,
            p: self.drift.p,
        }
    }

    /// The configuration as recorded in the manifest, with the resolved
    /// training parameters spelled out.
    pub fn snapshot(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let (r, d) = self.train_params();
        let resolved = |p: TrainParams| {
            serde_json::json!({
                "dim": p.dim, "window": p.window, "epochs": p.epochs, "min_count": p.min_count,
                "negative": p.negative, "subsample_threshold": p.subsample_threshold,
                "lr_start": p.lr_start, "lr_end": p.lr_end, "seed": p.seed,
            })
        };
        v["embed"]["reviews"] = resolved(r);
        v["embed"]["descriptions"] = resolved(d);
        v
    }
}
