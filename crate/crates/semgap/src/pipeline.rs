//! The pipeline stages behind the subcommands. Every stage reads and writes
//! under the output directory and records what it did in the manifest.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use semgap_core::drift::{self, avg_score_at_gt, hits_in_top_fraction, rank_words, retrieval_auc, DriftError};
use semgap_core::gap::{compress_variant, fit_gap_scores, Compressor, GapError, GapMeasurement, VariantError, VariantSize};
use semgap_core::mixer::{select_targets, Labeler, TargetVocabulary, Variant};
use semgap_core::synth::{generate_domain, suite_specs, SynthDomain, SynthError, SynthTruth};
use semgap_core::textprep::Source;

use crate::compress::Bzip2;
use crate::config::RunConfig;
use crate::corpus::{description_sentences, review_sentences, write_vocab, DomainCorpus, SentenceWriter};
use crate::embedio;
use crate::error::{Error, Result};
use crate::ingest::{read_descriptions, read_reviews, IngestCounts, RatingCounts, RatingSummary};
use crate::manifest::{record_timing, sha256_file, Manifest};
use crate::parallel::train_cbow_parallel;
use crate::report::{self, AvgjRow, DriftEvalRow, GroundTruth, GroundTruthEntry, RatingRow, StatsInputs};

pub const CORPUS_DIR: &str = "corpus";
pub const GAP_CSV: &str = "gap_measurements.csv";
pub const FIG2_CSV: &str = "fig2.csv";
pub const RATINGS_CSV: &str = "ratings.csv";
pub const AVGJ_CSV: &str = "avgj.csv";
pub const DRIFT_EVAL_CSV: &str = "drift_eval.csv";
pub const STATS_JSON: &str = "stats_report.json";
pub const TRUTH_JSON: &str = "truth.json";
pub const SYNTH_GROUND_TRUTH: &str = "ground_truth.tsv";

/// Per-domain record of how its corpus was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainState {
    pub domain: String,
    pub origin: String,
    /// Hash of every input that determines the prepared corpus.
    pub input_digest: String,
    pub reviews: Option<IngestCounts>,
    pub descriptions: Option<IngestCounts>,
    pub review_sentences: u64,
    pub description_sentences: u64,
    pub review_tokens: u64,
    pub description_tokens: u64,
    pub rating: RatingSummary,
}

fn state_path(out: &Path, domain: &str) -> PathBuf {
    out.join(CORPUS_DIR).join(format!("{domain}.state.json"))
}

fn load_state(out: &Path, domain: &str) -> Result<Option<DomainState>> {
    let p = state_path(out, domain);
    if !p.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(&p).map_err(Error::io(&p))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::data(format!("{}: {e}", p.display())))
}

/// Stage entry point: configuration, output directory and rerun policy.
pub struct Pipeline {
    pub cfg: RunConfig,
    pub force: bool,
    pool: rayon::ThreadPool,
}

impl Pipeline {
    pub fn new(cfg: RunConfig, force: bool) -> Result<Self> {
        cfg.validate()?;
        std::fs::create_dir_all(cfg.out.join(CORPUS_DIR)).map_err(Error::io(&cfg.out))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
        Ok(Pipeline { cfg, force, pool })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.out
    }

    fn path(&self, name: &str) -> PathBuf {
        self.cfg.out.join(name)
    }

    /// Synthetic domain names of the configured suite.
    fn synth_names(&self) -> Vec<String> {
        self.cfg
            .synth
            .as_ref()
            .map(|s| (0..s.levels.len()).map(|i| format!("synth{i:02}")).collect())
            .unwrap_or_default()
    }

    /// Domains the analysis stages operate on: configured inputs, then the
    /// synthetic suite; with neither, every prepared corpus on disk.
    pub fn domains(&self) -> Result<Vec<String>> {
        let mut names: Vec<String> = self.cfg.domains.iter().map(|d| d.name.clone()).collect();
        names.extend(self.synth_names());
        if !names.is_empty() {
            return Ok(names);
        }
        let dir = self.path(CORPUS_DIR);
        let mut found = Vec::new();
        for entry in std::fs::read_dir(&dir).map_err(Error::io(&dir))? {
            let name = entry.map_err(Error::io(&dir))?.file_name().to_string_lossy().into_owned();
            if let Some(d) = name.strip_suffix(".state.json") {
                found.push(d.to_owned());
            }
        }
        found.sort();
        if found.is_empty() {
            return Err(Error::data(format!("no prepared domains under {} (run prep or synth first)", dir.display())));
        }
        Ok(found)
    }

    fn update_manifest(&self, stage: &str, facts: serde_json::Value, started: Instant) -> Result<()> {
        let mut m = Manifest::load_or_new(self.out())?;
        m.config = self.cfg.snapshot();
        m.stages.insert(stage.into(), facts);
        record_timing(self.out(), stage, started.elapsed().as_secs_f64())?;
        m.save(self.out())
    }

    /// Rebuilds `ratings.csv` from the state of every active domain.
    fn write_ratings(&self) -> Result<()> {
        let mut rows = Vec::new();
        for d in self.domains()? {
            if let Some(s) = load_state(self.out(), &d)? {
                rows.push(RatingRow::new(&d, &s.rating));
            }
        }
        report::write_ratings_csv(&self.path(RATINGS_CSV), &rows)
    }

    // -----------------------------------------------------------------------
    // prep

    pub fn prep(&self) -> Result<Vec<DomainState>> {
        let started = Instant::now();
        if self.cfg.domains.is_empty() {
            return Err(Error::Usage("prep needs at least one [[domain]] in the config".into()));
        }
        for d in &self.cfg.domains {
            for (what, p) in [("review", &d.reviews), ("metadata", &d.meta)] {
                if !p.is_file() {
                    return Err(Error::data(format!("domain {}: {what} file {} not found", d.name, p.display())));
                }
            }
        }
        let results: Vec<Result<(DomainState, bool)>> =
            self.pool.install(|| self.cfg.domains.par_iter().map(|d| self.prep_domain(d)).collect());
        let mut states = Vec::new();
        let mut facts = BTreeMap::new();
        for r in results {
            let (state, fresh) = r?;
            facts.insert(state.domain.clone(), json!({ "state": state, "rebuilt": fresh }));
            states.push(state);
        }
        self.write_ratings()?;
        let facts = json!({
            "domains": facts.into_iter().map(|(k, mut v)| {
                v.as_object_mut().unwrap().remove("rebuilt");
                (k, v)
            }).collect::<BTreeMap<_, _>>(),
            "verified_only": self.cfg.prep.verified_only,
        });
        self.update_manifest("prep", facts, started)?;
        Ok(states)
    }

    fn prep_domain(&self, d: &crate::config::DomainInput) -> Result<(DomainState, bool)> {
        let digest = {
            let r = sha256_file(&d.reviews)?;
            let m = sha256_file(&d.meta)?;
            format!("reviews:{r};meta:{m};verified_only:{}", self.cfg.prep.verified_only)
        };
        let (rpath, dpath) = DomainCorpus::paths(&self.path(CORPUS_DIR), &d.name);
        if !self.force && rpath.exists() && dpath.exists() {
            if let Some(state) = load_state(self.out(), &d.name)? {
                if state.input_digest == digest && state.origin == "prep" {
                    return Ok((state, false));
                }
            }
        }
        let tmp = |p: &Path| p.with_extension("txt.tmp");
        let mut rw = SentenceWriter::create(&tmp(&rpath), Source::Review)?;
        let mut ratings = RatingCounts::default();
        let mut write_err = None;
        let verified_only = self.cfg.prep.verified_only;
        let rcounts = read_reviews(&d.reviews, &d.name, |rec| {
            if rec.verified || !verified_only {
                ratings.add(rec.rating);
            }
            for s in review_sentences(&rec.text) {
                if let Err(e) = rw.write(&s) {
                    write_err.get_or_insert(e);
                }
            }
        })?;
        let mut dw = SentenceWriter::create(&tmp(&dpath), Source::Description)?;
        let dcounts = read_descriptions(&d.meta, &d.name, |rec| {
            for s in description_sentences(&rec.text) {
                if let Err(e) = dw.write(&s) {
                    write_err.get_or_insert(e);
                }
            }
        })?;
        if let Some(e) = write_err {
            return Err(Error::io(&rpath)(e));
        }
        let state = DomainState {
            domain: d.name.clone(),
            origin: "prep".into(),
            input_digest: digest,
            reviews: Some(rcounts),
            descriptions: Some(dcounts),
            review_sentences: rw.sentences,
            description_sentences: dw.sentences,
            review_tokens: rw.tokens,
            description_tokens: dw.tokens,
            rating: ratings.summary(),
        };
        rw.finish().map_err(Error::io(&rpath))?;
        dw.finish().map_err(Error::io(&dpath))?;
        if state.review_sentences == 0 || state.description_sentences == 0 {
            return Err(Error::data(format!(
                "domain {}: no usable {} text",
                d.name,
                if state.review_sentences == 0 { "review" } else { "description" }
            )));
        }
        std::fs::rename(tmp(&rpath), &rpath).map_err(Error::io(&rpath))?;
        std::fs::rename(tmp(&dpath), &dpath).map_err(Error::io(&dpath))?;
        let corpus = DomainCorpus::load(&self.path(CORPUS_DIR), &d.name)?;
        write_vocab(&self.path(CORPUS_DIR).join(format!("{}.vocab.tsv", d.name)), &corpus.raw_stats())?;
        report::write_json(&state_path(self.out(), &d.name), &state)?;
        Ok((state, true))
    }

    // -----------------------------------------------------------------------
    // synth

    pub fn synth(&self) -> Result<Vec<SynthTruth>> {
        let started = Instant::now();
        let sc = self
            .cfg
            .synth
            .as_ref()
            .ok_or_else(|| Error::Usage("synth needs a [synth] section in the config".into()))?;
        let base = sc.base_spec(self.cfg.seed);
        let specs = suite_specs(&sc.levels, &base, sc.zipf_jitter).map_err(synth_error)?;
        let results: Vec<Result<SynthTruth>> = self.pool.install(|| {
            specs
                .par_iter()
                .map(|(name, spec)| {
                    let domain = generate_domain(name, spec).map_err(synth_error)?;
                    self.write_synth_domain(&domain)?;
                    Ok(domain.truth)
                })
                .collect()
        });
        let truths = results.into_iter().collect::<Result<Vec<_>>>()?;
        let truth_json: Vec<serde_json::Value> = truths.iter().map(truth_to_json).collect();
        report::write_json(&self.path(TRUTH_JSON), &truth_json)?;
        let gt: GroundTruth = truths
            .iter()
            .map(|t| {
                let entries = t
                    .planted
                    .iter()
                    .map(|w| GroundTruthEntry {
                        word: w.clone(),
                        note: "planted".into(),
                    })
                    .collect();
                (t.domain.clone(), entries)
            })
            .collect();
        report::write_ground_truth(&self.path(SYNTH_GROUND_TRUTH), &gt)?;
        self.write_ratings()?;
        self.update_manifest("synth", json!({ "domains": truth_json }), started)?;
        Ok(truths)
    }

    fn write_synth_domain(&self, domain: &SynthDomain) -> Result<()> {
        let dir = self.path(CORPUS_DIR);
        let (rpath, dpath) = DomainCorpus::paths(&dir, &domain.name);
        let write = |path: &Path, source, sentences: &[Vec<u32>]| -> Result<(u64, u64)> {
            let mut w = SentenceWriter::create(path, source)?;
            for s in sentences {
                let tokens: Vec<&str> = s.iter().map(|&i| domain.words[i as usize].as_str()).collect();
                w.write(&tokens).map_err(Error::io(path))?;
            }
            let counts = (w.sentences, w.tokens);
            w.finish().map_err(Error::io(path))?;
            Ok(counts)
        };
        let (rs, rt) = write(&rpath, Source::Review, &domain.reviews)?;
        let (ds, dt) = write(&dpath, Source::Description, &domain.descriptions)?;
        let mut ratings = RatingCounts::default();
        domain.ratings.iter().for_each(|&r| ratings.add(r));
        let state = DomainState {
            domain: domain.name.clone(),
            origin: "synth".into(),
            input_digest: format!("seed:{}", domain.truth.seed),
            reviews: None,
            descriptions: None,
            review_sentences: rs,
            description_sentences: ds,
            review_tokens: rt,
            description_tokens: dt,
            rating: ratings.summary(),
        };
        let corpus = DomainCorpus::load(&dir, &domain.name)?;
        write_vocab(&dir.join(format!("{}.vocab.tsv", domain.name)), &corpus.raw_stats())?;
        report::write_json(&state_path(self.out(), &domain.name), &state)
    }

    // -----------------------------------------------------------------------
    // gap

    /// Measures every domain; with `no_trend` (or fewer than three domains
    /// and `no_trend` set) only rel_delta is reported.
    pub fn gap(&self) -> Result<Vec<report::GapRow>> {
        let started = Instant::now();
        let domains = self.domains()?;
        let no_trend = self.cfg.gap.no_trend;
        if domains.len() < 3 && !no_trend {
            return Err(Error::data(format!(
                "the trend fit needs at least 3 domains, got {}; rerun with --no-trend to report rel_delta only",
                domains.len()
            )));
        }
        let compressor = Bzip2::new(&self.cfg.compressor_spec()).map_err(|e| Error::Usage(e.to_string()))?;
        let results: Vec<Result<(GapMeasurement, serde_json::Value)>> =
            self.pool.install(|| domains.par_iter().map(|d| self.gap_domain(d, &compressor)).collect());
        let mut measurements = Vec::new();
        let mut facts = BTreeMap::new();
        for r in results {
            let (m, f) = r?;
            facts.insert(m.domain.clone(), f);
            measurements.push(m);
        }
        let table = if no_trend {
            None
        } else {
            Some(fit_gap_scores::<Infallible>(&measurements).map_err(|e| Error::data(e.to_string()))?)
        };
        let rows = report::gap_rows(&measurements, table.as_ref());
        report::write_gap_csv(&self.path(GAP_CSV), &rows)?;
        report::write_fig2_csv(&self.path(FIG2_CSV), &rows)?;
        let fit = table.as_ref().map(|t| {
            json!({ "intercept": t.intercept, "slope": t.slope, "r_squared": t.r_squared, "degenerate": t.degenerate })
        });
        self.update_manifest(
            "gap",
            json!({
                "compressor": compressor.identity(),
                "randomization": { "swap_probability": self.cfg.gap.swap_probability, "trials": self.cfg.gap.trials, "seed": self.cfg.seed },
                "fit": fit,
                "domains": facts,
            }),
            started,
        )?;
        Ok(rows)
    }

    fn gap_domain(&self, domain: &str, compressor: &Bzip2) -> Result<(GapMeasurement, serde_json::Value)> {
        let corpus = DomainCorpus::load(&self.path(CORPUS_DIR), domain)?;
        let mixed = corpus.mixed()?;
        let stats = corpus.mixed_stats()?;
        let targets = select_targets(&stats, self.cfg.target_params()).map_err(|e| Error::data(format!("{domain}: {e}")))?;
        let params = self.cfg.randomization();
        let variants: Vec<Variant> = std::iter::once(Variant::True)
            .chain((0..params.trials).map(Variant::Rand))
            .collect();
        let sizes: Vec<Result<VariantSize>> = variants
            .par_iter()
            .map(|&v| {
                let items = mixed.iter().map(|(s, t)| Ok::<_, Infallible>((*s, *t)));
                compress_variant(compressor, &targets, v, &params, items).map_err(|e| match e {
                    VariantError::Compressor(c) => Error::data(format!("{domain}: compressor failed: {c}")),
                    VariantError::Mix(m) => Error::Usage(m.to_string()),
                    VariantError::Input(never) => match never {},
                })
            })
            .collect();
        let sizes = sizes.into_iter().collect::<Result<Vec<_>>>()?;
        if self.cfg.gap.write_labeled {
            self.write_labeled(domain, &mixed, &targets, &variants)?;
        }
        let m = GapMeasurement::from_sizes::<Infallible>(domain, targets.len(), &sizes[0], &sizes[1..]).map_err(|e| match e {
            GapError::RawSizeMismatch { .. } => Error::Invariant(format!("{domain}: {e}")),
            other => Error::data(format!("{domain}: {other}")),
        })?;
        let facts = json!({
            "targets": targets.len(),
            "labeled_occurrences": m.labeled,
            "c_true": m.c_true,
            "c_rand": sizes[1..].iter().map(|s| s.compressed).collect::<Vec<_>>(),
            "flipped": sizes[1..].iter().map(|s| s.labels.flipped).collect::<Vec<_>>(),
        });
        Ok((m, facts))
    }

    fn write_labeled(&self, domain: &str, mixed: &[(Source, &[String])], targets: &TargetVocabulary, variants: &[Variant]) -> Result<()> {
        let dir = self.path("labeled");
        std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
        let params = self.cfg.randomization();
        for &v in variants {
            let path = dir.join(format!("{domain}.{v}.txt"));
            let mut out = BufWriter::new(File::create(&path).map_err(Error::io(&path))?);
            let mut labeler = Labeler::new(targets, v, &params).map_err(|e| Error::Usage(e.to_string()))?;
            let mut buf = Vec::new();
            for (s, t) in mixed {
                buf.clear();
                labeler.write_sentence(t, *s, &mut buf);
                out.write_all(&buf).map_err(Error::io(&path))?;
            }
            out.flush().map_err(Error::io(&path))?;
        }
        Ok(())
    }

    // -----------------------------------------------------------------------
    // drift

    fn ground_truth(&self) -> Result<Option<GroundTruth>> {
        match &self.cfg.drift.ground_truth {
            Some(p) => report::read_ground_truth(p).map(Some),
            None => {
                let synth = self.path(SYNTH_GROUND_TRUTH);
                if self.cfg.synth.is_some() && synth.exists() {
                    report::read_ground_truth(&synth).map(Some)
                } else {
                    Ok(None)
                }
            }
        }
    }

    fn planted_truth(&self) -> Result<BTreeMap<String, Vec<String>>> {
        let p = self.path(TRUTH_JSON);
        if !p.exists() {
            return Ok(BTreeMap::new());
        }
        let text = std::fs::read_to_string(&p).map_err(Error::io(&p))?;
        let v: Vec<serde_json::Value> = serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", p.display())))?;
        Ok(v.into_iter()
            .filter_map(|t| {
                let domain = t["domain"].as_str()?.to_owned();
                let words = t["planted"].as_array()?.iter().filter_map(|w| w.as_str().map(str::to_owned)).collect();
                Some((domain, words))
            })
            .collect())
    }

    pub fn drift(&self) -> Result<Vec<DriftEvalRow>> {
        let started = Instant::now();
        let domains = self.domains()?;
        let gt = self.ground_truth()?;
        let planted = self.planted_truth()?;
        let results: Vec<Result<(Option<AvgjRow>, Option<DriftEvalRow>, serde_json::Value)>> = self.pool.install(|| {
            domains
                .par_iter()
                .map(|d| self.drift_domain(d, gt.as_ref(), planted.get(d)))
                .collect()
        });
        let mut avgj = Vec::new();
        let mut evals = Vec::new();
        let mut facts = BTreeMap::new();
        for (d, r) in domains.iter().zip(results) {
            let (a, e, f) = r?;
            avgj.extend(a);
            evals.extend(e);
            facts.insert(d.clone(), f);
        }
        if gt.is_some() {
            report::write_avgj_csv(&self.path(AVGJ_CSV), &avgj)?;
        }
        if !evals.is_empty() {
            report::write_drift_eval_csv(&self.path(DRIFT_EVAL_CSV), &evals)?;
        }
        self.update_manifest(
            "drift",
            json!({
                "k": self.cfg.drift.k, "p": self.cfg.drift.p, "m": self.cfg.drift.m,
                "embedding_threads": self.cfg.embed.threads,
                "deterministic": self.cfg.embed.threads == 1,
                "domains": facts,
            }),
            started,
        )?;
        Ok(evals)
    }

    fn drift_domain(
        &self,
        domain: &str,
        gt: Option<&GroundTruth>,
        planted: Option<&Vec<String>>,
    ) -> Result<(Option<AvgjRow>, Option<DriftEvalRow>, serde_json::Value)> {
        let corpus = DomainCorpus::load(&self.path(CORPUS_DIR), domain)?;
        let (pr, pd) = self.cfg.train_params();
        let threads = self.cfg.embed.threads;
        let embed_err = |what: &str, e: semgap_core::embed::EmbedError| Error::data(format!("{domain}: {what} embeddings: {e}"));
        let space_r = train_cbow_parallel(&corpus.reviews, pr, threads).map_err(|e| embed_err("review", e))?;
        let space_d = train_cbow_parallel(&corpus.descriptions, pd, threads).map_err(|e| embed_err("description", e))?;
        if self.cfg.embed.save {
            let dir = self.path("embeddings");
            std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
            embedio::write_binary(&space_r, &dir.join(format!("{domain}.reviews.bin")))?;
            embedio::write_binary(&space_d, &dir.join(format!("{domain}.descriptions.bin")))?;
        }
        let balanced = corpus.mixed_stats()?;
        let ranked = rank_words(&space_r, &space_d, &balanced, &self.cfg.drift_params()).map_err(|e| match e {
            DriftError::Embed(semgap_core::embed::EmbedError::KTooLarge { k, available }) => Error::Usage(format!(
                "{domain}: k = {k} exceeds the {available} neighbors available in an embedding space"
            )),
            other => Error::data(format!("{domain}: {other}")),
        })?;
        report::write_drift_csv(&self.path(&format!("drift_{domain}.csv")), &ranked)?;
        let avgj = match gt.and_then(|g| g.get(domain)) {
            Some(entries) => {
                let words: Vec<&str> = entries.iter().map(|e| e.word.as_str()).collect();
                let p = avg_score_at_gt(&ranked, &words, self.cfg.drift.m).map_err(|e| match e {
                    drift::DriftError::MissingGroundTruth(w) => {
                        Error::data(format!("{domain}: ground-truth words missing from the ranking: {}", w.join(", ")))
                    }
                    other => Error::data(format!("{domain}: {other}")),
                })?;
                Some(AvgjRow::new(domain, &p))
            }
            None => None,
        };
        let eval = planted.map(|words| {
            let scored: std::collections::HashSet<&str> = ranked.iter().map(|r| r.word.as_str()).collect();
            DriftEvalRow {
                domain: domain.into(),
                scored_words: ranked.len(),
                planted: words.len(),
                planted_scored: words.iter().filter(|w| scored.contains(w.as_str())).count(),
                auc: retrieval_auc(&ranked, words),
                planted_in_top_decile: hits_in_top_fraction(&ranked, words, 0.1),
            }
        });
        let facts = json!({
            "vocab_reviews": space_r.len(),
            "vocab_descriptions": space_d.len(),
            "scored_words": ranked.len(),
            "final_loss_reviews": space_r.report.epoch_losses.last(),
            "final_loss_descriptions": space_d.report.epoch_losses.last(),
            "undersized_descriptions": space_d.report.undersized,
        });
        Ok((avgj, eval, facts))
    }

    // -----------------------------------------------------------------------
    // stats

    pub fn stats(&self) -> Result<report::StatsReport> {
        let started = Instant::now();
        let s = &self.cfg.stats;
        let gap = s.gap.clone().unwrap_or_else(|| self.path(GAP_CSV));
        let ratings = s.ratings.clone().unwrap_or_else(|| self.path(RATINGS_CSV));
        let avgj = s.avgj.clone().or_else(|| Some(self.path(AVGJ_CSV)).filter(|p| p.exists()));
        for p in [&gap, &ratings].into_iter().chain(avgj.as_ref()) {
            if !p.is_file() {
                return Err(Error::data(format!("stats input {} not found", p.display())));
            }
        }
        let inputs = StatsInputs::load(&gap, &ratings, avgj.as_deref())?;
        let report = report::stats_battery(&inputs)?;
        report::write_json(&self.path(STATS_JSON), &report)?;
        let name = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned());
        self.update_manifest(
            "stats",
            json!({
                "inputs": { "gap": name(&gap), "ratings": name(&ratings), "avgj": avgj.as_deref().and_then(name) },
                "domains": report.domains.len(),
            }),
            started,
        )?;
        Ok(report)
    }

    // -----------------------------------------------------------------------
    // run-all

    /// prep (or synth) → gap → drift → stats.
    pub fn run_all(&self) -> Result<report::StatsReport> {
        if self.cfg.domains.is_empty() && self.cfg.synth.is_none() {
            return Err(Error::Usage("run-all needs [[domain]] inputs or a [synth] section".into()));
        }
        if !self.cfg.domains.is_empty() {
            self.prep()?;
        }
        if self.cfg.synth.is_some() {
            self.synth()?;
        }
        self.gap()?;
        self.drift()?;
        self.stats()
    }
}

fn synth_error(e: SynthError) -> Error {
    match e {
        SynthError::Invalid(_) | SynthError::TooFewDomains(_) => Error::Usage(e.to_string()),
        SynthError::Infeasible { .. } => Error::data(e.to_string()),
    }
}

fn truth_to_json(t: &SynthTruth) -> serde_json::Value {
    json!({
        "domain": t.domain,
        "planted": t.planted,
        "drift_level": t.drift_level,
        "zipf_exponent": t.zipf_exponent,
        "rating_coupling": t.rating_coupling,
        "target_mean_rating": t.target_mean_rating,
        "mean_rating": t.mean_rating,
        "seed": t.seed,
    })
}
