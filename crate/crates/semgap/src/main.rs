use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use semgap::config::{Overrides, RunConfig};
use semgap::pipeline::Pipeline;
use semgap::Result;

/// Compression and embedding measures of the vocabulary gap between
/// customer reviews and product descriptions.
#[derive(Parser, Debug)]
#[command(name = "semgap", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random choice of the run.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for domain- and variant-level parallelism.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Redo work whose outputs are already up to date.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract, split and tokenize review and description text.
    Prep,
    /// Compress True and Rand corpora and fit gap scores.
    Gap {
        /// Report rel_delta only, without the cross-domain trend.
        #[arg(long)]
        no_trend: bool,
        /// Label swap probability for the Rand corpora.
        #[arg(long)]
        swap_probability: Option<f64>,
        /// Number of Rand trials.
        #[arg(long)]
        trials: Option<u32>,
    },
    /// Train embeddings and rank words by drift.
    Drift {
        /// Ground-truth TSV (domain, word, note).
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Neighbors compared per word.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Correlations and normality tests over the per-domain tables.
    Stats {
        #[arg(long)]
        gap: Option<PathBuf>,
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        avgj: Option<PathBuf>,
    },
    /// Generate a synthetic suite with planted drift.
    Synth {
        /// Drift level per domain, comma separated.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
    },
    /// prep (or synth), gap, drift and stats in sequence.
    RunAll,
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply(&Overrides {
        seed: cli.global.seed,
        out: cli.global.out.clone(),
        jobs: cli.global.jobs,
    });
    match &cli.command {
        Command::Gap {
            no_trend,
            swap_probability,
            trials,
        } => {
            cfg.gap.no_trend |= no_trend;
            if let Some(p) = swap_probability {
                cfg.gap.swap_probability = *p;
            }
            if let Some(t) = trials {
                cfg.gap.trials = *t;
            }
        }
        Command::Drift { ground_truth, k } => {
            if let Some(g) = ground_truth {
                cfg.drift.ground_truth = Some(g.clone());
            }
            if let Some(k) = k {
                cfg.drift.k = *k;
            }
        }
        Command::Stats { gap, ratings, avgj } => {
            cfg.stats.gap = gap.clone().or(cfg.stats.gap);
            cfg.stats.ratings = ratings.clone().or(cfg.stats.ratings);
            cfg.stats.avgj = avgj.clone().or(cfg.stats.avgj);
        }
        Command::Synth { levels } => {
            let synth = cfg.synth.get_or_insert_with(Default::default);
            if let Some(l) = levels {
                synth.levels = l.clone();
            }
        }
        Command::Prep | Command::RunAll => {}
    }
    let pipeline = Pipeline::new(cfg, cli.global.force)?;
    let out = pipeline.out().display().to_string();
    match cli.command {
        Command::Prep => {
            for s in pipeline.prep()? {
                println!(
                    "{}: {} review sentences, {} description sentences",
                    s.domain, s.review_sentences, s.description_sentences
                );
            }
        }
        Command::Synth { .. } => {
            for t in pipeline.synth()? {
                println!("{}: drift {:.3}, mean rating {:.3}", t.domain, t.drift_level, t.mean_rating);
            }
        }
        Command::Gap { .. } => {
            for r in pipeline.gap()? {
                let score = r.gap_score.map_or_else(|| "-".into(), |s| format!("{s:.6}"));
                println!("{}: delta {:.1} rel_delta {:.6} gap_score {score}", r.domain, r.delta, r.rel_delta);
            }
        }
        Command::Drift { .. } => {
            for e in pipeline.drift()? {
                let auc = e.auc.map_or_else(|| "-".into(), |a| format!("{a:.3}"));
                println!("{}: planted AUC {auc}, {} planted in top decile", e.domain, e.planted_in_top_decile);
            }
        }
        Command::Stats { .. } | Command::RunAll => {
            let report = if matches!(cli.command, Command::RunAll) {
                pipeline.run_all()?
            } else {
                pipeline.stats()?
            };
            for c in &report.correlations {
                println!("{} ~ {} {}: {:.4} (n={}, p={:.3e})", c.x, c.y, c.test, c.statistic, c.n, c.p_value);
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
        }
    }
    println!("outputs in {out}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
