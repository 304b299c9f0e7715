use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use semgap::manifest::{sha256_file, Manifest};
use semgap::report::{read_gap_csv, StatsReport};

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

fn semgap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semgap")).args(args).output().expect("binary runs")
}

fn fixture_config() -> String {
    data("fixture/run.toml").display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_ok(args: &[&str]) -> Output {
    let o = semgap(args);
    assert!(o.status.success(), "{args:?} failed: {}", stderr(&o));
    o
}

/// Writes a config listing only the named fixture domains.
fn subset_config(dir: &Path, names: &[&str]) -> PathBuf {
    let full = std::fs::read_to_string(data("fixture/run.toml")).unwrap();
    let fixture = data("fixture");
    let mut text = String::from("seed = 11\n");
    for name in names {
        let reviews = if *name == "kitchen" { "kitchen.reviews.jsonl.gz".to_owned() } else { format!("{name}.reviews.jsonl") };
        text += &format!(
            "[[domain]]\nname = \"{name}\"\nreviews = \"{}\"\nmeta = \"{}\"\n",
            fixture.join(reviews).display(),
            fixture.join(format!("{name}.meta.jsonl")).display()
        );
    }
    text += &full[full.find("[targets]").unwrap()..];
    let p = dir.join("subset.toml");
    std::fs::write(&p, text).unwrap();
    p
}

const PREP_CHECKSUMS: [(&str, &str); 9] = [
    ("corpus/electronics.descriptions.txt", "68a579bf2167501e01df9023e90b528219e2bb9871e0a5e005a32676de135eb0"),
    ("corpus/electronics.reviews.txt", "37968bde3e07281f09a41e766f8f06869d57f3e90d6a78f7db916065e261f536"),
    ("corpus/electronics.vocab.tsv", "c698d4ac91816184bd6d9d60ec6fd006aad2f21150b95582292ed965506c5ca6"),
    ("corpus/kitchen.descriptions.txt", "84d91e9fdf09f7bf77de03942e6c8dd09dd6b3ad95ef7fee403f2cabfbf2257c"),
    ("corpus/kitchen.reviews.txt", "3bc7ea2944189008c26f155f07ca3fecc5ad389abe998d00a2b06460dbdc0fcc"),
    ("corpus/kitchen.vocab.tsv", "10d8d74eb67ed3b661ce1ed63d99f2bb297acfdd4ba3a6490bc2e1c74137e159"),
    ("corpus/toys.descriptions.txt", "6b1ccbe211aae83cf9ae9fc671a7a12629027e915821e06ad619781c347bf9fc"),
    ("corpus/toys.reviews.txt", "5fc0d6e1172addf86795aaaa4c8eccd78bad0a61267d800690ea3b9df3301a7d"),
    ("corpus/toys.vocab.tsv", "e6e16e9bc07b0935ababf889ee689345baed20b498da37e27f00315b11c2049d"),
];

#[test]
fn prep_fixture_checksums_and_idempotence() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    run_ok(&["--config", &fixture_config(), "--out", o, "prep"]);
    for (rel, sum) in PREP_CHECKSUMS {
        assert_eq!(sha256_file(&out.path().join(rel)).unwrap(), sum, "{rel}");
    }
    let manifest = Manifest::load_or_new(out.path()).unwrap();
    let elec = &manifest.stages["prep"]["domains"]["electronics"]["state"];
    let reviews = &elec["reviews"];
    assert_eq!(reviews["lines"], 201);
    assert_eq!(reviews["malformed"], 1);
    assert_eq!(reviews["first_malformed_line"], 51);
    assert_eq!(
        reviews["lines"].as_u64().unwrap(),
        reviews["records"].as_u64().unwrap() + reviews["skipped"].as_u64().unwrap() + 1
    );
    assert_eq!(elec["descriptions"]["skipped"], 1);
    assert!(manifest.verify(out.path()).unwrap().is_empty());

    let corpus = out.path().join("corpus/toys.reviews.txt");
    let before = std::fs::metadata(&corpus).unwrap().modified().unwrap();
    std::thread::sleep(std::time::Duration::from_millis(20));
    run_ok(&["--config", &fixture_config(), "--out", o, "prep"]);
    assert_eq!(std::fs::metadata(&corpus).unwrap().modified().unwrap(), before);
    run_ok(&["--config", &fixture_config(), "--out", o, "prep", "--force"]);
    assert_ne!(std::fs::metadata(&corpus).unwrap().modified().unwrap(), before);
    for (rel, sum) in PREP_CHECKSUMS {
        assert_eq!(sha256_file(&out.path().join(rel)).unwrap(), sum, "{rel}");
    }
}

#[test]
fn missing_metadata_names_the_domain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        format!(
            "[[domain]]\nname = \"toys\"\nreviews = \"{}\"\nmeta = \"nowhere.jsonl\"\n",
            data("fixture/toys.reviews.jsonl").display()
        ),
    )
    .unwrap();
    let o = semgap(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "prep"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("domain toys"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(semgap(&["gap", "--bogus"]).status.code(), Some(1));
    assert_eq!(semgap(&[]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "sede = 4\n").unwrap();
    assert_eq!(semgap(&["--config", cfg.to_str().unwrap(), "prep"]).status.code(), Some(1));
    assert_eq!(semgap(&["--jobs", "0", "--out", dir.path().to_str().unwrap(), "stats"]).status.code(), Some(1));
    assert!(semgap(&["--help"]).status.success());
}

#[test]
fn gap_on_fixture_and_overrides() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let cfg = fixture_config();
    run_ok(&["--config", &cfg, "--out", o, "prep"]);
    run_ok(&["--config", &cfg, "--out", o, "gap"]);
    let rows = read_gap_csv(&out.path().join("gap_measurements.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.iter().map(|r| r.gap_rank.unwrap()).collect::<Vec<_>>(), [1, 2, 3]);
    let sum: f64 = rows.iter().map(|r| r.gap_score.unwrap()).sum();
    assert!(sum.abs() < 1e-12);
    for r in &rows {
        assert!(r.compression_ratio > 0.0 && r.compression_ratio < 1.0);
        assert_eq!(r.delta, r.c_rand_mean - r.c_true as f64);
    }
    let fig2 = std::fs::read_to_string(out.path().join("fig2.csv")).unwrap();
    assert!(fig2.starts_with("domain,compression_ratio,rel_delta,gap_score\n"));

    run_ok(&["--config", &cfg, "--out", o, "gap", "--swap-probability", "0"]);
    for r in read_gap_csv(&out.path().join("gap_measurements.csv")).unwrap() {
        assert_eq!(r.delta, 0.0, "{}", r.domain);
        assert_eq!(r.c_rand_std, 0.0);
    }
}

#[test]
fn gap_with_too_few_domains() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let cfg = subset_config(out.path(), &["toys"]);
    let cfg = cfg.to_str().unwrap();
    run_ok(&["--config", cfg, "--out", o, "prep"]);
    let fail = semgap(&["--config", cfg, "--out", o, "gap"]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(stderr(&fail).contains("--no-trend"));
    run_ok(&["--config", cfg, "--out", o, "gap", "--no-trend"]);
    let rows = read_gap_csv(&out.path().join("gap_measurements.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].rel_delta != 0.0);
    assert_eq!((rows[0].gap_score, rows[0].gap_rank), (None, None));
}

#[test]
fn drift_outputs_and_ground_truth_errors() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let cfg = fixture_config();
    run_ok(&["--config", &cfg, "--out", o, "prep"]);
    run_ok(&["--config", &cfg, "--out", o, "drift"]);
    assert!(!out.path().join("avgj.csv").exists());
    let ranked = semgap::report::read_drift_csv(&out.path().join("drift_toys.csv")).unwrap();
    assert!(!ranked.is_empty());
    for (i, r) in ranked.iter().enumerate() {
        assert_eq!(r.rank, i + 1);
        assert_eq!(r.neighbors_r.split('|').count(), 5);
        let expect = (r.f_r.min(r.f_d) as f64).ln() * (1.0 - r.jaccard).powi(5);
        assert!((r.score - expect).abs() < 1e-12);
    }

    let gt = data("fixture/ground_truth.tsv");
    run_ok(&["--config", &cfg, "--out", o, "drift", "--ground-truth", gt.to_str().unwrap()]);
    let avgj = std::fs::read_to_string(out.path().join("avgj.csv")).unwrap();
    assert!(avgj.starts_with("domain,m,prefix_len,avg_score,avg_jaccard\n"));
    assert_eq!(avgj.lines().count(), 4);

    let bad = out.path().join("bad_gt.tsv");
    std::fs::write(&bad, "toys\tzyzzyva\t\ntoys\tqwertyuiop\t\n").unwrap();
    let fail = semgap(&["--config", &cfg, "--out", o, "drift", "--ground-truth", bad.to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(stderr(&fail).contains("zyzzyva") && stderr(&fail).contains("qwertyuiop"), "{}", stderr(&fail));

    let fail = semgap(&["--config", &cfg, "--out", o, "drift", "--k", "100000"]);
    assert_eq!(fail.status.code(), Some(1), "{}", stderr(&fail));
}

#[test]
fn stats_on_reference_table_and_mismatched_keys() {
    let out = tempfile::tempdir().unwrap();
    let o = out.path().to_str().unwrap();
    let t = |f: &str| data(&format!("reference_table/{f}")).display().to_string();
    run_ok(&["--out", o, "stats", "--gap", &t("gap.csv"), "--ratings", &t("ratings.csv"), "--avgj", &t("avgj.csv")]);
    let text = std::fs::read_to_string(out.path().join("stats_report.json")).unwrap();
    let report: StatsReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.domains.len(), 28);
    let sp = report.correlation("gap_score", "avg_score", "spearman").unwrap();
    assert_eq!(sp.n, 26);
    let pe = report.correlation("gap_score", "mean_rating", "pearson").unwrap();
    assert_eq!(pe.n, 28);
    assert!(report.correlation("gap_rank", "mean_rating", "pearson").is_some());
    assert_eq!(report.normality_of("avg_score").unwrap().n, 26);

    let ratings = out.path().join("r.csv");
    let full = std::fs::read_to_string(t("ratings.csv")).unwrap();
    std::fs::write(&ratings, full.replace("Gift Cards", "Gift Certificates")).unwrap();
    let fail = semgap(&["--out", o, "stats", "--gap", &t("gap.csv"), "--ratings", ratings.to_str().unwrap()]);
    assert_eq!(fail.status.code(), Some(2));
    assert!(stderr(&fail).contains("Gift Certificates") && stderr(&fail).contains("Gift Cards"));
}

#[test]
fn synth_writes_truth_and_corpora() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("s.toml");
    std::fs::write(
        &cfg,
        "[synth]\nlevels = [0.0, 0.5, 1.0]\nvocab_size = 600\nn_topics = 10\nn_review_sentences = 4000\n\
         n_description_sentences = 800\nplanted_words = 10\nplanted_min_rank = 60\nmin_count_reviews = 20\nmin_count_descriptions = 5\n",
    )
    .unwrap();
    let o = out.path().join("o");
    run_ok(&["--config", cfg.to_str().unwrap(), "--out", o.to_str().unwrap(), "synth"]);
    let truth: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(o.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth.len(), 3);
    assert_eq!(truth[2]["drift_level"], 1.0);
    assert_eq!(truth[0]["planted"].as_array().unwrap().len(), 10);
    let reviews = std::fs::read_to_string(o.join("corpus/synth01.reviews.txt")).unwrap();
    assert_eq!(reviews.lines().count(), 4000);
    assert!(reviews.lines().all(|l| l.starts_with("R\t")));
    let ratings = std::fs::read_to_string(o.join("ratings.csv")).unwrap();
    assert_eq!(ratings.lines().count(), 4);
    let gt = semgap::report::read_ground_truth(&o.join("ground_truth.tsv")).unwrap();
    assert_eq!(gt["synth00"].len(), 10);
}

#[test]
fn run_all_matches_the_stages_run_one_by_one() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixture_config();
    let (a, b) = (out.path().join("a"), out.path().join("b"));
    run_ok(&["--config", &cfg, "--out", a.to_str().unwrap(), "run-all"]);
    for stage in ["prep", "gap", "drift", "stats"] {
        run_ok(&["--config", &cfg, "--out", b.to_str().unwrap(), stage]);
    }
    let ma = Manifest::load_or_new(&a).unwrap();
    let mb = Manifest::load_or_new(&b).unwrap();
    assert!(ma.checksums.contains_key("stats_report.json"), "{:?}", ma.checksums.keys());
    assert_eq!(ma.checksums, mb.checksums);
}
