//! Tabular outputs (CSV), the ground-truth TSV and the statistics report.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use semgap_core::drift::{DriftRecord, PrefixAverage};
use semgap_core::gap::{GapMeasurement, GapScoreTable};
use semgap_core::stats::{self, StatResult, StatsError, DAGOSTINO_VALIDITY_FLOOR};

use crate::error::{Error, Result};
use crate::ingest::{open_lines, RatingSummary};

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(Error::io(path))
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(open_lines(path)?);
    r.deserialize()
        .map(|row| row.map_err(|e| Error::data(format!("{}: {e}", path.display()))))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub domain: String,
    pub raw_size: u64,
    pub c_true: u64,
    pub c_rand_mean: f64,
    pub c_rand_std: f64,
    pub delta: f64,
    pub rel_delta: f64,
    pub compression_ratio: f64,
    pub gap_score: Option<f64>,
    pub gap_rank: Option<usize>,
}

/// Rows in rank order when a trend was fitted, else in input order.
pub fn gap_rows(measurements: &[GapMeasurement], table: Option<&GapScoreTable>) -> Vec<GapRow> {
    let row = |m: &GapMeasurement| {
        let score = table.and_then(|t| t.get(&m.domain));
        GapRow {
            domain: m.domain.clone(),
            raw_size: m.raw_size,
            c_true: m.c_true,
            c_rand_mean: m.c_rand_mean,
            c_rand_std: m.c_rand_std,
            delta: m.delta,
            rel_delta: m.rel_delta,
            compression_ratio: m.compression_ratio,
            gap_score: score.map(|s| s.gap_score),
            gap_rank: score.map(|s| s.rank),
        }
    };
    let mut rows: Vec<GapRow> = measurements.iter().map(row).collect();
    if table.is_some() {
        rows.sort_by_key(|r| r.gap_rank);
    }
    rows
}

pub fn write_gap_csv(path: &Path, rows: &[GapRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn read_gap_csv(path: &Path) -> Result<Vec<GapRow>> {
    read_csv(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub domain: String,
    pub compression_ratio: f64,
    pub rel_delta: f64,
    pub gap_score: Option<f64>,
}

pub fn write_fig2_csv(path: &Path, rows: &[GapRow]) -> Result<()> {
    write_csv(
        path,
        rows.iter().map(|r| Fig2Row {
            domain: r.domain.clone(),
            compression_ratio: r.compression_ratio,
            rel_delta: r.rel_delta,
            gap_score: r.gap_score,
        }),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingRow {
    pub domain: String,
    pub n_verified: u64,
    pub mean_rating: Option<f64>,
    pub std_rating: Option<f64>,
}

impl RatingRow {
    pub fn new(domain: &str, s: &RatingSummary) -> Self {
        RatingRow {
            domain: domain.into(),
            n_verified: s.n_verified,
            mean_rating: s.mean,
            std_rating: s.std,
        }
    }
}

pub fn write_ratings_csv(path: &Path, rows: &[RatingRow]) -> Result<()> {
    write_csv(path, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub word: String,
    pub f_r: u64,
    pub f_d: u64,
    pub jaccard: f64,
    #[serde(rename = "S")]
    pub score: f64,
    pub rank: usize,
    pub neighbors_r: String,
    pub neighbors_d: String,
}

pub fn write_drift_csv(path: &Path, ranked: &[DriftRecord]) -> Result<()> {
    write_csv(
        path,
        ranked.iter().map(|r| DriftRow {
            word: r.word.clone(),
            f_r: r.f_r,
            f_d: r.f_d,
            jaccard: r.jaccard,
            score: r.score,
            rank: r.rank,
            neighbors_r: r.nbrs_r.join("|"),
            neighbors_d: r.nbrs_d.join("|"),
        }),
    )
}

pub fn read_drift_csv(path: &Path) -> Result<Vec<DriftRow>> {
    read_csv(path)
}

/// Both prefix averages of one domain: mean S (`avg_score`) and mean
/// Jaccard (`avg_jaccard`) over the shortest prefix retrieving the ground
/// truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgjRow {
    pub domain: String,
    pub m: usize,
    pub prefix_len: usize,
    pub avg_score: f64,
    pub avg_jaccard: f64,
}

impl AvgjRow {
    pub fn new(domain: &str, p: &PrefixAverage) -> Self {
        AvgjRow {
            domain: domain.into(),
            m: p.m,
            prefix_len: p.prefix_len,
            avg_score: p.mean_score,
            avg_jaccard: p.mean_jaccard,
        }
    }
}

pub fn write_avgj_csv(path: &Path, rows: &[AvgjRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Retrieval quality of planted words on synthetic domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEvalRow {
    pub domain: String,
    pub scored_words: usize,
    pub planted: usize,
    pub planted_scored: usize,
    pub auc: Option<f64>,
    pub planted_in_top_decile: usize,
}

pub fn write_drift_eval_csv(path: &Path, rows: &[DriftEvalRow]) -> Result<()> {
    write_csv(path, rows)
}

/// Ground-truth drift words per domain, in file order.
pub type GroundTruth = BTreeMap<String, Vec<GroundTruthEntry>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthEntry {
    pub word: String,
    pub note: String,
}

/// Reads a TSV of `domain`, `word`, optional `note`. A header line starting
/// with `domain` and lines starting with `#` are ignored.
pub fn read_ground_truth(path: &Path) -> Result<GroundTruth> {
    let mut out = GroundTruth::new();
    for (i, line) in open_lines(path)?.lines().enumerate() {
        let line = line.map_err(Error::io(path))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("domain\t")) {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(domain), Some(word)) = (fields.next(), fields.next()) else {
            return Err(Error::data(format!("{}:{}: expected domain<TAB>word[<TAB>note]", path.display(), i + 1)));
        };
        let (domain, word) = (domain.trim(), word.trim().to_lowercase());
        if domain.is_empty() || word.is_empty() {
            return Err(Error::data(format!("{}:{}: empty domain or word", path.display(), i + 1)));
        }
        out.entry(domain.to_owned()).or_default().push(GroundTruthEntry {
            word,
            note: fields.next().unwrap_or("").trim().to_owned(),
        });
    }
    Ok(out)
}

pub fn write_ground_truth(path: &Path, gt: &GroundTruth) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    let mut out = BufWriter::new(file);
    let mut write = || -> std::io::Result<()> {
        writeln!(out, "domain\tword\tnote")?;
        for (domain, entries) in gt {
            for e in entries {
                writeln!(out, "{domain}\t{}\t{}", e.word, e.note)?;
            }
        }
        out.flush()
    };
    write().map_err(Error::io(path))
}

// ---------------------------------------------------------------------------
// Statistics battery

/// One numeric column keyed by domain, read leniently: the first header
/// among `names` is used, and empty or `n.a.` cells are treated as missing.
pub fn read_keyed_column(path: &Path, names: &[&str]) -> Result<BTreeMap<String, f64>> {
    let mut r = csv::Reader::from_reader(open_lines(path)?);
    let headers = r.headers().map_err(|e| Error::data(format!("{}: {e}", path.display())))?.clone();
    let find = |wanted: &[&str]| {
        wanted
            .iter()
            .find_map(|w| headers.iter().position(|h| h.trim().eq_ignore_ascii_case(w)))
    };
    let key = find(&["domain"]).ok_or_else(|| Error::data(format!("{}: no domain column", path.display())))?;
    let col = find(names)
        .ok_or_else(|| Error::data(format!("{}: none of the columns {names:?} is present", path.display())))?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
        let domain = rec.get(key).unwrap_or("").trim().to_owned();
        let cell = rec.get(col).unwrap_or("").trim();
        if cell.is_empty() || cell.eq_ignore_ascii_case("n.a.") || cell.eq_ignore_ascii_case("na") {
            continue;
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| Error::data(format!("{}:{}: {cell:?} is not a number", path.display(), i + 2)))?;
        if out.insert(domain.clone(), v).is_some() {
            return Err(Error::data(format!("{}: domain {domain:?} appears twice", path.display())));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub x: String,
    pub y: String,
    pub test: String,
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityEntry {
    pub column: String,
    pub test: String,
    pub statistic: f64,
    pub n: usize,
    pub p_value: f64,
    /// Sample smaller than the test's validity floor.
    pub small_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub domains: Vec<String>,
    pub correlations: Vec<TestEntry>,
    pub normality: Vec<NormalityEntry>,
    pub warnings: Vec<String>,
}

impl StatsReport {
    pub fn correlation(&self, x: &str, y: &str, test: &str) -> Option<&TestEntry> {
        self.correlations.iter().find(|e| e.x == x && e.y == y && e.test == test)
    }

    pub fn normality_of(&self, column: &str) -> Option<&NormalityEntry> {
        self.normality.iter().find(|e| e.column == column)
    }
}

/// Inputs of the statistics battery, each keyed by domain.
#[derive(Debug, Clone, Default)]
pub struct StatsInputs {
    pub gap_score: BTreeMap<String, f64>,
    pub gap_rank: BTreeMap<String, f64>,
    pub mean_rating: BTreeMap<String, f64>,
    pub avg_score: BTreeMap<String, f64>,
    pub avg_jaccard: BTreeMap<String, f64>,
}

impl StatsInputs {
    /// Reads the gap table, the ratings table and (optionally) the prefix
    /// averages table.
    pub fn load(gap: &Path, ratings: &Path, avgj: Option<&Path>) -> Result<Self> {
        let gap_score = read_keyed_column(gap, &["gap_score", "gap score"])?;
        let gap_rank = match read_keyed_column(gap, &["gap_rank", "gap rank", "rank"]) {
            Ok(r) => r,
            Err(_) => ranks_of(&gap_score),
        };
        let mean_rating = read_keyed_column(ratings, &["mean_rating", "avg_rating", "rating", "mean"])?;
        let (avg_score, avg_jaccard) = match avgj {
            Some(p) => (
                read_keyed_column(p, &["avg_score", "avg.j@10", "avgj"])?,
                read_keyed_column(p, &["avg_jaccard"]).unwrap_or_default(),
            ),
            None => Default::default(),
        };
        Ok(StatsInputs {
            gap_score,
            gap_rank,
            mean_rating,
            avg_score,
            avg_jaccard,
        })
    }
}

/// Rank 1 for the largest value.
fn ranks_of(values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut v: Vec<(&String, f64)> = values.iter().map(|(k, v)| (k, *v)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    v.into_iter().enumerate().map(|(i, (k, _))| (k.clone(), (i + 1) as f64)).collect()
}

fn key_difference(a: &BTreeMap<String, f64>, b: &BTreeMap<String, f64>) -> (Vec<String>, Vec<String>) {
    (
        a.keys().filter(|k| !b.contains_key(*k)).cloned().collect(),
        b.keys().filter(|k| !a.contains_key(*k)).cloned().collect(),
    )
}

fn stat_error(what: &str, e: StatsError) -> Error {
    Error::data(format!("{what}: {e}"))
}

fn entry(x: &str, y: &str, r: StatResult) -> TestEntry {
    TestEntry {
        x: x.into(),
        y: y.into(),
        test: r.test.name().into(),
        statistic: r.statistic,
        n: r.n,
        p_value: r.p_value,
    }
}

/// Pearson and Spearman between gap (score and rank) and rating, and
/// between gap score and each prefix average; D'Agostino-Pearson on every
/// column.
pub fn stats_battery(inputs: &StatsInputs) -> Result<StatsReport> {
    let (only_gap, only_rating) = key_difference(&inputs.gap_score, &inputs.mean_rating);
    if !only_gap.is_empty() || !only_rating.is_empty() {
        return Err(Error::data(format!(
            "gap and rating tables cover different domains; only in gap: {only_gap:?}; only in ratings: {only_rating:?}"
        )));
    }
    let (unknown, _) = key_difference(&inputs.avg_score, &inputs.gap_score);
    if !unknown.is_empty() {
        return Err(Error::data(format!("prefix averages for domains without a gap score: {unknown:?}")));
    }
    let domains: Vec<String> = inputs.gap_score.keys().cloned().collect();
    if domains.len() < 3 {
        return Err(Error::data(format!("need at least 3 aligned domains, got {}", domains.len())));
    }
    let mut warnings = Vec::new();
    let mut correlations = Vec::new();
    let pair = |x: &BTreeMap<String, f64>, y: &BTreeMap<String, f64>| -> (Vec<f64>, Vec<f64>) {
        x.iter().filter_map(|(k, v)| y.get(k).map(|w| (*v, *w))).unzip()
    };
    let both = |xn: &str, yn: &str, x: &[f64], y: &[f64], out: &mut Vec<TestEntry>| -> Result<()> {
        out.push(entry(xn, yn, stats::pearson(x, y).map_err(|e| stat_error(xn, e))?));
        out.push(entry(xn, yn, stats::spearman(x, y).map_err(|e| stat_error(xn, e))?));
        Ok(())
    };
    let (g, r) = pair(&inputs.gap_score, &inputs.mean_rating);
    both("gap_score", "mean_rating", &g, &r, &mut correlations)?;
    let (g, r) = pair(&inputs.gap_rank, &inputs.mean_rating);
    if g.len() == domains.len() {
        both("gap_rank", "mean_rating", &g, &r, &mut correlations)?;
    }
    for (name, col) in [("avg_score", &inputs.avg_score), ("avg_jaccard", &inputs.avg_jaccard)] {
        if col.is_empty() {
            continue;
        }
        let (g, a) = pair(&inputs.gap_score, col);
        if g.len() < 3 {
            warnings.push(format!("{name}: only {} domains, correlation skipped", g.len()));
            continue;
        }
        both("gap_score", name, &g, &a, &mut correlations)?;
    }
    let mut normality = Vec::new();
    for (name, col) in [
        ("gap_score", &inputs.gap_score),
        ("mean_rating", &inputs.mean_rating),
        ("avg_score", &inputs.avg_score),
        ("avg_jaccard", &inputs.avg_jaccard),
    ] {
        if col.is_empty() {
            continue;
        }
        let values: Vec<f64> = col.values().copied().collect();
        match stats::dagostino_k2(&values) {
            Ok(res) => {
                let small = res.n < DAGOSTINO_VALIDITY_FLOOR;
                if small {
                    warnings.push(format!("{name}: n = {} is below the normality test's floor of {DAGOSTINO_VALIDITY_FLOOR}", res.n));
                }
                normality.push(NormalityEntry {
                    column: name.into(),
                    test: res.test.name().into(),
                    statistic: res.statistic,
                    n: res.n,
                    p_value: res.p_value,
                    small_sample: small,
                });
            }
            Err(e) => warnings.push(format!("{name}: normality test skipped ({e})")),
        }
    }
    Ok(StatsReport {
        domains,
        correlations,
        normality,
        warnings,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::data(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(Error::io(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn ground_truth_tsv() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "gt.tsv", "domain\tword\tnote\nElectronics\tBus\tdata bus\n# c\nElectronics\tnature\nToys\tcore\t\n");
        let gt = read_ground_truth(&p).unwrap();
        assert_eq!(gt["Electronics"].iter().map(|e| e.word.as_str()).collect::<Vec<_>>(), ["bus", "nature"]);
        assert_eq!(gt["Electronics"][0].note, "data bus");
        assert_eq!(gt["Toys"][0].note, "");
        let back = dir.path().join("back.tsv");
        write_ground_truth(&back, &gt).unwrap();
        assert_eq!(read_ground_truth(&back).unwrap(), gt);
        let bad = write(dir.path(), "bad.tsv", "Electronics\n");
        assert!(read_ground_truth(&bad).is_err());
    }

    #[test]
    fn lenient_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "t.csv", "Domain,Avg.J@10,x\na,1.5,0\nb,n.a.,0\nc,,0\n");
        let col = read_keyed_column(&p, &["avg_score", "avg.j@10"]).unwrap();
        assert_eq!(col.len(), 1);
        assert_eq!(col["a"], 1.5);
        assert!(read_keyed_column(&p, &["nothing"]).is_err());
        let dup = write(dir.path(), "d.csv", "domain,v\na,1\na,2\n");
        assert!(read_keyed_column(&dup, &["v"]).is_err());
    }

    #[test]
    fn perfectly_linear_battery() {
        let dir = tempfile::tempdir().unwrap();
        let gap = write(dir.path(), "g.csv", "domain,gap_score\na,1\nb,2\nc,3\nd,4\n");
        let rat = write(dir.path(), "r.csv", "domain,mean_rating\na,2\nb,4\nc,6\nd,8\n");
        let inputs = StatsInputs::load(&gap, &rat, None).unwrap();
        let report = stats_battery(&inputs).unwrap();
        let p = report.correlation("gap_score", "mean_rating", "pearson").unwrap();
        assert!((p.statistic - 1.0).abs() < 1e-12);
        assert!(p.p_value < 1e-6);
        let rank = report.correlation("gap_rank", "mean_rating", "spearman").unwrap();
        assert!((rank.statistic + 1.0).abs() < 1e-12);
        assert!(report.normality_of("gap_score").is_none());
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn mismatched_domains_are_listed() {
        let dir = tempfile::tempdir().unwrap();
        let gap = write(dir.path(), "g.csv", "domain,gap_score\na,1\nb,2\nc,3\n");
        let rat = write(dir.path(), "r.csv", "domain,mean_rating\na,2\nb,4\nz,6\n");
        let inputs = StatsInputs::load(&gap, &rat, None).unwrap();
        let err = stats_battery(&inputs).unwrap_err().to_string();
        assert!(err.contains("\"c\"") && err.contains("\"z\""), "{err}");
        let few = write(dir.path(), "f.csv", "domain,mean_rating\na,2\nb,4\n");
        let g2 = write(dir.path(), "g2.csv", "domain,gap_score\na,1\nb,2\n");
        assert!(stats_battery(&StatsInputs::load(&g2, &few, None).unwrap()).is_err());
    }

    #[test]
    fn gap_rows_follow_rank() {
        let m = |d: &str, ratio: f64, rel: f64| GapMeasurement {
            domain: d.into(),
            raw_size: 100,
            c_true: 30,
            c_rand_mean: 31.0,
            c_rand_std: 0.5,
            delta: 1.0,
            rel_delta: rel,
            compression_ratio: ratio,
            trials: 2,
            labeled: 5,
            targets: 2,
        };
        let ms = vec![m("a", 0.1, 0.0), m("b", 0.2, 0.5), m("c", 0.3, 0.2)];
        let table = semgap_core::gap::fit_gap_scores::<String>(&ms).unwrap();
        let rows = gap_rows(&ms, Some(&table));
        assert_eq!(rows[0].domain, "b");
        assert_eq!(rows.iter().map(|r| r.gap_rank.unwrap()).collect::<Vec<_>>(), [1, 2, 3]);
        let plain = gap_rows(&ms, None);
        assert_eq!(plain[0].domain, "a");
        assert_eq!(plain[0].gap_score, None);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.csv");
        write_gap_csv(&p, &plain).unwrap();
        assert_eq!(read_gap_csv(&p).unwrap(), plain);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("domain,raw_size,c_true,c_rand_mean,c_rand_std,delta,rel_delta,compression_ratio,gap_score,gap_rank\n"));
        assert!(text.lines().nth(1).unwrap().ends_with(",,"));
    }
}
