use std::io::Write;

use proptest::prelude::*;

use semgap::compress::Bzip2;
use semgap::ingest::{read_reviews, summarize_ratings, ReviewRecord};
use semgap_core::gap::measure_gap;
use semgap_core::mixer::{build_mixed, RandomizationParams, TargetSelectionParams, TargetVocabulary};

fn review_line() -> impl Strategy<Value = String> {
    prop_oneof![
        (1u8..=5, any::<bool>(), "[a-z ]{1,30}").prop_map(|(r, v, t)| format!(
            r#"{{"overall": {r}.0, "verified": {v}, "reviewText": "{t}"}}"#
        )),
        Just(r#"{"overall": 4.0, "verified": true}"#.to_owned()),
        Just(r#"{"overall": 7.0, "reviewText": "out of range"}"#.to_owned()),
        Just(r#"{"overall": 3.0, "reviewText": "#.to_owned()),
        Just("not json".to_owned()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_line_is_counted_once(lines in prop::collection::vec(review_line(), 0..40)) {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        for l in &lines {
            writeln!(file, "{l}").unwrap();
        }
        let mut kept = Vec::new();
        let counts = read_reviews(file.path(), "d", |r| kept.push(r)).unwrap();
        prop_assert_eq!(counts.lines, lines.len() as u64);
        prop_assert_eq!(counts.lines, counts.records + counts.skipped + counts.malformed);
        prop_assert_eq!(counts.records, kept.len() as u64);
        prop_assert!(kept.iter().all(|r| r.domain == "d"));
    }

    #[test]
    fn rating_summary_ignores_order(
        records in prop::collection::vec((1u8..=5, any::<bool>()), 0..60),
        perm_seed in any::<u64>(),
        verified_only in any::<bool>(),
    ) {
        let records: Vec<ReviewRecord> = records
            .into_iter()
            .map(|(rating, verified)| ReviewRecord { text: "x".into(), rating, verified, domain: "d".into() })
            .collect();
        let mut shuffled = records.clone();
        let mut s = perm_seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(summarize_ratings(&records, verified_only), summarize_ratings(&shuffled, verified_only));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn gap_is_reproducible_and_null_without_swaps(seed in any::<u64>()) {
        let words = ["tap", "dial", "knob", "case", "lid", "cord", "plug", "fan"];
        let sentence = |i: usize| -> Vec<&str> { (0..7).map(|j| words[(i * 7 + j * j + (i >> 3)) % words.len()]).collect() };
        let reviews: Vec<Vec<&str>> = (0..400).map(sentence).collect();
        let descriptions: Vec<Vec<&str>> = (0..60).map(|i| sentence(i * 5 + 3)).collect();
        let mixed = build_mixed(&reviews, &descriptions).unwrap();
        let targets = TargetVocabulary::from_words(["dial", "lid", "fan"], TargetSelectionParams::default());
        let params = RandomizationParams { swap_probability: 0.5, seed, trials: 3 };
        let a = measure_gap("d", &mixed, &targets, &params, &Bzip2::default()).unwrap();
        let b = measure_gap("d", &mixed, &targets, &params, &Bzip2::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let none = RandomizationParams { swap_probability: 0.0, ..params };
        let z = measure_gap("d", &mixed, &targets, &none, &Bzip2::default()).unwrap();
        prop_assert_eq!(z.delta, 0.0);
        prop_assert_eq!(z.rel_delta, 0.0);
    }
}
