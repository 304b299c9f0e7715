//! Measuring the lexical-semantic gap between customer reviews and product
//! descriptions.
//!
//! Two complementary detectors live here:
//!
//! * a compression differential: target words in an interleaved
//!   review/description corpus are tagged with their source (`_R`/`_D`),
//!   a second copy has the tags randomly swapped, and the growth in
//!   compressed size measures how much the source tag was predictable from
//!   context ([`mixer`], [`gap`]);
//! * an embedding neighborhood comparison: CBOW vectors are trained on each
//!   community separately and words whose nearest neighbors disagree are
//!   ranked as drift candidates ([`embed`], [`drift`]).
//!
//! [`stats`] relates the resulting per-domain scores to satisfaction ratings
//! and [`synth`] generates corpora with planted drift for validation.
//!
//! The crate is `no_std` and only needs an allocator; reading files,
//! compressing bytes and the command line live in the `semgap` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod drift;
pub mod embed;
pub mod gap;
pub mod mixer;
pub mod stats;
pub mod synth;
pub mod textprep;

pub use drift::{DriftParams, DriftRecord};
pub use embed::{EmbeddingSpace, TrainParams};
pub use gap::{GapMeasurement, GapScoreTable};
pub use mixer::{LabeledCorpus, RandomizationParams, TargetSelectionParams, TargetVocabulary, Variant};
pub use stats::StatResult;
pub use textprep::{SentenceRecord, Source, VocabStats};

pub(crate) type FxMap<K, V> = hashbrown::HashMap<K, V, rustc_hash::FxBuildHasher>;
pub(crate) type FxSet<K> = hashbrown::HashSet<K, rustc_hash::FxBuildHasher>;
