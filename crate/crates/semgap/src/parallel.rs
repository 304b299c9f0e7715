//! Multi-threaded CBOW training with lock-free shared weights.
//!
//! Each epoch splits the sentences into contiguous shards, one per thread.
//! Threads update the shared weights without locks, so results depend on
//! scheduling; with one thread the output is identical to the deterministic
//! single-threaded trainer.

use std::sync::atomic::AtomicU32;

use semgap_core::embed::{train_cbow, CbowTrainer, EmbedError, EmbeddingSpace, ShardStats, TrainParams};

fn to_atomic(v: Vec<f32>) -> Vec<AtomicU32> {
    v.into_iter().map(|x| AtomicU32::new(x.to_bits())).collect()
}

fn from_atomic(v: Vec<AtomicU32>) -> Vec<f32> {
    v.into_iter().map(|x| f32::from_bits(x.into_inner())).collect()
}

/// Trains with `threads` workers; `threads <= 1` uses the deterministic path.
pub fn train_cbow_parallel<T, S>(sentences: &[T], params: TrainParams, threads: usize) -> Result<EmbeddingSpace, EmbedError>
where
    T: AsRef<[S]> + Sync,
    S: AsRef<str> + Sync,
{
    if threads <= 1 {
        return train_cbow(sentences, params);
    }
    let trainer = CbowTrainer::new(sentences, params)?;
    let (input, output) = trainer.initial_weights();
    let input = to_atomic(input);
    let output = to_atomic(output);
    let n = trainer.n_sentences();
    let shards = threads.min(n.max(1));
    let bounds: Vec<usize> = (0..=shards).map(|i| i * n / shards).collect();
    let shard_offsets: Vec<u64> = {
        let mut acc = 0u64;
        let mut out = Vec::with_capacity(shards);
        for w in bounds.windows(2) {
            out.push(acc);
            acc += (w[0]..w[1]).map(|s| trainer.sentence(s).len() as u64).sum::<u64>();
        }
        out
    };
    let mut report = trainer.base_report();
    for epoch in 0..params.epochs {
        let epoch_start = epoch as u64 * trainer.n_tokens() as u64;
        let results: Vec<ShardStats> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..shards)
                .map(|shard| {
                    let trainer = &trainer;
                    let (input, output) = (input.as_slice(), output.as_slice());
                    let range = bounds[shard]..bounds[shard + 1];
                    let before = epoch_start + shard_offsets[shard];
                    scope.spawn(move || {
                        let mut rng = trainer.rng_for(epoch, shard);
                        trainer.train_range(input, output, range, before, &mut rng)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
        });
        let mut total = ShardStats::default();
        for r in results {
            total.merge(r);
        }
        report
            .epoch_losses
            .push(if total.targets > 0 { total.loss / total.targets as f64 } else { 0.0 });
    }
    Ok(trainer.into_space(from_atomic(input), report))
}
