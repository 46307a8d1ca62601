//! First-match dictionary search, optionally sharded across threads.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use crate::crypto::Password;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchResult {
    /// Index of the first candidate that verified.
    pub index: Option<usize>,
    /// Evaluations a sequential scan would have spent up to and including
    /// the match, or over the whole list if nothing matched.
    pub evaluations: u64,
}

enum Shard {
    Found { index: usize, evaluations: u64 },
    Exhausted { evaluations: u64 },
    /// Stopped because an earlier shard already matched.
    Abandoned,
}

/// Scans `words` with `check`, which returns whether the candidate verified
/// and how many evaluations it cost.
///
/// With `jobs > 1` the list is split into contiguous shards. The merge walks
/// shards in order, so both the index and the evaluation count equal the
/// single-threaded result; work done past the first match is not counted.
pub fn search<F>(words: &[Password], jobs: usize, check: F) -> SearchResult
where
    F: Fn(&Password) -> (bool, u64) + Sync,
{
    let jobs = jobs.clamp(1, words.len().max(1));
    if jobs == 1 {
        return match scan(words, 0, &check, None) {
            Shard::Found { index, evaluations } => SearchResult {
                index: Some(index),
                evaluations,
            },
            Shard::Exhausted { evaluations } => SearchResult {
                index: None,
                evaluations,
            },
            Shard::Abandoned => unreachable!("no cancellation without shards"),
        };
    }

    let chunk = words.len().div_ceil(jobs);
    let best = AtomicUsize::new(usize::MAX);
    let shards: Vec<Shard> = thread::scope(|s| {
        let handles: Vec<_> = words
            .chunks(chunk)
            .enumerate()
            .map(|(i, slice)| {
                let (check, best) = (&check, &best);
                s.spawn(move || scan(slice, i * chunk, check, Some(best)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("search worker panicked"))
            .collect()
    });

    let mut evaluations = 0;
    for shard in shards {
        match shard {
            Shard::Exhausted { evaluations: e } => evaluations += e,
            Shard::Found {
                index,
                evaluations: e,
            } => {
                return SearchResult {
                    index: Some(index),
                    evaluations: evaluations + e,
                }
            }
            Shard::Abandoned => unreachable!("abandoned shard precedes every match"),
        }
    }
    SearchResult {
        index: None,
        evaluations,
    }
}

fn scan<F>(slice: &[Password], offset: usize, check: &F, best: Option<&AtomicUsize>) -> Shard
where
    F: Fn(&Password) -> (bool, u64),
{
    let mut evaluations = 0;
    for (i, word) in slice.iter().enumerate() {
        if best.is_some_and(|b| b.load(Ordering::Relaxed) < offset) {
            return Shard::Abandoned;
        }
        let (hit, cost) = check(word);
        evaluations += cost;
        if hit {
            let index = offset + i;
            if let Some(b) = best {
                b.fetch_min(index, Ordering::Relaxed);
            }
            return Shard::Found { index, evaluations };
        }
    }
    Shard::Exhausted { evaluations }
}
