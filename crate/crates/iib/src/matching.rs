//! Hamming matching: brute-force mutual nearest neighbors and the
//! coarse-to-fine hierarchical matcher.
//!
//! The hierarchical matcher walks granularity segments from coarse to fine,
//! dropping candidates whose current segment distance reaches a fraction of
//! that segment's bit width, and only then applies the same mutual-best rule
//! as brute force over the survivors. Bit accounting charges every compared
//! segment in full, so the match-cost ratio MC measures how much of the
//! brute-force work the cascade avoided.

use crate::descriptor::BinaryDescriptor;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// One mutual match.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchPair {
    pub query: usize,
    pub train: usize,
    /// Full Hamming distance in bits.
    pub distance: u32,
}

/// Bit-comparison accounting for one matching run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchStats {
    /// Bits this run actually compared.
    pub bit_comparisons_hierarchical: u64,
    /// Brute-force baseline on the same inputs: |Q| * |T| * M.
    pub bit_comparisons_bruteforce: u64,
    /// MC = hierarchical / brute-force; 1 when nothing was saved.
    pub match_cost: f64,
}

impl MatchStats {
    fn new(performed: u64, baseline: u64) -> Self {
        MatchStats {
            bit_comparisons_hierarchical: performed,
            bit_comparisons_bruteforce: baseline,
            match_cost: if baseline == 0 {
                1.0
            } else {
                performed as f64 / baseline as f64
            },
        }
    }
}

fn comparability_key(d: &BinaryDescriptor) -> String {
    format!(
        "{} M={} segments={:?}",
        d.fingerprint, d.bits.len() as u64, d.segment_bounds
    )
}

pub(crate) fn check_comparable(a: &BinaryDescriptor, b: &BinaryDescriptor) -> Result<()> {
    if a.fingerprint != b.fingerprint
        || a.bits.len() != b.bits.len()
        || a.segment_bounds != b.segment_bounds
    {
        return Err(Error::FingerprintMismatch {
            a: comparability_key(a),
            b: comparability_key(b),
        });
    }
    Ok(())
}

fn check_batch(q: &[BinaryDescriptor], t: &[BinaryDescriptor]) -> Result<()> {
    let Some(first) = q.first().or_else(|| t.first()) else {
        return Ok(());
    };
    for d in q.iter().chain(t) {
        check_comparable(first, d)?;
    }
    Ok(())
}

/// Hamming distance over the full bit vectors.
pub fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> Result<u32> {
    check_comparable(a, b)?;
    Ok(a.bits.xor_popcount(&b.bits))
}

/// Hamming distance over granularity segment `g` (1-based) only.
pub fn hamming_segment(a: &BinaryDescriptor, b: &BinaryDescriptor, g: u8) -> Result<u32> {
    check_comparable(a, b)?;
    let range = a.segment_range(g);
    Ok(a.bits.xor_popcount_range(&b.bits, range.start, range.end))
}

/// Per-side running best with index tie-break toward the lower index.
#[derive(Clone, Copy)]
struct Best {
    distance: u32,
    index: usize,
}

impl Best {
    const NONE: Best = Best {
        distance: u32::MAX,
        index: usize::MAX,
    };

    /// Keep the smaller distance; on ties the earlier-offered index wins,
    /// so offer candidates in ascending index order.
    fn offer(&mut self, distance: u32, index: usize) {
        if distance < self.distance || (distance == self.distance && index < self.index) {
            self.distance = distance;
            self.index = index;
        }
    }
}

struct SideState {
    /// Best train candidate per query.
    row: Vec<Best>,
    /// Best query per train, over the pairs this run examined.
    col: Vec<Best>,
    bits: u64,
}

impl SideState {
    fn empty(nq: usize, nt: usize) -> Self {
        SideState {
            row: vec![Best::NONE; nq],
            col: vec![Best::NONE; nt],
            bits: 0,
        }
    }

    fn merge(mut self, other: SideState) -> SideState {
        for (a, b) in self.row.iter_mut().zip(&other.row) {
            a.offer(b.distance, b.index);
        }
        for (a, b) in self.col.iter_mut().zip(&other.col) {
            a.offer(b.distance, b.index);
        }
        self.bits += other.bits;
        self
    }

    fn emit(self) -> (Vec<MatchPair>, u64) {
        let mut pairs = Vec::new();
        for (qi, best) in self.row.iter().enumerate() {
            if best.index == usize::MAX {
                continue;
            }
            let col = self.col[best.index];
            if col.index == qi {
                pairs.push(MatchPair {
                    query: qi,
                    train: best.index,
                    distance: best.distance,
                });
            }
        }
        (pairs, self.bits)
    }
}

/// Mutual nearest neighbors by exhaustive Hamming comparison.
///
/// Pair (i, j) is emitted iff j minimizes the distance from query i and i
/// minimizes the distance to train j; ties break toward the lowest index.
/// An empty side yields an empty result with zero comparisons.
pub fn brute_force_mutual(
    queries: &[BinaryDescriptor],
    trains: &[BinaryDescriptor],
) -> Result<(Vec<MatchPair>, MatchStats)> {
    check_batch(queries, trains)?;
    if queries.is_empty() || trains.is_empty() {
        return Ok((Vec::new(), MatchStats::new(0, 0)));
    }
    let m = queries[0].bits.len() as u64;

    let state = queries
        .par_iter()
        .enumerate()
        .fold(
            || SideState::empty(queries.len(), trains.len()),
            |mut state, (qi, q)| {
                for (tj, t) in trains.iter().enumerate() {
                    let d = q.bits.xor_popcount(&t.bits);
                    state.row[qi].offer(d, tj);
                    state.col[tj].offer(d, qi);
                }
                state.bits += trains.len() as u64 * m;
                state
            },
        )
        .reduce(
            || SideState::empty(queries.len(), trains.len()),
            SideState::merge,
        );

    let (pairs, bits) = state.emit();
    debug_assert_eq!(bits, queries.len() as u64 * trains.len() as u64 * m);
    Ok((pairs, MatchStats::new(bits, bits)))
}

/// Coarse-to-fine matching over granularity segments.
///
/// Every train descriptor starts as a candidate for every query. At each
/// granularity g below the finest, a candidate survives iff its segment-g
/// distance stays strictly below `ceil(t * segment_g_bits)`; the finest
/// segment only extends the accumulated distances. Survivors then pass
/// through the same mutual-best rule as brute force, restricted to pairs
/// that survived. Zero-width segments (possible after masking) never prune.
///
/// Stats charge the full segment width for every candidate compared at each
/// level; the mutual pass reuses accumulated distances and adds nothing.
pub fn hierarchical_match(
    queries: &[BinaryDescriptor],
    trains: &[BinaryDescriptor],
    threshold: f64,
) -> Result<(Vec<MatchPair>, MatchStats)> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    check_batch(queries, trains)?;
    if queries.is_empty() || trains.is_empty() {
        return Ok((Vec::new(), MatchStats::new(0, 0)));
    }

    let m = queries[0].bits.len() as u64;
    let baseline = queries.len() as u64 * trains.len() as u64 * m;
    let levels = queries[0].segment_count() as u8;
    // Segment bit widths and prune limits are shared by all descriptors.
    let segments: Vec<(std::ops::Range<usize>, u32)> = (1..=levels)
        .map(|g| {
            let range = queries[0].segment_range(g);
            let width = (range.end - range.start) as u32;
            let limit = (threshold * width as f64).ceil() as u32;
            (range, limit)
        })
        .collect();

    let state = queries
        .par_iter()
        .enumerate()
        .fold(
            || SideState::empty(queries.len(), trains.len()),
            |mut state, (qi, q)| {
                let mut survivors: Vec<(usize, u32)> =
                    (0..trains.len()).map(|tj| (tj, 0)).collect();
                for (level, (range, limit)) in segments.iter().enumerate() {
                    let width = (range.end - range.start) as u32;
                    let last = level + 1 == segments.len();
                    state.bits += survivors.len() as u64 * width as u64;
                    let mut kept = Vec::with_capacity(survivors.len());
                    for (tj, acc) in survivors {
                        let d = q
                            .bits
                            .xor_popcount_range(&trains[tj].bits, range.start, range.end);
                        if last || width == 0 || d < *limit {
                            kept.push((tj, acc + d));
                        }
                    }
                    survivors = kept;
                    if survivors.is_empty() {
                        break;
                    }
                }
                for (tj, acc) in survivors {
                    state.row[qi].offer(acc, tj);
                    state.col[tj].offer(acc, qi);
                }
                state
            },
        )
        .reduce(
            || SideState::empty(queries.len(), trains.len()),
            SideState::merge,
        );

    let (pairs, bits) = state.emit();
    Ok((pairs, MatchStats::new(bits, baseline)))
}

/// Naive per-pair distance used by tests and small tools; prefer
/// [`brute_force_mutual`] for matching.
pub fn distance_matrix(
    queries: &[BinaryDescriptor],
    trains: &[BinaryDescriptor],
) -> Result<Vec<Vec<u32>>> {
    check_batch(queries, trains)?;
    queries
        .iter()
        .map(|q| trains.iter().map(|t| hamming(q, t)).collect())
        .collect()
}
