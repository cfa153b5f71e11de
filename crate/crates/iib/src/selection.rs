//! Descriptor size reduction by boosted quadruple selection.
//!
//! Every quadruple contributes a fixed block of bits, so its per-pair
//! Hamming distance is a small integer feature. AdaBoost over decision
//! stumps on those features scores each quadruple by how well it separates
//! same-point descriptor pairs from different-point ones; keeping the
//! top-weighted quadruples shrinks the descriptor while preserving bit
//! order, so hierarchical matching still works on the reduced form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::descriptor::{extract, BinaryDescriptor, DescriptorConfig, Fingerprint, Keypoint};
use crate::error::{Error, Result};
use crate::evaluation::{project_point, Homography};
use crate::image::ChannelStack;
use crate::matching::check_comparable;

/// Two descriptors plus whether they depict the same physical point.
#[derive(Clone, Debug)]
pub struct TrainingPair {
    pub a: BinaryDescriptor,
    pub b: BinaryDescriptor,
    pub label: bool,
}

/// One image pair with ground-truth geometry and detection sites.
pub struct TrainingScene {
    pub stack_a: ChannelStack,
    pub stack_b: ChannelStack,
    pub homography: Homography,
    pub keypoints: Vec<Keypoint>,
}

/// Assemble labeled pairs from ground-truth scenes.
///
/// Positives extract at each keypoint in the first image and at its
/// homography projection in the second; keypoints whose region of support
/// leaves either image are skipped. Negatives re-pair the positives' sides
/// across distinct indices, drawn uniformly with a seeded generator, one
/// negative per positive.
pub fn build_training_set(
    scenes: &[TrainingScene],
    config: &DescriptorConfig,
    min_positives: usize,
    seed: u64,
) -> Result<Vec<TrainingPair>> {
    use rand::{Rng, SeedableRng};

    config.validate()?;
    let mut positives: Vec<TrainingPair> = Vec::new();
    for scene in scenes {
        for kp in &scene.keypoints {
            let (px, py) = match project_point(&scene.homography, kp.x, kp.y) {
                Ok(p) => p,
                Err(Error::PointAtInfinity) => continue,
                Err(e) => return Err(e),
            };
            let projected = Keypoint {
                x: px,
                y: py,
                ..*kp
            };
            let a = match extract(&scene.stack_a, kp, config) {
                Ok(d) => d,
                Err(Error::KeypointOutOfBounds { .. }) => continue,
                Err(e) => return Err(e),
            };
            let b = match extract(&scene.stack_b, &projected, config) {
                Ok(d) => d,
                Err(Error::KeypointOutOfBounds { .. }) => continue,
                Err(e) => return Err(e),
            };
            positives.push(TrainingPair { a, b, label: true });
        }
    }

    // Negatives need two distinct positives to re-pair.
    let min = min_positives.max(2);
    if positives.len() < min {
        return Err(Error::TooFewPositives {
            got: positives.len(),
            min,
        });
    }

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = positives.len();
    let mut out = positives.clone();
    for _ in 0..n {
        let i = rng.random_range(0..n);
        let j = loop {
            let j = rng.random_range(0..n);
            if j != i {
                break j;
            }
        };
        out.push(TrainingPair {
            a: positives[i].a.clone(),
            b: positives[j].b.clone(),
            label: false,
        });
    }
    Ok(out)
}

/// One boosting round: a stump that predicts "same point" when the selected
/// quadruple's block distance is at most `threshold`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdaBoostRound {
    pub quadruple: usize,
    pub threshold: u32,
    pub alpha: f64,
    pub weighted_error: f64,
}

/// Trained booster plus the per-quadruple importance it induces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub rounds: Vec<AdaBoostRound>,
    /// Summed alpha per global quadruple id; zero when never chosen.
    pub weights: Vec<f64>,
}

/// Per-pair block distances: `features[pair][quadruple]`.
fn quadruple_features(
    pairs: &[TrainingPair],
    quad_bits: usize,
    total: usize,
) -> Vec<Vec<u8>> {
    pairs
        .par_iter()
        .map(|p| {
            (0..total)
                .map(|q| {
                    let start = q * quad_bits;
                    p.a.bits.xor_popcount_range(&p.b.bits, start, start + quad_bits) as u8
                })
                .collect()
        })
        .collect()
}

/// Train AdaBoost stumps on per-quadruple block distances.
///
/// Each round picks the (quadruple, threshold) stump with the lowest
/// weighted error, ties broken toward the lower quadruple id then the lower
/// threshold. Training stops early when no stump beats chance, or right
/// after a stump separates the weighted sample perfectly.
pub fn adaboost_train(pairs: &[TrainingPair], rounds: usize) -> Result<AdaBoostModel> {
    let Some(first) = pairs.first() else {
        return Err(Error::SingleClassTraining);
    };
    for p in pairs {
        check_comparable(&first.a, &p.a)?;
        check_comparable(&first.a, &p.b)?;
    }
    let n_pos = pairs.iter().filter(|p| p.label).count();
    if n_pos == 0 || n_pos == pairs.len() {
        return Err(Error::SingleClassTraining);
    }

    let config = DescriptorConfig::from_fingerprint(&first.a.fingerprint)?;
    let quad_bits = config.quadruple_bits();
    let total = config.total_quadruples();
    let features = quadruple_features(pairs, quad_bits, total);

    let n = pairs.len();
    let mut w = vec![1.0 / n as f64; n];
    let mut model = AdaBoostModel {
        rounds: Vec::new(),
        weights: vec![0.0; total],
    };

    for _ in 0..rounds {
        // err(q, theta) = sum of weights the stump misclassifies. Bucketing
        // by feature value makes each quadruple O(n + quad_bits).
        let best = (0..total)
            .into_par_iter()
            .map(|q| {
                let mut pos_at = vec![0.0; quad_bits + 1];
                let mut neg_at = vec![0.0; quad_bits + 1];
                for (i, pair) in pairs.iter().enumerate() {
                    let d = features[i][q] as usize;
                    if pair.label {
                        pos_at[d] += w[i];
                    } else {
                        neg_at[d] += w[i];
                    }
                }
                // theta = t: positives with d > t and negatives with d <= t
                // are wrong.
                let mut missed_pos: f64 = pos_at.iter().sum();
                let mut caught_neg = 0.0;
                let mut best_err = f64::INFINITY;
                let mut best_theta = 0u32;
                for t in 0..=quad_bits {
                    missed_pos -= pos_at[t];
                    caught_neg += neg_at[t];
                    let err = missed_pos + caught_neg;
                    if err < best_err {
                        best_err = err;
                        best_theta = t as u32;
                    }
                }
                (best_err, q, best_theta)
            })
            .reduce(
                || (f64::INFINITY, usize::MAX, 0),
                |a, b| {
                    if (b.0, b.1, b.2) < (a.0, a.1, a.2) {
                        b
                    } else {
                        a
                    }
                },
            );

        let (err, q, theta) = best;
        if err >= 0.5 {
            break;
        }
        let eps = err.clamp(1e-10, 1.0 - 1e-10);
        let alpha = 0.5 * ((1.0 - eps) / eps).ln();
        model.rounds.push(AdaBoostRound {
            quadruple: q,
            threshold: theta,
            alpha,
            weighted_error: err,
        });
        model.weights[q] += alpha;
        if err == 0.0 {
            break;
        }

        for (i, pair) in pairs.iter().enumerate() {
            let predicted_same = features[i][q] as u32 <= theta;
            let agreed = predicted_same == pair.label;
            w[i] *= if agreed { (-alpha).exp() } else { alpha.exp() };
        }
        let sum: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= sum;
        }
    }
    Ok(model)
}

/// Quadruple subset defining a reduced descriptor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionMask {
    pub fingerprint: Fingerprint,
    /// Kept global quadruple ids, ascending, so reduced bits stay in
    /// granularity-major order.
    pub quadruples: Vec<usize>,
    pub selected_bits: usize,
}

impl SelectionMask {
    /// Mask keeping every quadruple; applying it is the identity.
    pub fn identity(config: &DescriptorConfig) -> SelectionMask {
        SelectionMask {
            fingerprint: config.fingerprint(),
            quadruples: (0..config.total_quadruples()).collect(),
            selected_bits: config.descriptor_size(),
        }
    }

    /// Cumulative per-granularity bit offsets of the reduced descriptor.
    pub fn reduced_segment_bounds(&self) -> Result<Vec<usize>> {
        let config = DescriptorConfig::from_fingerprint(&self.fingerprint)?;
        let quad_bits = config.quadruple_bits();
        let mut per_level = vec![0usize; config.granularity as usize + 1];
        for &q in &self.quadruples {
            per_level[config.quadruple_level(q) as usize] += quad_bits;
        }
        let mut bounds = Vec::with_capacity(per_level.len());
        let mut acc = 0;
        bounds.push(0);
        for bits in &per_level[1..] {
            acc += bits;
            bounds.push(acc);
        }
        Ok(bounds)
    }
}

/// Keep the quadruples holding the `target_bits` heaviest-weighted bits.
///
/// Ranking is by descending weight with ties toward the lower id, so masks
/// for growing targets nest. `target_bits` must be a whole number of
/// quadruple blocks and no larger than the full descriptor.
pub fn select_top_m(
    weights: &[f64],
    config: &DescriptorConfig,
    target_bits: usize,
) -> Result<SelectionMask> {
    config.validate()?;
    let quad_bits = config.quadruple_bits();
    let full = config.descriptor_size();
    if target_bits % quad_bits != 0 {
        return Err(Error::TargetNotQuadAligned {
            target: target_bits,
            quad_bits,
        });
    }
    if target_bits > full {
        return Err(Error::TargetTooLarge {
            target: target_bits,
            full,
        });
    }
    debug_assert_eq!(weights.len(), config.total_quadruples());

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .expect("finite weights")
            .then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = order[..target_bits / quad_bits].to_vec();
    chosen.sort_unstable();
    Ok(SelectionMask {
        fingerprint: config.fingerprint(),
        quadruples: chosen,
        selected_bits: target_bits,
    })
}

/// Gather a descriptor's bits down to the mask's quadruples.
///
/// The reduced descriptor keeps the source fingerprint and recomputes
/// segment bounds from the surviving quadruples, so reduced descriptors
/// match among themselves (hierarchically too) but refuse to match full
/// ones.
pub fn apply_mask(d: &BinaryDescriptor, mask: &SelectionMask) -> Result<BinaryDescriptor> {
    if d.fingerprint != mask.fingerprint {
        return Err(Error::FingerprintMismatch {
            a: d.fingerprint.to_string(),
            b: mask.fingerprint.to_string(),
        });
    }
    let config = DescriptorConfig::from_fingerprint(&mask.fingerprint)?;
    let quad_bits = config.quadruple_bits();
    let mut bits = crate::bits::BitBuffer::with_capacity(mask.selected_bits);
    for &q in &mask.quadruples {
        let start = q * quad_bits;
        for b in start..start + quad_bits {
            bits.push(d.bits.get(b));
        }
    }
    debug_assert_eq!(bits.len(), mask.selected_bits);
    Ok(BinaryDescriptor {
        keypoint: d.keypoint,
        bits,
        segment_bounds: mask.reduced_segment_bounds()?,
        fingerprint: d.fingerprint.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitBuffer;
    use crate::descriptor::Mapping;
    use crate::evaluation::{synth_pair, SynthSpec};
    use crate::image::{compute_channels, ChannelKind, GrayImage};
    use crate::matching::hamming;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// G=2 single channel: 5 quadruples, 20 bits with a 1-bit mapping.
    fn tiny_config() -> DescriptorConfig {
        DescriptorConfig {
            granularity: 2,
            channels: vec![ChannelKind::Intensity],
            ..DescriptorConfig::default()
        }
    }

    fn desc_with_bits(config: &DescriptorConfig, bools: &[bool]) -> BinaryDescriptor {
        assert_eq!(bools.len(), config.descriptor_size());
        BinaryDescriptor {
            keypoint: Keypoint::new(50.0, 50.0),
            bits: BitBuffer::from_bools(bools),
            segment_bounds: config.segment_bounds(),
            fingerprint: config.fingerprint(),
        }
    }

    fn random_pair(
        config: &DescriptorConfig,
        rng: &mut StdRng,
        label: bool,
    ) -> TrainingPair {
        let m = config.descriptor_size();
        let a: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        let b: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        TrainingPair {
            a: desc_with_bits(config, &a),
            b: desc_with_bits(config, &b),
            label,
        }
    }

    /// Pairs where quadruple 2 alone decides the label: block distance 0 on
    /// positives, 4 on negatives, other blocks noisy.
    fn separable_pairs(n_each: usize, seed: u64) -> (DescriptorConfig, Vec<TrainingPair>) {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(seed);
        let qb = config.quadruple_bits();
        let mut pairs = Vec::new();
        for label in [true, false] {
            for _ in 0..n_each {
                let a: Vec<bool> = (0..config.descriptor_size())
                    .map(|_| rng.random_bool(0.5))
                    .collect();
                let mut b: Vec<bool> = a
                    .iter()
                    .map(|&bit| {
                        if rng.random_bool(0.45) {
                            !bit
                        } else {
                            bit
                        }
                    })
                    .collect();
                let start = 2 * qb;
                for k in 0..qb {
                    b[start + k] = if label { a[start + k] } else { !a[start + k] };
                }
                pairs.push(TrainingPair {
                    a: desc_with_bits(&config, &a),
                    b: desc_with_bits(&config, &b),
                    label,
                });
            }
        }
        (config, pairs)
    }

    #[test]
    fn perfect_stump_ranks_planted_quadruple_first() {
        let (_, pairs) = separable_pairs(40, 41);
        let model = adaboost_train(&pairs, 12).unwrap();
        let first = &model.rounds[0];
        assert_eq!(first.quadruple, 2);
        assert_eq!(first.weighted_error, 0.0);
        assert!(first.threshold < 4);
        let top = model
            .weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(top, 2);
        // Perfect separation stops the booster after recording the round.
        assert_eq!(model.rounds.len(), 1);
    }

    #[test]
    fn duplicated_sample_trains_identically() {
        let (_, pairs) = separable_pairs(15, 42);
        // Weaken the planted quadruple so training runs several rounds.
        let mut noisy = pairs.clone();
        let mut rng = StdRng::seed_from_u64(43);
        for p in noisy.iter_mut() {
            if rng.random_bool(0.2) {
                p.label = !p.label;
            }
        }
        let doubled: Vec<TrainingPair> = noisy
            .iter()
            .chain(noisy.iter())
            .cloned()
            .collect();
        let m1 = adaboost_train(&noisy, 8).unwrap();
        let m2 = adaboost_train(&doubled, 8).unwrap();
        assert_eq!(m1.rounds.len(), m2.rounds.len());
        for (r1, r2) in m1.rounds.iter().zip(&m2.rounds) {
            assert_eq!(r1.quadruple, r2.quadruple);
            assert_eq!(r1.threshold, r2.threshold);
            assert!((r1.alpha - r2.alpha).abs() < 1e-9);
        }
        for (w1, w2) in m1.weights.iter().zip(&m2.weights) {
            assert!((w1 - w2).abs() < 1e-9);
        }
    }

    #[test]
    fn random_labels_stay_bounded() {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(44);
        let pairs: Vec<TrainingPair> = (0..60)
            .map(|i| random_pair(&config, &mut rng, i % 2 == 0))
            .collect();
        let model = adaboost_train(&pairs, 20).unwrap();
        assert!(model.rounds.len() <= 20);
        for r in &model.rounds {
            assert!(r.alpha.is_finite() && r.alpha > 0.0);
            assert!(r.weighted_error < 0.5);
        }
        for w in &model.weights {
            assert!(w.is_finite() && *w >= 0.0);
        }
    }

    #[test]
    fn single_class_inputs_rejected() {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(45);
        assert!(matches!(
            adaboost_train(&[], 5),
            Err(Error::SingleClassTraining)
        ));
        let all_pos: Vec<TrainingPair> =
            (0..6).map(|_| random_pair(&config, &mut rng, true)).collect();
        assert!(matches!(
            adaboost_train(&all_pos, 5),
            Err(Error::SingleClassTraining)
        ));
        let all_neg: Vec<TrainingPair> =
            (0..6).map(|_| random_pair(&config, &mut rng, false)).collect();
        assert!(matches!(
            adaboost_train(&all_neg, 5),
            Err(Error::SingleClassTraining)
        ));
    }

    #[test]
    fn mixed_fingerprints_rejected() {
        let mut rng = StdRng::seed_from_u64(46);
        let a = random_pair(&tiny_config(), &mut rng, true);
        let other = DescriptorConfig {
            granularity: 3,
            channels: vec![ChannelKind::Intensity],
            ..DescriptorConfig::default()
        };
        let b = random_pair(&other, &mut rng, false);
        assert!(matches!(
            adaboost_train(&[a, b], 5),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn top_m_sizes_and_nesting() {
        let config = DescriptorConfig::default();
        let mut rng = StdRng::seed_from_u64(47);
        let weights: Vec<f64> = (0..config.total_quadruples())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let m128 = select_top_m(&weights, &config, 128).unwrap();
        let m256 = select_top_m(&weights, &config, 256).unwrap();
        let m512 = select_top_m(&weights, &config, 512).unwrap();
        assert_eq!(m128.quadruples.len(), 32);
        assert_eq!(m256.quadruples.len(), 64);
        assert_eq!(m512.quadruples.len(), 128);
        for m in [&m128, &m256, &m512] {
            assert!(m.quadruples.windows(2).all(|w| w[0] < w[1]));
        }
        let in_256: std::collections::HashSet<_> = m256.quadruples.iter().collect();
        let in_512: std::collections::HashSet<_> = m512.quadruples.iter().collect();
        assert!(m128.quadruples.iter().all(|q| in_256.contains(q)));
        assert!(m256.quadruples.iter().all(|q| in_512.contains(q)));
    }

    #[test]
    fn equal_weights_pick_lowest_ids() {
        let config = tiny_config();
        let weights = vec![1.0; config.total_quadruples()];
        let mask = select_top_m(&weights, &config, 8).unwrap();
        assert_eq!(mask.quadruples, vec![0, 1]);
    }

    #[test]
    fn top_m_target_validation() {
        let config = DescriptorConfig::default();
        let weights = vec![0.0; config.total_quadruples()];
        assert!(matches!(
            select_top_m(&weights, &config, 130),
            Err(Error::TargetNotQuadAligned { .. })
        ));
        assert!(matches!(
            select_top_m(&weights, &config, 1364),
            Err(Error::TargetTooLarge { .. })
        ));
        assert!(select_top_m(&weights, &config, 0).unwrap().quadruples.is_empty());
        let full = select_top_m(&weights, &config, 1360).unwrap();
        assert_eq!(full.quadruples.len(), 340);
    }

    #[test]
    fn identity_mask_is_identity() {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(48);
        let p = random_pair(&config, &mut rng, true);
        let mask = SelectionMask::identity(&config);
        let reduced = apply_mask(&p.a, &mask).unwrap();
        assert_eq!(reduced.bits, p.a.bits);
        assert_eq!(reduced.segment_bounds, p.a.segment_bounds);
        assert_eq!(reduced.fingerprint, p.a.fingerprint);
    }

    #[test]
    fn apply_mask_matches_manual_gather() {
        let config = DescriptorConfig {
            mapping: Mapping::Quartile,
            ..DescriptorConfig::default()
        };
        let mut rng = StdRng::seed_from_u64(49);
        let m = config.descriptor_size();
        let bools: Vec<bool> = (0..m).map(|_| rng.random_bool(0.5)).collect();
        let d = desc_with_bits(&config, &bools);
        let weights: Vec<f64> = (0..config.total_quadruples())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let mask = select_top_m(&weights, &config, 256).unwrap();
        let reduced = apply_mask(&d, &mask).unwrap();

        let qb = config.quadruple_bits();
        let mut expected = Vec::new();
        for &q in &mask.quadruples {
            expected.extend_from_slice(&bools[q * qb..(q + 1) * qb]);
        }
        assert_eq!(reduced.bits, BitBuffer::from_bools(&expected));
        assert_eq!(reduced.len(), 256);
        let bounds = reduced.segment_bounds.clone();
        assert_eq!(*bounds.last().unwrap(), 256);
        // Segment widths recount the kept quadruples per level.
        for g in 1..=config.granularity {
            let kept = mask
                .quadruples
                .iter()
                .filter(|&&q| config.quadruple_level(q) == g)
                .count();
            assert_eq!(bounds[g as usize] - bounds[g as usize - 1], kept * qb);
        }
    }

    #[test]
    fn masked_distance_is_monotone_in_mask_growth() {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(50);
        let p = random_pair(&config, &mut rng, true);
        let weights: Vec<f64> = (0..config.total_quadruples())
            .map(|_| rng.random_range(0.0..1.0))
            .collect();
        let full_d = hamming(&p.a, &p.b).unwrap();
        let mut prev = 0;
        for target in [4, 8, 12, 16, 20] {
            let mask = select_top_m(&weights, &config, target).unwrap();
            let ra = apply_mask(&p.a, &mask).unwrap();
            let rb = apply_mask(&p.b, &mask).unwrap();
            let d = hamming(&ra, &rb).unwrap();
            assert!(d >= prev, "masks nest, so distance cannot drop");
            assert!(d <= full_d);
            prev = d;
        }
        assert_eq!(prev, full_d);
    }

    #[test]
    fn reduced_and_full_do_not_mix() {
        let config = tiny_config();
        let mut rng = StdRng::seed_from_u64(51);
        let p = random_pair(&config, &mut rng, true);
        let weights = vec![1.0; config.total_quadruples()];
        let mask = select_top_m(&weights, &config, 8).unwrap();
        let reduced = apply_mask(&p.a, &mask).unwrap();
        assert!(matches!(
            hamming(&reduced, &p.b),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn mask_fingerprint_must_match_descriptor() {
        let mut rng = StdRng::seed_from_u64(52);
        let p = random_pair(&tiny_config(), &mut rng, true);
        let other = DescriptorConfig::default();
        let mask = SelectionMask::identity(&other);
        assert!(matches!(
            apply_mask(&p.a, &mask),
            Err(Error::FingerprintMismatch { .. })
        ));
    }

    fn textured(width: usize, height: usize, seed: u64) -> GrayImage {
        let mut rng = StdRng::seed_from_u64(seed);
        let (fx, fy) = (
            rng.random_range(0.05..0.2),
            rng.random_range(0.05..0.2),
        );
        GrayImage::from_fn(width, height, |r, c| {
            let (rf, cf) = (r as f64, c as f64);
            (128.0
                + 52.0 * (fx * cf).sin() * (fy * rf).cos()
                + 41.0 * (0.5 * fx * cf + 0.3).sin()
                + 23.0 * (0.7 * fy * rf).cos())
            .clamp(0.0, 255.0)
            .round()
        })
    }

    fn grid(n_side: usize, width: usize, height: usize, margin: f64) -> Vec<Keypoint> {
        let mut kps = Vec::new();
        for i in 0..n_side {
            for j in 0..n_side {
                let x = margin
                    + (width as f64 - 2.0 * margin) * (j as f64 + 0.5) / n_side as f64;
                let y = margin
                    + (height as f64 - 2.0 * margin) * (i as f64 + 0.5) / n_side as f64;
                kps.push(Keypoint::new(x.round(), y.round()));
            }
        }
        kps
    }

    fn scene_from_gamma(gamma: f64, seed: u64) -> TrainingScene {
        let img = textured(160, 160, seed);
        let spec = SynthSpec {
            gamma,
            ..SynthSpec::default()
        };
        let (img2, h) = synth_pair(&img, &spec).unwrap();
        TrainingScene {
            stack_a: compute_channels(&img, &[]).unwrap(),
            stack_b: compute_channels(&img2, &[]).unwrap(),
            homography: h,
            keypoints: grid(4, 160, 160, 34.0),
        }
    }

    #[test]
    fn identity_scene_positives_have_distance_zero() {
        let scene = scene_from_gamma(1.0, 53);
        let config = DescriptorConfig::default();
        let pairs = build_training_set(&[scene], &config, 4, 7).unwrap();
        let positives: Vec<_> = pairs.iter().filter(|p| p.label).collect();
        let negatives: Vec<_> = pairs.iter().filter(|p| !p.label).collect();
        assert_eq!(positives.len(), 16);
        assert_eq!(negatives.len(), 16);
        for p in &positives {
            assert_eq!(hamming(&p.a, &p.b).unwrap(), 0);
        }
        // Negatives pair distinct sites, so they sit far from zero on a
        // textured image.
        for p in &negatives {
            assert!(hamming(&p.a, &p.b).unwrap() > 0);
        }
    }

    #[test]
    fn gamma_scene_separates_positive_and_negative_distances() {
        let scene = scene_from_gamma(1.6, 54);
        let config = DescriptorConfig::default();
        let pairs = build_training_set(&[scene], &config, 4, 8).unwrap();
        let mean = |label: bool| {
            let ds: Vec<f64> = pairs
                .iter()
                .filter(|p| p.label == label)
                .map(|p| hamming(&p.a, &p.b).unwrap() as f64)
                .collect();
            ds.iter().sum::<f64>() / ds.len() as f64
        };
        assert!(
            mean(true) < mean(false),
            "same-point pairs must be closer on average"
        );
    }

    #[test]
    fn too_few_positives_is_reported() {
        let scene = scene_from_gamma(1.0, 55);
        let config = DescriptorConfig::default();
        let err = build_training_set(&[scene], &config, 100, 9).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewPositives { got: 16, min: 100 }
        ));

        // Out-of-bounds keypoints are skipped, not fatal.
        let mut scene = scene_from_gamma(1.0, 56);
        scene.keypoints.push(Keypoint::new(2.0, 2.0));
        let pairs = build_training_set(&[scene], &config, 4, 10).unwrap();
        assert_eq!(pairs.len(), 32);
    }

    #[test]
    fn training_set_is_seed_deterministic() {
        let config = DescriptorConfig::default();
        let p1 = build_training_set(&[scene_from_gamma(1.6, 57)], &config, 4, 11).unwrap();
        let p2 = build_training_set(&[scene_from_gamma(1.6, 57)], &config, 4, 11).unwrap();
        assert_eq!(p1.len(), p2.len());
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.a.bits, b.a.bits);
            assert_eq!(a.b.bits, b.b.bits);
        }
    }

    #[test]
    fn end_to_end_reduction_keeps_true_matches_close() {
        let config = DescriptorConfig::default();
        let scenes = vec![scene_from_gamma(1.6, 58), scene_from_gamma(0.6, 59)];
        let pairs = build_training_set(&scenes, &config, 8, 12).unwrap();
        let model = adaboost_train(&pairs, 24).unwrap();
        let mask = select_top_m(&model.weights, &config, 512).unwrap();
        assert_eq!(mask.quadruples.len(), 128);

        let mut pos_le_neg = 0;
        let mut total = 0;
        let positives: Vec<_> = pairs.iter().filter(|p| p.label).collect();
        let negatives: Vec<_> = pairs.iter().filter(|p| !p.label).collect();
        for (p, n) in positives.iter().zip(&negatives) {
            let dp = hamming(
                &apply_mask(&p.a, &mask).unwrap(),
                &apply_mask(&p.b, &mask).unwrap(),
            )
            .unwrap();
            let dn = hamming(
                &apply_mask(&n.a, &mask).unwrap(),
                &apply_mask(&n.b, &mask).unwrap(),
            )
            .unwrap();
            if dp <= dn {
                pos_le_neg += 1;
            }
            total += 1;
        }
        assert!(pos_le_neg * 10 >= total * 9, "{pos_le_neg}/{total}");
    }
}
