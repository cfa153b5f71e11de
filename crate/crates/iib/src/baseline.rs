//! Smoothed point-pair comparison descriptor used as a performance
//! reference.
//!
//! The classical binary recipe: fixed pseudorandom point pairs inside the
//! region of support, one bit per pair comparing box-smoothed intensity.
//! The evaluation harness runs it beside the quadtree descriptor on
//! identical keypoints so performance differences come from the encoding,
//! not the data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descriptor::{BinaryDescriptor, Fingerprint, Keypoint, Mapping, DEFAULT_RADIUS};
use crate::error::Result;
use crate::image::{build_integral, ChannelImage, ChannelKind, GrayImage, IntegralImage, Rect};

pub const BASELINE_BITS: usize = 256;
const SMOOTHING_HALF: usize = 2;

/// Fixed sampling pattern: one (p1, p2) offset pair per bit, in pixels
/// relative to the keypoint at the pattern's nominal radius.
#[derive(Clone, Debug)]
pub struct PointPairPattern {
    pairs: Vec<[f64; 4]>,
    radius: f64,
}

impl PointPairPattern {
    /// Gaussian offsets (sigma = radius / 2) clamped to radius - 3 so the
    /// smoothing window stays inside the region of support.
    pub fn new(bits: usize, radius: f64, seed: u64) -> PointPairPattern {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = radius / 2.0;
        let bound = radius - 3.0;
        let gauss = move |rng: &mut ChaCha8Rng| -> f64 {
            let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (sigma * z).clamp(-bound, bound)
        };
        let pairs = (0..bits)
            .map(|_| {
                [
                    gauss(&mut rng),
                    gauss(&mut rng),
                    gauss(&mut rng),
                    gauss(&mut rng),
                ]
            })
            .collect();
        PointPairPattern { pairs, radius }
    }

    /// The fixed 256-bit pattern at the default radius.
    pub fn standard() -> PointPairPattern {
        PointPairPattern::new(BASELINE_BITS, DEFAULT_RADIUS, 0x9e3779b9)
    }

    pub fn bits(&self) -> usize {
        self.pairs.len()
    }

    pub fn fingerprint(&self) -> Fingerprint {
        // Granularity 0 marks the flat point-pair layout; no quadtree
        // configuration produces it, so the two families never compare.
        Fingerprint {
            granularity: 0,
            mapping: Mapping::Mean,
            overlap: false,
            channel_ids: vec![ChannelKind::Intensity.id()],
            radius: self.radius,
        }
    }
}

/// Box-smoothed intensity at an integer-rounded sample point, window
/// clamped into the image.
fn smoothed(integral: &IntegralImage, width: usize, height: usize, x: f64, y: f64) -> f64 {
    let cx = (x.round() as i64).clamp(0, width as i64 - 1) as usize;
    let cy = (y.round() as i64).clamp(0, height as i64 - 1) as usize;
    let x0 = cx.saturating_sub(SMOOTHING_HALF);
    let y0 = cy.saturating_sub(SMOOTHING_HALF);
    let x1 = (cx + SMOOTHING_HALF + 1).min(width);
    let y1 = (cy + SMOOTHING_HALF + 1).min(height);
    let rect = Rect {
        row: y0,
        col: x0,
        width: x1 - x0,
        height: y1 - y0,
    };
    integral.region_sum(rect).expect("window clamped into image") / rect.area() as f64
}

/// Descriptor for one keypoint; offsets scale with the keypoint radius.
pub fn extract_baseline(
    integral: &IntegralImage,
    width: usize,
    height: usize,
    kp: &Keypoint,
    pattern: &PointPairPattern,
) -> BinaryDescriptor {
    let scale = kp.radius / pattern.radius;
    let mut bits = crate::bits::BitBuffer::with_capacity(pattern.bits());
    for [dx1, dy1, dx2, dy2] in &pattern.pairs {
        let s1 = smoothed(integral, width, height, kp.x + dx1 * scale, kp.y + dy1 * scale);
        let s2 = smoothed(integral, width, height, kp.x + dx2 * scale, kp.y + dy2 * scale);
        bits.push(s1 < s2);
    }
    BinaryDescriptor {
        keypoint: *kp,
        bits,
        segment_bounds: vec![0, pattern.bits()],
        fingerprint: pattern.fingerprint(),
    }
}

/// Descriptors for a keypoint batch, sharing one integral image.
pub fn baseline_batch(
    img: &GrayImage,
    keypoints: &[Keypoint],
    pattern: &PointPairPattern,
) -> Result<Vec<BinaryDescriptor>> {
    let channel = ChannelImage::new(
        ChannelKind::Intensity,
        img.width(),
        img.height(),
        img.pixels().to_vec(),
    );
    let integral = build_integral(&channel);
    Ok(keypoints
        .iter()
        .map(|kp| extract_baseline(&integral, img.width(), img.height(), kp, pattern))
        .collect())
}
