//! Homography-ground-truth evaluation and synthetic pair generation.
//!
//! Ground truth is a plane-to-plane homography per image pair. A putative
//! match is a mutual nearest neighbor; it counts as correct when both
//! keypoints reproject onto each other within epsilon in both directions.
//! Recall divides by the correspondence count: the keypoint pairs that are
//! geometrically matchable at all.

use crate::descriptor::{BinaryDescriptor, Keypoint};
use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::matching::{distance_matrix, MatchPair};

pub const DEFAULT_EPSILON: f64 = 3.0;

/// Invertible 3x3 projective transform, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Homography {
    m: [f64; 9],
}

impl Homography {
    pub fn new(m: [f64; 9]) -> Result<Self> {
        let h = Homography { m };
        let det = h.det();
        if !(det.abs() > 1e-12) {
            return Err(Error::SingularHomography { det });
        }
        Ok(h)
    }

    pub fn identity() -> Self {
        Homography {
            m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            m: [1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0],
        }
    }

    pub fn matrix(&self) -> &[f64; 9] {
        &self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
            + m[2] * (m[3] * m[7] - m[4] * m[6])
    }

    /// Inverse via the adjugate; valid because construction bounds the
    /// determinant away from zero.
    pub fn inverse(&self) -> Homography {
        let m = &self.m;
        let det = self.det();
        let adj = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        Homography {
            m: adj.map(|v| v / det),
        }
    }
}

/// Project `(x, y)` through `h` and dehomogenize.
pub fn project_point(h: &Homography, x: f64, y: f64) -> Result<(f64, f64)> {
    let m = h.matrix();
    let w = m[6] * x + m[7] * y + m[8];
    if w == 0.0 {
        return Err(Error::PointAtInfinity);
    }
    Ok((
        (m[0] * x + m[1] * y + m[2]) / w,
        (m[3] * x + m[4] * y + m[5]) / w,
    ))
}

/// Geometrically matchable keypoint pairs under one homography.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrespondenceSet {
    /// (reference index, test index), one-to-one.
    pub pairs: Vec<(usize, usize)>,
    pub epsilon: f64,
}

impl CorrespondenceSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, r: usize, t: usize) -> bool {
        self.pairs.iter().any(|&(a, b)| (a, b) == (r, t))
    }
}

/// One-to-one correspondences: among all (ref, test) pairs whose forward
/// reprojection distance is within `epsilon`, assign greedily by ascending
/// distance (ties by index). Reference points that project outside every
/// test neighborhood stay unmatched.
pub fn correspondences(
    ref_kps: &[Keypoint],
    test_kps: &[Keypoint],
    h: &Homography,
    epsilon: f64,
) -> Result<CorrespondenceSet> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, r) in ref_kps.iter().enumerate() {
        // A reference point at infinity corresponds to nothing.
        let Ok((px, py)) = project_point(h, r.x, r.y) else {
            continue;
        };
        for (j, t) in test_kps.iter().enumerate() {
            let d = ((px - t.x).powi(2) + (py - t.y).powi(2)).sqrt();
            if d <= epsilon {
                candidates.push((d, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));

    let mut used_ref = vec![false; ref_kps.len()];
    let mut used_test = vec![false; test_kps.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_ref[i] && !used_test[j] {
            used_ref[i] = true;
            used_test[j] = true;
            pairs.push((i, j));
        }
    }
    pairs.sort_unstable();
    Ok(CorrespondenceSet { pairs, epsilon })
}

/// Symmetric geometric validation: forward and backward reprojection both
/// within `epsilon`. Projection failures count as invalid.
pub fn reprojection_ok(
    h: &Homography,
    h_inv: &Homography,
    ref_kp: &Keypoint,
    test_kp: &Keypoint,
    epsilon: f64,
) -> bool {
    let Ok((fx, fy)) = project_point(h, ref_kp.x, ref_kp.y) else {
        return false;
    };
    let Ok((bx, by)) = project_point(h_inv, test_kp.x, test_kp.y) else {
        return false;
    };
    let fwd = ((fx - test_kp.x).powi(2) + (fy - test_kp.y).powi(2)).sqrt();
    let bwd = ((bx - ref_kp.x).powi(2) + (by - ref_kp.y).powi(2)).sqrt();
    fwd <= epsilon && bwd <= epsilon
}

/// One operating point of the evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    /// Distance threshold that produced the matches; infinity for the plain
    /// mutual-matching operating point.
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
    pub correct: usize,
    pub putative: usize,
    /// No putative matches: precision pinned to 0.
    pub putative_empty: bool,
    /// No correspondences: recall pinned to 0.
    pub correspondences_empty: bool,
}

fn pr_point(
    threshold: f64,
    matches: &[MatchPair],
    corr: &CorrespondenceSet,
    ref_kps: &[Keypoint],
    test_kps: &[Keypoint],
    h: &Homography,
    h_inv: &Homography,
    epsilon: f64,
) -> PrPoint {
    let correct = matches
        .iter()
        .filter(|m| {
            reprojection_ok(h, h_inv, &ref_kps[m.query], &test_kps[m.train], epsilon)
        })
        .count();
    let putative = matches.len();
    PrPoint {
        threshold,
        precision: if putative == 0 {
            0.0
        } else {
            correct as f64 / putative as f64
        },
        recall: if corr.is_empty() {
            0.0
        } else {
            correct as f64 / corr.len() as f64
        },
        correct,
        putative,
        putative_empty: putative == 0,
        correspondences_empty: corr.is_empty(),
    }
}

/// Score a set of mutual matches against ground truth.
///
/// A match is correct iff its keypoints pass symmetric reprojection within
/// `epsilon`. Precision divides correct by putative matches; recall divides
/// by the correspondence count.
pub fn precision_recall(
    matches: &[MatchPair],
    corr: &CorrespondenceSet,
    ref_kps: &[Keypoint],
    test_kps: &[Keypoint],
    h: &Homography,
    epsilon: f64,
) -> Result<PrPoint> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(pr_point(
        f64::INFINITY,
        matches,
        corr,
        ref_kps,
        test_kps,
        h,
        &h.inverse(),
        epsilon,
    ))
}

/// Mutual matches among pairs at Hamming distance ≤ `threshold`; the same
/// argmin and tie rules as brute force, restricted to the filtered pairs.
fn thresholded_mutual(dists: &[Vec<u32>], threshold: u32) -> Vec<MatchPair> {
    let nq = dists.len();
    let nt = if nq == 0 { 0 } else { dists[0].len() };
    let mut row: Vec<Option<(u32, usize)>> = vec![None; nq];
    let mut col: Vec<Option<(u32, usize)>> = vec![None; nt];
    for (i, drow) in dists.iter().enumerate() {
        for (j, &d) in drow.iter().enumerate() {
            if d > threshold {
                continue;
            }
            if row[i].map_or(true, |(bd, _)| d < bd) {
                row[i] = Some((d, j));
            }
            if col[j].map_or(true, |(bd, _)| d < bd) {
                col[j] = Some((d, i));
            }
        }
    }
    let mut out = Vec::new();
    for (i, &r) in row.iter().enumerate() {
        let Some((d, j)) = r else { continue };
        if col[j] == Some((d, i)) {
            out.push(MatchPair {
                query: i,
                train: j,
                distance: d,
            });
        }
    }
    out
}

/// Recall-vs-precision sweep: one operating point per ascending distance
/// threshold, filtering pairs by `distance <= threshold` before the mutual
/// rule.
pub fn pr_sweep(
    queries: &[BinaryDescriptor],
    trains: &[BinaryDescriptor],
    corr: &CorrespondenceSet,
    thresholds: &[u32],
    h: &Homography,
    epsilon: f64,
) -> Result<Vec<PrPoint>> {
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    debug_assert!(
        thresholds.windows(2).all(|w| w[0] <= w[1]),
        "thresholds must ascend"
    );
    let dists = distance_matrix(queries, trains)?;
    let ref_kps: Vec<Keypoint> = queries.iter().map(|d| d.keypoint).collect();
    let test_kps: Vec<Keypoint> = trains.iter().map(|d| d.keypoint).collect();
    let h_inv = h.inverse();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let matches = thresholded_mutual(&dists, t);
            pr_point(
                t as f64, &matches, corr, &ref_kps, &test_kps, h, &h_inv, epsilon,
            )
        })
        .collect())
}

/// Photometric and geometric recipe for a synthetic test image.
#[derive(Clone, Copy, Debug)]
pub struct SynthSpec {
    pub gain: f64,
    pub bias: f64,
    pub gamma: f64,
    pub homography: Homography,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            gain: 1.0,
            bias: 0.0,
            gamma: 1.0,
            homography: Homography::identity(),
        }
    }
}

/// Generate the second image of an evaluation pair.
///
/// Geometry first: each output pixel samples the input bilinearly at the
/// inverse-projected position (the returned homography maps input
/// coordinates to output coordinates). Photometry second, in normalized
/// units: `255 * (gain * I/255 + bias)^gamma`, floored at zero before the
/// power, clipped to [0, 255] and rounded to integers like a real 8-bit
/// capture. Source samples outside the input replicate the border.
pub fn synth_pair(img: &GrayImage, spec: &SynthSpec) -> Result<(GrayImage, Homography)> {
    if !(spec.gain > 0.0) || !(spec.gamma > 0.0) {
        return Err(Error::InvalidPhotometric {
            gain: spec.gain,
            gamma: spec.gamma,
        });
    }
    let (w, h) = (img.width(), img.height());
    let inv = spec.homography.inverse();
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let (sx, sy) = project_point(&inv, col as f64, row as f64)?;
            let sx = sx.clamp(0.0, (w - 1) as f64);
            let sy = sy.clamp(0.0, (h - 1) as f64);
            let x0 = sx.floor() as usize;
            let y0 = sy.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let v = (img.get(y0, x0) * (1.0 - fx) + img.get(y0, x1) * fx) * (1.0 - fy)
                + (img.get(y1, x0) * (1.0 - fx) + img.get(y1, x1) * fx) * fy;

            let t = (spec.gain * (v / 255.0) + spec.bias).max(0.0);
            out.push((255.0 * t.powf(spec.gamma)).clamp(0.0, 255.0).round());
        }
    }
    Ok((GrayImage::new(w, h, out)?, spec.homography))
}
