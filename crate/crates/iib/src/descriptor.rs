//! Binary descriptor extraction.
//!
//! A descriptor concatenates, granularity by granularity, the mapping bits
//! of every channel's quadruples. Bit order is fixed: for g = 1..G, for each
//! channel in config order, for each quadruple in layout order, one or two
//! bits per patch in top-left, top-right, bottom-left, bottom-right order;
//! 2-bit codes emit their high bit first. Keeping each granularity's bits
//! contiguous is what lets the hierarchical matcher prune on prefixes.

use crate::bits::BitBuffer;
use crate::error::{Error, Result};
use crate::image::{
    compute_channels, ChannelKind, ChannelStack, GrayImage, IntegralImage, DEFAULT_CHANNELS,
};
use crate::layout::{quadruple_count, QuadtreeLayout, MAX_GRANULARITY};
use serde::{Deserialize, Serialize};

pub const DEFAULT_RADIUS: f64 = 32.0;
pub const DEFAULT_GRANULARITY: u8 = 4;

/// A feature point with its region-of-support geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Keypoint {
    /// Sub-pixel column.
    pub x: f64,
    /// Sub-pixel row.
    pub y: f64,
    /// ROS half-side in pixels.
    pub radius: f64,
    /// Orientation in radians; `None` means upright.
    pub angle: Option<f64>,
}

impl Keypoint {
    pub fn new(x: f64, y: f64) -> Self {
        Keypoint {
            x,
            y,
            radius: DEFAULT_RADIUS,
            angle: None,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_angle(mut self, angle: f64) -> Self {
        self.angle = Some(angle);
        self
    }
}

/// Evenly spaced upright keypoints, `rows * cols` of them, laid out over
/// the image interior. A margin of at least `ceil(radius)` keeps every
/// region of support inside the image. Plumbing for the evaluation harness
/// and the CLI when no detector output is available.
pub fn grid_keypoints(
    width: usize,
    height: usize,
    rows: usize,
    cols: usize,
    margin: f64,
    radius: f64,
) -> Vec<Keypoint> {
    let span_x = width as f64 - 2.0 * margin;
    let span_y = height as f64 - 2.0 * margin;
    let mut kps = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            kps.push(Keypoint {
                x: margin + span_x * (j as f64 + 0.5) / cols as f64,
                y: margin + span_y * (i as f64 + 0.5) / rows as f64,
                radius,
                angle: None,
            });
        }
    }
    kps
}

/// Region-of-support rescale factors for adapting detector keypoint sizes,
/// by detector name (case-insensitive): the ROS radius is the detector's
/// keypoint scale times this factor. Detectors without a scale estimate
/// (superpoint, aslfeat, alike) use a fixed 64 px radius instead and return
/// `None` here.
pub fn detector_rescale_factor(detector: &str) -> Option<f64> {
    match detector.to_ascii_lowercase().as_str() {
        "akaze" => Some(12.0),
        "orb" => Some(2.0),
        "brisk" => Some(4.0),
        "sift" => Some(20.0),
        "kaze" => Some(20.0),
        "surf" => Some(4.0),
        _ => None,
    }
}

/// Fixed ROS radius for detectors that report no usable scale.
pub const FIXED_DETECTOR_RADIUS: f64 = 64.0;

/// Rule turning a quadruple's four patch means into bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mapping {
    Mean,
    Max,
    Min,
    Quartile,
    Sort,
}

impl Mapping {
    pub const ALL: [Mapping; 5] = [
        Mapping::Mean,
        Mapping::Max,
        Mapping::Min,
        Mapping::Quartile,
        Mapping::Sort,
    ];

    /// Bits emitted per patch: 1 for mean/max/min, 2 for quartile/sort.
    pub fn bits_per_patch(self) -> usize {
        match self {
            Mapping::Mean | Mapping::Max | Mapping::Min => 1,
            Mapping::Quartile | Mapping::Sort => 2,
        }
    }

    /// Stable one-byte id used in file headers.
    pub fn id(self) -> u8 {
        match self {
            Mapping::Mean => 1,
            Mapping::Max => 2,
            Mapping::Min => 3,
            Mapping::Quartile => 4,
            Mapping::Sort => 5,
        }
    }

    pub fn from_id(id: u8) -> Option<Mapping> {
        Mapping::ALL.into_iter().find(|m| m.id() == id)
    }

    pub fn token(self) -> &'static str {
        match self {
            Mapping::Mean => "mean",
            Mapping::Max => "max",
            Mapping::Min => "min",
            Mapping::Quartile => "quartile",
            Mapping::Sort => "sort",
        }
    }
}

impl std::str::FromStr for Mapping {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mapping::ALL
            .into_iter()
            .find(|m| m.token() == s)
            .ok_or_else(|| format!("unknown mapping `{s}` (expected mean|max|min|quartile|sort)"))
    }
}

/// Extraction configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorConfig {
    /// Maximal granularity level G; levels 1..=G all contribute bits.
    pub granularity: u8,
    pub mapping: Mapping,
    /// Slide quadruple windows at stride one instead of tiling disjoint 2x2
    /// blocks.
    pub overlap: bool,
    /// Channels in descriptor order.
    pub channels: Vec<ChannelKind>,
    /// Honor keypoint angles by resampling the rotated ROS; off by default.
    pub rotation_enabled: bool,
    /// Default ROS half-side for keypoints that do not carry one.
    pub radius: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            granularity: DEFAULT_GRANULARITY,
            mapping: Mapping::Mean,
            overlap: false,
            channels: DEFAULT_CHANNELS.to_vec(),
            rotation_enabled: false,
            radius: DEFAULT_RADIUS,
        }
    }
}

impl DescriptorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.granularity == 0 || self.granularity > MAX_GRANULARITY {
            return Err(Error::InvalidGranularity(self.granularity));
        }
        if self.channels.is_empty() {
            return Err(Error::NoChannels);
        }
        let min = (1u64 << self.granularity) as f64;
        if !(self.radius >= min) {
            return Err(Error::RadiusTooSmall {
                radius: self.radius,
                granularity: self.granularity,
                min,
            });
        }
        Ok(())
    }

    pub fn bits_per_patch(&self) -> usize {
        self.mapping.bits_per_patch()
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Bits one quadruple contributes: four patches times bits per patch.
    pub fn quadruple_bits(&self) -> usize {
        4 * self.bits_per_patch()
    }

    /// Total quadruples across all levels and channels.
    pub fn total_quadruples(&self) -> usize {
        self.num_channels() * crate::layout::total_quadruples(self.granularity, self.overlap)
    }

    /// Descriptor length in bits, M.
    pub fn descriptor_size(&self) -> usize {
        self.total_quadruples() * self.quadruple_bits()
    }

    /// Bits contributed by granularity level `g` across all channels.
    pub fn segment_bits(&self, g: u8) -> usize {
        self.num_channels() * quadruple_count(g, self.overlap) * self.quadruple_bits()
    }

    /// `G + 1` cumulative bit offsets; segment g spans
    /// `bounds[g-1]..bounds[g]`.
    pub fn segment_bounds(&self) -> Vec<usize> {
        let mut bounds = Vec::with_capacity(self.granularity as usize + 1);
        bounds.push(0);
        let mut acc = 0;
        for g in 1..=self.granularity {
            acc += self.segment_bits(g);
            bounds.push(acc);
        }
        bounds
    }

    /// Granularity level owning the global quadruple id `qid`.
    ///
    /// Global quadruple order mirrors bit order: level-major, then channel,
    /// then layout order within the channel.
    pub fn quadruple_level(&self, qid: usize) -> u8 {
        let mut acc = 0;
        for g in 1..=self.granularity {
            acc += self.num_channels() * quadruple_count(g, self.overlap);
            if qid < acc {
                return g;
            }
        }
        panic!(
            "quadruple id {qid} out of range ({} total)",
            self.total_quadruples()
        );
    }

    pub fn fingerprint(&self) -> Fingerprint {
        Fingerprint {
            granularity: self.granularity,
            mapping: self.mapping,
            overlap: self.overlap,
            channel_ids: self.channels.iter().map(|c| c.id()).collect(),
            radius: self.radius,
        }
    }

    /// Rebuild the configuration a fingerprint describes. Rotation state is
    /// not part of the fingerprint and defaults to off.
    pub fn from_fingerprint(fp: &Fingerprint) -> Result<DescriptorConfig> {
        let channels = fp
            .channel_ids
            .iter()
            .map(|&id| ChannelKind::from_id(id).ok_or(Error::InvalidChannelId(id)))
            .collect::<Result<Vec<_>>>()?;
        let config = DescriptorConfig {
            granularity: fp.granularity,
            mapping: fp.mapping,
            overlap: fp.overlap,
            channels,
            rotation_enabled: false,
            radius: fp.radius,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Descriptor length in bits for a configuration.
pub fn descriptor_size(config: &DescriptorConfig) -> usize {
    config.descriptor_size()
}

/// Identifies the extraction configuration a descriptor came from.
/// Descriptors are only comparable when their fingerprints match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub granularity: u8,
    pub mapping: Mapping,
    pub overlap: bool,
    pub channel_ids: Vec<u8>,
    pub radius: f64,
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let channels: Vec<String> = self
            .channel_ids
            .iter()
            .map(|&id| match ChannelKind::from_id(id) {
                Some(k) => k.token(),
                None => format!("id{id}"),
            })
            .collect();
        write!(
            f,
            "G={} mapping={} overlap={} channels={} radius={}",
            self.granularity,
            self.mapping.token(),
            self.overlap,
            channels.join(","),
            self.radius
        )
    }
}

/// The four patch means of one quadruple, in top-left, top-right,
/// bottom-left, bottom-right order.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchQuadStats {
    pub x: [f64; 4],
}

/// Patch means of quadruple `quadruple` at level `g` on one channel.
pub fn quad_stats(
    stack: &ChannelStack,
    channel: ChannelKind,
    layout: &QuadtreeLayout,
    g: u8,
    quadruple: usize,
) -> Result<PatchQuadStats> {
    let entry = stack.get(channel).ok_or(Error::MissingChannel(channel))?;
    let quad = layout
        .quadruples(g)
        .nth(quadruple)
        .unwrap_or_else(|| panic!("quadruple {quadruple} out of range at level {g}"));
    let mut x = [0.0; 4];
    for (slot, (i, j)) in quad.into_iter().enumerate() {
        x[slot] = crate::image::region_mean(&entry.integral, layout.patch(g, i, j))?;
    }
    Ok(PatchQuadStats { x })
}

/// Tallies the arithmetic work of the bit-formulation stage.
///
/// `algebraic` counts additions/subtractions/multiplications/divisions spent
/// turning integral entries into bits; `relational` counts value
/// comparisons; `setup_algebraic` counts ROS acquisition work done once per
/// descriptor before any bit is formed (the root region means that seed the
/// mean-mapping threshold pyramid).
pub trait OpCounter {
    fn algebraic(&mut self, _n: u64) {}
    fn relational(&mut self, _n: u64) {}
    fn setup_algebraic(&mut self, _n: u64) {}
}

/// Zero-cost counter for production extraction.
pub struct NoOpCounter;

impl OpCounter for NoOpCounter {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub algebraic: u64,
    pub relational: u64,
    pub setup_algebraic: u64,
}

impl OpCounter for OpCounts {
    fn algebraic(&mut self, n: u64) {
        self.algebraic += n;
    }

    fn relational(&mut self, n: u64) {
        self.relational += n;
    }

    fn setup_algebraic(&mut self, n: u64) {
        self.setup_algebraic += n;
    }
}

/// One extracted descriptor.
#[derive(Clone, Debug, PartialEq)]
pub struct BinaryDescriptor {
    pub keypoint: Keypoint,
    pub bits: BitBuffer,
    /// `G + 1` cumulative offsets delimiting granularity segments.
    pub segment_bounds: Vec<usize>,
    pub fingerprint: Fingerprint,
}

impl BinaryDescriptor {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of granularity segments.
    pub fn segment_count(&self) -> usize {
        self.segment_bounds.len() - 1
    }

    /// Bit range of segment `g` (1-based).
    pub fn segment_range(&self, g: u8) -> std::ops::Range<usize> {
        let g = g as usize;
        self.segment_bounds[g - 1]..self.segment_bounds[g]
    }
}

// --- mapping functions ---

fn mean_bits(x: &[f64; 4], threshold: f64, c: &mut impl OpCounter) -> [bool; 4] {
    c.relational(4);
    [
        x[0] > threshold,
        x[1] > threshold,
        x[2] > threshold,
        x[3] > threshold,
    ]
}

fn max_of(x: &[f64; 4], c: &mut impl OpCounter) -> f64 {
    c.relational(3);
    x[0].max(x[1]).max(x[2]).max(x[3])
}

fn min_of(x: &[f64; 4], c: &mut impl OpCounter) -> f64 {
    c.relational(3);
    x[0].min(x[1]).min(x[2]).min(x[3])
}

fn extreme_bits(x: &[f64; 4], extreme: f64, c: &mut impl OpCounter) -> [bool; 4] {
    c.relational(4);
    [
        x[0] == extreme,
        x[1] == extreme,
        x[2] == extreme,
        x[3] == extreme,
    ]
}

fn quartile_codes(x: &[f64; 4], c: &mut impl OpCounter) -> [u8; 4] {
    let max = max_of(x, c);
    let min = min_of(x, c);
    c.algebraic(1);
    let r = max - min;
    c.relational(1);
    if r == 0.0 {
        return [0; 4];
    }
    c.algebraic(3);
    let (t1, t2, t3) = (0.25 * r, 0.5 * r, 0.75 * r);
    let mut codes = [0u8; 4];
    for (i, &xi) in x.iter().enumerate() {
        c.algebraic(1);
        let y = xi - min;
        c.relational(1);
        codes[i] = if y > t3 {
            0b11
        } else {
            c.relational(1);
            if y > t2 {
                0b10
            } else {
                c.relational(1);
                if y > t1 {
                    0b01
                } else {
                    0b00
                }
            }
        };
    }
    codes
}

fn sort_codes(x: &[f64; 4], c: &mut impl OpCounter) -> [u8; 4] {
    let mut codes = [0u8; 4];
    for i in 0..4 {
        let mut rank = 0u8;
        for j in 0..4 {
            if j == i {
                continue;
            }
            c.relational(1);
            if x[j] < x[i] {
                rank += 1;
            } else if j < i {
                c.relational(1);
                if x[j] == x[i] {
                    rank += 1;
                }
            }
        }
        codes[i] = rank;
    }
    codes
}

/// Bit per patch: 1 iff the patch mean strictly exceeds the arithmetic mean
/// of the four. Ties give 0.
pub fn map_mean(stats: &PatchQuadStats) -> [bool; 4] {
    let x = &stats.x;
    let mean = (x[0] + x[1] + x[2] + x[3]) / 4.0;
    mean_bits(x, mean, &mut NoOpCounter)
}

/// Bit per patch: 1 iff the patch mean equals the quadruple maximum. Tied
/// maxima all set their bit.
pub fn map_max(stats: &PatchQuadStats) -> [bool; 4] {
    let m = max_of(&stats.x, &mut NoOpCounter);
    extreme_bits(&stats.x, m, &mut NoOpCounter)
}

/// Bit per patch: 1 iff the patch mean equals the quadruple minimum.
pub fn map_min(stats: &PatchQuadStats) -> [bool; 4] {
    let m = min_of(&stats.x, &mut NoOpCounter);
    extreme_bits(&stats.x, m, &mut NoOpCounter)
}

/// Two bits per patch placing `x_i - min` in quarters of the range
/// `R = max - min`: code 3 above `0.75R`, 2 above `0.5R`, 1 above `0.25R`,
/// else 0. Degenerate `R = 0` gives all zeros.
pub fn map_quartile(stats: &PatchQuadStats) -> [u8; 4] {
    quartile_codes(&stats.x, &mut NoOpCounter)
}

/// Two bits per patch: the ascending rank of `x_i`, ties broken by patch
/// index (the earlier patch takes the lower rank).
pub fn map_sort(stats: &PatchQuadStats) -> [u8; 4] {
    sort_codes(&stats.x, &mut NoOpCounter)
}

// --- extraction ---

/// Extract one descriptor.
pub fn extract(
    stack: &ChannelStack,
    kp: &Keypoint,
    config: &DescriptorConfig,
) -> Result<BinaryDescriptor> {
    extract_with_ops(stack, kp, config, &mut NoOpCounter)
}

/// Extract one descriptor while tallying bit-formulation work.
pub fn extract_with_ops(
    stack: &ChannelStack,
    kp: &Keypoint,
    config: &DescriptorConfig,
    counter: &mut impl OpCounter,
) -> Result<BinaryDescriptor> {
    config.validate()?;
    for &ch in &config.channels {
        if stack.get(ch).is_none() {
            return Err(Error::MissingChannel(ch));
        }
    }
    match kp.angle {
        // Rotation by zero is the identity; resampling would only add
        // interpolation noise, so it routes through the upright path.
        Some(angle) if config.rotation_enabled && angle != 0.0 => {
            extract_rotated(stack, kp, angle, config, counter)
        }
        _ => {
            let layout = QuadtreeLayout::new(
                kp.x,
                kp.y,
                kp.radius,
                config.granularity,
                config.overlap,
                stack.width(),
                stack.height(),
            )?;
            let bits = formulate_bits(stack, &layout, config, counter);
            Ok(finish(kp, bits, config))
        }
    }
}

fn finish(kp: &Keypoint, bits: BitBuffer, config: &DescriptorConfig) -> BinaryDescriptor {
    debug_assert_eq!(bits.len(), config.descriptor_size());
    BinaryDescriptor {
        keypoint: *kp,
        bits,
        segment_bounds: config.segment_bounds(),
        fingerprint: config.fingerprint(),
    }
}

/// The bit-formulation stage: patch means to packed bits.
///
/// Patch means cost four algebraic operations each (three additions to
/// combine the integral corners, one division by the area). Without overlap
/// the mean mapping thresholds each quadruple on its parent patch mean,
/// reusing the previous level's means, so the whole stage spends exactly
/// four algebraic and one relational operation per bit; the root means
/// seeding level 1 count as per-descriptor setup.
fn formulate_bits(
    stack: &ChannelStack,
    layout: &QuadtreeLayout,
    config: &DescriptorConfig,
    counter: &mut impl OpCounter,
) -> BitBuffer {
    let integrals: Vec<&IntegralImage> = config
        .channels
        .iter()
        .map(|&ch| &stack.get(ch).expect("channel presence checked").integral)
        .collect();
    let n = integrals.len();
    let mut bits = BitBuffer::with_capacity(config.descriptor_size());

    let pyramid = config.mapping == Mapping::Mean && !config.overlap;
    // Previous-level patch means per channel, row-major; level 0 is the
    // single root mean.
    let mut prev: Vec<Vec<f64>> = if pyramid {
        let root = layout.root();
        integrals
            .iter()
            .map(|ii| {
                counter.setup_algebraic(4);
                vec![ii.region_sum_unchecked(root) / root.area() as f64]
            })
            .collect()
    } else {
        Vec::new()
    };

    for g in 1..=layout.granularity() {
        let side = layout.grid_size(g);
        let mut level_means: Vec<Vec<f64>> = Vec::with_capacity(n);
        for ii in &integrals {
            let mut means = Vec::with_capacity(side * side);
            for i in 0..side {
                for j in 0..side {
                    let rect = layout.patch(g, i, j);
                    counter.algebraic(4);
                    means.push(ii.region_sum_unchecked(rect) / rect.area() as f64);
                }
            }
            level_means.push(means);
        }

        for (ci, means) in level_means.iter().enumerate() {
            for (k, quad) in layout.quadruples(g).enumerate() {
                let x = [
                    means[quad[0].0 * side + quad[0].1],
                    means[quad[1].0 * side + quad[1].1],
                    means[quad[2].0 * side + quad[2].1],
                    means[quad[3].0 * side + quad[3].1],
                ];
                match config.mapping {
                    Mapping::Mean => {
                        let threshold = if pyramid {
                            prev[ci][k]
                        } else {
                            counter.algebraic(4);
                            (x[0] + x[1] + x[2] + x[3]) / 4.0
                        };
                        for bit in mean_bits(&x, threshold, counter) {
                            bits.push(bit);
                        }
                    }
                    Mapping::Max => {
                        let m = max_of(&x, counter);
                        for bit in extreme_bits(&x, m, counter) {
                            bits.push(bit);
                        }
                    }
                    Mapping::Min => {
                        let m = min_of(&x, counter);
                        for bit in extreme_bits(&x, m, counter) {
                            bits.push(bit);
                        }
                    }
                    Mapping::Quartile => {
                        for code in quartile_codes(&x, counter) {
                            bits.push(code & 0b10 != 0);
                            bits.push(code & 0b01 != 0);
                        }
                    }
                    Mapping::Sort => {
                        for code in sort_codes(&x, counter) {
                            bits.push(code & 0b10 != 0);
                            bits.push(code & 0b01 != 0);
                        }
                    }
                }
            }
        }
        if pyramid && g < layout.granularity() {
            prev = level_means;
        }
    }
    bits
}

fn bilinear(values: &[f64], width: usize, height: usize, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let v00 = values[y0 * width + x0];
    let v10 = values[y0 * width + x1];
    let v01 = values[y1 * width + x0];
    let v11 = values[y1 * width + x1];
    (v00 * (1.0 - fx) + v10 * fx) * (1.0 - fy) + (v01 * (1.0 - fx) + v11 * fx) * fy
}

/// Rotated-ROS extraction: resample the rotated neighborhood into a local
/// buffer, recompute channels and integrals there, then extract upright at
/// the buffer center.
///
/// The buffer is one pixel wider than the ROS on every side so the local
/// Sobel responses on ROS border pixels see true neighbors instead of
/// replicate padding.
fn extract_rotated(
    stack: &ChannelStack,
    kp: &Keypoint,
    angle: f64,
    config: &DescriptorConfig,
    counter: &mut impl OpCounter,
) -> Result<BinaryDescriptor> {
    let intensity = stack
        .get(ChannelKind::Intensity)
        .ok_or(Error::MissingChannel(ChannelKind::Intensity))?;
    let (w, h) = (stack.width(), stack.height());

    let rc = kp.radius.ceil() as usize;
    let side = 2 * rc + 2;
    let center = (rc + 1) as f64;
    let (sin, cos) = angle.sin_cos();
    let sample_pos = |u: f64, v: f64| {
        let du = u - center;
        let dv = v - center;
        (
            kp.x + cos * du - sin * dv,
            kp.y + sin * du + cos * dv,
        )
    };

    // Rotation is linear, so the buffer corners bound the whole sampling
    // footprint.
    let last = (side - 1) as f64;
    for (u, v) in [(0.0, 0.0), (last, 0.0), (0.0, last), (last, last)] {
        let (x, y) = sample_pos(u, v);
        if !(x >= 0.0 && x <= (w - 1) as f64 && y >= 0.0 && y <= (h - 1) as f64) {
            return Err(Error::KeypointOutOfBounds {
                x: kp.x,
                y: kp.y,
                radius: kp.radius,
                width: w,
                height: h,
            });
        }
    }

    let resample = |values: &[f64]| {
        let mut buf = Vec::with_capacity(side * side);
        for v in 0..side {
            for u in 0..side {
                let (x, y) = sample_pos(u as f64, v as f64);
                buf.push(bilinear(values, w, h, x, y));
            }
        }
        buf
    };

    let gray = GrayImage::new(side, side, resample(intensity.image.values()))?;
    // Extras cannot be recomputed from intensity; resample each directly.
    // All extras are carried over (in slot order) so slot ids line up.
    let mut extras: Vec<(String, Vec<f64>)> = Vec::new();
    for entry in stack.entries() {
        if let ChannelKind::Extra(_) = entry.image.kind {
            let name = entry.name.clone().unwrap_or_default();
            extras.push((name, resample(entry.image.values())));
        }
    }
    let local = compute_channels(&gray, &extras)?;

    let layout = QuadtreeLayout::new(
        center,
        center,
        kp.radius,
        config.granularity,
        config.overlap,
        side,
        side,
    )?;
    let bits = formulate_bits(&local, &layout, config, counter);
    Ok(finish(kp, bits, config))
}

/// A keypoint that extraction could not use, with the reason.
#[derive(Clone, Debug)]
pub struct SkippedKeypoint {
    /// Index into the input keypoint list.
    pub index: usize,
    pub keypoint: Keypoint,
    pub reason: String,
}

/// Batch extraction result: descriptors in input order plus skip reports.
#[derive(Clone, Debug)]
pub struct ExtractionOutcome {
    pub descriptors: Vec<BinaryDescriptor>,
    pub skipped: Vec<SkippedKeypoint>,
}

/// Extract descriptors for many keypoints in parallel.
///
/// Keypoints whose ROS does not fit the image (or whose radius is too small
/// for the granularity) are skipped and reported; configuration errors fail
/// the whole batch.
pub fn extract_batch(
    stack: &ChannelStack,
    keypoints: &[Keypoint],
    config: &DescriptorConfig,
) -> Result<ExtractionOutcome> {
    use rayon::prelude::*;

    config.validate()?;
    for &ch in &config.channels {
        if stack.get(ch).is_none() {
            return Err(Error::MissingChannel(ch));
        }
    }

    let results: Vec<std::result::Result<BinaryDescriptor, SkippedKeypoint>> = keypoints
        .par_iter()
        .enumerate()
        .map(|(index, kp)| match extract(stack, kp, config) {
            Ok(d) => Ok(d),
            Err(err @ (Error::KeypointOutOfBounds { .. } | Error::RadiusTooSmall { .. })) => {
                Err(SkippedKeypoint {
                    index,
                    keypoint: *kp,
                    reason: err.to_string(),
                })
            }
            Err(other) => panic!("unexpected extraction error: {other}"),
        })
        .collect();

    let mut outcome = ExtractionOutcome {
        descriptors: Vec::with_capacity(keypoints.len()),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(d) => outcome.descriptors.push(d),
            Err(s) => outcome.skipped.push(s),
        }
    }
    Ok(outcome)
}
