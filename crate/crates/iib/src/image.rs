//! Grayscale images, derived channel images, and integral images.
//!
//! Every descriptor bit ultimately comes from rectangular patch means over a
//! set of scalar channels. This module computes those channels (intensity,
//! Sobel gradient magnitudes, gradient orientation, plus caller-supplied
//! extras) and pairs each with an integral image so any patch mean costs four
//! lookups.

use crate::error::{Error, Result};

/// Row-major grayscale raster with real-valued samples.
///
/// Loaded 8-bit images hold values in `[0, 255]`; synthetic photometric
/// transforms may legitimately leave that range, so nothing here clamps.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage { width, height });
        }
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel count {} does not match {width}x{height}",
            pixels.len()
        );
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        GrayImage::new(width, height, pixels).expect("nonzero dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Pointwise `a * I + b` in real arithmetic, no clamping or rounding.
    pub fn affine(&self, a: f64, b: f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| a * v + b).collect(),
        }
    }

    /// The image rotated by 180 degrees (both axes flipped).
    pub fn rotated_180(&self) -> GrayImage {
        let mut pixels = self.pixels.clone();
        pixels.reverse();
        GrayImage {
            width: self.width,
            height: self.height,
            pixels,
        }
    }
}

/// Which scalar field a channel carries.
///
/// `Extra(slot)` refers to the caller-registered extra channel at position
/// `slot` (depth maps, segmentation masks and similar side data).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelKind {
    GradX,
    GradY,
    GradOrientation,
    Intensity,
    Extra(u8),
}

impl ChannelKind {
    /// Stable one-byte id used in descriptor fingerprints and file headers.
    pub fn id(self) -> u8 {
        match self {
            ChannelKind::GradX => 1,
            ChannelKind::GradY => 2,
            ChannelKind::GradOrientation => 3,
            ChannelKind::Intensity => 4,
            ChannelKind::Extra(slot) => 5 + slot,
        }
    }

    pub fn from_id(id: u8) -> Option<ChannelKind> {
        match id {
            1 => Some(ChannelKind::GradX),
            2 => Some(ChannelKind::GradY),
            3 => Some(ChannelKind::GradOrientation),
            4 => Some(ChannelKind::Intensity),
            0 => None,
            n => Some(ChannelKind::Extra(n - 5)),
        }
    }

    /// Short flag-style token (`gx`, `gy`, `go`, `gi`, `extra<N>`).
    pub fn token(self) -> String {
        match self {
            ChannelKind::GradX => "gx".into(),
            ChannelKind::GradY => "gy".into(),
            ChannelKind::GradOrientation => "go".into(),
            ChannelKind::Intensity => "gi".into(),
            ChannelKind::Extra(slot) => format!("extra{slot}"),
        }
    }
}

/// The default channel order: horizontal and vertical gradient magnitude,
/// gradient orientation, then pixel intensity.
pub const DEFAULT_CHANNELS: [ChannelKind; 4] = [
    ChannelKind::GradX,
    ChannelKind::GradY,
    ChannelKind::GradOrientation,
    ChannelKind::Intensity,
];

/// A single scalar field derived from (or supplied alongside) an image.
#[derive(Clone, Debug)]
pub struct ChannelImage {
    pub kind: ChannelKind,
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ChannelImage {
    pub fn new(kind: ChannelKind, width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height);
        ChannelImage {
            kind,
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Axis-aligned pixel rectangle: `width x height` cells starting at
/// `(row, col)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub row: usize,
    pub col: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    pub fn new(row: usize, col: usize, width: usize, height: usize) -> Self {
        Rect {
            row,
            col,
            width,
            height,
        }
    }

    pub fn area(&self) -> usize {
        self.width * self.height
    }
}

/// Summed-area table over one channel.
///
/// Entry `(r, c)` is the sum of all channel values with row < r and col < c,
/// so the first row and column are zero and the table is one cell wider and
/// taller than the channel.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl IntegralImage {
    /// Source channel width (the table itself has `width + 1` columns).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.data[row * (self.width + 1) + col]
    }

    /// Sum of the channel over `rect` in four lookups.
    pub fn region_sum(&self, rect: Rect) -> Result<f64> {
        self.check_rect(rect)?;
        Ok(self.region_sum_unchecked(rect))
    }

    #[inline]
    pub(crate) fn region_sum_unchecked(&self, rect: Rect) -> f64 {
        let stride = self.width + 1;
        let top = rect.row * stride;
        let bottom = (rect.row + rect.height) * stride;
        let (c0, c1) = (rect.col, rect.col + rect.width);
        self.data[bottom + c1] - self.data[top + c1] - self.data[bottom + c0] + self.data[top + c0]
    }

    fn check_rect(&self, rect: Rect) -> Result<()> {
        if rect.area() == 0
            || rect.row + rect.height > self.height
            || rect.col + rect.width > self.width
        {
            return Err(Error::RectOutOfBounds {
                rect,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }
}

/// Build the summed-area table for a channel.
pub fn build_integral(ch: &ChannelImage) -> IntegralImage {
    let (w, h) = (ch.width, ch.height);
    let stride = w + 1;
    let mut data = vec![0.0; stride * (h + 1)];
    for r in 0..h {
        let mut row_sum = 0.0;
        for c in 0..w {
            row_sum += ch.get(r, c);
            data[(r + 1) * stride + (c + 1)] = data[r * stride + (c + 1)] + row_sum;
        }
    }
    IntegralImage {
        width: w,
        height: h,
        data,
    }
}

/// Mean channel value over `rect`, from four integral lookups and a divide.
pub fn region_mean(ii: &IntegralImage, rect: Rect) -> Result<f64> {
    Ok(ii.region_sum(rect)? / rect.area() as f64)
}

/// Signed Sobel 3x3 responses with replicate-edge padding.
///
/// Returns `(gx, gy)` as raw signed responses; callers take magnitudes or
/// orientations as needed.
pub fn sobel_signed(img: &GrayImage) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width, img.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for r in 0..h {
        let rm = r.saturating_sub(1);
        let rp = (r + 1).min(h - 1);
        for c in 0..w {
            let cm = c.saturating_sub(1);
            let cp = (c + 1).min(w - 1);
            let tl = img.get(rm, cm);
            let tc = img.get(rm, c);
            let tr = img.get(rm, cp);
            let ml = img.get(r, cm);
            let mr = img.get(r, cp);
            let bl = img.get(rp, cm);
            let bc = img.get(rp, c);
            let br = img.get(rp, cp);
            // [-1 0 1; -2 0 2; -1 0 1] and its transpose
            gx[r * w + c] = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            gy[r * w + c] = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
        }
    }
    (gx, gy)
}

/// Normalized gradient angle: `atan2` mapped linearly from `(-pi, pi]` onto
/// `[0, 1)`, with zero-gradient pixels pinned to 0.
#[inline]
pub fn orientation_value(gx: f64, gy: f64) -> f64 {
    if gx == 0.0 && gy == 0.0 {
        return 0.0;
    }
    let mut o = (gy.atan2(gx) + std::f64::consts::PI) / std::f64::consts::TAU;
    if o >= 1.0 {
        o = 0.0;
    }
    o
}

/// One channel paired with its integral image.
#[derive(Clone, Debug)]
pub struct ChannelEntry {
    pub image: ChannelImage,
    pub integral: IntegralImage,
    /// Registration name for extra channels; `None` for the derived four.
    pub name: Option<String>,
}

/// The per-image set of channels consumed by descriptor extraction.
///
/// Immutable after construction; extraction workers share it read-only.
#[derive(Clone, Debug)]
pub struct ChannelStack {
    width: usize,
    height: usize,
    entries: Vec<ChannelEntry>,
}

impl ChannelStack {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of channels, `N`.
    pub fn channel_count(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[ChannelEntry] {
        &self.entries
    }

    pub fn get(&self, kind: ChannelKind) -> Option<&ChannelEntry> {
        self.entries.iter().find(|e| e.image.kind == kind)
    }

    pub fn extra_slot_by_name(&self, name: &str) -> Option<u8> {
        self.entries.iter().find_map(|e| match e.image.kind {
            ChannelKind::Extra(slot) if e.name.as_deref() == Some(name) => Some(slot),
            _ => None,
        })
    }
}

/// Compute the default four channels plus any extras, each with its
/// integral image.
///
/// The intensity channel is the input verbatim; `grad_x`/`grad_y` are the
/// absolute Sobel responses; orientation is [`orientation_value`] of the
/// signed responses. Extras keep their registration order after the
/// defaults and must match the image dimensions.
pub fn compute_channels(img: &GrayImage, extras: &[(String, Vec<f64>)]) -> Result<ChannelStack> {
    let (w, h) = (img.width, img.height);
    for (name, values) in extras {
        if values.len() != w * h {
            // Report the mismatch as a flat length so callers that loaded a
            // raster of known dims can tell what happened.
            return Err(Error::ChannelDimensionMismatch {
                name: name.clone(),
                got_width: values.len(),
                got_height: 1,
                want_width: w,
                want_height: h,
            });
        }
    }

    let (gx_signed, gy_signed) = sobel_signed(img);
    let orientation: Vec<f64> = gx_signed
        .iter()
        .zip(&gy_signed)
        .map(|(&gx, &gy)| orientation_value(gx, gy))
        .collect();
    let gx_mag: Vec<f64> = gx_signed.iter().map(|v| v.abs()).collect();
    let gy_mag: Vec<f64> = gy_signed.iter().map(|v| v.abs()).collect();

    let mut entries = Vec::with_capacity(4 + extras.len());
    let mut push = |kind: ChannelKind, values: Vec<f64>, name: Option<String>| {
        let image = ChannelImage::new(kind, w, h, values);
        let integral = build_integral(&image);
        entries.push(ChannelEntry {
            image,
            integral,
            name,
        });
    };
    push(ChannelKind::GradX, gx_mag, None);
    push(ChannelKind::GradY, gy_mag, None);
    push(ChannelKind::GradOrientation, orientation, None);
    push(ChannelKind::Intensity, img.pixels.clone(), None);
    for (slot, (name, values)) in extras.iter().enumerate() {
        push(
            ChannelKind::Extra(slot as u8),
            values.clone(),
            Some(name.clone()),
        );
    }

    Ok(ChannelStack {
        width: w,
        height: h,
        entries,
    })
}
