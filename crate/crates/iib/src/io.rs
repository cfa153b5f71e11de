//! File formats: keypoint CSV, the IIBD descriptor container, homography
//! and mask files, and raster image loading.
//!
//! All multi-byte fields are little-endian. Error values carry the path so
//! callers can report failures without extra bookkeeping.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::bits::BitBuffer;
use crate::descriptor::{BinaryDescriptor, DescriptorConfig, Fingerprint, Keypoint, Mapping};
use crate::error::{Error, Result};
use crate::evaluation::Homography;
use crate::image::GrayImage;
use crate::matching::check_comparable;
use crate::selection::{AdaBoostModel, SelectionMask};

const IIBD_MAGIC: &[u8; 4] = b"IIBD";
pub const IIBD_VERSION: u16 = 1;

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

/// Keypoints from UTF-8 CSV: `x,y[,radius[,angle_rad]]` per line. A missing
/// or empty radius takes `default_radius`; a missing or empty angle means
/// upright. Blank lines and `#` comments are skipped.
pub fn read_keypoints(path: &Path, default_radius: f64) -> Result<Vec<Keypoint>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut kps = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = |what: &str| {
            Error::format(
                path_str(path),
                format!("line {}: {what} in `{raw}`", lineno + 1),
            )
        };
        if fields.len() < 2 || fields.len() > 4 {
            return Err(bad("expected 2-4 comma-separated fields"));
        }
        let num = |s: &str, what: &str| s.parse::<f64>().map_err(|_| bad(what));
        let x = num(fields[0], "unparsable x")?;
        let y = num(fields[1], "unparsable y")?;
        let radius = match fields.get(2) {
            Some(s) if !s.is_empty() => num(s, "unparsable radius")?,
            _ => default_radius,
        };
        let angle = match fields.get(3) {
            Some(s) if !s.is_empty() => Some(num(s, "unparsable angle")?),
            _ => None,
        };
        kps.push(Keypoint {
            x,
            y,
            radius,
            angle,
        });
    }
    Ok(kps)
}

pub fn write_keypoints(path: &Path, kps: &[Keypoint]) -> Result<()> {
    let mut out = String::new();
    for kp in kps {
        match kp.angle {
            Some(a) => out.push_str(&format!("{},{},{},{}\n", kp.x, kp.y, kp.radius, a)),
            None => out.push_str(&format!("{},{},{}\n", kp.x, kp.y, kp.radius)),
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path_str(path), e))
}

fn fingerprint_header(fp: &Fingerprint) -> Vec<u8> {
    let mut out = Vec::new();
    out.push(fp.granularity);
    out.push(fp.mapping.id());
    out.push(fp.overlap as u8);
    out.push(fp.channel_ids.len() as u8);
    out.extend_from_slice(&fp.channel_ids);
    out.extend_from_slice(&fp.radius.to_le_bytes());
    out
}

/// Write descriptors to the IIBD container.
///
/// Layout: magic `IIBD`, format version u16, fingerprint (granularity u8,
/// mapping id u8, overlap u8, channel count u8, channel ids, radius f64),
/// keypoint count u32, descriptor bits M u32; then per keypoint x/y/radius
/// as f64, an angle-present byte, the angle as f64 (zero when absent), and
/// ceil(M/8) descriptor bytes with bit 0 the lowest bit index.
///
/// The container records one configuration, so the slice must be non-empty
/// and uniform.
pub fn write_descriptors(path: &Path, descriptors: &[BinaryDescriptor]) -> Result<()> {
    let Some(first) = descriptors.first() else {
        return Err(Error::format(
            path_str(path),
            "descriptor container needs at least one descriptor to record its configuration",
        ));
    };
    for d in descriptors {
        check_comparable(first, d)?;
    }
    let m = first.len();
    let mut out = Vec::new();
    out.extend_from_slice(IIBD_MAGIC);
    out.extend_from_slice(&IIBD_VERSION.to_le_bytes());
    out.extend_from_slice(&fingerprint_header(&first.fingerprint));
    out.extend_from_slice(&(descriptors.len() as u32).to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    for d in descriptors {
        let kp = d.keypoint;
        out.extend_from_slice(&kp.x.to_le_bytes());
        out.extend_from_slice(&kp.y.to_le_bytes());
        out.extend_from_slice(&kp.radius.to_le_bytes());
        out.push(kp.angle.is_some() as u8);
        out.extend_from_slice(&kp.angle.unwrap_or(0.0).to_le_bytes());
        out.extend_from_slice(&d.bits.to_bytes());
    }
    fs::write(path, out).map_err(|e| Error::io(path_str(path), e))
}

struct Reader<'a> {
    path: &'a Path,
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.data.len() < n {
            return Err(Error::format(
                path_str(self.path),
                format!("truncated while reading {what}"),
            ));
        }
        let (head, tail) = self.data.split_at(n);
        self.data = tail;
        Ok(head)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

/// Read an IIBD container.
///
/// Segment bounds are not stored in the file; they are resolved in this
/// order: a supplied mask (fingerprint and selected size must agree with
/// the file) rebuilds the reduced bounds; a file whose M equals the
/// fingerprint's full descriptor size gets that configuration's bounds;
/// anything else gets the single segment `[0, M]`.
pub fn read_descriptors(path: &Path, mask: Option<&SelectionMask>) -> Result<Vec<BinaryDescriptor>> {
    let raw = fs::read(path).map_err(|e| Error::io(path_str(path), e))?;
    let mut r = Reader {
        path,
        data: &raw,
    };
    if r.take(4, "magic")? != IIBD_MAGIC {
        return Err(Error::format(path_str(path), "not an IIBD file"));
    }
    let version = r.u16("version")?;
    if version != IIBD_VERSION {
        return Err(Error::format(
            path_str(path),
            format!("unsupported format version {version}"),
        ));
    }
    let granularity = r.u8("granularity")?;
    let mapping_id = r.u8("mapping id")?;
    let mapping = Mapping::from_id(mapping_id).ok_or_else(|| {
        Error::format(path_str(path), format!("unknown mapping id {mapping_id}"))
    })?;
    let overlap = match r.u8("overlap flag")? {
        0 => false,
        1 => true,
        v => {
            return Err(Error::format(
                path_str(path),
                format!("overlap flag must be 0 or 1, got {v}"),
            ))
        }
    };
    let n_channels = r.u8("channel count")? as usize;
    let channel_ids = r.take(n_channels, "channel ids")?.to_vec();
    let radius = r.f64("radius")?;
    let count = r.u32("keypoint count")? as usize;
    let m = r.u32("descriptor size")? as usize;

    let fingerprint = Fingerprint {
        granularity,
        mapping,
        overlap,
        channel_ids,
        radius,
    };
    let segment_bounds = match mask {
        Some(mask) => {
            if mask.fingerprint != fingerprint || mask.selected_bits != m {
                return Err(Error::FingerprintMismatch {
                    a: format!("{fingerprint} M={m}"),
                    b: format!("{} M={}", mask.fingerprint, mask.selected_bits),
                });
            }
            mask.reduced_segment_bounds()?
        }
        None => match DescriptorConfig::from_fingerprint(&fingerprint) {
            Ok(config) if config.descriptor_size() == m => config.segment_bounds(),
            _ => vec![0, m],
        },
    };

    let mut descriptors = Vec::new();
    for _ in 0..count {
        let x = r.f64("keypoint x")?;
        let y = r.f64("keypoint y")?;
        let kp_radius = r.f64("keypoint radius")?;
        let has_angle = r.u8("angle flag")?;
        let angle = r.f64("angle")?;
        let bytes = r.take(m.div_ceil(8), "descriptor bits")?;
        descriptors.push(BinaryDescriptor {
            keypoint: Keypoint {
                x,
                y,
                radius: kp_radius,
                angle: (has_angle != 0).then_some(angle),
            },
            bits: BitBuffer::from_bytes(bytes, m),
            segment_bounds: segment_bounds.clone(),
            fingerprint: fingerprint.clone(),
        });
    }
    if !r.data.is_empty() {
        return Err(Error::format(
            path_str(path),
            format!("{} trailing bytes after last descriptor", r.data.len()),
        ));
    }
    Ok(descriptors)
}

/// Homography file: nine whitespace-separated reals, row-major.
pub fn read_homography(path: &Path) -> Result<Homography> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    let values: Vec<f64> = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| {
                Error::format(path_str(path), format!("unparsable number `{tok}`"))
            })
        })
        .collect::<Result<_>>()?;
    let m: [f64; 9] = values.as_slice().try_into().map_err(|_| {
        Error::format(
            path_str(path),
            format!("expected 9 numbers, found {}", values.len()),
        )
    })?;
    Homography::new(m)
}

pub fn write_homography(path: &Path, h: &Homography) -> Result<()> {
    let m = h.matrix();
    let text = format!(
        "{} {} {}\n{} {} {}\n{} {} {}\n",
        m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]
    );
    fs::write(path, text).map_err(|e| Error::io(path_str(path), e))
}

/// Selection mask as JSON: fingerprint, ordered quadruple ids, selected
/// bit count.
pub fn read_mask(path: &Path) -> Result<SelectionMask> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path_str(path), e.to_string()))
}

pub fn write_mask(path: &Path, mask: &SelectionMask) -> Result<()> {
    let text = serde_json::to_string_pretty(mask).expect("mask serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path_str(path), e))
}

pub fn read_model(path: &Path) -> Result<AdaBoostModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path_str(path), e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path_str(path), e.to_string()))
}

pub fn write_model(path: &Path, model: &AdaBoostModel) -> Result<()> {
    let text = serde_json::to_string_pretty(model).expect("model serializes");
    fs::write(path, text + "\n").map_err(|e| Error::io(path_str(path), e))
}

/// Load any supported raster as grayscale. Already-gray inputs pass
/// through; color converts with the 0.299/0.587/0.114 luma weights.
pub fn load_gray_image(path: &Path) -> Result<GrayImage> {
    let dynamic = image::open(path).map_err(|e| Error::ImageDecode {
        path: path_str(path),
        source: e,
    })?;
    let (w, h) = (dynamic.width() as usize, dynamic.height() as usize);
    match dynamic {
        image::DynamicImage::ImageLuma8(buf) => {
            GrayImage::new(w, h, buf.pixels().map(|p| p.0[0] as f64).collect())
        }
        other => {
            let rgb = other.to_rgb8();
            GrayImage::new(
                w,
                h,
                rgb.pixels()
                    .map(|p| {
                        (0.299 * p.0[0] as f64 + 0.587 * p.0[1] as f64 + 0.114 * p.0[2] as f64)
                            .round()
                    })
                    .collect(),
            )
        }
    }
}

/// Write a binary portable graymap (P5, maxval 255). Pixel values round and
/// clamp to bytes; the header is fixed-form so equal images produce equal
/// files.
pub fn write_pgm(path: &Path, img: &GrayImage) -> Result<()> {
    let mut out = Vec::with_capacity(20 + img.width() * img.height());
    out.extend_from_slice(format!("P5\n{} {}\n255\n", img.width(), img.height()).as_bytes());
    out.extend(
        img.pixels()
            .iter()
            .map(|&v| v.round().clamp(0.0, 255.0) as u8),
    );
    let mut f = fs::File::create(path).map_err(|e| Error::io(path_str(path), e))?;
    f.write_all(&out).map_err(|e| Error::io(path_str(path), e))
}

/// Read extra-channel rasters given as `name=path` registrations.
pub fn load_extra_channels(specs: &[(String, std::path::PathBuf)]) -> Result<Vec<(String, Vec<f64>)>> {
    specs
        .iter()
        .map(|(name, path)| {
            let img = load_gray_image(path)?;
            Ok((name.clone(), img.pixels().to_vec()))
        })
        .collect()
}
