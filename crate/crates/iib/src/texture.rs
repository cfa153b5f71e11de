//! Procedural grayscale test images.
//!
//! Value-noise octaves give smooth multi-scale structure close in spirit to
//! natural photographs, so the evaluation harness and tests can run without
//! bundling image data. Generation is fully determined by the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::GrayImage;

/// One lattice of random values in [-1, 1], sampled bilinearly.
struct NoiseLayer {
    values: Vec<f64>,
    cols: usize,
    spacing: f64,
}

impl NoiseLayer {
    fn new(width: usize, height: usize, spacing: f64, rng: &mut ChaCha8Rng) -> NoiseLayer {
        let cols = (width as f64 / spacing).ceil() as usize + 2;
        let rows = (height as f64 / spacing).ceil() as usize + 2;
        let values = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        NoiseLayer {
            values,
            cols,
            spacing,
        }
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let gx = x / self.spacing;
        let gy = y / self.spacing;
        let x0 = gx.floor() as usize;
        let y0 = gy.floor() as usize;
        let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
        // Smoothstep keeps lattice seams out of the gradient channels.
        let sx = fx * fx * (3.0 - 2.0 * fx);
        let sy = fy * fy * (3.0 - 2.0 * fy);
        let at = |r: usize, c: usize| self.values[r * self.cols + c];
        (at(y0, x0) * (1.0 - sx) + at(y0, x0 + 1) * sx) * (1.0 - sy)
            + (at(y0 + 1, x0) * (1.0 - sx) + at(y0 + 1, x0 + 1) * sx) * sy
    }
}

/// Multi-octave value noise rendered to an 8-bit-valued image.
///
/// Octave spacings halve from 64 px down to 4 px with roughly 1/f
/// amplitudes, so content has both coarse shading and fine detail.
pub fn natural_texture(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let octaves: Vec<(f64, f64)> = [(64.0, 70.0), (32.0, 38.0), (16.0, 20.0), (8.0, 11.0), (4.0, 6.0)]
        .into_iter()
        .collect();
    let layers: Vec<(NoiseLayer, f64)> = octaves
        .iter()
        .map(|&(spacing, amp)| (NoiseLayer::new(width, height, spacing, &mut rng), amp))
        .collect();
    GrayImage::from_fn(width, height, |r, c| {
        let v: f64 = layers
            .iter()
            .map(|(layer, amp)| amp * layer.sample(c as f64, r as f64))
            .sum();
        (128.0 + v).clamp(0.0, 255.0).round()
    })
}
