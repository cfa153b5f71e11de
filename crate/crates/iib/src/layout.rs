//! Quadtree patch geometry around a keypoint.
//!
//! The region of support (ROS) is the axis-aligned square of side
//! `2 * radius` centered on the keypoint. At granularity `g` it splits into
//! a `2^g x 2^g` grid of patches whose edges are shared across levels: the
//! even grid lines of level `g` are exactly the grid lines of level `g - 1`,
//! so every 2x2 patch block tiles one parent patch.

use crate::error::{Error, Result};
use crate::image::Rect;

pub const MAX_GRANULARITY: u8 = 8;

/// Patch row/column indices of one quadruple, ordered top-left, top-right,
/// bottom-left, bottom-right. Bit order within a quadruple follows this.
pub type QuadPatches = [(usize, usize); 4];

/// Grid-line positions of one keypoint's ROS for every granularity level.
#[derive(Clone, Debug)]
pub struct QuadtreeLayout {
    granularity: u8,
    overlap: bool,
    /// `row_bounds[g - 1][i]` is the pixel row where grid line `i` of level
    /// `g` falls; `2^g + 1` entries per level.
    row_bounds: Vec<Vec<usize>>,
    col_bounds: Vec<Vec<usize>>,
}

fn level_bounds(center: f64, radius: f64, g: u8) -> Vec<i64> {
    let cells = 1usize << g;
    let step = 2.0 * radius / cells as f64;
    (0..=cells)
        .map(|j| (center - radius + j as f64 * step).round() as i64)
        .collect()
}

impl QuadtreeLayout {
    /// Lay out the ROS of a keypoint at `(x, y)` inside a `width x height`
    /// image.
    ///
    /// Fails if the granularity is out of range, the radius is below `2^G`
    /// (the finest-level patches must span at least two pixels), or the ROS
    /// leaves the image.
    pub fn new(
        x: f64,
        y: f64,
        radius: f64,
        granularity: u8,
        overlap: bool,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if granularity == 0 || granularity > MAX_GRANULARITY {
            return Err(Error::InvalidGranularity(granularity));
        }
        let min_radius = (1u64 << granularity) as f64;
        if !(radius >= min_radius) {
            return Err(Error::RadiusTooSmall {
                radius,
                granularity,
                min: min_radius,
            });
        }

        let mut row_bounds = Vec::with_capacity(granularity as usize);
        let mut col_bounds = Vec::with_capacity(granularity as usize);
        for g in 1..=granularity {
            let rows = level_bounds(y, radius, g);
            let cols = level_bounds(x, radius, g);
            let row_ok = rows[0] >= 0 && *rows.last().unwrap() <= height as i64;
            let col_ok = cols[0] >= 0 && *cols.last().unwrap() <= width as i64;
            if !row_ok || !col_ok {
                return Err(Error::KeypointOutOfBounds {
                    x,
                    y,
                    radius,
                    width,
                    height,
                });
            }
            row_bounds.push(rows.into_iter().map(|v| v as usize).collect());
            col_bounds.push(cols.into_iter().map(|v| v as usize).collect());
        }
        Ok(QuadtreeLayout {
            granularity,
            overlap,
            row_bounds,
            col_bounds,
        })
    }

    pub fn granularity(&self) -> u8 {
        self.granularity
    }

    pub fn overlap(&self) -> bool {
        self.overlap
    }

    /// The whole ROS as a pixel rectangle.
    pub fn root(&self) -> Rect {
        let rows = &self.row_bounds[0];
        let cols = &self.col_bounds[0];
        Rect::new(
            rows[0],
            cols[0],
            cols[2] - cols[0],
            rows[2] - rows[0],
        )
    }

    /// Cells per side at level `g`: `2^g`.
    pub fn grid_size(&self, g: u8) -> usize {
        debug_assert!(g >= 1 && g <= self.granularity);
        1usize << g
    }

    /// Pixel rectangle of the patch at grid position `(row, col)` of level
    /// `g`.
    pub fn patch(&self, g: u8, row: usize, col: usize) -> Rect {
        let rows = &self.row_bounds[g as usize - 1];
        let cols = &self.col_bounds[g as usize - 1];
        Rect::new(
            rows[row],
            cols[col],
            cols[col + 1] - cols[col],
            rows[row + 1] - rows[row],
        )
    }

    /// Number of quadruples at level `g` in the configured mode.
    pub fn quadruple_count(&self, g: u8) -> usize {
        quadruple_count(g, self.overlap)
    }

    /// Quadruples of level `g` in layout order.
    ///
    /// Without overlap these are the disjoint 2x2 blocks, enumerated
    /// row-major by block; the `k`-th block covers exactly the `k`-th
    /// row-major patch of level `g - 1`. With overlap they are all 2x2
    /// windows at stride one, enumerated row-major by window origin.
    pub fn quadruples(&self, g: u8) -> impl Iterator<Item = QuadPatches> + '_ {
        let side = self.grid_size(g);
        let (span, stride) = if self.overlap { (side - 1, 1) } else { (side / 2, 2) };
        (0..span * span).map(move |k| {
            let oi = (k / span) * stride;
            let oj = (k % span) * stride;
            [
                (oi, oj),
                (oi, oj + 1),
                (oi + 1, oj),
                (oi + 1, oj + 1),
            ]
        })
    }
}

/// Quadruples at one level: `4^(g-1)` disjoint blocks, or `(2^g - 1)^2`
/// sliding windows with overlap.
pub fn quadruple_count(g: u8, overlap: bool) -> usize {
    let side = 1usize << g;
    if overlap {
        (side - 1) * (side - 1)
    } else {
        (side / 2) * (side / 2)
    }
}

/// Total quadruples over levels `1..=granularity` for one channel.
pub fn total_quadruples(granularity: u8, overlap: bool) -> usize {
    (1..=granularity).map(|g| quadruple_count(g, overlap)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn layout(radius: f64, overlap: bool) -> QuadtreeLayout {
        QuadtreeLayout::new(64.0, 64.0, radius, 4, overlap, 128, 128).unwrap()
    }

    #[test]
    fn patch_and_quadruple_counts_per_level() {
        let l = layout(32.0, false);
        let patches: Vec<usize> = (1..=4).map(|g| l.grid_size(g) * l.grid_size(g)).collect();
        assert_eq!(patches, [4, 16, 64, 256]);
        let quads: Vec<usize> = (1..=4).map(|g| l.quadruple_count(g)).collect();
        assert_eq!(quads, [1, 4, 16, 64]);

        let l = layout(32.0, true);
        let quads: Vec<usize> = (1..=4).map(|g| l.quadruple_count(g)).collect();
        assert_eq!(quads, [1, 9, 49, 225]);
        assert_eq!(total_quadruples(4, true), 284);
        assert_eq!(total_quadruples(4, false), 85);
    }

    #[test]
    fn integer_keypoint_radius_32_gives_uniform_patch_sides() {
        let l = layout(32.0, false);
        for (g, side) in [(1u8, 32usize), (2, 16), (3, 8), (4, 4)] {
            let n = l.grid_size(g);
            for i in 0..n {
                for j in 0..n {
                    let p = l.patch(g, i, j);
                    assert_eq!((p.width, p.height), (side, side), "g={g} ({i},{j})");
                }
            }
        }
        assert_eq!(l.root(), Rect::new(32, 32, 64, 64));
    }

    #[test]
    fn grid_lines_nest_across_levels() {
        let l = QuadtreeLayout::new(50.3, 41.7, 19.6, 4, false, 128, 128).unwrap();
        for g in 2..=4u8 {
            let n = l.grid_size(g);
            for i in 0..n / 2 {
                for j in 0..n / 2 {
                    let parent = l.patch(g - 1, i, j);
                    let tl = l.patch(g, 2 * i, 2 * j);
                    let br = l.patch(g, 2 * i + 1, 2 * j + 1);
                    assert_eq!((tl.row, tl.col), (parent.row, parent.col));
                    assert_eq!(br.row + br.height, parent.row + parent.height);
                    assert_eq!(br.col + br.width, parent.col + parent.width);
                }
            }
        }
    }

    #[test]
    fn fractional_layout_tiles_root_exactly() {
        let l = QuadtreeLayout::new(33.9, 47.1, 21.3, 4, false, 100, 100).unwrap();
        let root = l.root();
        for g in 1..=4u8 {
            let n = l.grid_size(g);
            let mut area = 0usize;
            for i in 0..n {
                for j in 0..n {
                    let p = l.patch(g, i, j);
                    assert!(p.area() > 0, "empty patch at g={g} ({i},{j})");
                    area += p.area();
                }
            }
            assert_eq!(area, root.area(), "level {g} does not tile the root");
        }
    }

    #[test]
    fn nonoverlap_quadruples_cover_each_patch_once() {
        let l = layout(32.0, false);
        for g in 1..=4u8 {
            let mut seen = HashSet::new();
            let mut count = 0;
            for quad in l.quadruples(g) {
                let [tl, tr, bl, br] = quad;
                assert_eq!(tr, (tl.0, tl.1 + 1));
                assert_eq!(bl, (tl.0 + 1, tl.1));
                assert_eq!(br, (tl.0 + 1, tl.1 + 1));
                for p in quad {
                    assert!(seen.insert(p), "patch {p:?} referenced twice at g={g}");
                }
                count += 1;
            }
            assert_eq!(count, l.quadruple_count(g));
            assert_eq!(seen.len(), l.grid_size(g) * l.grid_size(g));
        }
    }

    #[test]
    fn overlap_quadruples_enumerate_all_windows() {
        let l = layout(32.0, true);
        for g in 1..=4u8 {
            let n = l.grid_size(g);
            let origins: Vec<(usize, usize)> = l.quadruples(g).map(|q| q[0]).collect();
            let expect: Vec<(usize, usize)> = (0..n - 1)
                .flat_map(|i| (0..n - 1).map(move |j| (i, j)))
                .collect();
            assert_eq!(origins, expect, "g={g}");
        }
    }

    #[test]
    fn nonoverlap_quad_k_matches_parent_patch_k() {
        let l = QuadtreeLayout::new(61.2, 58.8, 30.7, 4, false, 128, 128).unwrap();
        for g in 2..=4u8 {
            let half = l.grid_size(g) / 2;
            for (k, quad) in l.quadruples(g).enumerate() {
                let (pi, pj) = (k / half, k % half);
                assert_eq!(quad[0], (2 * pi, 2 * pj));
                let parent = l.patch(g - 1, pi, pj);
                let tl = l.patch(g, quad[0].0, quad[0].1);
                assert_eq!((tl.row, tl.col), (parent.row, parent.col));
            }
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let err = QuadtreeLayout::new(64.0, 64.0, 32.0, 0, false, 128, 128).unwrap_err();
        assert!(matches!(err, Error::InvalidGranularity(0)));

        // Minimum radius for 16 cells per side is 2^4 = 16.
        let err = QuadtreeLayout::new(64.0, 64.0, 15.9, 4, false, 128, 128).unwrap_err();
        match err {
            Error::RadiusTooSmall { min, .. } => assert_eq!(min, 16.0),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(QuadtreeLayout::new(64.0, 64.0, 16.0, 4, false, 128, 128).is_ok());

        let err = QuadtreeLayout::new(10.0, 64.0, 32.0, 4, false, 128, 128).unwrap_err();
        assert!(matches!(err, Error::KeypointOutOfBounds { .. }));
        // Touching the border exactly is fine.
        assert!(QuadtreeLayout::new(32.0, 96.0, 32.0, 4, false, 128, 128).is_ok());
    }
}
