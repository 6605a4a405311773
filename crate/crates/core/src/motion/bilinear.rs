use crate::error::{Error, Result};
use crate::video::{SamplingMask, VideoVolume};

/// Fills every unsampled pixel from the nearest sample to its left, right,
/// top and bottom in the same frame, weighted by inverse distance.
///
/// Directions without any sample are dropped. A pixel whose row and column
/// are both empty takes the mean of the frame's samples.
pub fn bilinear_init(sampled: &VideoVolume, mask: &SamplingMask) -> Result<VideoVolume> {
    sampled.ensure_same_dims(mask.dims(), "mask dims")?;
    let (w, h, frames) = sampled.dims();
    let mut out = sampled.clone();
    for t in 0..frames {
        let bits = mask.frame(t);
        let src = sampled.frame(t);
        let available = bits.iter().filter(|&&b| b).count();
        if available == 0 {
            return Err(Error::NoSamples { frame: t });
        }
        let frame_mean = src
            .iter()
            .zip(bits)
            .filter(|(_, &b)| b)
            .map(|(&v, _)| v)
            .sum::<f64>()
            / available as f64;

        let horizontal = nearest_along(w, h, |i, j| j * w + i, bits);
        let vertical = nearest_along(h, w, |i, j| i * w + j, bits);

        let dst = out.frame_mut(t);
        for y in 0..h {
            for x in 0..w {
                let idx = y * w + x;
                if bits[idx] {
                    continue;
                }
                let (hl, hr) = horizontal[idx];
                let (vu, vd) = vertical[idx];
                let mut num = 0.0;
                let mut den = 0.0;
                for (pos, dist) in [
                    hl.map(|d| (idx - d, d)),
                    hr.map(|d| (idx + d, d)),
                    vu.map(|d| (idx - d * w, d)),
                    vd.map(|d| (idx + d * w, d)),
                ]
                .into_iter()
                .flatten()
                {
                    let wgt = 1.0 / dist as f64;
                    num += wgt * src[pos];
                    den += wgt;
                }
                dst[idx] = if den > 0.0 { num / den } else { frame_mean };
            }
        }
    }
    Ok(out)
}

/// For each pixel, distance to the nearest set bit before and after it along
/// one axis. `len` is the axis length, `lines` the number of parallel lines.
fn nearest_along(
    len: usize,
    lines: usize,
    index: impl Fn(usize, usize) -> usize,
    bits: &[bool],
) -> Vec<(Option<usize>, Option<usize>)> {
    let mut out = vec![(None, None); bits.len()];
    for j in 0..lines {
        let mut last = None;
        for i in 0..len {
            let idx = index(i, j);
            out[idx].0 = last.map(|l| i - l);
            if bits[idx] {
                last = Some(i);
            }
        }
        let mut next = None;
        for i in (0..len).rev() {
            let idx = index(i, j);
            out[idx].1 = next.map(|n| n - i);
            if bits[idx] {
                next = Some(i);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{apply_mask, generate_quadrant_mask, MaskSeed};

    #[test]
    fn full_mask_is_identity() {
        let v = VideoVolume::from_fn(7, 5, 2, |x, y, t| (x * y + t) as f64).unwrap();
        let m = SamplingMask::full(7, 5, 2).unwrap();
        assert_eq!(bilinear_init(&v, &m).unwrap(), v);
    }

    #[test]
    fn constant_neighbours_give_constant() {
        let v = VideoVolume::from_fn(16, 16, 1, |_, _, _| 42.0).unwrap();
        let m = generate_quadrant_mask(16, 16, 1, MaskSeed(4)).unwrap();
        let out = bilinear_init(&apply_mask(&v, &m).unwrap(), &m).unwrap();
        assert!(out.samples().iter().all(|&s| (s - 42.0).abs() < 1e-12));
    }

    #[test]
    fn horizontal_ramp_is_reproduced() {
        let v = VideoVolume::from_fn(20, 12, 1, |x, _, _| x as f64).unwrap();
        let m = generate_quadrant_mask(20, 12, 1, MaskSeed(8)).unwrap();
        let out = bilinear_init(&apply_mask(&v, &m).unwrap(), &m).unwrap();
        let mut checked = 0;
        for y in 0..12 {
            for x in 0..20 {
                // one-sided horizontal stencils extrapolate and are not exact
                let left = (0..x).any(|i| m.is_set(i, y, 0));
                let right = (x + 1..20).any(|i| m.is_set(i, y, 0));
                if left != right && !m.is_set(x, y, 0) {
                    continue;
                }
                checked += 1;
                assert!((out.get(x, y, 0) - x as f64).abs() < 1e-12, "({x},{y}) {}", out.get(x, y, 0));
            }
        }
        assert!(checked > 120, "{checked}");
    }

    #[test]
    fn symmetric_stencil_on_ramp() {
        // samples at x = 1 and x = 5 in a single row; x = 3 sits midway
        let v = VideoVolume::from_fn(7, 1, 1, |x, _, _| 10.0 * x as f64).unwrap();
        let m = SamplingMask::from_fn(7, 1, 1, |x, _, _| x == 1 || x == 5).unwrap();
        let out = bilinear_init(&apply_mask(&v, &m).unwrap(), &m).unwrap();
        assert!((out.get(3, 0, 0) - 30.0).abs() < 1e-12);
        assert!((out.get(2, 0, 0) - 20.0).abs() < 1e-12);
        // edge pixel only sees one side
        assert_eq!(out.get(0, 0, 0), 10.0);
    }

    #[test]
    fn sampled_pixels_untouched() {
        let v = VideoVolume::from_fn(24, 16, 3, |x, y, t| ((x * 13 + y * 7 + t * 3) % 255) as f64).unwrap();
        let m = generate_quadrant_mask(24, 16, 3, MaskSeed(21)).unwrap();
        let s = apply_mask(&v, &m).unwrap();
        let out = bilinear_init(&s, &m).unwrap();
        for (i, &b) in m.bits().iter().enumerate() {
            if b {
                assert_eq!(out.samples()[i].to_bits(), s.samples()[i].to_bits());
            }
        }
    }

    #[test]
    fn frame_without_samples_is_rejected() {
        let v = VideoVolume::new(4, 4, 2).unwrap();
        let m = SamplingMask::from_fn(4, 4, 2, |x, y, t| t == 0 && x == 0 && y == 0).unwrap();
        assert!(matches!(bilinear_init(&v, &m), Err(Error::NoSamples { frame: 1 })));
    }

    #[test]
    fn isolated_pixel_falls_back_to_frame_mean() {
        let v = VideoVolume::from_fn(3, 3, 1, |x, y, _| (x + y) as f64 * 10.0).unwrap();
        let m = SamplingMask::from_fn(3, 3, 1, |x, y, _| (x, y) == (0, 0) || (x, y) == (1, 1)).unwrap();
        let out = bilinear_init(&apply_mask(&v, &m).unwrap(), &m).unwrap();
        // (2, 2) has no sample in its row or column
        assert_eq!(out.get(2, 2, 0), 10.0);
    }
}
