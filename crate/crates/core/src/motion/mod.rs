//! Motion data for the compensated weighting: bilinear bootstrap of the
//! sampled sequence, dense flow between adjacent frames, and per-slice
//! averaged displacement of an extrapolation window.

mod bilinear;
mod flow;

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::video::VideoVolume;
use crate::weighting::SliceMotion;

pub use bilinear::bilinear_init;
pub use flow::{estimate_flow, FlowParams, Plane, VectorField};

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl Rect {
    /// Intersection of `[x0, x0 + w) x [y0, y0 + h)` (signed origin) with a
    /// `width x height` frame.
    pub fn clipped(x0: isize, y0: isize, w: usize, h: usize, width: usize, height: usize) -> Self {
        let xa = x0.max(0) as usize;
        let ya = y0.max(0) as usize;
        let xb = ((x0 + w as isize).max(0) as usize).min(width);
        let yb = ((y0 + h as isize).max(0) as usize).min(height);
        Self {
            x0: xa.min(xb),
            y0: ya.min(yb),
            width: xb.saturating_sub(xa),
            height: yb.saturating_sub(ya),
        }
    }
}

/// Mean displacement over `rect`.
pub fn slice_average(field: &VectorField, rect: Rect) -> Result<(f64, f64)> {
    if rect.width == 0 || rect.height == 0 {
        return Err(Error::EmptyRegion);
    }
    if rect.x0 + rect.width > field.width || rect.y0 + rect.height > field.height {
        return Err(Error::InvalidParameter {
            name: "rect",
            reason: format!(
                "{rect:?} exceeds field of {}x{}",
                field.width, field.height
            ),
        });
    }
    let mut sx = 0.0;
    let mut sy = 0.0;
    for y in rect.y0..rect.y0 + rect.height {
        let row = y * field.width;
        for x in rect.x0..rect.x0 + rect.width {
            sx += field.vx[row + x];
            sy += field.vy[row + x];
        }
    }
    let n = (rect.width * rect.height) as f64;
    Ok((sx / n, sy / n))
}

fn plane_of(volume: &VideoVolume, t: usize) -> Plane {
    Plane {
        width: volume.width(),
        height: volume.height(),
        data: volume.frame(t).to_vec(),
    }
}

/// Flow for every adjacent frame pair `(t, t + 1)` of a sequence.
#[derive(Debug, Clone)]
pub struct FlowCache {
    frames: usize,
    forward: Vec<VectorField>,
}

impl FlowCache {
    /// Estimates all adjacent-pair flows. Pairs are independent and run on
    /// the rayon pool; the result does not depend on the thread count.
    pub fn build(sequence: &VideoVolume, params: &FlowParams) -> Result<Self> {
        let frames = sequence.frames();
        let forward = (0..frames.saturating_sub(1))
            .into_par_iter()
            .map(|t| estimate_flow(&plane_of(sequence, t), &plane_of(sequence, t + 1), params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { frames, forward })
    }

    /// Cache from precomputed pair flows (`fields[t]` maps frame `t` to `t + 1`).
    pub fn from_fields(frames: usize, fields: Vec<VectorField>) -> Result<Self> {
        if fields.len() + 1 != frames.max(1) {
            return Err(Error::mismatch("pair flow count", frames.saturating_sub(1), fields.len()));
        }
        Ok(Self {
            frames,
            forward: fields,
        })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    /// Flow from frame `t` to frame `t + 1`.
    pub fn pair(&self, t: usize) -> &VectorField {
        &self.forward[t]
    }

    /// Displacement of the window content from `center` to each of the
    /// `slices` temporal slices centred on it.
    ///
    /// Adjacent-pair averages are accumulated outward from the centre:
    /// forward pairs add, and stepping backward subtracts the pair that
    /// leads into the later frame. Slices outside the sequence get zero.
    pub fn window_motion(&self, center: usize, rect: Rect, slices: usize) -> Result<SliceMotion> {
        if slices.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "temporal_window",
                reason: format!("{slices} is not odd"),
            });
        }
        if center >= self.frames {
            return Err(Error::InvalidParameter {
                name: "center_frame",
                reason: format!("{center} >= {}", self.frames),
            });
        }
        let half = slices / 2;
        let mut vx = vec![0.0; slices];
        let mut vy = vec![0.0; slices];
        let (mut ax, mut ay) = (0.0, 0.0);
        for step in 1..=half {
            let t = center + step;
            if t >= self.frames {
                break;
            }
            let (dx, dy) = slice_average(&self.forward[t - 1], rect)?;
            ax += dx;
            ay += dy;
            vx[half + step] = ax;
            vy[half + step] = ay;
        }
        let (mut ax, mut ay) = (0.0, 0.0);
        for step in 1..=half {
            let Some(t) = center.checked_sub(step) else {
                break;
            };
            let (dx, dy) = slice_average(&self.forward[t], rect)?;
            ax -= dx;
            ay -= dy;
            vx[half - step] = ax;
            vy[half - step] = ay;
        }
        SliceMotion::new(vx, vy)
    }
}

/// Per-slice motion of a window, estimating only the flows it needs.
pub fn window_motion(
    interpolated: &VideoVolume,
    center: usize,
    rect: Rect,
    slices: usize,
    params: &FlowParams,
) -> Result<SliceMotion> {
    let frames = interpolated.frames();
    if center >= frames {
        return Err(Error::InvalidParameter {
            name: "center_frame",
            reason: format!("{center} >= {frames}"),
        });
    }
    let half = slices / 2;
    let lo = center.saturating_sub(half);
    let hi = (center + half).min(frames - 1);
    let fields = (0..frames.saturating_sub(1))
        .map(|t| {
            if t >= lo && t < hi {
                estimate_flow(&plane_of(interpolated, t), &plane_of(interpolated, t + 1), params)
            } else {
                Ok(VectorField::zeros(interpolated.width(), interpolated.height()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    FlowCache::from_fields(frames, fields)?.window_motion(center, rect, slices)
}

const FLOW_MAGIC: &str = "FLOW";

/// Writes `FLOW <w> <h>\n` then row-major little-endian `f32` pairs `(vx, vy)`.
pub fn write_flow<W: Write>(field: &VectorField, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{FLOW_MAGIC} {} {}", field.width, field.height)?;
    let mut buf = Vec::with_capacity(field.vx.len() * 8);
    for (x, y) in field.vx.iter().zip(&field.vy) {
        buf.extend_from_slice(&(*x as f32).to_le_bytes());
        buf.extend_from_slice(&(*y as f32).to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

pub fn read_flow<R: Read>(mut input: R) -> Result<VectorField> {
    let bad = |reason: String| Error::Format {
        format: "flow",
        reason,
    };
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| bad(e.to_string()))?;
    let nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("missing header".into()))?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| bad("header is not text".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != FLOW_MAGIC {
        return Err(bad(format!("bad header {header:?}")));
    }
    let w: usize = fields[1].parse().map_err(|_| bad("bad width".into()))?;
    let h: usize = fields[2].parse().map_err(|_| bad("bad height".into()))?;
    let body = &bytes[nl + 1..];
    if body.len() != w * h * 8 {
        return Err(bad(format!("expected {} payload bytes, got {}", w * h * 8, body.len())));
    }
    let mut field = VectorField::zeros(w, h);
    for (i, chunk) in body.chunks_exact(8).enumerate() {
        field.vx[i] = f32::from_le_bytes(chunk[..4].try_into().unwrap()) as f64;
        field.vy[i] = f32::from_le_bytes(chunk[4..].try_into().unwrap()) as f64;
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_field_average() {
        let f = VectorField::constant(10, 10, 3.0, -1.0);
        let r = Rect { x0: 2, y0: 3, width: 5, height: 4 };
        assert_eq!(slice_average(&f, r).unwrap(), (3.0, -1.0));
    }

    #[test]
    fn two_vector_average() {
        let mut f = VectorField::zeros(2, 1);
        f.vx = vec![1.0, 3.0];
        let r = Rect { x0: 0, y0: 0, width: 2, height: 1 };
        assert_eq!(slice_average(&f, r).unwrap(), (2.0, 0.0));
    }

    #[test]
    fn average_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut f = VectorField::zeros(48, 40);
        for v in f.vx.iter_mut().chain(f.vy.iter_mut()) {
            *v = rng.gen_range(-6.0..6.0);
        }
        let r = Rect { x0: 9, y0: 5, width: 32, height: 32 };
        let (ax, ay) = slice_average(&f, r).unwrap();
        let mut nx = 0.0;
        let mut ny = 0.0;
        for j in 0..32 {
            for i in 0..32 {
                let (a, b) = f.get(9 + i, 5 + j);
                nx += a;
                ny += b;
            }
        }
        assert!((ax - nx / 1024.0).abs() < 1e-12);
        assert!((ay - ny / 1024.0).abs() < 1e-12);

        // linear in the field
        let mut g = f.clone();
        g.vx.iter_mut().chain(g.vy.iter_mut()).for_each(|v| *v *= -2.5);
        let (gx, gy) = slice_average(&g, r).unwrap();
        assert!((gx + 2.5 * ax).abs() < 1e-12 && (gy + 2.5 * ay).abs() < 1e-12);
    }

    #[test]
    fn empty_or_oversized_rect_rejected() {
        let f = VectorField::zeros(4, 4);
        assert!(matches!(
            slice_average(&f, Rect { x0: 0, y0: 0, width: 0, height: 3 }),
            Err(Error::EmptyRegion)
        ));
        assert!(slice_average(&f, Rect { x0: 2, y0: 0, width: 3, height: 1 }).is_err());
    }

    #[test]
    fn clipping() {
        assert_eq!(Rect::clipped(-14, -14, 32, 32, 64, 64), Rect { x0: 0, y0: 0, width: 18, height: 18 });
        assert_eq!(Rect::clipped(50, 10, 32, 32, 64, 64), Rect { x0: 50, y0: 10, width: 14, height: 32 });
    }

    #[test]
    fn accumulation_from_known_pair_flows() {
        // four frames, pair t -> t+1 moves by (t + 1, -1)
        let fields = (0..3).map(|t| VectorField::constant(8, 8, (t + 1) as f64, -1.0)).collect();
        let cache = FlowCache::from_fields(4, fields).unwrap();
        let r = Rect { x0: 0, y0: 0, width: 8, height: 8 };
        let m = cache.window_motion(1, r, 5).unwrap();
        // slices: t = -1 (outside), 0, 1 (centre), 2, 3
        assert_eq!(m.vx(), &[0.0, -1.0, 0.0, 2.0, 5.0]);
        assert_eq!(m.vy(), &[0.0, 1.0, 0.0, -1.0, -2.0]);
        let single = cache.window_motion(2, r, 1).unwrap();
        assert_eq!(single.get(0), (0.0, 0.0));
        assert!(cache.window_motion(1, r, 4).is_err());
    }

    #[test]
    fn flow_file_layout() {
        let mut f = VectorField::zeros(2, 1);
        f.vx = vec![1.0, -0.5];
        f.vy = vec![2.0, 0.25];
        let mut buf = Vec::new();
        write_flow(&f, &mut buf).unwrap();
        assert_eq!(&buf[..9], b"FLOW 2 1\n");
        assert_eq!(buf.len(), 9 + 16);
        assert_eq!(&buf[9..13], &1.0f32.to_le_bytes());
        assert_eq!(read_flow(&buf[..]).unwrap(), f);
        assert!(read_flow(&buf[..20]).is_err());
    }
}
