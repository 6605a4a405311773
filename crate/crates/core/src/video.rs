//! Video volumes, sampling masks and extrapolation windows.
//!
//! All containers use the same layout: frame-major, then row-major, so the
//! linear index of `(x, y, t)` is `(t * height + y) * width + x`.

use crate::error::{Error, Result};

/// Real-valued video sequence `s[x, y, t]`, nominally in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVolume {
    width: usize,
    height: usize,
    frames: usize,
    data: Vec<f64>,
}

impl VideoVolume {
    /// All-zero volume.
    pub fn new(width: usize, height: usize, frames: usize) -> Result<Self> {
        check_dims(width, height, frames)?;
        Ok(Self {
            width,
            height,
            frames,
            data: vec![0.0; width * height * frames],
        })
    }

    pub fn from_vec(width: usize, height: usize, frames: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, frames)?;
        if data.len() != width * height * frames {
            return Err(Error::mismatch(
                "sample count",
                width * height * frames,
                data.len(),
            ));
        }
        Ok(Self {
            width,
            height,
            frames,
            data,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        check_dims(width, height, frames)?;
        let mut data = Vec::with_capacity(width * height * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, t));
                }
            }
        }
        Ok(Self {
            width,
            height,
            frames,
            data,
        })
    }

    pub fn from_u8(width: usize, height: usize, frames: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_vec(
            width,
            height,
            frames,
            bytes.iter().map(|&b| f64::from(b)).collect(),
        )
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    /// `(width, height, frames)`.
    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[self.index(x, y, t)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, t: usize, value: f64) {
        let i = self.index(x, y, t);
        self.data[i] = value;
    }

    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    pub fn samples_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[t * n..(t + 1) * n]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [f64] {
        let n = self.width * self.height;
        &mut self.data[t * n..(t + 1) * n]
    }

    /// Copy of the first `frames` frames.
    pub fn truncated(&self, frames: usize) -> Self {
        let frames = frames.clamp(1, self.frames);
        let n = self.width * self.height * frames;
        Self {
            width: self.width,
            height: self.height,
            frames,
            data: self.data[..n].to_vec(),
        }
    }

    /// Samples clamped to `[0, 255]`.
    pub fn clamped(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = clamp_sample(*v));
        out
    }

    /// Samples clamped and rounded to the nearest 8-bit level.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = clamp_sample(*v).round());
        out
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|&v| clamp_sample(v).round() as u8)
            .collect()
    }

    pub(crate) fn ensure_same_dims(&self, other: (usize, usize, usize), what: &'static str) -> Result<()> {
        if self.dims() != other {
            return Err(Error::mismatch(what, self.dims(), other));
        }
        Ok(())
    }
}

#[inline]
pub fn clamp_sample(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}

fn check_dims(width: usize, height: usize, frames: usize) -> Result<()> {
    if width == 0 || height == 0 || frames == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{width}x{height}x{frames} has an empty axis"
        )));
    }
    Ok(())
}

/// Binary acquisition mask `b[x, y, t]`.
///
/// Masks produced by the sensor model are constant over time; hand-built
/// masks (tests, debugging) may vary per frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMask {
    width: usize,
    height: usize,
    frames: usize,
    bits: Vec<bool>,
}

impl SamplingMask {
    /// Replicates a single `width * height` frame pattern over `frames`.
    pub fn from_frame(width: usize, height: usize, frames: usize, frame: &[bool]) -> Result<Self> {
        check_dims(width, height, frames)?;
        if frame.len() != width * height {
            return Err(Error::mismatch("mask frame size", width * height, frame.len()));
        }
        let mut bits = Vec::with_capacity(width * height * frames);
        for _ in 0..frames {
            bits.extend_from_slice(frame);
        }
        Ok(Self {
            width,
            height,
            frames,
            bits,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        check_dims(width, height, frames)?;
        let mut bits = Vec::with_capacity(width * height * frames);
        for t in 0..frames {
            for y in 0..height {
                for x in 0..width {
                    bits.push(f(x, y, t));
                }
            }
        }
        Ok(Self {
            width,
            height,
            frames,
            bits,
        })
    }

    /// Every pixel sampled.
    pub fn full(width: usize, height: usize, frames: usize) -> Result<Self> {
        Self::from_fn(width, height, frames, |_, _, _| true)
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn frames(&self) -> usize {
        self.frames
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    #[inline]
    pub fn is_set(&self, x: usize, y: usize, t: usize) -> bool {
        self.bits[(t * self.height + y) * self.width + x]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn frame(&self, t: usize) -> &[bool] {
        let n = self.width * self.height;
        &self.bits[t * n..(t + 1) * n]
    }

    pub fn count_set(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn density(&self) -> f64 {
        self.count_set() as f64 / self.bits.len() as f64
    }

    /// Same mask restricted to the first `frames` frames.
    pub fn truncated(&self, frames: usize) -> Self {
        let frames = frames.clamp(1, self.frames);
        Self {
            width: self.width,
            height: self.height,
            frames,
            bits: self.bits[..self.width * self.height * frames].to_vec(),
        }
    }
}

/// Per-voxel "already reconstructed" flags, parallel to a volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconFlags {
    width: usize,
    height: usize,
    frames: usize,
    flags: Vec<bool>,
}

impl ReconFlags {
    pub fn new(width: usize, height: usize, frames: usize) -> Self {
        Self {
            width,
            height,
            frames,
            flags: vec![false; width * height * frames],
        }
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.frames)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> bool {
        self.flags[(t * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, t: usize) {
        self.flags[(t * self.height + y) * self.width + x] = true;
    }

    pub fn count_set(&self) -> usize {
        self.flags.iter().filter(|&&b| b).count()
    }
}

/// Area membership of a window voxel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AreaLabel {
    /// Original sample available (A).
    Support,
    /// Missing and not yet reconstructed (B).
    Loss,
    /// Filled in by an earlier block (R).
    Reconstructed,
    /// Beyond the sequence bounds; treated as loss.
    Outside,
}

impl AreaLabel {
    /// True for labels that carry no usable signal.
    #[inline]
    pub fn is_loss(self) -> bool {
        matches!(self, AreaLabel::Loss | AreaLabel::Outside)
    }
}

/// Shape of the extrapolation volume around a loss block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowGeometry {
    /// Loss block extent `(x, y, t)`.
    pub block: [usize; 3],
    /// Spatial border on each side of the block.
    pub border: usize,
    /// Temporal window depth `P`; `P - block[2]` must be even.
    pub temporal_window: usize,
}

impl WindowGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.block.contains(&0) {
            return Err(Error::InvalidParameter {
                name: "block",
                reason: format!("{:?} has an empty axis", self.block),
            });
        }
        if self.temporal_window < self.block[2] || !(self.temporal_window - self.block[2]).is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "temporal_window",
                reason: format!(
                    "{} must be >= block depth {} with an even difference",
                    self.temporal_window, self.block[2]
                ),
            });
        }
        Ok(())
    }

    #[inline]
    pub fn temporal_border(&self) -> usize {
        (self.temporal_window - self.block[2]) / 2
    }

    /// Window dims for a (possibly rim-clipped) block extent.
    pub fn window_dims(&self, extent: [usize; 3]) -> [usize; 3] {
        [
            extent[0] + 2 * self.border,
            extent[1] + 2 * self.border,
            extent[2] + 2 * self.temporal_border(),
        ]
    }

    /// Block extent at `origin`, clipped to the volume.
    pub fn block_extent(&self, origin: [usize; 3], dims: (usize, usize, usize)) -> [usize; 3] {
        [
            self.block[0].min(dims.0 - origin[0]),
            self.block[1].min(dims.1 - origin[1]),
            self.block[2].min(dims.2 - origin[2]),
        ]
    }

    /// Signed origin of the window in volume coordinates.
    pub fn window_origin(&self, block_origin: [usize; 3]) -> [isize; 3] {
        [
            block_origin[0] as isize - self.border as isize,
            block_origin[1] as isize - self.border as isize,
            block_origin[2] as isize - self.temporal_border() as isize,
        ]
    }
}

/// Extrapolation volume `L = A ∪ B ∪ R` around one loss block.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationWindow {
    origin: [isize; 3],
    dims: [usize; 3],
    block_offset: [usize; 3],
    block_extent: [usize; 3],
    values: Vec<f64>,
    labels: Vec<AreaLabel>,
}

impl ExtrapolationWindow {
    /// Builds a window directly from values and labels (tests, oracles).
    pub fn from_parts(dims: [usize; 3], values: Vec<f64>, labels: Vec<AreaLabel>) -> Result<Self> {
        let n = dims.iter().product::<usize>();
        if n == 0 {
            return Err(Error::InvalidDimensions(format!("window {dims:?}")));
        }
        if values.len() != n || labels.len() != n {
            return Err(Error::mismatch(
                "window storage",
                n,
                (values.len(), labels.len()),
            ));
        }
        Ok(Self {
            origin: [0; 3],
            dims,
            block_offset: [0; 3],
            block_extent: dims,
            values,
            labels,
        })
    }

    #[inline]
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn origin(&self) -> [isize; 3] {
        self.origin
    }

    /// Offset of the loss block inside the window.
    pub fn block_offset(&self) -> [usize; 3] {
        self.block_offset
    }

    pub fn block_extent(&self) -> [usize; 3] {
        self.block_extent
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize, p: usize) -> usize {
        (p * self.dims[1] + n) * self.dims[0] + m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn labels(&self) -> &[AreaLabel] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, m: usize, n: usize, p: usize) -> AreaLabel {
        self.labels[self.index(m, n, p)]
    }

    pub fn count(&self, label: AreaLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Cuts the extrapolation window around the loss block at `block_origin`.
pub fn extract_window(
    volume: &VideoVolume,
    mask: &SamplingMask,
    recon: &ReconFlags,
    block_origin: [usize; 3],
    geometry: &WindowGeometry,
) -> Result<ExtrapolationWindow> {
    let dims = volume.dims();
    if mask.dims() != dims {
        return Err(Error::mismatch("mask dims", dims, mask.dims()));
    }
    if recon.dims() != dims {
        return Err(Error::mismatch("recon flag dims", dims, recon.dims()));
    }
    let [bx, by, bt] = block_origin;
    if bx >= dims.0 || by >= dims.1 || bt >= dims.2 {
        return Err(Error::OutOfBounds {
            x: bx,
            y: by,
            t: bt,
        });
    }
    geometry.validate()?;

    let extent = geometry.block_extent(block_origin, dims);
    let wdims = geometry.window_dims(extent);
    let origin = geometry.window_origin(block_origin);
    let n = wdims.iter().product::<usize>();
    let mut values = vec![0.0; n];
    let mut labels = vec![AreaLabel::Outside; n];

    let mut i = 0;
    for p in 0..wdims[2] {
        let t = origin[2] + p as isize;
        for nn in 0..wdims[1] {
            let y = origin[1] + nn as isize;
            for m in 0..wdims[0] {
                let x = origin[0] + m as isize;
                if in_bounds(x, y, t, dims) {
                    let (x, y, t) = (x as usize, y as usize, t as usize);
                    values[i] = volume.get(x, y, t);
                    labels[i] = if mask.is_set(x, y, t) {
                        AreaLabel::Support
                    } else if recon.get(x, y, t) {
                        AreaLabel::Reconstructed
                    } else {
                        values[i] = 0.0;
                        AreaLabel::Loss
                    };
                }
                i += 1;
            }
        }
    }

    Ok(ExtrapolationWindow {
        origin,
        dims: wdims,
        block_offset: [geometry.border, geometry.border, geometry.temporal_border()],
        block_extent: extent,
        values,
        labels,
    })
}

/// Writes `model` into the loss voxels of the window's central block.
///
/// Returns the number of voxels written.
pub fn insert_block(
    volume: &mut VideoVolume,
    recon: &mut ReconFlags,
    window: &ExtrapolationWindow,
    model: &[f64],
) -> Result<usize> {
    if model.len() != window.len() {
        return Err(Error::mismatch("model size", window.len(), model.len()));
    }
    if recon.dims() != volume.dims() {
        return Err(Error::mismatch("recon flag dims", volume.dims(), recon.dims()));
    }
    let dims = volume.dims();
    let [ox, oy, ot] = window.block_offset;
    let [ex, ey, et] = window.block_extent;
    let mut written = 0;
    for p in ot..ot + et {
        for n in oy..oy + ey {
            for m in ox..ox + ex {
                let i = window.index(m, n, p);
                if window.labels[i] != AreaLabel::Loss {
                    continue;
                }
                let x = window.origin[0] + m as isize;
                let y = window.origin[1] + n as isize;
                let t = window.origin[2] + p as isize;
                if !in_bounds(x, y, t, dims) {
                    continue;
                }
                let (x, y, t) = (x as usize, y as usize, t as usize);
                volume.set(x, y, t, clamp_sample(model[i]));
                recon.set(x, y, t);
                written += 1;
            }
        }
    }
    Ok(written)
}

#[inline]
fn in_bounds(x: isize, y: isize, t: isize, dims: (usize, usize, usize)) -> bool {
    x >= 0
        && y >= 0
        && t >= 0
        && (x as usize) < dims.0
        && (y as usize) < dims.1
        && (t as usize) < dims.2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{generate_quadrant_mask, MaskSeed};

    fn geometry(border: usize, p: usize) -> WindowGeometry {
        WindowGeometry {
            block: [4, 4, 1],
            border,
            temporal_window: p,
        }
    }

    fn ramp(w: usize, h: usize, f: usize) -> VideoVolume {
        VideoVolume::from_fn(w, h, f, |x, y, t| ((x * 7 + y * 3 + t * 11) % 256) as f64).unwrap()
    }

    #[test]
    fn rejects_empty_axes() {
        assert!(VideoVolume::new(0, 4, 1).is_err());
        assert!(SamplingMask::full(4, 4, 0).is_err());
    }

    #[test]
    fn full_mask_gives_all_support() {
        let v = ramp(16, 16, 3);
        let mask = SamplingMask::full(16, 16, 3).unwrap();
        let recon = ReconFlags::new(16, 16, 3);
        let g = geometry(2, 1);
        let w = extract_window(&v, &mask, &recon, [4, 4, 1], &g).unwrap();
        assert_eq!(w.dims(), [8, 8, 1]);
        assert_eq!(w.count(AreaLabel::Support), 64);
    }

    #[test]
    fn quarter_mask_labels_three_quarters_loss() {
        let v = ramp(64, 64, 5);
        let mask = generate_quadrant_mask(64, 64, 5, MaskSeed(3)).unwrap();
        let recon = ReconFlags::new(64, 64, 5);
        let w = extract_window(&v, &mask, &recon, [16, 16, 2], &geometry(14, 5)).unwrap();
        assert_eq!(w.dims(), [32, 32, 5]);
        assert_eq!(w.count(AreaLabel::Outside), 0);
        assert_eq!(w.count(AreaLabel::Loss), 3 * 32 * 32 * 5 / 4);
        assert_eq!(w.count(AreaLabel::Support), 32 * 32 * 5 / 4);
    }

    #[test]
    fn slices_before_first_frame_are_outside() {
        let v = ramp(32, 32, 4);
        let mask = generate_quadrant_mask(32, 32, 4, MaskSeed(1)).unwrap();
        let recon = ReconFlags::new(32, 32, 4);
        let w = extract_window(&v, &mask, &recon, [8, 8, 0], &geometry(4, 5)).unwrap();
        for p in 0..2 {
            for n in 0..w.dims()[1] {
                for m in 0..w.dims()[0] {
                    assert_eq!(w.label(m, n, p), AreaLabel::Outside);
                }
            }
        }
        assert!(w.labels()[w.index(0, 0, 2)..].iter().all(|&l| l != AreaLabel::Outside));
    }

    #[test]
    fn origin_outside_volume_is_rejected() {
        let v = ramp(8, 8, 1);
        let mask = SamplingMask::full(8, 8, 1).unwrap();
        let recon = ReconFlags::new(8, 8, 1);
        let err = extract_window(&v, &mask, &recon, [8, 0, 0], &geometry(2, 1)).unwrap_err();
        assert!(matches!(err, Error::OutOfBounds { .. }));
    }

    #[test]
    fn label_partition_is_exhaustive() {
        let v = ramp(24, 20, 3);
        let mask = generate_quadrant_mask(24, 20, 3, MaskSeed(9)).unwrap();
        let mut recon = ReconFlags::new(24, 20, 3);
        for x in 0..8 {
            recon.set(x, 0, 1);
        }
        let w = extract_window(&v, &mask, &recon, [0, 0, 1], &geometry(6, 3)).unwrap();
        let total = w.count(AreaLabel::Support)
            + w.count(AreaLabel::Loss)
            + w.count(AreaLabel::Outside)
            + w.count(AreaLabel::Reconstructed);
        assert_eq!(total, w.len());
        assert!(w.count(AreaLabel::Reconstructed) > 0);
    }

    #[test]
    fn insert_writes_only_central_loss_voxels() {
        let (wd, ht, fr) = (48, 48, 3);
        let original = ramp(wd, ht, fr);
        let mask = generate_quadrant_mask(wd, ht, fr, MaskSeed(5)).unwrap();
        let sampled = crate::sampling::apply_mask(&original, &mask).unwrap();
        let mut vol = sampled.clone();
        let mut recon = ReconFlags::new(wd, ht, fr);
        let g = geometry(14, 3);
        let w = extract_window(&vol, &mask, &recon, [20, 20, 1], &g).unwrap();
        let model = vec![300.0; w.len()];
        let written = insert_block(&mut vol, &mut recon, &w, &model).unwrap();

        let expected: usize = (20..24)
            .flat_map(|y| (20..24).map(move |x| (x, y)))
            .filter(|&(x, y)| !mask.is_set(x, y, 1))
            .count();
        assert_eq!(written, expected);
        assert_eq!(recon.count_set(), expected);
        for t in 0..fr {
            for y in 0..ht {
                for x in 0..wd {
                    let inside = t == 1 && (20..24).contains(&x) && (20..24).contains(&y);
                    if inside && !mask.is_set(x, y, t) {
                        assert_eq!(vol.get(x, y, t), 255.0);
                    } else {
                        assert_eq!(vol.get(x, y, t), sampled.get(x, y, t));
                    }
                }
            }
        }
    }

    #[test]
    fn insert_rejects_wrong_model_size() {
        let v = ramp(16, 16, 1);
        let mask = SamplingMask::full(16, 16, 1).unwrap();
        let mut recon = ReconFlags::new(16, 16, 1);
        let w = extract_window(&v, &mask, &recon, [4, 4, 0], &geometry(2, 1)).unwrap();
        let mut vol = v.clone();
        assert!(insert_block(&mut vol, &mut recon, &w, &[0.0; 3]).is_err());
    }

    #[test]
    fn extract_then_insert_original_is_idempotent() {
        let original = ramp(32, 32, 3);
        let mask = generate_quadrant_mask(32, 32, 3, MaskSeed(2)).unwrap();
        let mut vol = original.clone();
        let mut recon = ReconFlags::new(32, 32, 3);
        let g = geometry(6, 3);
        for t in 0..3 {
            for by in (0..32).step_by(4) {
                for bx in (0..32).step_by(4) {
                    let w = extract_window(&vol, &mask, &recon, [bx, by, t], &g).unwrap();
                    let o = w.origin();
                    let mut model = vec![0.0; w.len()];
                    for p in 0..w.dims()[2] {
                        for n in 0..w.dims()[1] {
                            for m in 0..w.dims()[0] {
                                let (x, y, tt) = (o[0] + m as isize, o[1] + n as isize, o[2] + p as isize);
                                if in_bounds(x, y, tt, (32, 32, 3)) {
                                    model[w.index(m, n, p)] = original.get(x as usize, y as usize, tt as usize);
                                }
                            }
                        }
                    }
                    insert_block(&mut vol, &mut recon, &w, &model).unwrap();
                }
            }
        }
        assert_eq!(vol, original);
        assert_eq!(recon.count_set(), 32 * 32 * 3 * 3 / 4);
    }

    #[test]
    fn rim_blocks_are_clipped() {
        let g = geometry(14, 1);
        assert_eq!(g.block_extent([8, 4, 0], (10, 6, 1)), [2, 2, 1]);
        assert_eq!(g.window_dims([2, 2, 1]), [30, 30, 1]);
    }
}
