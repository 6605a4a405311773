//! Full-sequence reconstruction: block ordering, mode dispatch and the
//! bookkeeping of already reconstructed voxels.

mod config;
pub mod io;
mod manifest;

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fse::FseEngine;
use crate::motion::{bilinear_init, FlowCache, Rect};
use crate::video::{extract_window, insert_block, ReconFlags, SamplingMask, VideoVolume, WindowGeometry};
use crate::weighting::build_weight_volume;

pub use config::{parse_pairs, IoConfig, Mode, ReconstructionConfig, KEYS};
pub use manifest::{InputDigest, RunManifest};

/// One loss block in processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledBlock {
    pub origin: [usize; 3],
    /// Mask-true samples inside the window footprint.
    pub support: usize,
    /// In-volume voxels of the window footprint.
    pub footprint: usize,
    /// Conflict-free batch the block is processed in.
    pub batch: usize,
}

impl ScheduledBlock {
    pub fn score(&self) -> f64 {
        self.support as f64 / self.footprint as f64
    }
}

/// Loss blocks sorted by descending support fraction, ties in `(t, y, x)`
/// raster order, and grouped into batches whose members neither write into
/// nor read from each other's windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSchedule {
    blocks: Vec<ScheduledBlock>,
    batch_count: usize,
}

impl BlockSchedule {
    pub fn blocks(&self) -> &[ScheduledBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn batch_count(&self) -> usize {
        self.batch_count
    }

    /// Schedule positions of each batch, in schedule order.
    pub fn batches(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.batch_count];
        for (i, b) in self.blocks.iter().enumerate() {
            out[b.batch].push(i);
        }
        out
    }
}

/// Counts set mask bits over boxes in O(1) via a summed-volume table.
struct MaskIntegral {
    dims: (usize, usize, usize),
    table: Vec<u32>,
}

impl MaskIntegral {
    fn new(mask: &SamplingMask) -> Self {
        let (w, h, f) = mask.dims();
        let (sw, sh) = (w + 1, h + 1);
        let mut table = vec![0u32; sw * sh * (f + 1)];
        for t in 0..f {
            for y in 0..h {
                for x in 0..w {
                    let at = |x: usize, y: usize, t: usize| table[(t * sh + y) * sw + x];
                    let v = mask.is_set(x, y, t) as u32 + at(x, y + 1, t + 1) + at(x + 1, y, t + 1)
                        + at(x + 1, y + 1, t)
                        - at(x, y, t + 1)
                        - at(x, y + 1, t)
                        - at(x + 1, y, t)
                        + at(x, y, t);
                    table[((t + 1) * sh + y + 1) * sw + x + 1] = v;
                }
            }
        }
        Self {
            dims: (w, h, f),
            table,
        }
    }

    /// Set bits in `[lo, hi)` per axis (already clipped).
    fn count(&self, lo: [usize; 3], hi: [usize; 3]) -> usize {
        let (sw, sh) = (self.dims.0 + 1, self.dims.1 + 1);
        let at = |x: usize, y: usize, t: usize| self.table[(t * sh + y) * sw + x] as i64;
        let [x0, y0, t0] = lo;
        let [x1, y1, t1] = hi;
        let s = at(x1, y1, t1) - at(x0, y1, t1) - at(x1, y0, t1) - at(x1, y1, t0) + at(x0, y0, t1)
            + at(x0, y1, t0)
            + at(x1, y0, t0)
            - at(x0, y0, t0);
        s as usize
    }
}

/// Window of the block at `origin`, clipped to the volume, as `[lo, hi)`.
fn window_box(g: &WindowGeometry, origin: [usize; 3], dims: (usize, usize, usize)) -> ([usize; 3], [usize; 3]) {
    let extent = g.block_extent(origin, dims);
    let wo = g.window_origin(origin);
    let wd = g.window_dims(extent);
    let lim = [dims.0, dims.1, dims.2];
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for a in 0..3 {
        lo[a] = wo[a].max(0) as usize;
        hi[a] = ((wo[a] + wd[a] as isize).max(0) as usize).min(lim[a]);
    }
    (lo, hi)
}

fn block_box(g: &WindowGeometry, origin: [usize; 3], dims: (usize, usize, usize)) -> ([usize; 3], [usize; 3]) {
    let e = g.block_extent(origin, dims);
    (origin, [origin[0] + e[0], origin[1] + e[1], origin[2] + e[2]])
}

fn overlaps(a: ([usize; 3], [usize; 3]), b: ([usize; 3], [usize; 3])) -> bool {
    (0..3).all(|i| a.0[i] < b.1[i] && b.0[i] < a.1[i])
}

/// Orders the loss blocks of `frames` (a range of frame indices).
pub fn schedule_blocks(
    mask: &SamplingMask,
    frames: std::ops::Range<usize>,
    geometry: &WindowGeometry,
) -> Result<BlockSchedule> {
    geometry.validate()?;
    let dims = mask.dims();
    if frames.end > dims.2 || frames.start > frames.end {
        return Err(Error::InvalidParameter {
            name: "frame_range",
            reason: format!("{frames:?} is not within 0..{}", dims.2),
        });
    }
    let [bw, bh, bt] = geometry.block;
    let integral = MaskIntegral::new(mask);

    let mut blocks = Vec::new();
    for t in frames.clone().step_by(bt) {
        for y in (0..dims.1).step_by(bh) {
            for x in (0..dims.0).step_by(bw) {
                let origin = [x, y, t];
                let (blo, bhi) = block_box(geometry, origin, dims);
                let mut bhi = bhi;
                bhi[2] = bhi[2].min(frames.end);
                let block_voxels: usize = (0..3).map(|a| bhi[a] - blo[a]).product();
                if integral.count(blo, bhi) == block_voxels {
                    continue;
                }
                let (lo, hi) = window_box(geometry, origin, dims);
                blocks.push(ScheduledBlock {
                    origin,
                    support: integral.count(lo, hi),
                    footprint: (0..3).map(|a| hi[a] - lo[a]).product(),
                    batch: 0,
                });
            }
        }
    }
    blocks.sort_by(|a, b| {
        compare_scores((a.support, a.footprint), (b.support, b.footprint))
            .then_with(|| (a.origin[2], a.origin[1], a.origin[0]).cmp(&(b.origin[2], b.origin[1], b.origin[0])))
    });

    // batch(j) = 1 + latest batch among earlier blocks that conflict with j
    let grid = [dims.0.div_ceil(bw), dims.1.div_ceil(bh), dims.2.div_ceil(bt)];
    let reach = [
        (geometry.border + bw).div_ceil(bw),
        (geometry.border + bh).div_ceil(bh),
        (geometry.temporal_border() + bt).div_ceil(bt),
    ];
    let mut assigned: Vec<Option<(usize, [usize; 3])>> = vec![None; grid.iter().product()];
    let cell = |g: [usize; 3]| (g[2] * grid[1] + g[1]) * grid[0] + g[0];
    let mut batch_count = 0;
    for b in &mut blocks {
        let g = [b.origin[0] / bw, b.origin[1] / bh, b.origin[2] / bt];
        let own_block = block_box(geometry, b.origin, dims);
        let own_window = window_box(geometry, b.origin, dims);
        let range = |a: usize| g[a].saturating_sub(reach[a])..(g[a] + reach[a] + 1).min(grid[a]);
        let mut batch = 0;
        for gt in range(2) {
            for gy in range(1) {
                for gx in range(0) {
                    let Some((other_batch, other)) = assigned[cell([gx, gy, gt])] else {
                        continue;
                    };
                    if other_batch < batch {
                        continue;
                    }
                    if overlaps(block_box(geometry, other, dims), own_window)
                        || overlaps(own_block, window_box(geometry, other, dims))
                    {
                        batch = other_batch + 1;
                    }
                }
            }
        }
        b.batch = batch;
        batch_count = batch_count.max(batch + 1);
        assigned[cell(g)] = Some((batch, b.origin));
    }
    Ok(BlockSchedule { blocks, batch_count })
}

/// Output of [`reconstruct_detailed`].
#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub video: VideoVolume,
    pub blocks: usize,
    pub batches: usize,
    /// Sum of FSE iterations over all blocks.
    pub iterations: usize,
    /// Blocks whose window held no usable support.
    pub empty_support: usize,
}

/// Reconstructs every mask-false pixel of `sampled`.
pub fn reconstruct(sampled: &VideoVolume, mask: &SamplingMask, config: &ReconstructionConfig) -> Result<VideoVolume> {
    reconstruct_detailed(sampled, mask, config, None).map(|r| r.video)
}

/// Like [`reconstruct`]. `flow` replaces the flow estimated from the
/// bilinear bootstrap in [`Mode::Fse3DMcw`].
pub fn reconstruct_detailed(
    sampled: &VideoVolume,
    mask: &SamplingMask,
    config: &ReconstructionConfig,
    flow: Option<&FlowCache>,
) -> Result<Reconstruction> {
    config.validate()?;
    sampled.ensure_same_dims(mask.dims(), "mask dims")?;
    let dims = sampled.dims();

    if config.mode == Mode::Bilinear {
        return Ok(Reconstruction {
            video: bilinear_init(sampled, mask)?,
            blocks: 0,
            batches: 0,
            iterations: 0,
            empty_support: 0,
        });
    }

    let estimated;
    let flow = match (config.mode, flow) {
        (Mode::Fse3DMcw, Some(f)) => {
            if f.frames() != dims.2 {
                return Err(Error::mismatch("flow cache frames", dims.2, f.frames()));
            }
            Some(f)
        }
        (Mode::Fse3DMcw, None) => {
            estimated = FlowCache::build(&bilinear_init(sampled, mask)?, &config.flow)?;
            Some(&estimated)
        }
        _ => None,
    };

    let geometry = config.geometry();
    let engine = FseEngine::new(config.effective_fse())?;
    let schedule = schedule_blocks(mask, 0..dims.2, &geometry)?;

    // loss voxels start at zero so nothing leaks from the sampled input
    let mut volume = sampled.clone();
    for (v, &b) in volume.samples_mut().iter_mut().zip(mask.bits()) {
        if !b {
            *v = 0.0;
        }
    }
    let mut recon = ReconFlags::new(dims.0, dims.1, dims.2);
    let mut iterations = 0;
    let mut empty_support = 0;

    for batch in schedule.batches() {
        let results = batch
            .par_iter()
            .map(|&i| {
                let origin = schedule.blocks()[i].origin;
                let window = extract_window(&volume, mask, &recon, origin, &geometry)?;
                let motion = match flow {
                    Some(cache) => {
                        let wo = window.origin();
                        let wd = window.dims();
                        let rect = Rect::clipped(wo[0], wo[1], wd[0], wd[1], dims.0, dims.1);
                        let t = origin[2] + window.block_extent()[2] / 2;
                        Some(cache.window_motion(t, rect, wd[2])?)
                    }
                    None => None,
                };
                let weights = build_weight_volume(&window, motion.as_ref(), &config.weight)?;
                let outcome = engine.generate(&window, &weights)?;
                Ok((window, outcome))
            })
            .collect::<Result<Vec<_>>>()?;
        for (window, outcome) in results {
            insert_block(&mut volume, &mut recon, &window, &outcome.model)?;
            iterations += outcome.iterations;
            empty_support += outcome.empty_support as usize;
        }
    }

    debug_assert_eq!(recon.count_set(), mask.bits().iter().filter(|&&b| !b).count());
    Ok(Reconstruction {
        video: volume,
        blocks: schedule.len(),
        batches: schedule.batch_count(),
        iterations,
        empty_support,
    })
}

/// Descending support fraction of `(support, footprint)` pairs, compared exactly.
pub fn compare_scores(a: (usize, usize), b: (usize, usize)) -> Ordering {
    (b.0 as u128 * a.1 as u128).cmp(&(a.0 as u128 * b.1 as u128))
}
