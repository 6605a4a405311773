//! Non-regular quarter-density sensor model.
//!
//! Each 2x2 block of the high-resolution grid exposes exactly one pixel; the
//! exposed quadrant is drawn uniformly per block and stays fixed over time.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::video::{SamplingMask, VideoVolume};

/// Seed selecting one realization of the sensor mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct MaskSeed(pub u64);

/// Draws a quadrant mask: one active pixel per 2x2 block, constant over time.
pub fn generate_quadrant_mask(
    width: usize,
    height: usize,
    frames: usize,
    seed: MaskSeed,
) -> Result<SamplingMask> {
    check_even(width, height)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed.0);
    let mut frame = vec![false; width * height];
    for by in (0..height).step_by(2) {
        for bx in (0..width).step_by(2) {
            let q: usize = rng.gen_range(0..4);
            frame[(by + q / 2) * width + bx + q % 2] = true;
        }
    }
    SamplingMask::from_frame(width, height, frames, &frame)
}

/// Debug pattern: the same quadrant (0 = top-left .. 3 = bottom-right) in every block.
pub fn regular_mask(width: usize, height: usize, frames: usize, quadrant: usize) -> Result<SamplingMask> {
    check_even(width, height)?;
    if quadrant > 3 {
        return Err(Error::InvalidParameter {
            name: "quadrant",
            reason: format!("{quadrant} is not in 0..4"),
        });
    }
    SamplingMask::from_fn(width, height, frames, |x, y, _| {
        x % 2 == quadrant % 2 && y % 2 == quadrant / 2
    })
}

fn check_even(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::InvalidDimensions(format!(
            "mask dimensions {width}x{height} must be even and non-zero"
        )));
    }
    Ok(())
}

/// `s_nr = s * b`: keeps samples where the mask is set, zero elsewhere.
pub fn apply_mask(volume: &VideoVolume, mask: &SamplingMask) -> Result<VideoVolume> {
    volume.ensure_same_dims(mask.dims(), "mask dims")?;
    let mut out = volume.clone();
    for (v, &b) in out.samples_mut().iter_mut().zip(mask.bits()) {
        if !b {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Checks the one-sample-per-2x2-block property on every frame.
pub fn is_quadrant_mask(mask: &SamplingMask) -> bool {
    let (w, h, f) = mask.dims();
    if w % 2 != 0 || h % 2 != 0 {
        return false;
    }
    (0..f).all(|t| {
        (0..h).step_by(2).all(|by| {
            (0..w).step_by(2).all(|bx| {
                let n = [(0, 0), (1, 0), (0, 1), (1, 1)]
                    .iter()
                    .filter(|&&(dx, dy)| mask.is_set(bx + dx, by + dy, t))
                    .count();
                n == 1
            })
        })
    })
}

const MASK_MAGIC: &str = "NRMASK";

/// Writes `NRMASK <w> <h> <frames>\n` followed by frame 0 as ASCII `0`/`1` bytes.
pub fn write_mask<W: Write>(mask: &SamplingMask, mut out: W) -> std::io::Result<()> {
    let (w, h, f) = mask.dims();
    writeln!(out, "{MASK_MAGIC} {w} {h} {f}")?;
    let bytes: Vec<u8> = mask
        .frame(0)
        .iter()
        .map(|&b| if b { b'1' } else { b'0' })
        .collect();
    out.write_all(&bytes)?;
    out.flush()
}

pub fn read_mask<R: BufRead>(mut input: R) -> Result<SamplingMask> {
    let bad = |reason: String| Error::Format {
        format: "mask",
        reason,
    };
    let mut header = String::new();
    input
        .read_line(&mut header)
        .map_err(|e| bad(e.to_string()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != MASK_MAGIC {
        return Err(bad(format!("bad header {:?}", header.trim_end())));
    }
    let parse = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| bad(format!("bad dimension {s:?}")))
    };
    let (w, h, f) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    let mut body = vec![0u8; w * h];
    input
        .read_exact(&mut body)
        .map_err(|_| bad(format!("expected {} mask bytes", w * h)))?;
    let frame = body
        .iter()
        .map(|&c| match c {
            b'0' => Ok(false),
            b'1' => Ok(true),
            other => Err(bad(format!("unexpected byte {other:#04x}"))),
        })
        .collect::<Result<Vec<bool>>>()?;
    SamplingMask::from_frame(w, h, f, &frame)
}

pub fn save_mask(mask: &SamplingMask, path: &std::path::Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_mask(mask, std::io::BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_mask(path: &std::path::Path) -> Result<SamplingMask> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_mask(std::io::BufReader::new(file))
}
