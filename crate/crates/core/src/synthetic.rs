//! Synthetic test sequences with known motion.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::Result;
use crate::video::VideoVolume;

/// Random band-limited texture moving by `velocity` pixels per frame.
///
/// Frame `t` samples the continuous pattern at `(x - vx t, y - vy t)`, so
/// the motion is exact at sub-pixel precision. Values lie in `[16, 240]`.
pub fn translating_texture(
    width: usize,
    height: usize,
    frames: usize,
    velocity: (f64, f64),
    seed: u64,
) -> Result<VideoVolume> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let waves: Vec<(f64, f64, f64, f64)> = (0..48)
        .map(|_| {
            let f: f64 = rng.gen_range(0.01..0.35);
            let theta: f64 = rng.gen_range(0.0..TAU);
            let phase: f64 = rng.gen_range(0.0..TAU);
            (f * theta.cos(), f * theta.sin(), phase, 0.02 / f)
        })
        .collect();
    let norm: f64 = waves.iter().map(|w| w.3).sum();
    VideoVolume::from_fn(width, height, frames, |x, y, t| {
        let px = x as f64 - velocity.0 * t as f64;
        let py = y as f64 - velocity.1 * t as f64;
        let s: f64 = waves
            .iter()
            .map(|&(fx, fy, ph, a)| a * (TAU * (fx * px + fy * py) + ph).cos())
            .sum();
        128.0 + 112.0 * s / norm
    })
}

/// [`translating_texture`] without motion.
pub fn static_texture(width: usize, height: usize, frames: usize, seed: u64) -> Result<VideoVolume> {
    translating_texture(width, height, frames, (0.0, 0.0), seed)
}
