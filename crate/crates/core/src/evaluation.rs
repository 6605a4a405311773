//! PSNR and the multi-mask benchmark.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::io::{read_video, VideoFormat};
use crate::pipeline::{parse_pairs, reconstruct, Mode, ReconstructionConfig};
use crate::sampling::{apply_mask, generate_quadrant_mask, MaskSeed};
use crate::synthetic::translating_texture;
use crate::video::{SamplingMask, VideoVolume};

const PEAK: f64 = 255.0;

fn psnr_from(sum_sq: f64, count: usize) -> f64 {
    if sum_sq == 0.0 {
        return f64::INFINITY;
    }
    10.0 * (PEAK * PEAK / (sum_sq / count as f64)).log10()
}

/// `10 log10(255^2 / MSE)` over every sample; infinite for identical inputs.
pub fn psnr(reference: &VideoVolume, test: &VideoVolume) -> Result<f64> {
    reference.ensure_same_dims(test.dims(), "psnr operands")?;
    let sum: f64 = reference
        .samples()
        .iter()
        .zip(test.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(psnr_from(sum, reference.samples().len()))
}

/// PSNR over the samples the mask does not expose.
pub fn psnr_loss(reference: &VideoVolume, test: &VideoVolume, mask: &SamplingMask) -> Result<f64> {
    reference.ensure_same_dims(test.dims(), "psnr operands")?;
    reference.ensure_same_dims(mask.dims(), "mask dims")?;
    let (sum, n) = reference
        .samples()
        .iter()
        .zip(test.samples())
        .zip(mask.bits())
        .filter(|(_, &b)| !b)
        .fold((0.0, 0usize), |(s, n), ((a, b), _)| (s + (a - b) * (a - b), n + 1));
    if n == 0 {
        return Err(Error::EmptyRegion);
    }
    Ok(psnr_from(sum, n))
}

/// Where a benchmark sequence comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SequenceSource {
    File {
        path: PathBuf,
        format: VideoFormat,
        width: Option<usize>,
        height: Option<usize>,
    },
    /// [`translating_texture`] with the given size, velocity and seed.
    Synthetic {
        width: usize,
        height: usize,
        frames: usize,
        velocity: (f64, f64),
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSequence {
    pub name: String,
    pub source: SequenceSource,
}

impl BenchSequence {
    fn load(&self, frames: Option<usize>) -> Result<VideoVolume> {
        match &self.source {
            SequenceSource::File {
                path,
                format,
                width,
                height,
            } => read_video(path, *format, *width, *height, frames),
            SequenceSource::Synthetic {
                width,
                height,
                frames: n,
                velocity,
                seed,
            } => {
                let v = translating_texture(*width, *height, *n, *velocity, *seed)?;
                Ok(match frames {
                    Some(f) if f < *n => v.truncated(f),
                    _ => v,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    /// Parameters shared by every mode; `masks` are the seeds.
    pub base: ReconstructionConfig,
    pub sequences: Vec<BenchSequence>,
    pub modes: Vec<Mode>,
    /// Leading frames of each sequence to use.
    pub frames: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            base: ReconstructionConfig::default(),
            sequences: Vec::new(),
            modes: Mode::ALL.to_vec(),
            frames: Some(50),
        }
    }
}

impl BenchConfig {
    /// Parses the benchmark keys plus any reconstruction key.
    ///
    /// `sequence = NAME | PATH | FORMAT | WxH` and
    /// `synthetic = NAME | WxHxF | VX,VY | SEED` may repeat; `modes` takes a
    /// comma list and `frames` the number of leading frames (`all` for no
    /// limit). Reconstruction keys configure `base`.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let fields: Vec<&str> = value.split('|').map(str::trim).collect();
        let bad = || Error::Config(format!("`{key}`: cannot parse `{value}`"));
        match key {
            "sequence" => {
                let [name, path, format, size] = fields[..] else {
                    return Err(bad());
                };
                let (w, h) = size.split_once(['x', 'X']).ok_or_else(bad)?;
                self.sequences.push(BenchSequence {
                    name: name.to_string(),
                    source: SequenceSource::File {
                        path: path.into(),
                        format: format.parse()?,
                        width: Some(w.trim().parse().map_err(|_| bad())?),
                        height: Some(h.trim().parse().map_err(|_| bad())?),
                    },
                });
            }
            "synthetic" => {
                let [name, size, vel, seed] = fields[..] else {
                    return Err(bad());
                };
                let dims: Vec<usize> = size
                    .split(['x', 'X'])
                    .map(|s| s.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                let v: Vec<f64> = vel
                    .split(',')
                    .map(|s| s.trim().parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                let (&[w, h, f], &[vx, vy]) = (dims.as_slice(), v.as_slice()) else {
                    return Err(bad());
                };
                self.sequences.push(BenchSequence {
                    name: name.to_string(),
                    source: SequenceSource::Synthetic {
                        width: w,
                        height: h,
                        frames: f,
                        velocity: (vx, vy),
                        seed: seed.parse().map_err(|_| bad())?,
                    },
                });
            }
            "modes" => {
                self.modes = value.split(',').map(str::parse).collect::<Result<_>>()?;
            }
            "frames" => {
                self.frames = match value.trim() {
                    "all" => None,
                    v => Some(v.parse().map_err(|_| bad())?),
                };
            }
            _ => self.base.set(key, value)?,
        }
        Ok(())
    }
}

/// One reconstruction of one sequence under one mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub sequence: String,
    pub mode: Mode,
    pub seed: MaskSeed,
    pub psnr_db: f64,
    pub psnr_loss_db: f64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<BenchCell>,
    /// Sequences that could not be loaded, with the reason.
    pub missing: Vec<(String, String)>,
}

impl BenchReport {
    /// Mean PSNR over the masks of one sequence and mode.
    pub fn average(&self, sequence: &str, mode: Mode) -> Option<f64> {
        let values: Vec<f64> = self
            .cells
            .iter()
            .filter(|c| c.sequence == sequence && c.mode == mode)
            .map(|c| c.psnr_db)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    fn sequences(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.sequence.as_str()) {
                seen.push(c.sequence.as_str());
            }
        }
        seen
    }

    fn modes(&self) -> Vec<Mode> {
        let mut seen = Vec::new();
        for c in &self.cells {
            if !seen.contains(&c.mode) {
                seen.push(c.mode);
            }
        }
        seen
    }

    /// `sequence,mode,seed,psnr_db,runtime_s` with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sequence,mode,seed,psnr_db,runtime_s\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{:.4},{:.3}",
                c.sequence, c.mode, c.seed.0, c.psnr_db, c.runtime_s
            );
        }
        out
    }

    /// Aligned table of mask-averaged PSNR, one row per sequence and a
    /// final row averaging over sequences.
    pub fn to_table(&self) -> String {
        let modes = self.modes();
        let seqs = self.sequences();
        let name_w = seqs.iter().map(|s| s.len()).max().unwrap_or(0).max("Average".len());
        let mut out = format!("{:<name_w$}", "Sequence");
        for m in &modes {
            let _ = write!(out, "  {:>10}", m.name());
        }
        out.push('\n');
        let mut totals: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for s in &seqs {
            let _ = write!(out, "{s:<name_w$}");
            for (i, &m) in modes.iter().enumerate() {
                match self.average(s, m) {
                    Some(v) => {
                        totals.entry(i).or_default().push(v);
                        let _ = write!(out, "  {v:>10.2}");
                    }
                    None => {
                        let _ = write!(out, "  {:>10}", "-");
                    }
                }
            }
            out.push('\n');
        }
        if seqs.len() > 1 {
            let _ = write!(out, "{:<name_w$}", "Average");
            for i in 0..modes.len() {
                let v = totals.get(&i).map_or(f64::NAN, |v| v.iter().sum::<f64>() / v.len() as f64);
                let _ = write!(out, "  {v:>10.2}");
            }
            out.push('\n');
        }
        for (name, reason) in &self.missing {
            let _ = writeln!(out, "missing: {name}: {reason}");
        }
        out
    }
}

/// Samples every sequence under every mask seed, reconstructs it in every
/// mode and scores the 8-bit output against the original.
///
/// Sequences that fail to load are listed in the report and skipped.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.base.validate()?;
    let mut report = BenchReport::default();
    for seq in &config.sequences {
        let original = match seq.load(config.frames) {
            Ok(v) => v,
            Err(e) => {
                report.missing.push((seq.name.clone(), e.to_string()));
                continue;
            }
        };
        let (w, h, f) = original.dims();
        for &seed in &config.base.masks {
            let mask = generate_quadrant_mask(w, h, f, seed)?;
            let sampled = apply_mask(&original, &mask)?;
            for &mode in &config.modes {
                let start = Instant::now();
                let out = reconstruct(&sampled, &mask, &config.base.clone().with_mode(mode))?.quantized();
                let runtime_s = start.elapsed().as_secs_f64();
                report.cells.push(BenchCell {
                    sequence: seq.name.clone(),
                    mode,
                    seed,
                    psnr_db: psnr(&original, &out)?,
                    psnr_loss_db: psnr_loss(&original, &out, &mask)?,
                    runtime_s,
                });
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat(v: f64) -> VideoVolume {
        VideoVolume::from_fn(8, 6, 2, |_, _, _| v).unwrap()
    }

    #[test]
    fn identical_is_infinite() {
        assert_eq!(psnr(&flat(3.0), &flat(3.0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn off_by_sixteen() {
        let p = psnr(&flat(100.0), &flat(116.0)).unwrap();
        let expected = 20.0 * (255.0f64 / 16.0).log10();
        assert!((p - expected).abs() < 1e-12);
        assert!((p - 24.048_404).abs() < 1e-6);
    }

    #[test]
    fn full_scale_error_is_zero_db() {
        assert!(psnr(&flat(0.0), &flat(255.0)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn mismatched_dims_rejected() {
        let a = VideoVolume::new(4, 4, 1).unwrap();
        let b = VideoVolume::new(4, 2, 1).unwrap();
        assert_eq!(psnr(&a, &b).unwrap_err().code(), "E_DIM_MISMATCH");
    }

    #[test]
    fn loss_psnr_ignores_exposed_pixels() {
        let mask = generate_quadrant_mask(8, 6, 2, MaskSeed(1)).unwrap();
        let a = flat(50.0);
        let b = VideoVolume::from_fn(8, 6, 2, |x, y, t| if mask.is_set(x, y, t) { 0.0 } else { 66.0 }).unwrap();
        let p = psnr_loss(&a, &b, &mask).unwrap();
        assert!((p - 20.0 * (255.0f64 / 16.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn parses_bench_config() {
        let c = BenchConfig::from_text(
            "synthetic = pan | 32x32x3 | 2, 0 | 5\nsequence = bq | /x/bq.yuv | yuv420 | 416x240\nmodes = fse2d,fse3d\nframes = all\nseeds = 1\nborder = 6\n",
        )
        .unwrap();
        assert_eq!(c.sequences.len(), 2);
        assert_eq!(c.modes, vec![Mode::Fse2D, Mode::Fse3D]);
        assert_eq!(c.frames, None);
        assert_eq!(c.base.fse.border, 6);
        assert!(matches!(c.sequences[1].source, SequenceSource::File { width: Some(416), .. }));
        assert!(BenchConfig::from_text("synthetic = a | 3x3 | 1,1 | 2").is_err());
    }

    #[test]
    fn table_and_csv_shape() {
        let cell = |s: &str, m, seed, p| BenchCell {
            sequence: s.into(),
            mode: m,
            seed: MaskSeed(seed),
            psnr_db: p,
            psnr_loss_db: p,
            runtime_s: 0.5,
        };
        let r = BenchReport {
            cells: vec![
                cell("a", Mode::Fse3D, 1, 30.0),
                cell("a", Mode::Fse3D, 2, 32.0),
                cell("b", Mode::Fse3D, 1, 20.0),
            ],
            missing: vec![("c".into(), "gone".into())],
        };
        assert_eq!(r.average("a", Mode::Fse3D), Some(31.0));
        assert_eq!(r.average("a", Mode::Fse2D), None);
        let csv = r.to_csv();
        assert_eq!(csv.lines().next(), Some("sequence,mode,seed,psnr_db,runtime_s"));
        assert_eq!(csv.lines().nth(1), Some("a,fse3d,1,30.0000,0.500"));
        let table = r.to_table();
        assert!(table.contains("31.00") && table.contains("25.50") && table.contains("missing: c"));
    }
}
