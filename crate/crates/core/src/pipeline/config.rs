//! Flat `key = value` configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::io::VideoFormat;
use crate::error::{Error, Result};
use crate::fse::FseParams;
use crate::motion::FlowParams;
use crate::sampling::MaskSeed;
use crate::video::WindowGeometry;
use crate::weighting::WeightParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    Bilinear,
    Fse2D,
    Fse3D,
    Fse3DMcw,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Bilinear, Mode::Fse2D, Mode::Fse3D, Mode::Fse3DMcw];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Bilinear => "bilinear",
            Mode::Fse2D => "fse2d",
            Mode::Fse3D => "fse3d",
            Mode::Fse3DMcw => "fse3d-mcw",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}` (expected bilinear, fse2d, fse3d or fse3d-mcw)")))
    }
}

/// Input/output locations and raw stream geometry.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IoConfig {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub format: VideoFormat,
    pub width: Option<usize>,
    pub height: Option<usize>,
    /// Leading frames to use; all when unset.
    pub frames: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionConfig {
    pub mode: Mode,
    pub fse: FseParams,
    pub weight: WeightParams,
    pub flow: FlowParams,
    /// Temporal window depth `P` (odd). Ignored by [`Mode::Fse2D`].
    pub temporal_window: usize,
    pub masks: Vec<MaskSeed>,
    pub io: IoConfig,
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Fse3DMcw,
            fse: FseParams::default(),
            weight: WeightParams::default(),
            flow: FlowParams::default(),
            temporal_window: 5,
            masks: vec![MaskSeed(1), MaskSeed(2), MaskSeed(3)],
            io: IoConfig::default(),
        }
    }
}

/// Recognized configuration keys. CLI flags use the same names with `-`.
pub const KEYS: &[&str] = &[
    "mode",
    "block",
    "border",
    "fft_size",
    "gamma",
    "max_iterations",
    "min_gain",
    "rho_hat",
    "delta",
    "temporal_window",
    "flow_levels",
    "flow_window_radius",
    "flow_iterations",
    "flow_poly_radius",
    "flow_sigma",
    "seeds",
    "input",
    "output",
    "mask",
    "manifest",
    "format",
    "width",
    "height",
    "frames",
];

impl ReconstructionConfig {
    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.fse.validate()?;
        self.weight.validate()?;
        if self.mode == Mode::Fse3DMcw {
            self.flow.validate()?;
        }
        if self.temporal_window.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "temporal_window",
                reason: format!("{} is not odd", self.temporal_window),
            });
        }
        self.geometry().validate()?;
        let depth = self.geometry().window_dims(self.fse.block)[2];
        self.effective_fse().check_window([1, 1, depth])?;
        Ok(())
    }

    /// Temporal window actually used by the mode.
    pub fn effective_temporal_window(&self) -> usize {
        match self.mode {
            Mode::Fse2D => 1,
            _ => self.temporal_window,
        }
    }

    pub fn geometry(&self) -> WindowGeometry {
        WindowGeometry {
            block: self.fse.block,
            border: self.fse.border,
            temporal_window: self.effective_temporal_window(),
        }
    }

    /// FSE parameters for the mode; single-slice windows use a single-slice
    /// transform.
    pub fn effective_fse(&self) -> FseParams {
        let mut fse = self.fse;
        if self.effective_temporal_window() == 1 {
            fse.fft_size[2] = 1;
            fse.block[2] = 1;
        }
        fse
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "mode" => self.mode = v.parse()?,
            "block" => self.fse.block = triple(key, v)?,
            "border" => self.fse.border = num(key, v)?,
            "fft_size" => self.fse.fft_size = triple(key, v)?,
            "gamma" => self.fse.gamma = num(key, v)?,
            "max_iterations" => self.fse.max_iterations = num(key, v)?,
            "min_gain" => self.fse.min_gain = num(key, v)?,
            "rho_hat" => self.weight.rho_hat = num(key, v)?,
            "delta" => self.weight.delta = num(key, v)?,
            "temporal_window" => self.temporal_window = num(key, v)?,
            "flow_levels" => self.flow.levels = num(key, v)?,
            "flow_window_radius" => self.flow.window_radius = num(key, v)?,
            "flow_iterations" => self.flow.iterations_per_level = num(key, v)?,
            "flow_poly_radius" => self.flow.poly_radius = num(key, v)?,
            "flow_sigma" => self.flow.smoothing_sigma = num(key, v)?,
            "seeds" => {
                self.masks = v
                    .split(',')
                    .map(|s| num(key, s).map(MaskSeed))
                    .collect::<Result<_>>()?;
                if self.masks.is_empty() {
                    return Err(Error::Config("`seeds` is empty".into()));
                }
            }
            "input" => self.io.input = Some(v.into()),
            "output" => self.io.output = Some(v.into()),
            "mask" => self.io.mask = Some(v.into()),
            "manifest" => self.io.manifest = Some(v.into()),
            "format" => self.io.format = v.parse()?,
            "width" => self.io.width = Some(num(key, v)?),
            "height" => self.io.height = Some(num(key, v)?),
            "frames" => self.io.frames = Some(num(key, v)?),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies settings in order; later ones win.
    pub fn apply<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_pairs(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            e => e,
        })
    }
}

/// Splits `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{v}`")))
}

fn triple(key: &str, v: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = v.split(['x', 'X', ',']).collect();
    match parts.as_slice() {
        [a, b, c] => Ok([num(key, a)?, num(key, b)?, num(key, c)?]),
        [a, b] => Ok([num(key, a)?, num(key, b)?, 1]),
        _ => Err(Error::Config(format!("`{key}`: expected WxHxT, got `{v}`"))),
    }
}
