//! Sequence I/O: raw 8-bit planar luma, planar YUV 4:2:0 (luma only) and
//! directories of binary PGM frames.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::video::VideoVolume;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum VideoFormat {
    /// `width * height` bytes per frame.
    #[default]
    Raw,
    /// Luma plane followed by two quarter-size chroma planes per frame.
    Yuv420,
    /// Directory of `P5` graymaps, frames in file-name order.
    Pgm,
}

impl VideoFormat {
    fn name(self) -> &'static str {
        match self {
            VideoFormat::Raw => "raw",
            VideoFormat::Yuv420 => "yuv420",
            VideoFormat::Pgm => "pgm",
        }
    }
}

impl fmt::Display for VideoFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VideoFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" | "gray" | "y" => Ok(VideoFormat::Raw),
            "yuv" | "yuv420" | "yuv420p" => Ok(VideoFormat::Yuv420),
            "pgm" => Ok(VideoFormat::Pgm),
            other => Err(Error::Config(format!("unknown video format `{other}`"))),
        }
    }
}

/// Reads a sequence. Raw formats need `width` and `height`; `frames` keeps
/// only the leading frames.
pub fn read_video(
    path: &Path,
    format: VideoFormat,
    width: Option<usize>,
    height: Option<usize>,
    frames: Option<usize>,
) -> Result<VideoVolume> {
    match format {
        VideoFormat::Raw | VideoFormat::Yuv420 => {
            let (Some(w), Some(h)) = (width, height) else {
                return Err(Error::Config(format!("{format} input needs `width` and `height`")));
            };
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            read_planar(&bytes, format, w, h, frames)
        }
        VideoFormat::Pgm => read_pgm_dir(path, frames),
    }
}

fn read_planar(
    bytes: &[u8],
    format: VideoFormat,
    w: usize,
    h: usize,
    frames: Option<usize>,
) -> Result<VideoVolume> {
    let luma = w * h;
    if luma == 0 {
        return Err(Error::InvalidDimensions(format!("{w}x{h}")));
    }
    let stride = match format {
        VideoFormat::Yuv420 => luma + 2 * w.div_ceil(2) * h.div_ceil(2),
        _ => luma,
    };
    if !bytes.len().is_multiple_of(stride) {
        return Err(Error::Format {
            format: format.name(),
            reason: format!("{} bytes is not a whole number of {stride}-byte frames", bytes.len()),
        });
    }
    let available = bytes.len() / stride;
    let n = frames.unwrap_or(available);
    if n == 0 || n > available {
        return Err(Error::Format {
            format: format.name(),
            reason: format!("requested {n} frames, file holds {available}"),
        });
    }
    let mut data = Vec::with_capacity(luma * n);
    for t in 0..n {
        data.extend_from_slice(&bytes[t * stride..t * stride + luma]);
    }
    VideoVolume::from_u8(w, h, n, &data)
}

/// Writes a sequence, rounding and clamping to 8 bits. YUV output gets flat
/// mid-grey chroma.
pub fn write_video(volume: &VideoVolume, path: &Path, format: VideoFormat) -> Result<()> {
    let (w, h, frames) = volume.dims();
    match format {
        VideoFormat::Raw => fs::write(path, volume.to_u8()).map_err(|e| Error::io(path, e)),
        VideoFormat::Yuv420 => {
            let bytes = volume.to_u8();
            let chroma = 2 * w.div_ceil(2) * h.div_ceil(2);
            let mut out = Vec::with_capacity(bytes.len() + frames * chroma);
            for frame in bytes.chunks(w * h) {
                out.extend_from_slice(frame);
                out.resize(out.len() + chroma, 128);
            }
            fs::write(path, out).map_err(|e| Error::io(path, e))
        }
        VideoFormat::Pgm => {
            fs::create_dir_all(path).map_err(|e| Error::io(path, e))?;
            let bytes = volume.to_u8();
            for (t, frame) in bytes.chunks(w * h).enumerate() {
                let file = path.join(format!("frame_{t:04}.pgm"));
                let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
                out.extend_from_slice(frame);
                fs::write(&file, out).map_err(|e| Error::io(&file, e))?;
            }
            Ok(())
        }
    }
}

fn read_pgm_dir(dir: &Path, frames: Option<usize>) -> Result<VideoVolume> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    if let Some(n) = frames {
        if n > files.len() {
            return Err(Error::Format {
                format: "pgm",
                reason: format!("requested {n} frames, directory holds {}", files.len()),
            });
        }
        files.truncate(n);
    }
    if files.is_empty() {
        return Err(Error::Format {
            format: "pgm",
            reason: format!("no .pgm files in {}", dir.display()),
        });
    }
    let mut dims = None;
    let mut data = Vec::new();
    for file in &files {
        let bytes = fs::read(file).map_err(|e| Error::io(file, e))?;
        let (w, h, pixels) = parse_pgm(&bytes)?;
        if *dims.get_or_insert((w, h)) != (w, h) {
            return Err(Error::mismatch("pgm frame size", dims.unwrap(), (w, h)));
        }
        data.extend_from_slice(pixels);
    }
    let (w, h) = dims.unwrap();
    VideoVolume::from_u8(w, h, files.len(), &data)
}

/// Parses a binary 8-bit graymap, returning `(width, height, pixels)`.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, &[u8])> {
    let bad = |reason: &str| Error::Format {
        format: "pgm",
        reason: reason.to_string(),
    };
    let mut pos = 0;
    let mut fields = [0usize; 3];
    let next_token = |pos: &mut usize| -> Option<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    if next_token(&mut pos).as_deref() != Some("P5") {
        return Err(bad("missing P5 magic"));
    }
    for f in fields.iter_mut() {
        *f = next_token(&mut pos)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad("bad header field"))?;
    }
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(bad("only 8-bit graymaps (maxval 255) are supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let pixels = bytes
        .get(start..start + w * h)
        .ok_or_else(|| bad("truncated raster"))?;
    Ok((w, h, pixels))
}

/// Hex SHA-256 of a file, or of every file of a directory in name order.
pub fn digest_path(path: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        for f in files {
            hasher.update(fs::read(&f).map_err(|e| Error::io(&f, e))?);
        }
    } else {
        hasher.update(fs::read(path).map_err(|e| Error::io(path, e))?);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> VideoVolume {
        VideoVolume::from_fn(6, 4, 3, |x, y, t| ((x * 40 + y * 7 + t * 3) % 256) as f64).unwrap()
    }

    #[test]
    fn round_trips_every_format() {
        let dir = tempfile::tempdir().unwrap();
        let v = ramp();
        for format in [VideoFormat::Raw, VideoFormat::Yuv420, VideoFormat::Pgm] {
            let p = dir.path().join(format.name());
            write_video(&v, &p, format).unwrap();
            let back = read_video(&p, format, Some(6), Some(4), None).unwrap();
            assert_eq!(back, v, "{format}");
            let two = read_video(&p, format, Some(6), Some(4), Some(2)).unwrap();
            assert_eq!(two, v.truncated(2));
        }
    }

    #[test]
    fn yuv_frame_size_includes_chroma() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.yuv");
        write_video(&ramp(), &p, VideoFormat::Yuv420).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 3 * (24 + 12));
    }

    #[test]
    fn ragged_raw_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("v.raw");
        fs::write(&p, [0u8; 25]).unwrap();
        let e = read_video(&p, VideoFormat::Raw, Some(6), Some(4), None).unwrap_err();
        assert_eq!(e.code(), "E_FORMAT");
        let e = read_video(&p, VideoFormat::Raw, None, Some(4), None).unwrap_err();
        assert_eq!(e.code(), "E_CONFIG");
    }

    #[test]
    fn pgm_header_comments() {
        let bytes = b"P5 # x\n# full line\n2 1\n255\n\x07\x09";
        assert_eq!(parse_pgm(bytes).unwrap(), (2, 1, &[7u8, 9][..]));
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
    }

    #[test]
    fn digest_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            digest_path(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
