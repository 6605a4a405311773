//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::evaluation::{psnr, psnr_loss, run_benchmark, BenchConfig};
use crate::motion::{estimate_flow, write_flow, Plane};
use crate::pipeline::io::{read_video, write_video, VideoFormat};
use crate::pipeline::{reconstruct_detailed, ReconstructionConfig, RunManifest};
use crate::sampling::{apply_mask, generate_quadrant_mask, load_mask, save_mask, MaskSeed};
use crate::video::SamplingMask;

#[derive(Debug, Parser)]
#[command(name = "mcwfse", version, about = "Reconstruct non-regularly sampled video by frequency-selective extrapolation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a quarter-density sensor mask, optionally applying it to a sequence.
    Mask(MaskArgs),
    /// Reconstruct a sampled sequence.
    Reconstruct(ReconstructArgs),
    /// Estimate dense flow between two adjacent frames.
    Flow(FlowArgs),
    /// Run the multi-mask PSNR benchmark.
    Bench(BenchArgs),
    /// PSNR between two sequences.
    Psnr(PsnrArgs),
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[arg(long)]
    width: usize,
    #[arg(long)]
    height: usize,
    #[arg(long)]
    frames: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Mask file to write.
    #[arg(long)]
    output: PathBuf,
    /// Full-resolution sequence to sample with the mask.
    #[arg(long, requires = "sampled")]
    apply: Option<PathBuf>,
    /// Where to write the sampled sequence.
    #[arg(long, requires = "apply")]
    sampled: Option<PathBuf>,
    #[arg(long, default_value = "raw")]
    format: String,
}

/// Every configuration key as a flag; these override the config file.
#[derive(Debug, Args, Default)]
struct ConfigFlags {
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    block: Option<String>,
    #[arg(long)]
    border: Option<String>,
    #[arg(long)]
    fft_size: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    max_iterations: Option<String>,
    #[arg(long)]
    min_gain: Option<String>,
    #[arg(long)]
    rho_hat: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    temporal_window: Option<String>,
    #[arg(long)]
    flow_levels: Option<String>,
    #[arg(long)]
    flow_window_radius: Option<String>,
    #[arg(long)]
    flow_iterations: Option<String>,
    #[arg(long)]
    flow_poly_radius: Option<String>,
    #[arg(long)]
    flow_sigma: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    input: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    mask: Option<String>,
    #[arg(long)]
    manifest: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    height: Option<String>,
    #[arg(long)]
    frames: Option<String>,
}

impl ConfigFlags {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        [
            ("mode", &self.mode),
            ("block", &self.block),
            ("border", &self.border),
            ("fft_size", &self.fft_size),
            ("gamma", &self.gamma),
            ("max_iterations", &self.max_iterations),
            ("min_gain", &self.min_gain),
            ("rho_hat", &self.rho_hat),
            ("delta", &self.delta),
            ("temporal_window", &self.temporal_window),
            ("flow_levels", &self.flow_levels),
            ("flow_window_radius", &self.flow_window_radius),
            ("flow_iterations", &self.flow_iterations),
            ("flow_poly_radius", &self.flow_poly_radius),
            ("flow_sigma", &self.flow_sigma),
            ("seeds", &self.seeds),
            ("input", &self.input),
            ("output", &self.output),
            ("mask", &self.mask),
            ("manifest", &self.manifest),
            ("format", &self.format),
            ("width", &self.width),
            ("height", &self.height),
            ("frames", &self.frames),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    /// Config file (if any) with these flags applied on top.
    fn resolve(&self, file: Option<&Path>) -> Result<ReconstructionConfig> {
        let mut cfg = match file {
            Some(p) => ReconstructionConfig::load(p)?,
            None => ReconstructionConfig::default(),
        };
        cfg.apply(self.pairs())?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// First frame of the pair; flow goes from it to the next frame.
    #[arg(long, default_value_t = 0)]
    frame: usize,
    #[command(flatten)]
    flags: ConfigFlags,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Benchmark configuration file.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON report output path.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PsnrArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value = "raw")]
    format: String,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    frames: Option<usize>,
    /// Mask file; adds the PSNR over unexposed pixels.
    #[arg(long)]
    mask: Option<PathBuf>,
}

/// Runs the CLI on `argv` (including the program name) and returns the exit
/// status. Failures print one `error[CODE]: message` line to stderr.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(cli.command))),
        None => dispatch(cli.command),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Mask(a) => mask_cmd(a),
        Command::Reconstruct(a) => reconstruct_cmd(a),
        Command::Flow(a) => flow_cmd(a),
        Command::Bench(a) => bench_cmd(a),
        Command::Psnr(a) => psnr_cmd(a),
    }
}

fn mask_cmd(a: MaskArgs) -> Result<()> {
    let mask = generate_quadrant_mask(a.width, a.height, a.frames, MaskSeed(a.seed))?;
    save_mask(&mask, &a.output)?;
    println!(
        "mask {}x{}x{} seed {} density {:.4} -> {}",
        a.width,
        a.height,
        a.frames,
        a.seed,
        mask.density(),
        a.output.display()
    );
    if let (Some(input), Some(out)) = (a.apply, a.sampled) {
        let format: VideoFormat = a.format.parse()?;
        let video = read_video(&input, format, Some(a.width), Some(a.height), Some(a.frames))?;
        let (w, h, f) = video.dims();
        if (w, h) != (a.width, a.height) {
            return Err(Error::mismatch("input frame size", (a.width, a.height), (w, h)));
        }
        write_video(&apply_mask(&video, &mask.truncated(f))?, &out, format)?;
        println!("sampled {} -> {}", input.display(), out.display());
    }
    Ok(())
}

fn required<'a>(v: &'a Option<PathBuf>, key: &str) -> Result<&'a PathBuf> {
    v.as_ref().ok_or_else(|| Error::Config(format!("`{key}` is required")))
}

/// Mask with `frames` frames; the pattern is constant over time.
fn fit_mask(mask: SamplingMask, frames: usize) -> Result<SamplingMask> {
    if mask.frames() == frames {
        return Ok(mask);
    }
    SamplingMask::from_frame(mask.width(), mask.height(), frames, mask.frame(0))
}

fn reconstruct_cmd(a: ReconstructArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = a.flags.resolve(a.config.as_deref())?;
    cfg.validate()?;
    let input = required(&cfg.io.input, "input")?;
    let output = required(&cfg.io.output, "output")?;
    let mask_path = required(&cfg.io.mask, "mask")?;
    let mask = load_mask(mask_path)?;
    let video = read_video(
        input,
        cfg.io.format,
        cfg.io.width.or(Some(mask.width())),
        cfg.io.height.or(Some(mask.height())),
        cfg.io.frames,
    )?;
    let mask = fit_mask(mask, video.frames())?;
    let result = reconstruct_detailed(&video, &mask, &cfg, None)?;
    write_video(&result.video, output, cfg.io.format)?;

    let mut manifest = RunManifest::new("reconstruct", &cfg);
    manifest.add_input("input", input)?;
    manifest.add_input("mask", mask_path)?;
    if let Some(c) = &a.config {
        manifest.add_input("config", c)?;
    }
    manifest.outputs.push(output.clone());
    manifest.runtime_s = start.elapsed().as_secs_f64();
    let manifest_path = cfg.io.manifest.clone().unwrap_or_else(|| {
        let mut p = output.clone().into_os_string();
        p.push(".manifest.json");
        p.into()
    });
    manifest.save(&manifest_path)?;
    println!(
        "{}: {} blocks in {} batches, {:.2}s -> {} (manifest {})",
        cfg.mode,
        result.blocks,
        result.batches,
        manifest.runtime_s,
        output.display(),
        manifest_path.display()
    );
    Ok(())
}

fn flow_cmd(a: FlowArgs) -> Result<()> {
    let cfg = a.flags.resolve(a.config.as_deref())?;
    cfg.flow.validate()?;
    let input = required(&cfg.io.input, "input")?;
    let output = required(&cfg.io.output, "output")?;
    let video = read_video(input, cfg.io.format, cfg.io.width, cfg.io.height, cfg.io.frames)?;
    if a.frame + 1 >= video.frames() {
        return Err(Error::InvalidParameter {
            name: "frame",
            reason: format!("{} has no successor in {} frames", a.frame, video.frames()),
        });
    }
    let plane = |t| Plane::new(video.width(), video.height(), video.frame(t).to_vec());
    let field = estimate_flow(&plane(a.frame)?, &plane(a.frame + 1)?, &cfg.flow)?;
    let file = std::fs::File::create(output).map_err(|e| Error::io(output, e))?;
    write_flow(&field, std::io::BufWriter::new(file)).map_err(|e| Error::io(output, e))?;
    let n = field.vx.len() as f64;
    println!(
        "flow {}->{}: mean ({:.3}, {:.3}) px -> {}",
        a.frame,
        a.frame + 1,
        field.vx.iter().sum::<f64>() / n,
        field.vy.iter().sum::<f64>() / n,
        output.display()
    );
    Ok(())
}

fn bench_cmd(a: BenchArgs) -> Result<()> {
    let cfg = BenchConfig::load(&a.config)?;
    let report = run_benchmark(&cfg)?;
    print!("{}", report.to_table());
    if let Some(p) = &a.csv {
        std::fs::write(p, report.to_csv()).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &a.json {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(p, json + "\n").map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn psnr_cmd(a: PsnrArgs) -> Result<()> {
    let format: VideoFormat = a.format.parse()?;
    let reference = read_video(&a.reference, format, a.width, a.height, a.frames)?;
    let test = read_video(&a.test, format, a.width, a.height, a.frames)?;
    let p = psnr(&reference, &test)?;
    match &a.mask {
        Some(m) => {
            let mask = fit_mask(load_mask(m)?, reference.frames())?;
            println!("psnr_db={p:.4} psnr_loss_db={:.4}", psnr_loss(&reference, &test, &mask)?);
        }
        None => println!("psnr_db={p:.4}"),
    }
    Ok(())
}
