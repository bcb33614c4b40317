//! Command-line front end. `run` is the whole program; the binary only
//! forwards `std::env::args` and the standard streams.
//!
//! Exit codes: 0 success (fallbacks included), 1 usage or I/O error,
//! 2 data error (undecodable input, strict-mode failures).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use crate::imagecore::{decode_image, encode_gray_png, encode_rgb_jpeg, ImageError};
use crate::persistence::{compute_persistence, Connectivity};
use crate::pipeline::{
    list_images, prepare_gray, process_image, run_batch, split_dataset, write_atomic, BorderBand,
    Emit, PipelineConfig, PipelineError, Status,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "topocrop",
    version,
    about = "Persistence-based lesion isolation and cropping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the 0-dimensional persistence diagram of an image as CSV.
    Diagram {
        input: PathBuf,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Isolate and crop the object in a single image.
    Process {
        input: PathBuf,
        #[arg(value_name = "OUT_DIR")]
        out_dir: PathBuf,
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Split a directory into train/test and process every image.
    Batch {
        in_dir: PathBuf,
        out_root: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        flags: SharedFlags,
    },
    /// Print the train/test assignment of a directory as CSV.
    Split {
        in_dir: PathBuf,
        #[arg(long)]
        ratio: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        flags: SharedFlags,
    },
}

#[derive(Debug, Args, Default, Clone)]
struct SharedFlags {
    /// Pixel adjacency: 4 or 8.
    #[arg(long)]
    connectivity: Option<Connectivity>,
    /// Box-filter radius.
    #[arg(long)]
    smooth: Option<usize>,
    /// Border band width in pixels, or `auto`.
    #[arg(long)]
    border: Option<BorderBand>,
    /// Filter the inverted image (bright objects).
    #[arg(long)]
    invert: bool,
    /// Extra pixels around the bounding box.
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated debug outputs: mask, gray, diagram.
    #[arg(long)]
    emit: Option<Emit>,
    /// Flat JSON file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Values collected from flags and the config file before defaults apply.
#[derive(Debug, Default, Clone, PartialEq)]
struct Overrides {
    connectivity: Option<Connectivity>,
    smooth: Option<usize>,
    border: Option<BorderBand>,
    invert: Option<bool>,
    margin: Option<usize>,
    seed: Option<u64>,
    emit: Option<Emit>,
    jobs: Option<usize>,
    strict: Option<bool>,
    ratio: Option<f64>,
}

impl Overrides {
    fn from_flags(f: &SharedFlags) -> Self {
        Self {
            connectivity: f.connectivity,
            smooth: f.smooth,
            border: f.border,
            invert: f.invert.then_some(true),
            margin: f.margin,
            seed: f.seed,
            emit: f.emit,
            ..Self::default()
        }
    }

    /// Parses a flat JSON object whose keys mirror the flag names.
    fn from_json(text: &str) -> Result<Self, String> {
        let value: Value = serde_json::from_str(text).map_err(|e| format!("config: {e}"))?;
        let Value::Object(map) = value else {
            return Err("config: expected a JSON object".into());
        };
        let mut o = Self::default();
        for (key, v) in &map {
            let text = match v {
                Value::String(s) => s.clone(),
                Value::Array(items) => items
                    .iter()
                    .map(|i| {
                        i.as_str()
                            .map(str::to_string)
                            .unwrap_or_else(|| i.to_string())
                    })
                    .collect::<Vec<_>>()
                    .join(","),
                other => other.to_string(),
            };
            let bad = |e: String| format!("config key `{key}`: {e}");
            match key.as_str() {
                "connectivity" => o.connectivity = Some(text.parse().map_err(bad)?),
                "smooth" => o.smooth = Some(parse_num(&text).map_err(bad)?),
                "border" => o.border = Some(text.parse().map_err(bad)?),
                "invert" => o.invert = Some(parse_bool(v).map_err(bad)?),
                "margin" => o.margin = Some(parse_num(&text).map_err(bad)?),
                "seed" => o.seed = Some(parse_num(&text).map_err(bad)?),
                "emit" => o.emit = Some(text.parse().map_err(bad)?),
                "jobs" => o.jobs = Some(parse_num(&text).map_err(bad)?),
                "strict" => o.strict = Some(parse_bool(v).map_err(bad)?),
                "ratio" => o.ratio = Some(parse_num(&text).map_err(bad)?),
                other => return Err(format!("config: unknown key `{other}`")),
            }
        }
        Ok(o)
    }

    /// Fields set in `self` win over `base`.
    fn over(self, base: Overrides) -> Overrides {
        Overrides {
            connectivity: self.connectivity.or(base.connectivity),
            smooth: self.smooth.or(base.smooth),
            border: self.border.or(base.border),
            invert: self.invert.or(base.invert),
            margin: self.margin.or(base.margin),
            seed: self.seed.or(base.seed),
            emit: self.emit.or(base.emit),
            jobs: self.jobs.or(base.jobs),
            strict: self.strict.or(base.strict),
            ratio: self.ratio.or(base.ratio),
        }
    }

    fn into_config(self) -> PipelineConfig {
        let d = PipelineConfig::default();
        PipelineConfig {
            smooth_radius: self.smooth.unwrap_or(d.smooth_radius),
            border_band: self.border.unwrap_or(d.border_band),
            connectivity: self.connectivity.unwrap_or(d.connectivity),
            invert: self.invert.unwrap_or(d.invert),
            margin: self.margin.unwrap_or(d.margin),
            split_ratio: self.ratio.unwrap_or(d.split_ratio),
            seed: self.seed.unwrap_or(d.seed),
            jobs: self.jobs.unwrap_or(d.jobs),
            strict: self.strict.unwrap_or(d.strict),
            emit: self.emit.unwrap_or(d.emit),
        }
    }
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("invalid number `{s}`"))
}

fn parse_bool(v: &Value) -> Result<bool, String> {
    match v {
        Value::Bool(b) => Ok(*b),
        other => Err(format!("expected true or false, got {other}")),
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn data(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_DATA,
            message: message.into(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Image(ImageError::Decode(_)) | PipelineError::Strict { .. } => EXIT_DATA,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn resolve_config(flags: &SharedFlags, extra: Overrides) -> Result<PipelineConfig, Failure> {
    let from_flags = Overrides::from_flags(flags).over(extra);
    let merged = match &flags.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            from_flags.over(Overrides::from_json(&text).map_err(Failure::usage)?)
        }
        None => from_flags,
    };
    let cfg = merged.into_config();
    cfg.validate().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(cfg)
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn decode(path: &Path, bytes: &[u8]) -> Result<crate::imagecore::RgbImage, Failure> {
    decode_image(bytes).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string()
}

fn is_jpeg(bytes: &[u8]) -> bool {
    matches!(image::guess_format(bytes), Ok(image::ImageFormat::Jpeg))
}

fn emit_output(out: Option<&Path>, data: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)
                    .map_err(|e| Failure::usage(format!("{}: {e}", parent.display())))?;
            }
            write_atomic(path, data).map_err(Failure::from)
        }
        None => stdout
            .write_all(data)
            .map_err(|e| Failure::usage(format!("stdout: {e}"))),
    }
}

fn cmd_diagram(
    input: &Path,
    out: Option<&Path>,
    cfg: &PipelineConfig,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let bytes = read_input(input)?;
    let rgb = decode(input, &bytes)?;
    let gray = prepare_gray(&rgb, cfg);
    let csv = compute_persistence(&gray, cfg.connectivity).to_csv();
    emit_output(out, csv.as_bytes(), stdout)
}

fn cmd_process(
    input: &Path,
    out_dir: &Path,
    cfg: &PipelineConfig,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let bytes = read_input(input)?;
    let rgb = decode(input, &bytes)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| Failure::usage(format!("{}: {e}", out_dir.display())))?;

    let out = process_image(&rgb, cfg);
    let stem = file_stem(input);
    let cropped = if out.record.status == Status::FallbackOriginal && is_jpeg(&bytes) {
        bytes.clone()
    } else {
        encode_rgb_jpeg(&out.image).map_err(|e| Failure::usage(e.to_string()))?
    };
    write_atomic(&out_dir.join(format!("{stem}.cropped.jpg")), &cropped)?;

    if cfg.emit.mask {
        if let Some(mask) = &out.mask {
            let png =
                encode_gray_png(&mask.to_gray()).map_err(|e| Failure::usage(e.to_string()))?;
            write_atomic(&out_dir.join(format!("{stem}.mask.png")), &png)?;
        }
    }
    if cfg.emit.gray {
        let png = encode_gray_png(&out.filtered).map_err(|e| Failure::usage(e.to_string()))?;
        write_atomic(&out_dir.join(format!("{stem}.gray.png")), &png)?;
    }
    if cfg.emit.diagram {
        write_atomic(
            &out_dir.join(format!("{stem}.diagram.csv")),
            out.diagram.to_csv().as_bytes(),
        )?;
    }

    let mut record = out.record;
    record.filename = input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    writeln!(stdout, "{}", record.summary()).map_err(|e| Failure::usage(e.to_string()))
}

fn cmd_batch(
    in_dir: &Path,
    out_root: &Path,
    cfg: &PipelineConfig,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let manifest = run_batch(in_dir, out_root, cfg)?;
    let t = &manifest.totals;
    let _ = writeln!(
        stderr,
        "{} images: {} processed, {} fallback_original, {} error; train {} / test {}",
        t.images, t.processed, t.fallback_original, t.error, t.train, t.test
    );
    Ok(())
}

fn cmd_split(
    in_dir: &Path,
    out: Option<&Path>,
    cfg: &PipelineConfig,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let names = list_images(in_dir)?;
    if names.is_empty() {
        return Err(PipelineError::EmptyInput(in_dir.to_path_buf()).into());
    }
    let (train, _) = split_dataset(&names, cfg.split_ratio, cfg.seed);
    let mut csv = String::from("filename,split\n");
    for name in &names {
        let split = if train.contains(name) {
            "train"
        } else {
            "test"
        };
        csv.push_str(&format!("{name},{split}\n"));
    }
    emit_output(out, csv.as_bytes(), stdout)
}

/// Runs the CLI with explicit argument list and streams; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };

    let result = match &cli.command {
        Command::Diagram { input, out, flags } => resolve_config(flags, Overrides::default())
            .and_then(|cfg| cmd_diagram(input, out.as_deref(), &cfg, stdout)),
        Command::Process {
            input,
            out_dir,
            flags,
        } => resolve_config(flags, Overrides::default())
            .and_then(|cfg| cmd_process(input, out_dir, &cfg, stdout)),
        Command::Batch {
            in_dir,
            out_root,
            jobs,
            strict,
            ratio,
            flags,
        } => {
            let extra = Overrides {
                jobs: *jobs,
                strict: strict.then_some(true),
                ratio: *ratio,
                ..Overrides::default()
            };
            resolve_config(flags, extra).and_then(|cfg| cmd_batch(in_dir, out_root, &cfg, stderr))
        }
        Command::Split {
            in_dir,
            ratio,
            out,
            flags,
        } => {
            let extra = Overrides {
                ratio: *ratio,
                ..Overrides::default()
            };
            resolve_config(flags, extra)
                .and_then(|cfg| cmd_split(in_dir, out.as_deref(), &cfg, stdout))
        }
    };

    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
