//! Per-image processing chain and dataset-level batch runs.
//!
//! A batch run splits the input directory into train and test sets and
//! writes four sibling directories under the output root:
//!
//! ```text
//! train_dir/      original files, train split
//! train_dir_TIP/  processed files, same names
//! test_dir/       original files, test split
//! test_dir_TIP/   processed files, same names
//! diagnostics/    manifest.json, optional *.diagram.csv / *.mask.png / *.gray.png
//! ```
//!
//! The split shuffles the sorted file names with ChaCha8 seeded through
//! `rand::SeedableRng::seed_from_u64`, then assigns the first
//! `floor(ratio * n)` names to training.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::crop::{bounding_box, crop, BoundingBox};
use crate::imagecore::{
    auto_border_band, border_modify, decode_image, encode_gray_png, encode_rgb_jpeg,
    encode_rgb_png, rgb_to_gray, smooth, GrayImage, ImageError, RgbImage,
};
use crate::persistence::{compute_persistence, Connectivity, PersistenceDiagram};
use crate::tip::{generate_mask, select_threshold, BinaryMask, TipError};

pub const TRAIN_DIR: &str = "train_dir";
pub const TEST_DIR: &str = "test_dir";
pub const TRAIN_TIP_DIR: &str = "train_dir_TIP";
pub const TEST_TIP_DIR: &str = "test_dir_TIP";
pub const DIAGNOSTICS_DIR: &str = "diagnostics";
pub const MANIFEST_FILE: &str = "manifest.json";

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("EmptyInput: no image files in {0}")]
    EmptyInput(PathBuf),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("strict mode: {filename}: {message}")]
    Strict { filename: String, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BorderBand {
    /// `max(1, round(0.05 * min(width, height)))`
    #[default]
    Auto,
    Fixed(usize),
}

impl BorderBand {
    pub fn resolve(self, width: usize, height: usize) -> usize {
        match self {
            BorderBand::Auto => auto_border_band(width, height),
            BorderBand::Fixed(b) => b,
        }
    }
}

impl std::str::FromStr for BorderBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(BorderBand::Auto),
            n => n
                .parse()
                .map(BorderBand::Fixed)
                .map_err(|_| format!("border must be a pixel count or `auto`, got `{s}`")),
        }
    }
}

impl std::fmt::Display for BorderBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BorderBand::Auto => f.write_str("auto"),
            BorderBand::Fixed(b) => write!(f, "{b}"),
        }
    }
}

/// Optional per-image debug outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Emit {
    pub mask: bool,
    pub gray: bool,
    pub diagram: bool,
}

impl Emit {
    pub const ALL: Emit = Emit {
        mask: true,
        gray: true,
        diagram: true,
    };

    pub fn names(&self) -> Vec<&'static str> {
        [
            (self.mask, "mask"),
            (self.gray, "gray"),
            (self.diagram, "diagram"),
        ]
        .into_iter()
        .filter_map(|(on, name)| on.then_some(name))
        .collect()
    }
}

impl std::str::FromStr for Emit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut emit = Emit::default();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            match item {
                "mask" => emit.mask = true,
                "gray" => emit.gray = true,
                "diagram" => emit.diagram = true,
                other => return Err(format!("unknown emit item `{other}` (mask, gray, diagram)")),
            }
        }
        Ok(emit)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub smooth_radius: usize,
    pub border_band: BorderBand,
    pub connectivity: Connectivity,
    /// Filter `255 - gray` instead of `gray`, for bright objects.
    pub invert: bool,
    pub margin: usize,
    pub split_ratio: f64,
    pub seed: u64,
    pub jobs: usize,
    pub strict: bool,
    pub emit: Emit,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            smooth_radius: 1,
            border_band: BorderBand::Auto,
            connectivity: Connectivity::Four,
            invert: false,
            margin: 0,
            split_ratio: 0.9,
            seed: 0,
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
            strict: false,
            emit: Emit::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(PipelineError::Config(format!(
                "split ratio must be in (0, 1), got {}",
                self.split_ratio
            )));
        }
        if self.jobs == 0 {
            return Err(PipelineError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    /// Config echo for the manifest. Leaves out `jobs`, which cannot
    /// change any output.
    pub fn to_json(&self) -> Value {
        json!({
            "smooth": self.smooth_radius,
            "border": self.border_band.to_string(),
            "connectivity": self.connectivity.to_string(),
            "invert": self.invert,
            "margin": self.margin,
            "ratio": self.split_ratio,
            "seed": self.seed,
            "strict": self.strict,
            "emit": self.emit.names(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Processed,
    FallbackOriginal,
    Error,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Processed => "processed",
            Status::FallbackOriginal => "fallback_original",
            Status::Error => "error",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageRecord {
    pub filename: String,
    pub status: Status,
    pub split: Option<Split>,
    pub threshold: Option<f64>,
    pub finite_pair_count: usize,
    pub selected_count: usize,
    pub bbox: Option<BoundingBox>,
    pub duration_ms: f64,
    pub error_message: Option<String>,
}

impl ImageRecord {
    fn error(filename: &str, split: Split, message: String, duration_ms: f64) -> Self {
        Self {
            filename: filename.to_string(),
            status: Status::Error,
            split: Some(split),
            threshold: None,
            finite_pair_count: 0,
            selected_count: 0,
            bbox: None,
            duration_ms,
            error_message: Some(message),
        }
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        let threshold = self.threshold.map_or("-".to_string(), |t| t.to_string());
        let bbox = self.bbox.map_or("-".to_string(), |b| {
            format!(
                "top={} bottom={} left={} right={}",
                b.top, b.bottom, b.left, b.right
            )
        });
        let line = format!(
            "status={} threshold={} pairs={} selected={} bbox={}",
            self.status, threshold, self.finite_pair_count, self.selected_count, bbox
        );
        if self.filename.is_empty() {
            line
        } else {
            format!("{} {line}", self.filename)
        }
    }
}

/// Everything produced for one image.
#[derive(Debug, Clone)]
pub struct ProcessOutput {
    /// Cropped original, or the unmodified original on fallback.
    pub image: RgbImage,
    /// Grayscale after inversion, smoothing and border modification.
    pub filtered: GrayImage,
    pub mask: Option<BinaryMask>,
    pub diagram: PersistenceDiagram,
    pub record: ImageRecord,
}

/// Grayscale conversion followed by the configured modifications.
pub fn prepare_gray(rgb: &RgbImage, cfg: &PipelineConfig) -> GrayImage {
    let mut gray = rgb_to_gray(rgb);
    if cfg.invert {
        gray = gray.inverted();
    }
    let gray = smooth(&gray, cfg.smooth_radius);
    let band = cfg.border_band.resolve(gray.width(), gray.height());
    border_modify(&gray, band)
}

/// Full chain for a single decoded image. Never fails: a missing diagram
/// or empty mask falls back to the original image.
pub fn process_image(rgb: &RgbImage, cfg: &PipelineConfig) -> ProcessOutput {
    let started = Instant::now();
    let filtered = prepare_gray(rgb, cfg);
    let diagram = compute_persistence(&filtered, cfg.connectivity);

    let mut record = ImageRecord {
        filename: String::new(),
        status: Status::FallbackOriginal,
        split: None,
        threshold: None,
        finite_pair_count: diagram.finite_pairs.len(),
        selected_count: 0,
        bbox: None,
        duration_ms: 0.0,
        error_message: None,
    };

    let outcome = select_threshold(&diagram).and_then(|t| {
        record.threshold = Some(t.value());
        generate_mask(&filtered, cfg.connectivity, t)
    });

    let (image, mask) = match outcome {
        Ok(res) => {
            let bbox = bounding_box(&res.mask)
                .expect("generate_mask never returns an empty mask")
                .expand(cfg.margin, rgb.width(), rgb.height());
            let cropped = crop(rgb, bbox).expect("mask and image share dimensions");
            record.status = Status::Processed;
            record.selected_count = res.selected;
            record.bbox = Some(bbox);
            (cropped, Some(res.mask))
        }
        Err(TipError::EmptyDiagram | TipError::EmptyMask) => (rgb.clone(), None),
    };
    record.duration_ms = started.elapsed().as_secs_f64() * 1e3;

    ProcessOutput {
        image,
        filtered,
        mask,
        diagram,
        record,
    }
}

/// Seeded train/test partition of `filenames`.
pub fn split_dataset<S: AsRef<str>>(
    filenames: &[S],
    ratio: f64,
    seed: u64,
) -> (Vec<String>, Vec<String>) {
    let mut names: Vec<String> = filenames.iter().map(|s| s.as_ref().to_string()).collect();
    names.sort();
    names.dedup();
    names.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // the epsilon keeps products like 0.29 * 100 from flooring to 28
    let n_train = ((ratio * names.len() as f64) + 1e-9).floor() as usize;
    let test = names.split_off(n_train.min(names.len()));
    (names, test)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Totals {
    pub images: usize,
    pub processed: usize,
    pub fallback_original: usize,
    pub error: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub config: Value,
    pub totals: Totals,
    pub wall_clock_ms: f64,
    pub records: Vec<ImageRecord>,
}

impl Manifest {
    fn new(config: &PipelineConfig, records: Vec<ImageRecord>, wall_clock_ms: f64) -> Self {
        let count = |s: Status| records.iter().filter(|r| r.status == s).count();
        let split = |s: Split| records.iter().filter(|r| r.split == Some(s)).count();
        let totals = Totals {
            images: records.len(),
            processed: count(Status::Processed),
            fallback_original: count(Status::FallbackOriginal),
            error: count(Status::Error),
            train: split(Split::Train),
            test: split(Split::Test),
        };
        Self {
            config: config.to_json(),
            totals,
            wall_clock_ms,
            records,
        }
    }

    /// Copy with every timing field zeroed.
    pub fn without_timings(&self) -> Manifest {
        let mut m = self.clone();
        m.wall_clock_ms = 0.0;
        for r in &mut m.records {
            r.duration_ms = 0.0;
        }
        m
    }

    /// Pretty JSON with object keys in sorted order.
    pub fn to_json_string(&self) -> String {
        let value = serde_json::to_value(self).expect("manifest serializes");
        let mut s = serde_json::to_string_pretty(&value).expect("value serializes");
        s.push('\n');
        s
    }
}

/// Image files (png/jpg/jpeg, any case) directly inside `dir`, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<String>, PipelineError> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if !path.is_file() {
            continue;
        }
        let is_image = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if let (true, Some(name)) = (is_image, path.file_name().and_then(|n| n.to_str())) {
            names.push(name.to_string());
        }
    }
    names.sort();
    Ok(names)
}

fn is_png_name(name: &str) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"))
}

/// Encodes a processed image in the format its file name implies.
pub fn encode_for_name(img: &RgbImage, name: &str) -> Result<Vec<u8>, ImageError> {
    if is_png_name(name) {
        encode_rgb_png(img)
    } else {
        encode_rgb_jpeg(img)
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    use std::io::Write;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| PipelineError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Writes the debug outputs selected in `emit` for one processed image.
pub fn write_diagnostics(
    dir: &Path,
    name: &str,
    out: &ProcessOutput,
    emit: Emit,
) -> Result<(), PipelineError> {
    if emit.diagram {
        let path = dir.join(format!("{name}.diagram.csv"));
        write_atomic(&path, out.diagram.to_csv().as_bytes())?;
    }
    if emit.gray {
        let path = dir.join(format!("{name}.gray.png"));
        write_atomic(&path, &encode_gray_png(&out.filtered)?)?;
    }
    if let (true, Some(mask)) = (emit.mask, &out.mask) {
        let path = dir.join(format!("{name}.mask.png"));
        write_atomic(&path, &encode_gray_png(&mask.to_gray())?)?;
    }
    Ok(())
}

struct BatchLayout {
    in_dir: PathBuf,
    train: PathBuf,
    test: PathBuf,
    train_tip: PathBuf,
    test_tip: PathBuf,
    diagnostics: PathBuf,
}

impl BatchLayout {
    fn create(in_dir: &Path, out_root: &Path) -> Result<Self, PipelineError> {
        let layout = Self {
            in_dir: in_dir.to_path_buf(),
            train: out_root.join(TRAIN_DIR),
            test: out_root.join(TEST_DIR),
            train_tip: out_root.join(TRAIN_TIP_DIR),
            test_tip: out_root.join(TEST_TIP_DIR),
            diagnostics: out_root.join(DIAGNOSTICS_DIR),
        };
        for d in [
            &layout.train,
            &layout.test,
            &layout.train_tip,
            &layout.test_tip,
            &layout.diagnostics,
        ] {
            fs::create_dir_all(d).map_err(io_err(d))?;
        }
        Ok(layout)
    }

    fn dirs(&self, split: Split) -> (&Path, &Path) {
        match split {
            Split::Train => (&self.train, &self.train_tip),
            Split::Test => (&self.test, &self.test_tip),
        }
    }
}

fn run_one(
    layout: &BatchLayout,
    name: &str,
    split: Split,
    cfg: &PipelineConfig,
) -> Result<ImageRecord, PipelineError> {
    let started = Instant::now();
    let src = layout.in_dir.join(name);
    let bytes = fs::read(&src).map_err(io_err(&src))?;
    let (raw_dir, tip_dir) = layout.dirs(split);
    write_atomic(&raw_dir.join(name), &bytes)?;

    let rgb = match decode_image(&bytes) {
        Ok(rgb) => rgb,
        Err(e) => {
            // keep the TIP directory in step with its raw partner
            write_atomic(&tip_dir.join(name), &bytes)?;
            let ms = started.elapsed().as_secs_f64() * 1e3;
            return Ok(ImageRecord::error(name, split, e.to_string(), ms));
        }
    };

    let out = process_image(&rgb, cfg);
    let tip_path = tip_dir.join(name);
    match out.record.status {
        Status::Processed => write_atomic(&tip_path, &encode_for_name(&out.image, name)?)?,
        _ => write_atomic(&tip_path, &bytes)?,
    }
    write_diagnostics(&layout.diagnostics, name, &out, cfg.emit)?;

    let mut record = out.record;
    record.filename = name.to_string();
    record.split = Some(split);
    record.duration_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(record)
}

/// Splits, processes and writes a whole directory of images.
pub fn run_batch(
    in_dir: &Path,
    out_root: &Path,
    cfg: &PipelineConfig,
) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let started = Instant::now();
    let names = list_images(in_dir)?;
    if names.is_empty() {
        return Err(PipelineError::EmptyInput(in_dir.to_path_buf()));
    }
    let (train, _) = split_dataset(&names, cfg.split_ratio, cfg.seed);
    let train: std::collections::HashSet<&str> = train.iter().map(String::as_str).collect();
    let layout = BatchLayout::create(in_dir, out_root)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let results: Vec<Result<ImageRecord, PipelineError>> = pool.install(|| {
        names
            .par_iter()
            .map(|name| {
                let split = if train.contains(name.as_str()) {
                    Split::Train
                } else {
                    Split::Test
                };
                run_one(&layout, name, split, cfg)
            })
            .collect()
    });
    let records = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let manifest = Manifest::new(cfg, records, started.elapsed().as_secs_f64() * 1e3);
    let manifest_path = layout.diagnostics.join(MANIFEST_FILE);
    write_atomic(&manifest_path, manifest.to_json_string().as_bytes())?;

    if cfg.strict {
        if let Some(bad) = manifest.records.iter().find(|r| r.status == Status::Error) {
            return Err(PipelineError::Strict {
                filename: bad.filename.clone(),
                message: bad.error_message.clone().unwrap_or_default(),
            });
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_counts() {
        let names: Vec<String> = (0..10).map(|i| format!("img{i}.jpg")).collect();
        let (train, test) = split_dataset(&names, 0.9, 7);
        assert_eq!((train.len(), test.len()), (9, 1));

        let names: Vec<String> = (0..10015).map(|i| format!("ISIC_{i:07}.jpg")).collect();
        let (train, test) = split_dataset(&names, 0.9, 0);
        assert_eq!((train.len(), test.len()), (9013, 1002));
    }

    #[test]
    fn split_is_deterministic_and_order_free() {
        let names: Vec<String> = (0..50).map(|i| format!("{i}.png")).collect();
        let mut reversed = names.clone();
        reversed.reverse();
        assert_eq!(
            split_dataset(&names, 0.8, 3),
            split_dataset(&reversed, 0.8, 3)
        );
        assert_ne!(split_dataset(&names, 0.8, 3), split_dataset(&names, 0.8, 4));
    }

    #[test]
    fn split_floor_is_robust_to_float_error() {
        let names: Vec<String> = (0..100).map(|i| i.to_string()).collect();
        assert_eq!(split_dataset(&names, 0.29, 0).0.len(), 29);
    }

    #[test]
    fn config_validation() {
        let mut cfg = PipelineConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.split_ratio = 1.0;
        assert!(cfg.validate().is_err());
        cfg.split_ratio = 0.5;
        cfg.jobs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn emit_and_border_parse() {
        assert_eq!(
            "mask,diagram".parse::<Emit>().unwrap().names(),
            vec!["mask", "diagram"]
        );
        assert!("mask,bogus".parse::<Emit>().is_err());
        assert_eq!("auto".parse::<BorderBand>().unwrap(), BorderBand::Auto);
        assert_eq!("3".parse::<BorderBand>().unwrap(), BorderBand::Fixed(3));
        assert!("-1".parse::<BorderBand>().is_err());
    }

    #[test]
    fn constant_image_falls_back() {
        let rgb = RgbImage::filled(20, 12, [90, 120, 30]).unwrap();
        let out = process_image(&rgb, &PipelineConfig::default());
        assert_eq!(out.record.status, Status::FallbackOriginal);
        assert_eq!(out.image, rgb);
        assert_eq!(out.record.threshold, None);
        assert!(out.mask.is_none());
    }

    #[test]
    fn worked_fixture_in_rgb() {
        let g = [[9u8, 9, 9], [1, 9, 2], [9, 9, 9]];
        let rgb = RgbImage::from_fn(3, 3, |r, c| [g[r][c]; 3]).unwrap();
        let cfg = PipelineConfig {
            smooth_radius: 0,
            border_band: BorderBand::Fixed(0),
            ..PipelineConfig::default()
        };
        let out = process_image(&rgb, &cfg);
        assert_eq!(out.record.status, Status::Processed);
        assert_eq!(out.record.threshold, Some(0.0));
        assert_eq!(
            out.record.bbox,
            Some(BoundingBox {
                top: 1,
                bottom: 2,
                left: 2,
                right: 3
            })
        );
        assert_eq!(out.image.pixels(), &[[2, 2, 2]]);
    }

    #[test]
    fn manifest_keys_sorted() {
        let m = Manifest::new(&PipelineConfig::default(), vec![], 1.0);
        let s = m.to_json_string();
        let config = s.find("\"config\"").unwrap();
        let records = s.find("\"records\"").unwrap();
        let totals = s.find("\"totals\"").unwrap();
        assert!(config < records && records < totals);
    }
}
