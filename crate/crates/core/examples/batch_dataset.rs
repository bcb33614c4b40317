// Batch run over a directory: split, process in parallel, write the
// four output directories and the manifest.
//
//     cargo run --example batch_dataset [-- in_dir out_root]
//
// Without arguments a small synthetic dataset is written to a temp dir.

use std::path::PathBuf;

use topocrop::imagecore::encode_rgb_jpeg;
use topocrop::pipeline::{run_batch, Emit, PipelineConfig};
use topocrop::RgbImage;

fn write_synthetic(dir: &std::path::Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for i in 0..12usize {
        let (cy, cx) = (20.0 + (i % 3) as f64 * 6.0, 24.0 + (i % 4) as f64 * 5.0);
        let img = RgbImage::from_fn(64, 48, |r, c| {
            let (dy, dx) = ((r as f64 - cy) / 9.0, (c as f64 - cx) / 12.0);
            if dx * dx + dy * dy <= 1.0 {
                [80, 50, 40]
            } else {
                [215, 180, 160]
            }
        })
        .expect("fixed dimensions");
        let bytes = encode_rgb_jpeg(&img).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(format!("lesion_{i:02}.jpg")), bytes)?;
    }
    Ok(())
}

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let tmp = tempfile::tempdir()?;
    let (in_dir, out_root) = match (args.next(), args.next()) {
        (Some(i), Some(o)) => (PathBuf::from(i), PathBuf::from(o)),
        _ => {
            let in_dir = tmp.path().join("images");
            write_synthetic(&in_dir)?;
            (in_dir, tmp.path().join("out"))
        }
    };

    let cfg = PipelineConfig {
        emit: Emit {
            diagram: true,
            ..Emit::default()
        },
        ..PipelineConfig::default()
    };
    let manifest = run_batch(&in_dir, &out_root, &cfg)?;
    let t = &manifest.totals;
    let mut report = format!(
        "{} images: {} processed, {} fallback, {} errors; {} train / {} test\n",
        t.images, t.processed, t.fallback_original, t.error, t.train, t.test
    );
    for r in manifest.records.iter().take(3) {
        report.push_str(&r.summary());
        report.push('\n');
    }
    Ok(report)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
