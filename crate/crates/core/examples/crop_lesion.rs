// Full single-image chain: mask, bounding box, crop.
//
//     cargo run --example crop_lesion [-- path/to/image.jpg [out_dir]]
//
// Without arguments a synthetic lesion is generated.

use std::path::PathBuf;

use topocrop::imagecore::{decode_image, encode_gray_png, encode_rgb_jpeg};
use topocrop::pipeline::{process_image, PipelineConfig};
use topocrop::RgbImage;

fn synthetic_lesion() -> RgbImage {
    RgbImage::from_fn(120, 90, |r, c| {
        let (dy, dx) = ((r as f64 - 40.0) / 18.0, (c as f64 - 70.0) / 25.0);
        let jitter = ((r * 31 + c * 17) % 9) as u8;
        if dx * dx + dy * dy <= 1.0 {
            [90 + jitter, 55 + jitter, 40]
        } else {
            [220 - jitter, 185 - jitter, 165]
        }
    })
    .expect("fixed dimensions")
}

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let (img, out_dir) = match args.next() {
        Some(path) => (
            decode_image(&std::fs::read(&path)?)?,
            args.next().map(PathBuf::from),
        ),
        None => (synthetic_lesion(), None),
    };

    let out = process_image(&img, &PipelineConfig::default());
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(&dir)?;
        std::fs::write(dir.join("cropped.jpg"), encode_rgb_jpeg(&out.image)?)?;
        if let Some(mask) = &out.mask {
            std::fs::write(dir.join("mask.png"), encode_gray_png(&mask.to_gray())?)?;
        }
    }
    Ok(format!(
        "{}x{} -> {}x{}\n{}\n",
        img.width(),
        img.height(),
        out.image.width(),
        out.image.height(),
        out.record.summary()
    ))
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
