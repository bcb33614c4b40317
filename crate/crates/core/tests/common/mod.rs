#![allow(dead_code)]

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use topocrop::imagecore::{encode_rgb_jpeg, encode_rgb_png};
use topocrop::{GrayImage, RgbImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(rng: &mut impl Rng, width: usize, height: usize, levels: u8) -> GrayImage {
    let pixels = (0..width * height)
        .map(|_| rng.random_range(0..=levels))
        .collect();
    GrayImage::new(width, height, pixels).unwrap()
}

/// Square blobs `(top, left, side)` of `blob` on a `background` field.
pub fn blob_gray(
    width: usize,
    height: usize,
    background: u8,
    blob: u8,
    blobs: &[(usize, usize, usize)],
) -> GrayImage {
    let mut px = vec![background; width * height];
    for &(top, left, side) in blobs {
        for r in top..top + side {
            px[r * width + left..r * width + left + side].fill(blob);
        }
    }
    GrayImage::new(width, height, px).unwrap()
}

pub fn in_blobs(r: usize, c: usize, blobs: &[(usize, usize, usize)]) -> bool {
    blobs
        .iter()
        .any(|&(t, l, s)| (t..t + s).contains(&r) && (l..l + s).contains(&c))
}

pub fn gray_to_rgb(g: &GrayImage) -> RgbImage {
    RgbImage::new(
        g.width(),
        g.height(),
        g.pixels().iter().map(|&v| [v; 3]).collect(),
    )
    .unwrap()
}

/// A skin-like RGB frame with one dark, noisy, roughly elliptical lesion.
pub fn lesion_rgb(seed: u64, width: usize, height: usize) -> RgbImage {
    let mut rng = rng(seed);
    let cy = height as f64 * rng.random_range(0.4..0.6);
    let cx = width as f64 * rng.random_range(0.4..0.6);
    let ry = height as f64 * rng.random_range(0.12..0.25);
    let rx = width as f64 * rng.random_range(0.12..0.25);
    RgbImage::from_fn(width, height, |r, c| {
        let dy = (r as f64 - cy) / ry;
        let dx = (c as f64 - cx) / rx;
        let noise: i16 = rng.random_range(-6..=6);
        let base: [i16; 3] = if dx * dx + dy * dy <= 1.0 {
            [95, 60, 45]
        } else {
            [225, 180, 160]
        };
        base.map(|v| (v + noise).clamp(0, 255) as u8)
    })
    .unwrap()
}

/// Writes `count` lesion images (alternating PNG and JPEG) into `dir`.
pub fn write_lesion_dir(dir: &Path, count: usize, seed: u64) -> Vec<String> {
    fs::create_dir_all(dir).unwrap();
    (0..count)
        .map(|i| {
            let img = lesion_rgb(seed + i as u64, 48 + (i % 3) * 8, 40 + (i % 4) * 6);
            let (name, bytes) = if i % 2 == 0 {
                (format!("img_{i:03}.png"), encode_rgb_png(&img).unwrap())
            } else {
                (format!("img_{i:03}.jpg"), encode_rgb_jpeg(&img).unwrap())
            };
            fs::write(dir.join(&name), bytes).unwrap();
            name
        })
        .collect()
}

pub fn dir_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}
