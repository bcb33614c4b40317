//! Raster types, codec glue, grayscale conversion and the two image
//! modifications applied before filtration: box smoothing and border
//! flattening.

use std::io::Cursor;

use image::codecs::jpeg::JpegEncoder;
use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use thiserror::Error;

/// JPEG quality used for cropped RGB output.
pub const JPEG_QUALITY: u8 = 90;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("invalid dimensions {width}x{height} for {len} pixels")]
    Dimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("decode error: {0}")]
    Decode(String),
    #[error("encode error: {0}")]
    Encode(String),
}

/// An 8-bit RGB raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self, ImageError> {
        Self::new(width, height, vec![rgb; width.saturating_mul(height)])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [u8; 3],
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width.saturating_mul(height));
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.width + col]
    }

    fn raw_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

/// An 8-bit single-channel raster stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image from nested rows. All rows must have the same length.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self, ImageError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let pixels: Vec<u8> = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        if rows.iter().any(|r| r.as_ref().len() != width) {
            return Err(ImageError::Dimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn min_value(&self) -> u8 {
        self.pixels.iter().copied().min().unwrap_or(0)
    }

    pub fn max_value(&self) -> u8 {
        self.pixels.iter().copied().max().unwrap_or(0)
    }

    /// `255 - v` per pixel; turns bright objects into sublevel minima.
    pub fn inverted(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| 255 - v).collect(),
        }
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 || width.checked_mul(height) != Some(len) {
        return Err(ImageError::Dimensions { width, height, len });
    }
    Ok(())
}

/// Decodes a PNG or JPEG byte stream into RGB.
pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, ImageError> {
    let format = image::guess_format(bytes).map_err(|e| ImageError::Decode(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(ImageError::Decode(format!("unsupported format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| ImageError::Decode(e.to_string()))?
        .into_rgb8();
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let pixels = decoded.pixels().map(|p| p.0).collect();
    RgbImage::new(w, h, pixels).map_err(|e| ImageError::Decode(e.to_string()))
}

pub fn encode_rgb_png(img: &RgbImage) -> Result<Vec<u8>, ImageError> {
    encode_png(
        &img.raw_bytes(),
        img.width,
        img.height,
        ExtendedColorType::Rgb8,
    )
}

pub fn encode_gray_png(img: &GrayImage) -> Result<Vec<u8>, ImageError> {
    encode_png(&img.pixels, img.width, img.height, ExtendedColorType::L8)
}

pub fn encode_rgb_jpeg(img: &RgbImage) -> Result<Vec<u8>, ImageError> {
    let mut out = Vec::new();
    JpegEncoder::new_with_quality(&mut out, JPEG_QUALITY)
        .write_image(
            &img.raw_bytes(),
            img.width as u32,
            img.height as u32,
            ExtendedColorType::Rgb8,
        )
        .map_err(|e| ImageError::Encode(e.to_string()))?;
    Ok(out)
}

fn encode_png(
    raw: &[u8],
    width: usize,
    height: usize,
    color: ExtendedColorType,
) -> Result<Vec<u8>, ImageError> {
    let mut out = Cursor::new(Vec::new());
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(raw, width as u32, height as u32, color)
        .map_err(|e| ImageError::Encode(e.to_string()))?;
    Ok(out.into_inner())
}

/// BT.601 luma, rounded half up. Integer arithmetic keeps the rounding exact.
pub fn rgb_to_gray(img: &RgbImage) -> GrayImage {
    let pixels = img
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let weighted = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
            ((weighted + 500) / 1000).min(255) as u8
        })
        .collect();
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

/// Box-filter mean over a `(2r+1)²` window with replicated borders.
pub fn smooth(img: &GrayImage, radius: usize) -> GrayImage {
    if radius == 0 {
        return img.clone();
    }
    let (w, h) = (img.width, img.height);
    let r = radius as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    // horizontal pass: per-pixel row sums of the clamped window
    let mut rows = vec![0u32; w * h];
    for y in 0..h {
        let line = &img.pixels[y * w..(y + 1) * w];
        for x in 0..w {
            let xi = x as isize;
            rows[y * w + x] = (xi - r..=xi + r).map(|k| line[clamp(k, w)] as u32).sum();
        }
    }

    let area = ((2 * radius + 1) * (2 * radius + 1)) as u64;
    let mut pixels = vec![0u8; w * h];
    for y in 0..h {
        let yi = y as isize;
        for x in 0..w {
            let sum: u64 = (yi - r..=yi + r)
                .map(|k| rows[clamp(k, h) * w + x] as u64)
                .sum();
            pixels[y * w + x] = ((2 * sum + area) / (2 * area)) as u8;
        }
    }
    GrayImage {
        width: w,
        height: h,
        pixels,
    }
}

/// Default border band: `max(1, round(min(w, h) / 20))`.
pub fn auto_border_band(width: usize, height: usize) -> usize {
    ((width.min(height) + 10) / 20).max(1)
}

/// Whether `(row, col)` lies within `band` pixels of the image border.
pub fn in_border_band(row: usize, col: usize, width: usize, height: usize, band: usize) -> bool {
    let dist = row.min(col).min(height - 1 - row).min(width - 1 - col);
    dist < band
}

/// Sets every pixel closer than `band` to the border to the global minimum.
pub fn border_modify(img: &GrayImage, band: usize) -> GrayImage {
    if band == 0 {
        return img.clone();
    }
    let m = img.min_value();
    let (w, h) = (img.width, img.height);
    let mut out = img.clone();
    for r in 0..h {
        for c in 0..w {
            if in_border_band(r, c, w, h, band) {
                out.pixels[r * w + c] = m;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rgb(r: u8, g: u8, b: u8) -> GrayImage {
        rgb_to_gray(&RgbImage::new(1, 1, vec![[r, g, b]]).unwrap())
    }

    #[test]
    fn luma_examples() {
        assert_eq!(rgb(0, 0, 0).pixels(), &[0]);
        assert_eq!(rgb(255, 255, 255).pixels(), &[255]);
        assert_eq!(rgb(255, 0, 0).pixels(), &[76]);
    }

    #[test]
    fn luma_of_neutral_is_identity() {
        for v in 0..=255u8 {
            assert_eq!(rgb(v, v, v).pixels(), &[v]);
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(GrayImage::new(0, 3, vec![]).is_err());
        assert!(GrayImage::new(2, 2, vec![1, 2, 3]).is_err());
        assert!(RgbImage::new(1, 2, vec![[0; 3]]).is_err());
        assert!(GrayImage::from_rows(&[vec![1u8, 2], vec![3]]).is_err());
    }

    #[test]
    fn smooth_center_spike() {
        let img = GrayImage::from_rows(&[[0, 0, 0], [0, 9, 0], [0, 0, 0]]).unwrap();
        assert_eq!(smooth(&img, 1).pixels(), &[1; 9]);
    }

    #[test]
    fn smooth_constant_and_identity() {
        let img = GrayImage::filled(5, 5, 42).unwrap();
        assert_eq!(smooth(&img, 1), img);
        let ramp = GrayImage::new(4, 2, (0..8).collect()).unwrap();
        assert_eq!(smooth(&ramp, 0), ramp);
    }

    #[test]
    fn smooth_rounds_half_up() {
        // 2x1 image [0, 1], radius 1: pixel 0 sees 3/9 -> 0, pixel 1 sees 6/9 -> 1
        let img = GrayImage::new(2, 1, vec![0, 1]).unwrap();
        assert_eq!(smooth(&img, 1).pixels(), &[0, 1]);
        // 1x2 [0, 3], radius 1 on a single row: windows hold {0,0,3} and {0,3,3}
        // vertically replicated; means 1 and 2
        let img = GrayImage::new(2, 1, vec![0, 3]).unwrap();
        assert_eq!(smooth(&img, 1).pixels(), &[1, 2]);
        // column image, windows {0,0,1} and {0,1,1}: means 1/3 and 2/3
        let img = GrayImage::new(1, 2, vec![0, 1]).unwrap();
        assert_eq!(smooth(&img, 1).pixels(), &[0, 1]);
    }

    #[test]
    fn border_examples() {
        let img = GrayImage::from_rows(&[
            [10, 10, 10, 10],
            [10, 3, 10, 10],
            [10, 10, 10, 10],
            [10, 10, 10, 10],
        ])
        .unwrap();
        assert_eq!(border_modify(&img, 0), img);
        let out = border_modify(&img, 1);
        for r in 0..4 {
            for c in 0..4 {
                let expected = match (r, c) {
                    (1, 2) | (2, 1) | (2, 2) => 10,
                    _ => 3,
                };
                assert_eq!(out.get(r, c), expected, "({r},{c})");
            }
        }

        let small = GrayImage::from_rows(&[[5, 6, 7], [8, 9, 4], [7, 7, 7]]).unwrap();
        assert_eq!(
            border_modify(&small, 2),
            GrayImage::filled(3, 3, 4).unwrap()
        );
    }

    #[test]
    fn auto_band_values() {
        assert_eq!(auto_border_band(3, 3), 1);
        assert_eq!(auto_border_band(32, 32), 2);
        assert_eq!(auto_border_band(64, 64), 3);
        assert_eq!(auto_border_band(10, 400), 1);
        assert_eq!(auto_border_band(600, 450), 23);
    }

    #[test]
    fn decode_black_png() {
        let img = RgbImage::new(1, 1, vec![[0, 0, 0]]).unwrap();
        let bytes = encode_rgb_png(&img).unwrap();
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn png_round_trip_2x3() {
        let img = RgbImage::from_fn(2, 3, |r, c| [r as u8 * 40, c as u8 * 90, 7]).unwrap();
        let bytes = encode_rgb_png(&img).unwrap();
        assert_eq!(decode_image(&bytes).unwrap(), img);
    }

    #[test]
    fn truncated_jpeg_fails() {
        let img = RgbImage::from_fn(16, 16, |r, c| [r as u8 * 8, c as u8 * 8, 100]).unwrap();
        let bytes = encode_rgb_jpeg(&img).unwrap();
        assert!(decode_image(&bytes).is_ok());
        let cut = &bytes[..bytes.len() / 2];
        assert!(matches!(decode_image(cut), Err(ImageError::Decode(_))));
        assert!(matches!(
            decode_image(b"not an image"),
            Err(ImageError::Decode(_))
        ));
    }

    #[test]
    fn jpeg_preserves_dimensions() {
        let img = RgbImage::filled(7, 5, [120, 80, 60]).unwrap();
        let back = decode_image(&encode_rgb_jpeg(&img).unwrap()).unwrap();
        assert_eq!((back.width(), back.height()), (7, 5));
    }
}
