//! Bounding box of a mask's object pixels and the matching RGB crop.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::RgbImage;
use crate::tip::BinaryMask;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CropError {
    #[error("mask has no object pixels")]
    EmptyMask,
    #[error("box {bbox:?} exceeds {width}x{height} image")]
    BoxOutOfBounds {
        bbox: BoundingBox,
        width: usize,
        height: usize,
    },
}

/// Half-open rectangle: rows `top..bottom`, columns `left..right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundingBox {
    pub top: usize,
    pub bottom: usize,
    pub left: usize,
    pub right: usize,
}

impl BoundingBox {
    pub fn full(width: usize, height: usize) -> Self {
        Self {
            top: 0,
            bottom: height,
            left: 0,
            right: width,
        }
    }

    pub fn width(&self) -> usize {
        self.right - self.left
    }

    pub fn height(&self) -> usize {
        self.bottom - self.top
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (self.top..self.bottom).contains(&row) && (self.left..self.right).contains(&col)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.top < self.bottom
            && self.left < self.right
            && self.bottom <= height
            && self.right <= width
    }

    /// Grows the box by `margin` on every side, clamped to the image.
    pub fn expand(self, margin: usize, width: usize, height: usize) -> Self {
        Self {
            top: self.top.saturating_sub(margin),
            bottom: (self.bottom + margin).min(height),
            left: self.left.saturating_sub(margin),
            right: (self.right + margin).min(width),
        }
    }
}

/// Smallest box containing every set bit of `mask`.
pub fn bounding_box(mask: &BinaryMask) -> Result<BoundingBox, CropError> {
    let (w, h) = (mask.width(), mask.height());
    let bits = mask.bits();
    let row: Vec<bool> = (0..h)
        .map(|r| bits[r * w..(r + 1) * w].contains(&true))
        .collect();
    let col: Vec<bool> = (0..w).map(|c| (0..h).any(|r| bits[r * w + c])).collect();

    let top = row.iter().position(|&b| b).ok_or(CropError::EmptyMask)?;
    let bottom = row.iter().rposition(|&b| b).expect("row has a set bit") + 1;
    let left = col.iter().position(|&b| b).expect("column has a set bit");
    let right = col.iter().rposition(|&b| b).expect("column has a set bit") + 1;
    Ok(BoundingBox {
        top,
        bottom,
        left,
        right,
    })
}

/// Copies the pixels inside `bbox`.
pub fn crop(img: &RgbImage, bbox: BoundingBox) -> Result<RgbImage, CropError> {
    if !bbox.fits(img.width(), img.height()) {
        return Err(CropError::BoxOutOfBounds {
            bbox,
            width: img.width(),
            height: img.height(),
        });
    }
    let pixels = (bbox.top..bbox.bottom)
        .flat_map(|r| {
            let start = r * img.width();
            img.pixels()[start + bbox.left..start + bbox.right]
                .iter()
                .copied()
        })
        .collect();
    Ok(RgbImage::new(bbox.width(), bbox.height(), pixels).expect("box is nonempty"))
}

/// Same cut applied to a mask.
pub fn crop_mask(mask: &BinaryMask, bbox: BoundingBox) -> Result<BinaryMask, CropError> {
    if !bbox.fits(mask.width(), mask.height()) {
        return Err(CropError::BoxOutOfBounds {
            bbox,
            width: mask.width(),
            height: mask.height(),
        });
    }
    Ok(BinaryMask::from_fn(bbox.width(), bbox.height(), |r, c| {
        mask.get(bbox.top + r, bbox.left + c)
    }))
}
