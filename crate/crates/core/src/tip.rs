//! Lifetime-gap threshold selection and binary object masks.

use std::fmt;

use thiserror::Error;

use crate::imagecore::GrayImage;
use crate::persistence::{sweep, Connectivity, PersistenceDiagram, SweepEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum TipError {
    #[error("persistence diagram has no finite pairs")]
    EmptyDiagram,
    #[error("no component selected; mask is empty")]
    EmptyMask,
}

/// A lifetime cutoff. Always an integer or half-integer, so it is stored
/// in half units to keep comparisons exact.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Threshold {
    halves: u32,
}

impl Threshold {
    pub const ZERO: Threshold = Threshold { halves: 0 };

    pub fn from_halves(halves: u32) -> Self {
        Self { halves }
    }

    pub fn from_lifetime(lifetime: u32) -> Self {
        Self {
            halves: 2 * lifetime,
        }
    }

    pub fn halves(self) -> u32 {
        self.halves
    }

    pub fn value(self) -> f64 {
        self.halves as f64 / 2.0
    }

    /// Strictly-above test used for selection.
    pub fn is_exceeded_by(self, lifetime: u32) -> bool {
        2 * lifetime > self.halves
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.halves.is_multiple_of(2) {
            write!(f, "{}", self.halves / 2)
        } else {
            write!(f, "{}.5", self.halves / 2)
        }
    }
}

/// Threshold at the largest gap between consecutive lifetimes in
/// decreasing order: the midpoint of the two lifetimes around it. Ties go
/// to the earliest (most persistent) gap. Fewer than two lifetimes, or no
/// positive gap, gives zero.
pub fn threshold_from_lifetimes(lifetimes: &[u32]) -> Threshold {
    let mut sorted = lifetimes.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut best: Option<(u32, usize)> = None;
    for (i, pair) in sorted.windows(2).enumerate() {
        let gap = pair[0] - pair[1];
        if gap > 0 && best.is_none_or(|(g, _)| gap > g) {
            best = Some((gap, i));
        }
    }
    match best {
        Some((_, i)) => Threshold::from_halves(sorted[i] + sorted[i + 1]),
        None => Threshold::ZERO,
    }
}

/// Threshold for the finite part of `diagram`. Essential classes are ignored.
pub fn select_threshold(diagram: &PersistenceDiagram) -> Result<Threshold, TipError> {
    let lifetimes = diagram.lifetimes();
    if lifetimes.is_empty() {
        return Err(TipError::EmptyDiagram);
    }
    Ok(threshold_from_lifetimes(&lifetimes))
}

/// Per-pixel object indicator, row-major. `true` marks object pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Option<Self> {
        (width > 0 && height > 0 && width.checked_mul(height) == Some(bits.len())).then_some(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                bits.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.bits[row * self.width + col] = on;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_all_zero(&self) -> bool {
        !self.bits.contains(&true)
    }

    /// 0 for background, 255 for object.
    pub fn to_gray(&self) -> GrayImage {
        let pixels = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        GrayImage::new(self.width, self.height, pixels).expect("mask dimensions are valid")
    }
}

/// A mask together with the number of components that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskResult {
    pub mask: BinaryMask,
    /// Number of components marked.
    pub selected: usize,
    /// Per pixel, the death level of the first selected component that marked it.
    pub marked_at: Vec<Option<u8>>,
}

/// Repeats the persistence sweep while tracking each component's pixels.
/// A component whose lifetime at death is strictly above `threshold` has
/// all its current pixels marked. Essential classes are never marked.
pub fn generate_mask(
    img: &GrayImage,
    conn: Connectivity,
    threshold: Threshold,
) -> Result<MaskResult, TipError> {
    let values = img.pixels();
    let mut members: Vec<Vec<u32>> = vec![Vec::new(); img.len()];
    let mut marked_at: Vec<Option<u8>> = vec![None; img.len()];
    let mut selected = 0usize;

    sweep(img, conn, |ev| match ev {
        SweepEvent::Born { pixel } => members[pixel].push(pixel as u32),
        SweepEvent::Joined { pixel, root } => members[root].push(pixel as u32),
        SweepEvent::Died {
            survivor,
            dying,
            level,
        } => {
            let lifetime = (level - values[dying]) as u32;
            let mut moved = std::mem::take(&mut members[dying]);
            if threshold.is_exceeded_by(lifetime) {
                selected += 1;
                for &i in &moved {
                    marked_at[i as usize].get_or_insert(level);
                }
            }
            let target = &mut members[survivor];
            if moved.len() > target.len() {
                std::mem::swap(&mut moved, target);
            }
            target.extend_from_slice(&moved);
        }
    });

    if selected == 0 {
        return Err(TipError::EmptyMask);
    }
    Ok(MaskResult {
        mask: BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: marked_at.iter().map(Option::is_some).collect(),
        },
        selected,
        marked_at,
    })
}
