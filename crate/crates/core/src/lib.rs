//! Topological object isolation for image datasets.
//!
//! The chain for one image is: grayscale, optional inversion, box
//! smoothing, border flattening, 0-dimensional sublevel persistence,
//! lifetime-gap threshold, binary mask of the persistent components,
//! bounding box, and finally a crop of the original RGB image.
//!
//! ```
//! use topocrop::imagecore::GrayImage;
//! use topocrop::persistence::{compute_persistence, Connectivity};
//! use topocrop::tip::{generate_mask, select_threshold};
//!
//! let img = GrayImage::from_rows(&[[9, 9, 9], [1, 9, 2], [9, 9, 9]]).unwrap();
//! let diagram = compute_persistence(&img, Connectivity::Four);
//! let threshold = select_threshold(&diagram).unwrap();
//! let mask = generate_mask(&img, Connectivity::Four, threshold).unwrap().mask;
//! assert!(mask.get(1, 2));
//! ```

pub mod cli;
pub mod crop;
pub mod imagecore;
pub mod persistence;
pub mod pipeline;
pub mod tip;

pub use crop::{bounding_box, crop, BoundingBox, CropError};
pub use imagecore::{GrayImage, ImageError, RgbImage};
pub use persistence::{
    brute_force_persistence, compute_persistence, Connectivity, Death, PersistenceDiagram,
    PersistencePair,
};
pub use pipeline::{
    process_image, run_batch, split_dataset, Manifest, PipelineConfig, PipelineError,
};
pub use tip::{generate_mask, select_threshold, BinaryMask, Threshold, TipError};
