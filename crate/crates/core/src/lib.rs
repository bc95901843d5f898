//! Image-adaptive 3D LUT color retouching with human-region weighting and
//! group-level consistency.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the working precision to `f32`.

pub mod augment;
pub mod color;
pub mod error;
pub mod imaging;
pub mod lut;
pub mod metrics;
pub mod model;
mod reduce;
pub mod scalar;
pub mod synthdata;
pub mod training;

pub use color::{ColorSpaceTag, LabPixel};
pub use error::{Error, Result};
pub use imaging::{BinaryMask, Expert, ImageBuffer, WeightMask};
pub use lut::{Lut3D, LutBlend};
pub use model::{Checkpoint, Model};
pub use scalar::Scalar;
pub use training::TrainConfig;

pub type Image = ImageBuffer<f32>;
pub type Weights = WeightMask<f32>;
pub type Lut = Lut3D<f32>;
pub type Blend = LutBlend<f32>;
pub type RetouchModel = Model<f32>;
