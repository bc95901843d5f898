//! Tonal jitter, geometric augmentation and the overlapping crop-pair
//! sampler used for the group-consistency loss.

mod crop;
mod jitter;

pub use crop::{sample_crop_pair, sample_crop_rects, CropConfig, CropPair, Rect};
pub use jitter::{
    apply_jitter, apply_jitter_ordered, jitter_pixel, linear_gains, validate_order, JitterRanges, JitterStep,
    TonalJitter, DEFAULT_ORDER, HIGHLIGHT_START, WHITE_BALANCE_GAIN,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, GeometricOp, ImageBuffer};
use crate::scalar::Scalar;

/// The augmentation block of the training config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub ranges: JitterRanges,
    /// Probability that a crop receives tonal jitter.
    pub jitter_prob: f64,
    pub hflip_prob: f64,
    /// Probability of a random 1–3 quarter-turn rotation.
    pub rot90_prob: f64,
    pub crop: CropConfig,
    /// Jitter application order.
    pub order: Vec<JitterStep>,
    /// Mixed into the training seed for augmentation streams.
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            ranges: JitterRanges::default(),
            jitter_prob: 1.0,
            hflip_prob: 0.5,
            rot90_prob: 0.0,
            crop: CropConfig::default(),
            order: DEFAULT_ORDER.to_vec(),
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        self.ranges.validate()?;
        self.crop.validate()?;
        validate_order(&self.order)?;
        for (name, p) in [
            ("jitter_prob", self.jitter_prob),
            ("hflip_prob", self.hflip_prob),
            ("rot90_prob", self.rot90_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must be in [0,1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn sample_jitter<R: Rng + ?Sized>(&self, rng: &mut R) -> TonalJitter {
        // draw unconditionally so the stream does not depend on the outcome
        let j = self.ranges.sample(rng);
        let keep = rng.random::<f64>() < self.jitter_prob;
        if keep {
            j
        } else {
            TonalJitter::default()
        }
    }

    pub fn sample_geometric<R: Rng + ?Sized>(&self, rng: &mut R) -> GeometricOp {
        let flip = rng.random::<f64>() < self.hflip_prob;
        let rotate = rng.random::<f64>() < self.rot90_prob;
        let k: u8 = rng.random_range(1..=3);
        match (flip, rotate) {
            (false, false) => GeometricOp::Identity,
            (true, false) => GeometricOp::HFlip,
            (false, true) => GeometricOp::Rot90(k),
            (true, true) => GeometricOp::HFlipRot90(k),
        }
    }
}

/// Transforms an image and its mask identically.
pub fn geometric_augment<T: Scalar>(
    img: &ImageBuffer<T>,
    mask: &BinaryMask,
    op: GeometricOp,
) -> Result<(ImageBuffer<T>, BinaryMask)> {
    mask.require_dims(img.dims())?;
    Ok((img.transformed(op), mask.transformed(op)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorSpaceTag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn image_and_mask_move_together() {
        let img = ImageBuffer::from_fn(5, 8, ColorSpaceTag::SrgbNonlinear, |y, x| [x as f32, y as f32, 0.0]);
        let mask = BinaryMask::from_fn(5, 8, |y, x| x > y);
        for op in [GeometricOp::HFlip, GeometricOp::Rot90(1), GeometricOp::HFlipRot90(3)] {
            let (i, m) = geometric_augment(&img, &mask, op).unwrap();
            assert_eq!(m.foreground_count(), mask.foreground_count());
            for y in 0..i.height() {
                for x in 0..i.width() {
                    let p = i.pixel(y, x);
                    assert_eq!(m.get(y, x), mask.get(p[1] as usize, p[0] as usize));
                }
            }
        }
        let (twice, _) = geometric_augment(&img.transformed(GeometricOp::HFlip), &mask.transformed(GeometricOp::HFlip), GeometricOp::HFlip).unwrap();
        assert_eq!(twice, img);
    }

    #[test]
    fn config_defaults_validate() {
        let c = AugmentConfig::default();
        c.validate().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ops: Vec<_> = (0..50).map(|_| c.sample_geometric(&mut rng)).collect();
        assert!(ops.contains(&GeometricOp::HFlip) && ops.contains(&GeometricOp::Identity));
        let bad = AugmentConfig {
            hflip_prob: 1.5,
            ..AugmentConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
