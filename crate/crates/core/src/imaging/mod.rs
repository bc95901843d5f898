//! Image buffers, masks, resizing, codecs and the dataset manifest.

mod buffer;
pub mod io;
pub mod manifest;
mod mask;
pub mod resize;

pub use buffer::ImageBuffer;
pub use io::{load_image, load_image_with_depth, load_mask, load_mask_for, save_image, save_mask, BitDepth};
pub use manifest::{load_manifest, Dataset, Expert, Group, PhotoRecord, Split, SplitPolicy};
pub use mask::{BinaryMask, WeightMask, MASK_THRESHOLD};
pub use resize::{resize_bilinear, resize_mask_nearest, resize_mask_short_side, resize_short_side, short_side_dims};

use crate::scalar::Scalar;

/// Geometric operations used for augmentation; each is a pixel permutation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricOp {
    Identity,
    HFlip,
    /// Counter-clockwise rotation by `k` quarter turns.
    Rot90(u8),
    /// Horizontal flip followed by `k` quarter turns.
    HFlipRot90(u8),
}

impl GeometricOp {
    fn quarter_turns(self) -> usize {
        match self {
            GeometricOp::Identity | GeometricOp::HFlip => 0,
            GeometricOp::Rot90(k) | GeometricOp::HFlipRot90(k) => (k % 4) as usize,
        }
    }

    fn flips(self) -> bool {
        matches!(self, GeometricOp::HFlip | GeometricOp::HFlipRot90(_))
    }

    /// Output dimensions for an input of `(h, w)`.
    pub fn output_dims(self, h: usize, w: usize) -> (usize, usize) {
        if self.quarter_turns() % 2 == 1 {
            (w, h)
        } else {
            (h, w)
        }
    }

}

fn hflip_raw<T: Copy>(src: &[T], h: usize, w: usize, stride: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for y in 0..h {
        for x in (0..w).rev() {
            let i = (y * w + x) * stride;
            out.extend_from_slice(&src[i..i + stride]);
        }
    }
    out
}

/// One counter-clockwise quarter turn: output(y, x) = input(x, w-1-y).
fn rot90_raw<T: Copy>(src: &[T], h: usize, w: usize, stride: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(src.len());
    for y in 0..w {
        for x in 0..h {
            let i = (x * w + (w - 1 - y)) * stride;
            out.extend_from_slice(&src[i..i + stride]);
        }
    }
    out
}

pub(crate) fn apply_geometric<T: Copy>(
    src: &[T],
    h: usize,
    w: usize,
    stride: usize,
    op: GeometricOp,
) -> (Vec<T>, usize, usize) {
    let mut data = if op.flips() {
        hflip_raw(src, h, w, stride)
    } else {
        src.to_vec()
    };
    let (mut h, mut w) = (h, w);
    for _ in 0..op.quarter_turns() {
        data = rot90_raw(&data, h, w, stride);
        std::mem::swap(&mut h, &mut w);
    }
    (data, h, w)
}

impl<T: Scalar> ImageBuffer<T> {
    pub fn transformed(&self, op: GeometricOp) -> ImageBuffer<T> {
        let (data, h, w) = apply_geometric(self.data(), self.height(), self.width(), 3, op);
        ImageBuffer::from_raw(h, w, data, self.tag()).expect("permutation keeps size")
    }
}

impl BinaryMask {
    pub fn transformed(&self, op: GeometricOp) -> BinaryMask {
        let (data, h, w) = apply_geometric(self.data(), self.height(), self.width(), 1, op);
        BinaryMask::new(h, w, data).expect("permutation keeps size")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::ColorSpaceTag;

    fn ramp(h: usize, w: usize) -> ImageBuffer<f32> {
        ImageBuffer::from_fn(h, w, ColorSpaceTag::SrgbNonlinear, |y, x| {
            [y as f32, x as f32, (y * w + x) as f32]
        })
    }

    #[test]
    fn hflip_is_involution() {
        let img = ramp(3, 5);
        let once = img.transformed(GeometricOp::HFlip);
        assert_eq!(once.pixel(0, 0), img.pixel(0, 4));
        assert_eq!(once.transformed(GeometricOp::HFlip), img);
    }

    #[test]
    fn rot90_direction_and_cycle() {
        let img = ramp(2, 3);
        let r = img.transformed(GeometricOp::Rot90(1));
        assert_eq!(r.dims(), (3, 2));
        // CCW: top-right corner moves to top-left.
        assert_eq!(r.pixel(0, 0), img.pixel(0, 2));
        assert_eq!(r.pixel(2, 1), img.pixel(1, 0));
        let mut cur = img.clone();
        for _ in 0..4 {
            cur = cur.transformed(GeometricOp::Rot90(1));
        }
        assert_eq!(cur, img);
        assert_eq!(img.transformed(GeometricOp::Rot90(2)), r.transformed(GeometricOp::Rot90(1)));
    }

    #[test]
    fn mask_count_preserved() {
        let m = BinaryMask::from_fn(5, 7, |y, x| (y * 3 + x) % 4 == 0);
        for op in [GeometricOp::HFlip, GeometricOp::Rot90(1), GeometricOp::Rot90(3), GeometricOp::HFlipRot90(1)] {
            let t = m.transformed(op);
            assert_eq!(t.foreground_count(), m.foreground_count());
            assert_eq!(t.dims(), op.output_dims(5, 7));
        }
    }
}
