use rayon::prelude::*;

use super::{BinaryMask, ImageBuffer};
use crate::scalar::Scalar;

/// Output dimensions when scaling the short side to `target`.
pub fn short_side_dims(height: usize, width: usize, target: usize) -> (usize, usize) {
    let target = target.max(1);
    let short = height.min(width).max(1);
    let scale = |long: usize| ((long as f64 * target as f64 / short as f64).round() as usize).max(1);
    if height <= width {
        (target, scale(width))
    } else {
        (scale(height), target)
    }
}

/// Source coordinate and interpolation taps for one output sample (half-pixel centers).
#[inline]
fn taps(dst: usize, dst_len: usize, src_len: usize) -> (usize, usize, f64) {
    let scale = src_len as f64 / dst_len as f64;
    let s = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (src_len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, s - i0 as f64)
}

pub fn resize_bilinear<T: Scalar>(img: &ImageBuffer<T>, height: usize, width: usize) -> ImageBuffer<T> {
    if img.dims() == (height, width) {
        return img.clone();
    }
    let (sh, sw) = img.dims();
    let cols: Vec<(usize, usize, T)> = (0..width)
        .map(|x| {
            let (a, b, f) = taps(x, width, sw);
            (a, b, T::lit(f))
        })
        .collect();
    let src = img.data();
    let mut out = vec![T::zero(); height * width * 3];
    out.par_chunks_mut(width * 3).enumerate().for_each(|(y, row)| {
        let (y0, y1, fy) = taps(y, height, sh);
        let fy = T::lit(fy);
        let r0 = &src[y0 * sw * 3..(y0 + 1) * sw * 3];
        let r1 = &src[y1 * sw * 3..(y1 + 1) * sw * 3];
        for (x, &(x0, x1, fx)) in cols.iter().enumerate() {
            for c in 0..3 {
                let p00 = r0[x0 * 3 + c];
                let p01 = r0[x1 * 3 + c];
                let p10 = r1[x0 * 3 + c];
                let p11 = r1[x1 * 3 + c];
                let top = p00 + (p01 - p00) * fx;
                let bot = p10 + (p11 - p10) * fx;
                row[x * 3 + c] = top + (bot - top) * fy;
            }
        }
    });
    ImageBuffer::from_raw(height, width, out, img.tag()).expect("resize output shape")
}

/// Bilinear resize so the short side equals `target`; aspect ratio kept.
pub fn resize_short_side<T: Scalar>(img: &ImageBuffer<T>, target: usize) -> ImageBuffer<T> {
    let (h, w) = short_side_dims(img.height(), img.width(), target);
    resize_bilinear(img, h, w)
}

pub fn resize_mask_nearest(mask: &BinaryMask, height: usize, width: usize) -> BinaryMask {
    if mask.dims() == (height, width) {
        return mask.clone();
    }
    let (sh, sw) = mask.dims();
    let near = |d: usize, dl: usize, sl: usize| (((d as f64 + 0.5) * sl as f64 / dl as f64) as usize).min(sl - 1);
    BinaryMask::from_fn(height, width, |y, x| {
        mask.get(near(y, height, sh), near(x, width, sw))
    })
}

pub fn resize_mask_short_side(mask: &BinaryMask, target: usize) -> BinaryMask {
    let (h, w) = short_side_dims(mask.height(), mask.width(), target);
    resize_mask_nearest(mask, h, w)
}
