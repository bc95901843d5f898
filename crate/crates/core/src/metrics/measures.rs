use crate::color::{delta_e_pixel, srgb_pixel_to_lab};
use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, ImageBuffer, WeightMask};
use crate::reduce::chunked_sum;
use crate::scalar::Scalar;

use super::HcWeights;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

fn check_pair<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>, mask: &WeightMask<T>) -> Result<()> {
    for img in [pred, target] {
        if !img.tag().is_rgb() {
            return Err(Error::TagMismatch {
                expected: crate::ColorSpaceTag::SrgbNonlinear,
                actual: img.tag(),
            });
        }
    }
    pred.require_same_dims(target)?;
    mask.require_dims(pred.dims())
}

#[inline]
fn lab64<T: Scalar>(data: &[T], i: usize) -> crate::LabPixel<f64> {
    srgb_pixel_to_lab([data[3 * i].as_f64(), data[3 * i + 1].as_f64(), data[3 * i + 2].as_f64()])
}

#[inline]
fn sq_err<T: Scalar>(p: &[T], t: &[T], i: usize) -> f64 {
    (0..3)
        .map(|c| {
            let d = p[3 * i + c].as_f64() - t[3 * i + c].as_f64();
            d * d
        })
        .sum()
}

/// MSE_w = Σ w²·Δ² / (3·Σ w²); plain MSE when the mask is uniform.
pub fn mse_weighted<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>, mask: &WeightMask<T>) -> Result<f64> {
    check_pair(pred, target, mask)?;
    let (p, t) = (pred.data(), target.data());
    let n = pred.pixel_count();
    if n == 0 {
        return Ok(0.0);
    }
    match mask.as_slice() {
        None => {
            let [s] = chunked_sum(n, |r| [r.map(|i| sq_err(p, t, i)).sum()]);
            Ok(s / (3 * n) as f64)
        }
        Some(w) => {
            let [num, den] = chunked_sum(n, |r| {
                let mut acc = [0.0; 2];
                for i in r {
                    let w2 = w[i].as_f64() * w[i].as_f64();
                    acc[0] += w2 * sq_err(p, t, i);
                    acc[1] += w2;
                }
                acc
            });
            Ok(num / (3.0 * den))
        }
    }
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

/// Weighted PSNR with peak 1.
pub fn psnr<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>, mask: &WeightMask<T>) -> Result<f64> {
    mse_weighted(pred, target, mask).map(psnr_from_mse)
}

pub fn psnr_unweighted<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>) -> Result<f64> {
    psnr(pred, target, &WeightMask::uniform(pred.height(), pred.width(), T::one())?)
}

/// Weighted mean of the per-pixel ΔE*ab, Σ w·d / Σ w.
pub fn delta_e<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>, mask: &WeightMask<T>) -> Result<f64> {
    check_pair(pred, target, mask)?;
    let (p, t) = (pred.data(), target.data());
    let n = pred.pixel_count();
    if n == 0 {
        return Ok(0.0);
    }
    let d = |i: usize| delta_e_pixel(lab64(p, i), lab64(t, i));
    match mask.as_slice() {
        None => {
            let [s] = chunked_sum(n, |r| [r.map(d).sum()]);
            Ok(s / n as f64)
        }
        Some(w) => {
            let [num, den] = chunked_sum(n, |r| {
                let mut acc = [0.0; 2];
                for i in r {
                    let wi = w[i].as_f64();
                    acc[0] += wi * d(i);
                    acc[1] += wi;
                }
                acc
            });
            Ok(num / den)
        }
    }
}

pub fn delta_e_unweighted<T: Scalar>(pred: &ImageBuffer<T>, target: &ImageBuffer<T>) -> Result<f64> {
    delta_e(pred, target, &WeightMask::uniform(pred.height(), pred.width(), T::one())?)
}

/// The four per-photo measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairScores {
    pub psnr: f64,
    pub delta_e: f64,
    pub psnr_hc: f64,
    pub delta_e_hc: f64,
}

/// Basic measures use a uniform mask; the HC measures weight `mask`
/// foreground by `hc.human_weight` and background by `hc.alpha`.
/// Without a mask the HC measures equal the basic ones.
pub fn score_pair<T: Scalar>(
    pred: &ImageBuffer<T>,
    target: &ImageBuffer<T>,
    mask: Option<&BinaryMask>,
    hc: HcWeights,
) -> Result<PairScores> {
    let (h, w) = pred.dims();
    let uniform = WeightMask::uniform(h, w, T::one())?;
    let weighted = match mask {
        Some(m) => {
            m.require_dims((h, w))?;
            m.weights(T::lit(hc.human_weight), T::lit(hc.alpha))?
        }
        None => uniform.clone(),
    };
    Ok(PairScores {
        psnr: psnr(pred, target, &uniform)?,
        delta_e: delta_e(pred, target, &uniform)?,
        psnr_hc: psnr(pred, target, &weighted)?,
        delta_e_hc: delta_e(pred, target, &weighted)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorSpaceTag;

    fn solid(v: f32) -> ImageBuffer<f32> {
        ImageBuffer::filled(4, 6, [v; 3], ColorSpaceTag::SrgbNonlinear)
    }

    #[test]
    fn identical_images_hit_cap() {
        let a = solid(0.3);
        assert_eq!(psnr_unweighted(&a, &a).unwrap(), PSNR_CAP_DB);
        assert_eq!(delta_e_unweighted(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn half_offset_gives_closed_form() {
        let p = solid(0.75);
        let t = solid(0.25);
        let want = 10.0 * (1.0f64 / 0.25).log10();
        assert!((psnr_unweighted(&p, &t).unwrap() - want).abs() < 1e-9);
        assert!((want - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn white_vs_black_is_100() {
        assert!((delta_e_unweighted(&solid(1.0), &solid(0.0)).unwrap() - 100.0).abs() < 1e-4);
    }

    #[test]
    fn background_error_scores_higher_under_hc_weights() {
        let t = solid(0.5);
        let mut p = t.clone();
        for y in 0..4 {
            for x in 3..6 {
                p.set_pixel(y, x, [0.6, 0.5, 0.4]);
            }
        }
        let mask = BinaryMask::from_fn(4, 6, |_, x| x < 3);
        let w = mask.weights(5.0f32, 1.0).unwrap();
        let plain = psnr_unweighted(&p, &t).unwrap();
        let hc = psnr(&p, &t, &w).unwrap();
        assert!(hc > plain);
        // brute force: 12 background pixels with squared error 0.02 each
        let num: f64 = 12.0 * 0.02 * 1.0;
        let den = 3.0 * (12.0 * 25.0 + 12.0 * 1.0);
        let want = -10.0 * (num / den).log10();
        assert!((hc - want).abs() < 1e-5);
    }

    #[test]
    fn uniform_weight_value_is_irrelevant() {
        let p = solid(0.2);
        let t = solid(0.7);
        let a = psnr(&p, &t, &WeightMask::uniform(4, 6, 0.5).unwrap()).unwrap();
        let b = psnr_unweighted(&p, &t).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let a = solid(0.2);
        let b = ImageBuffer::filled(4, 5, [0.2; 3], ColorSpaceTag::SrgbNonlinear);
        assert!(psnr_unweighted(&a, &b).is_err());
        let lab = a.clone().with_tag(ColorSpaceTag::Cielab);
        assert!(delta_e_unweighted(&lab, &a).is_err());
        assert!(psnr(&a, &a, &WeightMask::uniform(3, 3, 1.0).unwrap()).is_err());
    }

    #[test]
    fn psnr_monotone_in_noise() {
        let t = solid(0.5);
        let mut last = f64::INFINITY;
        for k in 1..10 {
            let amp = k as f32 * 0.02;
            let p = ImageBuffer::from_fn(4, 6, ColorSpaceTag::SrgbNonlinear, |y, x| {
                let s = if (x + y) % 2 == 0 { amp } else { -amp };
                [0.5 + s; 3]
            });
            let v = psnr_unweighted(&p, &t).unwrap();
            assert!(v < last);
            last = v;
        }
    }
}
