use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{ImageBuffer, WeightMask};
use crate::reduce::chunked_sum;
use crate::scalar::Scalar;

/// Loss components of one step or epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_hc: f64,
    pub l_glc: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(l_hc: f64, l_glc: f64, lambda: f64) -> Self {
        Self {
            l_hc,
            l_glc,
            total: l_hc + lambda * l_glc,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.l_hc.is_finite() && self.l_glc.is_finite() && self.total.is_finite()
    }
}

/// Human-region weighted MSE, Σ w²·(p−t)² / (3·Σ w²), and its gradient
/// with respect to every channel value of `pred`.
pub fn loss_hc<T: Scalar>(
    pred: &ImageBuffer<T>,
    target: &ImageBuffer<T>,
    mask: &WeightMask<T>,
) -> Result<(f64, Vec<f64>)> {
    pred.require_same_dims(target)?;
    mask.require_dims(pred.dims())?;
    let n = pred.pixel_count();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let (p, t) = (pred.data(), target.data());
    let w2 = |i: usize| {
        let w = mask.weight(i).as_f64();
        w * w
    };
    let norm = if mask.is_uniform() {
        3.0 * n as f64
    } else {
        3.0 * chunked_sum(n, |r| [r.map(w2).sum()])[0]
    };
    let scale = |i: usize| if mask.is_uniform() { 1.0 } else { w2(i) };
    let [sum] = chunked_sum(n, |r| {
        let mut acc = 0.0;
        for i in r {
            let s = scale(i);
            for c in 0..3 {
                let d = p[3 * i + c].as_f64() - t[3 * i + c].as_f64();
                acc += s * d * d;
            }
        }
        [acc]
    });
    let grad = (0..3 * n)
        .map(|k| 2.0 * scale(k / 3) * (p[k].as_f64() - t[k].as_f64()) / norm)
        .collect();
    Ok((sum / norm, grad))
}

/// Mean squared difference between two pixel-aligned overlap renders,
/// Σ (a−b)² / (3·n), with gradients for `a` and `b`.
pub fn loss_glc<T: Scalar>(a: &ImageBuffer<T>, b: &ImageBuffer<T>) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    a.require_same_dims(b)?;
    loss_glc_slices(a.data(), b.data())
}

pub(crate) fn loss_glc_slices<T: Scalar>(a: &[T], b: &[T]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Ok((0.0, Vec::new(), Vec::new()));
    }
    let norm = a.len() as f64;
    let n = a.len() / 3;
    let [sum] = chunked_sum(n, |r| {
        [r.flat_map(|i| 3 * i..3 * i + 3)
            .map(|k| {
                let d = a[k].as_f64() - b[k].as_f64();
                d * d
            })
            .sum()]
    });
    let ga: Vec<f64> = a.iter().zip(b).map(|(x, y)| 2.0 * (x.as_f64() - y.as_f64()) / norm).collect();
    let gb = ga.iter().map(|g| -g).collect();
    Ok((sum / norm, ga, gb))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::BinaryMask;
    use crate::ColorSpaceTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(h: usize, w: usize, seed: u64) -> ImageBuffer<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageBuffer::from_fn(h, w, ColorSpaceTag::SrgbNonlinear, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    #[test]
    fn equal_inputs_give_zero() {
        let a = random(4, 5, 1);
        let (l, g) = loss_hc(&a, &a, &WeightMask::uniform(4, 5, 1.0).unwrap()).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
        let (l, ga, _) = loss_glc(&a, &a).unwrap();
        assert_eq!(l, 0.0);
        assert!(ga.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_is_plain_mse() {
        let a = random(6, 7, 2);
        let b = random(6, 7, 3);
        let mse: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data().len() as f64;
        let (l, _) = loss_hc(&a, &b, &WeightMask::uniform(6, 7, 0.3).unwrap()).unwrap();
        assert!((l - mse).abs() < 1e-12);
    }

    #[test]
    fn weighted_matches_brute_force() {
        let a = random(6, 7, 4);
        let b = random(6, 7, 5);
        let mask = BinaryMask::from_fn(6, 7, |y, x| (x * y) % 3 == 0);
        let w = mask.weights(5.0, 1.0).unwrap();
        let (l, g) = loss_hc(&a, &b, &w).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..42 {
            let wi: f64 = if mask.data()[i] { 25.0 } else { 1.0 };
            den += 3.0 * wi;
            for c in 0..3 {
                num += wi * (a.data()[3 * i + c] - b.data()[3 * i + c]).powi(2);
            }
        }
        assert!((l - num / den).abs() < 1e-6);
        // finite differences on a few values
        for k in [0usize, 17, 100] {
            let h = 1e-6;
            let mut ap = a.clone();
            ap.data_mut()[k] += h;
            let mut am = a.clone();
            am.data_mut()[k] -= h;
            let num = (loss_hc(&ap, &b, &w).unwrap().0 - loss_hc(&am, &b, &w).unwrap().0) / (2.0 * h);
            assert!((num - g[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_offset_glc() {
        let a = ImageBuffer::filled(3, 4, [0.5f64; 3], ColorSpaceTag::SrgbNonlinear);
        let b = ImageBuffer::filled(3, 4, [0.4f64; 3], ColorSpaceTag::SrgbNonlinear);
        let (l, ga, gb) = loss_glc(&a, &b).unwrap();
        assert!((l - 0.01).abs() < 1e-12);
        assert!(ga.iter().zip(&gb).all(|(x, y)| *x == -*y && *x > 0.0));
        assert!(loss_glc(&a, &random(3, 5, 0)).is_err());
    }

    #[test]
    fn breakdown_total() {
        let b = LossBreakdown::new(0.5, 0.25, 2.0);
        assert_eq!(b.total, 1.0);
    }
}
