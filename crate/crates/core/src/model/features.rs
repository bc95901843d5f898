use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::imaging::ImageBuffer;
use crate::scalar::Scalar;

pub const HIST_BINS: usize = 16;
/// 3 × 16 histogram bins, then 3 means, then 3 standard deviations.
pub const NUM_FEATURES: usize = 3 * HIST_BINS + 6;

/// Global image statistics feeding the weight predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn histogram(&self, channel: usize) -> &[f64] {
        &self.0[channel * HIST_BINS..(channel + 1) * HIST_BINS]
    }

    pub fn mean(&self, channel: usize) -> f64 {
        self.0[3 * HIST_BINS + channel]
    }

    pub fn std(&self, channel: usize) -> f64 {
        self.0[3 * HIST_BINS + 3 + channel]
    }
}

// Fixed-point scale for the moment sums; integer addition makes the
// result independent of pixel order.
const FIXED: f64 = 18446744073709551616.0; // 2^64

#[inline]
fn fixed(v: f64) -> u128 {
    (v * FIXED).round() as u128
}

/// Per-channel 16-bin histograms (normalized), means and population
/// standard deviations of the clamped sRGB values.
pub fn extract_features<T: Scalar>(img: &ImageBuffer<T>) -> Result<FeatureVector> {
    if !img.tag().is_rgb() {
        return Err(crate::Error::TagMismatch {
            expected: crate::ColorSpaceTag::SrgbNonlinear,
            actual: img.tag(),
        });
    }
    let n = img.pixel_count();
    let mut hist = [[0u64; HIST_BINS]; 3];
    let mut s1 = [0u128; 3];
    let mut s2 = [0u128; 3];
    for px in img.data().chunks_exact(3) {
        for c in 0..3 {
            let v = px[c].clamp01().as_f64();
            let bin = ((v * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            hist[c][bin] += 1;
            s1[c] += fixed(v);
            s2[c] += fixed(v * v);
        }
    }
    let mut out = Vec::with_capacity(NUM_FEATURES);
    let nf = n.max(1) as f64;
    for h in &hist {
        out.extend(h.iter().map(|&k| k as f64 / nf));
    }
    let means: Vec<f64> = s1.iter().map(|&s| s as f64 / FIXED / nf).collect();
    out.extend(&means);
    for c in 0..3 {
        let ex2 = s2[c] as f64 / FIXED / nf;
        out.push((ex2 - means[c] * means[c]).max(0.0).sqrt());
    }
    Ok(FeatureVector(out))
}
