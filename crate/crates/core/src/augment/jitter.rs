use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{linear_to_srgb_extended, srgb_to_linear, srgb_to_linear_extended};
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;
use crate::scalar::Scalar;
use crate::ColorSpaceTag;

/// Gain per unit of temperature or tint.
pub const WHITE_BALANCE_GAIN: f64 = 0.2;
/// sRGB level where the highlights ramp starts.
pub const HIGHLIGHT_START: f64 = 0.7;

/// Six tonal adjustments; all zero is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TonalJitter {
    pub exposure: f64,
    pub temperature: f64,
    pub tint: f64,
    pub highlights: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl TonalJitter {
    pub fn is_identity(&self) -> bool {
        *self == Self::default()
    }

    fn get(&self, step: JitterStep) -> f64 {
        match step {
            JitterStep::Exposure => self.exposure,
            JitterStep::Temperature => self.temperature,
            JitterStep::Tint => self.tint,
            JitterStep::Highlights => self.highlights,
            JitterStep::Contrast => self.contrast,
            JitterStep::Saturation => self.saturation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JitterStep {
    Exposure,
    Temperature,
    Tint,
    Highlights,
    Contrast,
    Saturation,
}

impl JitterStep {
    fn is_linear(self) -> bool {
        matches!(self, JitterStep::Exposure | JitterStep::Temperature | JitterStep::Tint)
    }
}

pub const DEFAULT_ORDER: [JitterStep; 6] = [
    JitterStep::Exposure,
    JitterStep::Temperature,
    JitterStep::Tint,
    JitterStep::Highlights,
    JitterStep::Contrast,
    JitterStep::Saturation,
];

/// Symmetric sampling ranges for each attribute.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JitterRanges {
    pub exposure: f64,
    pub temperature: f64,
    pub tint: f64,
    pub highlights: f64,
    pub contrast: f64,
    pub saturation: f64,
}

impl Default for JitterRanges {
    fn default() -> Self {
        Self {
            exposure: 1.0,
            temperature: 0.3,
            tint: 0.3,
            highlights: 0.3,
            contrast: 0.3,
            saturation: 0.3,
        }
    }
}

impl JitterRanges {
    pub fn zero() -> Self {
        Self {
            exposure: 0.0,
            temperature: 0.0,
            tint: 0.0,
            highlights: 0.0,
            contrast: 0.0,
            saturation: 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            exposure: self.exposure * k,
            temperature: self.temperature * k,
            tint: self.tint * k,
            highlights: self.highlights * k,
            contrast: self.contrast * k,
            saturation: self.saturation * k,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = [self.temperature, self.tint, self.highlights, self.contrast, self.saturation];
        if !self.exposure.is_finite() || self.exposure < 0.0 || unit.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!(
                "jitter ranges must be >= 0 (exposure) or within [0,1] (others): {self:?}"
            )));
        }
        Ok(())
    }

    /// Each attribute uniform in ±range.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TonalJitter {
        let mut u = |r: f64| if r > 0.0 { rng.random_range(-r..=r) } else { 0.0 };
        TonalJitter {
            exposure: u(self.exposure),
            temperature: u(self.temperature),
            tint: u(self.tint),
            highlights: u(self.highlights),
            contrast: u(self.contrast),
            saturation: u(self.saturation),
        }
    }
}

pub fn validate_order(order: &[JitterStep]) -> Result<()> {
    let mut seen = order.to_vec();
    seen.sort_by_key(|s| DEFAULT_ORDER.iter().position(|d| d == s));
    if seen != DEFAULT_ORDER {
        return Err(Error::Config(format!(
            "jitter order must list each of the six steps once, got {order:?}"
        )));
    }
    Ok(())
}

/// Exposure, temperature and tint gains applied to a linear-RGB pixel.
pub fn linear_gains(lin: [f64; 3], j: &TonalJitter) -> [f64; 3] {
    let e = 2f64.powf(j.exposure);
    [
        lin[0] * e * (1.0 + WHITE_BALANCE_GAIN * j.temperature),
        lin[1] * e * (1.0 + WHITE_BALANCE_GAIN * j.tint),
        lin[2] * e * (1.0 - WHITE_BALANCE_GAIN * j.temperature),
    ]
}

fn smoothstep(v: f64) -> f64 {
    let t = ((v - HIGHLIGHT_START) / (1.0 - HIGHLIGHT_START)).clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn highlights(v: f64, h: f64) -> f64 {
    let s = smoothstep(v);
    if h >= 0.0 {
        v + h * s * (1.0 - v)
    } else {
        v + h * s * (v - HIGHLIGHT_START)
    }
}

fn step_pixel(step: JitterStep, px: &mut [f64; 3], amount: f64) {
    match step {
        JitterStep::Exposure => {
            let g = 2f64.powf(amount);
            px.iter_mut().for_each(|v| *v *= g);
        }
        JitterStep::Temperature => {
            px[0] *= 1.0 + WHITE_BALANCE_GAIN * amount;
            px[2] *= 1.0 - WHITE_BALANCE_GAIN * amount;
        }
        JitterStep::Tint => px[1] *= 1.0 + WHITE_BALANCE_GAIN * amount,
        JitterStep::Highlights => px.iter_mut().for_each(|v| *v = highlights(*v, amount)),
        JitterStep::Contrast => px.iter_mut().for_each(|v| *v = (*v - 0.5) * (1.0 + amount) + 0.5),
        JitterStep::Saturation => {
            let y = 0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2];
            px.iter_mut().for_each(|v| *v = y + (1.0 + amount) * (*v - y));
        }
    }
}

/// Applies `j` to one sRGB pixel in the given step order; result clamped.
pub fn jitter_pixel(rgb: [f64; 3], j: &TonalJitter, order: &[JitterStep]) -> [f64; 3] {
    let mut px = rgb.map(|v| v.clamp(0.0, 1.0));
    let mut linear = false;
    for &step in order {
        let amount = j.get(step);
        if amount == 0.0 {
            continue;
        }
        if step.is_linear() != linear {
            px = if linear {
                px.map(linear_to_srgb_extended)
            } else if px.iter().all(|v| *v <= 1.0) {
                px.map(srgb_to_linear)
            } else {
                px.map(srgb_to_linear_extended)
            };
            linear = !linear;
        }
        step_pixel(step, &mut px, amount);
    }
    if linear {
        px = px.map(linear_to_srgb_extended);
    }
    px.map(|v| v.clamp(0.0, 1.0))
}

/// Tonal jitter of an sRGB image; pixels are processed independently.
pub fn apply_jitter_ordered<T: Scalar>(
    img: &ImageBuffer<T>,
    j: &TonalJitter,
    order: &[JitterStep],
) -> Result<ImageBuffer<T>> {
    img.tag().require(ColorSpaceTag::SrgbNonlinear)?;
    let mut out = img.clone();
    if j.is_identity() {
        return Ok(out.clamp01());
    }
    out.data_mut().par_chunks_mut(3 * 1024).for_each(|chunk| {
        for px in chunk.chunks_exact_mut(3) {
            let v = jitter_pixel([px[0].as_f64(), px[1].as_f64(), px[2].as_f64()], j, order);
            for c in 0..3 {
                px[c] = T::lit(v[c]);
            }
        }
    });
    Ok(out)
}

pub fn apply_jitter<T: Scalar>(img: &ImageBuffer<T>, j: &TonalJitter) -> Result<ImageBuffer<T>> {
    apply_jitter_ordered(img, j, &DEFAULT_ORDER)
}
