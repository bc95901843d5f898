//! sRGB / linear RGB / CIELAB conversions (D65, 2° observer) and ΔE*ab.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSpaceTag {
    SrgbNonlinear,
    LinearRgb,
    Cielab,
}

impl ColorSpaceTag {
    pub fn is_rgb(self) -> bool {
        matches!(self, ColorSpaceTag::SrgbNonlinear | ColorSpaceTag::LinearRgb)
    }

    pub(crate) fn require(self, expected: ColorSpaceTag) -> Result<()> {
        if self == expected {
            Ok(())
        } else {
            Err(Error::TagMismatch {
                expected,
                actual: self,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LabPixel<T> {
    pub l: T,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> LabPixel<T> {
    pub fn new(l: T, a: T, b: T) -> Self {
        Self { l, a, b }
    }

    pub fn to_array(self) -> [T; 3] {
        [self.l, self.a, self.b]
    }

    pub fn from_array(v: [T; 3]) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

// IEC 61966-2-1 linear RGB -> XYZ, rows X, Y, Z.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.412_456_4, 0.357_576_1, 0.180_437_5],
    [0.212_672_9, 0.715_152_2, 0.072_175_0],
    [0.019_333_9, 0.119_192_0, 0.950_304_1],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.240_454_2, -1.537_138_5, -0.498_531_4],
    [-0.969_266_0, 1.876_010_8, 0.041_556_0],
    [0.055_643_4, -0.204_025_9, 1.057_225_2],
];

/// Reference white: the row sums of `RGB_TO_XYZ`, so sRGB white lands on L=100, a=b=0.
const WHITE: [f64; 3] = [
    0.412_456_4 + 0.357_576_1 + 0.180_437_5,
    0.212_672_9 + 0.715_152_2 + 0.072_175_0,
    0.019_333_9 + 0.119_192_0 + 0.950_304_1,
];

const LAB_DELTA: f64 = 6.0 / 29.0;

#[inline]
fn srgb_decode<T: Scalar>(v: T) -> T {
    if v <= T::lit(0.04045) {
        v / T::lit(12.92)
    } else {
        ((v + T::lit(0.055)) / T::lit(1.055)).powf(T::lit(2.4))
    }
}

#[inline]
fn srgb_encode<T: Scalar>(v: T) -> T {
    if v <= T::lit(0.003_130_8) {
        v * T::lit(12.92)
    } else {
        T::lit(1.055) * v.powf(T::lit(1.0 / 2.4)) - T::lit(0.055)
    }
}

/// sRGB EOTF. Input is clamped to [0,1] first.
#[inline]
pub fn srgb_to_linear<T: Scalar>(v: T) -> T {
    srgb_decode(v.clamp01())
}

/// Inverse sRGB EOTF. Input is clamped to [0,1] first.
#[inline]
pub fn linear_to_srgb<T: Scalar>(v: T) -> T {
    srgb_encode(v.clamp01())
}

/// Transfer extended past 1.0 along the power segment; used where
/// intermediate gains may push linear values above white.
#[inline]
pub(crate) fn linear_to_srgb_extended<T: Scalar>(v: T) -> T {
    srgb_encode(v.max(T::zero()))
}

#[inline]
pub(crate) fn srgb_to_linear_extended<T: Scalar>(v: T) -> T {
    srgb_decode(v.max(T::zero()))
}

#[inline]
fn lab_f<T: Scalar>(t: T) -> T {
    let d = T::lit(LAB_DELTA);
    if t > d * d * d {
        t.cbrt()
    } else {
        t / (T::lit(3.0) * d * d) + T::lit(4.0 / 29.0)
    }
}

#[inline]
fn lab_f_inv<T: Scalar>(f: T) -> T {
    let d = T::lit(LAB_DELTA);
    if f > d {
        f * f * f
    } else {
        T::lit(3.0) * d * d * (f - T::lit(4.0 / 29.0))
    }
}

#[inline]
fn mat3<T: Scalar>(m: &[[f64; 3]; 3], v: [T; 3]) -> [T; 3] {
    let row = |r: &[f64; 3]| T::lit(r[0]) * v[0] + T::lit(r[1]) * v[1] + T::lit(r[2]) * v[2];
    [row(&m[0]), row(&m[1]), row(&m[2])]
}

#[inline]
pub fn linear_rgb_to_lab<T: Scalar>(rgb: [T; 3]) -> LabPixel<T> {
    let xyz = mat3(&RGB_TO_XYZ, rgb);
    let fx = lab_f(xyz[0] / T::lit(WHITE[0]));
    let fy = lab_f(xyz[1] / T::lit(WHITE[1]));
    let fz = lab_f(xyz[2] / T::lit(WHITE[2]));
    LabPixel::new(
        T::lit(116.0) * fy - T::lit(16.0),
        T::lit(500.0) * (fx - fy),
        T::lit(200.0) * (fy - fz),
    )
}

#[inline]
pub fn lab_to_linear_rgb<T: Scalar>(lab: LabPixel<T>) -> [T; 3] {
    let fy = (lab.l + T::lit(16.0)) / T::lit(116.0);
    let fx = fy + lab.a / T::lit(500.0);
    let fz = fy - lab.b / T::lit(200.0);
    let xyz = [
        lab_f_inv(fx) * T::lit(WHITE[0]),
        lab_f_inv(fy) * T::lit(WHITE[1]),
        lab_f_inv(fz) * T::lit(WHITE[2]),
    ];
    mat3(&XYZ_TO_RGB, xyz)
}

#[inline]
pub fn srgb_pixel_to_lab<T: Scalar>(rgb: [T; 3]) -> LabPixel<T> {
    linear_rgb_to_lab(rgb.map(srgb_to_linear))
}

#[inline]
pub fn lab_to_srgb_pixel<T: Scalar>(lab: LabPixel<T>) -> [T; 3] {
    lab_to_linear_rgb(lab).map(linear_to_srgb)
}

/// Euclidean distance in CIELAB (ΔE*ab, CIE76).
#[inline]
pub fn delta_e_pixel<T: Scalar>(p: LabPixel<T>, q: LabPixel<T>) -> T {
    let dl = p.l - q.l;
    let da = p.a - q.a;
    let db = p.b - q.b;
    (dl * dl + da * da + db * db).sqrt()
}

const PAR_MIN_PIXELS: usize = 4096;

fn map_pixels<T: Scalar>(
    img: &ImageBuffer<T>,
    tag: ColorSpaceTag,
    f: impl Fn([T; 3]) -> [T; 3] + Sync,
) -> ImageBuffer<T> {
    let mut out = img.data().to_vec();
    out.par_chunks_mut(3)
        .with_min_len(PAR_MIN_PIXELS)
        .for_each(|px| {
            let v = f([px[0], px[1], px[2]]);
            px.copy_from_slice(&v);
        });
    ImageBuffer::from_raw(img.height(), img.width(), out, tag)
        .expect("pixel map preserves buffer shape")
}

fn count_out_of_range<T: Scalar>(data: &[T]) -> usize {
    data.iter()
        .filter(|v| **v < T::zero() || **v > T::one())
        .count()
}

/// Converts an sRGB image to CIELAB, also returning how many channel
/// values had to be clamped into [0,1].
pub fn rgb_to_lab_counted<T: Scalar>(img: &ImageBuffer<T>) -> Result<(ImageBuffer<T>, usize)> {
    img.tag().require(ColorSpaceTag::SrgbNonlinear)?;
    let clamped = count_out_of_range(img.data());
    let lab = map_pixels(img, ColorSpaceTag::Cielab, |p| srgb_pixel_to_lab(p).to_array());
    Ok((lab, clamped))
}

pub fn rgb_to_lab<T: Scalar>(img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    let (lab, clamped) = rgb_to_lab_counted(img)?;
    if clamped > 0 {
        log::debug!("rgb_to_lab: clamped {clamped} out-of-range channel values");
    }
    Ok(lab)
}

pub fn lab_to_rgb<T: Scalar>(img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    img.tag().require(ColorSpaceTag::Cielab)?;
    Ok(map_pixels(img, ColorSpaceTag::SrgbNonlinear, |p| {
        lab_to_srgb_pixel(LabPixel::from_array(p))
    }))
}

pub fn srgb_to_linear_image<T: Scalar>(img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    img.tag().require(ColorSpaceTag::SrgbNonlinear)?;
    Ok(map_pixels(img, ColorSpaceTag::LinearRgb, |p| p.map(srgb_to_linear)))
}

pub fn linear_to_srgb_image<T: Scalar>(img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    img.tag().require(ColorSpaceTag::LinearRgb)?;
    Ok(map_pixels(img, ColorSpaceTag::SrgbNonlinear, |p| p.map(linear_to_srgb)))
}
