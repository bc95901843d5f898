use crate::color::ColorSpaceTag;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major H×W×3 image in a declared color space.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
    tag: ColorSpaceTag,
}

impl<T: Scalar> ImageBuffer<T> {
    pub fn from_raw(height: usize, width: usize, data: Vec<T>, tag: ColorSpaceTag) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::LengthMismatch(data.len(), height * width * 3));
        }
        Ok(Self {
            height,
            width,
            data,
            tag,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [T; 3], tag: ColorSpaceTag) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for _ in 0..height * width {
            data.extend_from_slice(&rgb);
        }
        Self {
            height,
            width,
            data,
            tag,
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        tag: ColorSpaceTag,
        mut f: impl FnMut(usize, usize) -> [T; 3],
    ) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
            tag,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn tag(&self) -> ColorSpaceTag {
        self.tag
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [T; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = [T; 3]> + '_ {
        self.data.chunks_exact(3).map(|c| [c[0], c[1], c[2]])
    }

    pub fn with_tag(mut self, tag: ColorSpaceTag) -> Self {
        self.tag = tag;
        self
    }

    pub fn clamp01(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp01();
        }
        self
    }

    pub fn require_same_dims(&self, other: &ImageBuffer<T>) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::dims(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// Copies the window `[y0, y0+h) × [x0, x0+w)`.
    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Self> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::InvalidArgument(format!(
                "crop {h}x{w}+{y0}+{x0} exceeds image {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(h * w * 3);
        for y in y0..y0 + h {
            let row = (y * self.width + x0) * 3;
            data.extend_from_slice(&self.data[row..row + w * 3]);
        }
        Ok(Self {
            height: h,
            width: w,
            data,
            tag: self.tag,
        })
    }

    pub fn cast<U: Scalar>(&self) -> ImageBuffer<U> {
        ImageBuffer {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::from_f64_lossy(v.as_f64())).collect(),
            tag: self.tag,
        }
    }

    pub fn max_abs_diff(&self, other: &ImageBuffer<T>) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.as_f64() - b.as_f64()).abs())
            .fold(0.0, f64::max)
    }
}
