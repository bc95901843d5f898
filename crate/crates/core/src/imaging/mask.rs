use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary human-region mask, `true` on the subject.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

/// 8-bit threshold separating subject from background.
pub const MASK_THRESHOLD: u8 = 128;

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::LengthMismatch(data.len(), height * width));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    /// Thresholds 8-bit samples at [`MASK_THRESHOLD`].
    pub fn from_u8(height: usize, width: usize, samples: &[u8]) -> Result<Self> {
        Self::new(
            height,
            width,
            samples.iter().map(|&v| v >= MASK_THRESHOLD).collect(),
        )
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn foreground_count(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }

    pub fn require_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::dims(self.dims(), dims));
        }
        Ok(())
    }

    pub fn crop(&self, y0: usize, x0: usize, h: usize, w: usize) -> Result<Self> {
        if y0 + h > self.height || x0 + w > self.width {
            return Err(Error::InvalidArgument(format!(
                "crop {h}x{w}+{y0}+{x0} exceeds mask {}x{}",
                self.height, self.width
            )));
        }
        Ok(Self::from_fn(h, w, |y, x| self.get(y0 + y, x0 + x)))
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| if v { 255 } else { 0 }).collect()
    }

    /// Per-pixel weights: `human_weight` on the subject, `alpha` elsewhere.
    pub fn weights<T: Scalar>(&self, human_weight: T, alpha: T) -> Result<WeightMask<T>> {
        WeightMask::from_mask(self, human_weight, alpha)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Weights<T> {
    Uniform(T),
    PerPixel(Vec<T>),
}

/// The per-pixel weighting matrix W_I.
///
/// A mask with one weight everywhere is stored as uniform, and every
/// weighted measure then takes its unweighted code path.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMask<T> {
    height: usize,
    width: usize,
    weights: Weights<T>,
}

impl<T: Scalar> WeightMask<T> {
    pub fn uniform(height: usize, width: usize, weight: T) -> Result<Self> {
        check_weight(weight)?;
        Ok(Self {
            height,
            width,
            weights: Weights::Uniform(weight),
        })
    }

    pub fn from_mask(mask: &BinaryMask, human_weight: T, alpha: T) -> Result<Self> {
        check_weight(human_weight)?;
        check_weight(alpha)?;
        let weights = if human_weight == alpha {
            Weights::Uniform(alpha)
        } else {
            Weights::PerPixel(
                mask.data()
                    .iter()
                    .map(|&h| if h { human_weight } else { alpha })
                    .collect(),
            )
        };
        Ok(Self {
            height: mask.height(),
            width: mask.width(),
            weights,
        })
    }

    pub fn from_weights(height: usize, width: usize, weights: Vec<T>) -> Result<Self> {
        if weights.len() != height * width {
            return Err(Error::LengthMismatch(weights.len(), height * width));
        }
        for &w in &weights {
            check_weight(w)?;
        }
        Ok(Self {
            height,
            width,
            weights: Weights::PerPixel(weights),
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, Weights::Uniform(_))
    }

    /// Weight of pixel `i` in row-major order.
    #[inline]
    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Weights::Uniform(w) => *w,
            Weights::PerPixel(v) => v[i],
        }
    }

    pub fn as_slice(&self) -> Option<&[T]> {
        match &self.weights {
            Weights::Uniform(_) => None,
            Weights::PerPixel(v) => Some(v),
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        (0..self.height * self.width).map(|i| self.weight(i)).collect()
    }

    pub fn require_dims(&self, dims: (usize, usize)) -> Result<()> {
        if self.dims() != dims {
            return Err(Error::dims(self.dims(), dims));
        }
        Ok(())
    }
}

fn check_weight<T: Scalar>(w: T) -> Result<()> {
    if !w.is_finite() || w <= T::zero() {
        return Err(Error::InvalidArgument(format!(
            "weights must be finite and > 0, got {w}"
        )));
    }
    Ok(())
}
