use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BinaryMask, ImageBuffer};
use crate::scalar::Scalar;

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub y: usize,
    pub x: usize,
    pub h: usize,
    pub w: usize,
}

impl Rect {
    pub fn area(&self) -> usize {
        self.h * self.w
    }

    pub fn intersect(&self, o: &Rect) -> Option<Rect> {
        let y0 = self.y.max(o.y);
        let x0 = self.x.max(o.x);
        let y1 = (self.y + self.h).min(o.y + o.h);
        let x1 = (self.x + self.w).min(o.x + o.w);
        (y1 > y0 && x1 > x0).then(|| Rect {
            y: y0,
            x: x0,
            h: y1 - y0,
            w: x1 - x0,
        })
    }

    pub fn within(&self, height: usize, width: usize) -> bool {
        self.y + self.h <= height && self.x + self.w <= width
    }

    pub fn crop<T: Scalar>(&self, img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
        img.crop(self.y, self.x, self.h, self.w)
    }

    pub fn crop_mask(&self, mask: &BinaryMask) -> Result<BinaryMask> {
        mask.crop(self.y, self.x, self.h, self.w)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropConfig {
    /// Crop side as a fraction of the image's short side, sampled uniformly.
    pub min_fraction: f64,
    pub max_fraction: f64,
    /// Required overlap as a fraction of the smaller crop's area.
    pub min_overlap: f64,
    /// Absolute lower bound on the crop side; the image short side must be
    /// at least twice this.
    pub min_crop_px: usize,
    pub max_attempts: usize,
}

impl Default for CropConfig {
    fn default() -> Self {
        Self {
            min_fraction: 0.6,
            max_fraction: 0.9,
            min_overlap: 0.25,
            min_crop_px: 16,
            max_attempts: 256,
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = 0.0 < self.min_fraction
            && self.min_fraction <= self.max_fraction
            && self.max_fraction <= 1.0
            && (0.0..=1.0).contains(&self.min_overlap)
            && self.min_crop_px >= 1
            && self.max_attempts >= 1;
        if !ok {
            return Err(Error::Config(format!("invalid crop config {self:?}")));
        }
        Ok(())
    }
}

/// Two overlapping square crops and pixel-aligned index maps into each
/// crop covering their intersection in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CropPair {
    pub first: Rect,
    pub second: Rect,
    pub overlap: Rect,
    pub first_indices: Vec<usize>,
    pub second_indices: Vec<usize>,
}

impl CropPair {
    /// Builds the pair; None when the rectangles do not intersect.
    pub fn new(first: Rect, second: Rect) -> Option<Self> {
        let overlap = first.intersect(&second)?;
        let map = |r: &Rect| {
            let mut v = Vec::with_capacity(overlap.area());
            for y in overlap.y..overlap.y + overlap.h {
                for x in overlap.x..overlap.x + overlap.w {
                    v.push((y - r.y) * r.w + (x - r.x));
                }
            }
            v
        };
        Some(Self {
            first_indices: map(&first),
            second_indices: map(&second),
            first,
            second,
            overlap,
        })
    }

    pub fn overlap_fraction(&self) -> f64 {
        self.overlap.area() as f64 / self.first.area().min(self.second.area()) as f64
    }

    pub fn extract<T: Scalar>(&self, img: &ImageBuffer<T>) -> Result<(ImageBuffer<T>, ImageBuffer<T>)> {
        Ok((self.first.crop(img)?, self.second.crop(img)?))
    }
}

fn crop_side(short: usize, frac: f64, cfg: &CropConfig) -> usize {
    ((short as f64 * frac).round() as usize).clamp(cfg.min_crop_px, short)
}

/// Samples two square crops with sides uniform in
/// [min_fraction, max_fraction]·short side, positions uniform, rejecting
/// pairs whose overlap is below `min_overlap`. After `max_attempts`
/// rejections the second crop is centered on the first.
pub fn sample_crop_rects<R: Rng + ?Sized>(height: usize, width: usize, rng: &mut R, cfg: &CropConfig) -> Result<CropPair> {
    cfg.validate()?;
    let short = height.min(width);
    if short < 2 * cfg.min_crop_px {
        return Err(Error::ImageTooSmall {
            height,
            width,
            required: 2 * cfg.min_crop_px,
        });
    }
    let rect = |rng: &mut R| {
        let s = crop_side(short, rng.random_range(cfg.min_fraction..=cfg.max_fraction), cfg);
        Rect {
            y: rng.random_range(0..=height - s),
            x: rng.random_range(0..=width - s),
            h: s,
            w: s,
        }
    };
    let mut last = None;
    for _ in 0..cfg.max_attempts {
        let a = rect(rng);
        let b = rect(rng);
        if let Some(p) = CropPair::new(a, b) {
            if p.overlap_fraction() >= cfg.min_overlap {
                return Ok(p);
            }
        }
        last = Some((a, b));
    }
    let (a, mut b) = last.expect("max_attempts >= 1");
    let center = |r: &Rect| (r.y + r.h / 2, r.x + r.w / 2);
    let (cy, cx) = center(&a);
    b.y = cy.saturating_sub(b.h / 2).min(height - b.h);
    b.x = cx.saturating_sub(b.w / 2).min(width - b.w);
    CropPair::new(a, b)
        .filter(|p| p.overlap_fraction() >= cfg.min_overlap)
        .ok_or_else(|| Error::InvalidArgument("could not place overlapping crops".into()))
}

/// Crop pair plus the two cropped images.
pub fn sample_crop_pair<T: Scalar, R: Rng + ?Sized>(
    img: &ImageBuffer<T>,
    rng: &mut R,
    cfg: &CropConfig,
) -> Result<(ImageBuffer<T>, ImageBuffer<T>, CropPair)> {
    let pair = sample_crop_rects(img.height(), img.width(), rng, cfg)?;
    let (a, b) = pair.extract(img)?;
    Ok((a, b, pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorSpaceTag;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn deterministic_per_seed() {
        let cfg = CropConfig::default();
        let a = sample_crop_rects(360, 540, &mut ChaCha8Rng::seed_from_u64(1), &cfg).unwrap();
        let b = sample_crop_rects(360, 540, &mut ChaCha8Rng::seed_from_u64(1), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn identical_rects_overlap_fully() {
        let r = Rect { y: 3, x: 5, h: 10, w: 10 };
        let p = CropPair::new(r, r).unwrap();
        assert_eq!(p.overlap, r);
        assert_eq!(p.first_indices, (0..100).collect::<Vec<_>>());
        assert_eq!(p.first_indices, p.second_indices);
    }

    #[test]
    fn thousand_samples_satisfy_constraints() {
        let cfg = CropConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let p = sample_crop_rects(360, 540, &mut rng, &cfg).unwrap();
            for r in [p.first, p.second] {
                assert!(r.within(360, 540));
                assert_eq!(r.h, r.w);
                assert!((216..=324).contains(&r.h));
            }
            assert!(p.overlap_fraction() >= 0.25);
        }
    }

    #[test]
    fn overlaps_of_unjittered_crops_agree() {
        let img = ImageBuffer::from_fn(60, 80, ColorSpaceTag::SrgbNonlinear, |y, x| {
            [x as f32 / 80.0, y as f32 / 60.0, ((x * y) % 7) as f32 / 7.0]
        });
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let (a, b, p) = sample_crop_pair(&img, &mut rng, &CropConfig::default()).unwrap();
            for (&i, &j) in p.first_indices.iter().zip(&p.second_indices) {
                assert_eq!(a.data()[3 * i..3 * i + 3], b.data()[3 * j..3 * j + 3]);
            }
        }
    }

    #[test]
    fn too_small_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            sample_crop_rects(20, 100, &mut rng, &CropConfig::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }
}
