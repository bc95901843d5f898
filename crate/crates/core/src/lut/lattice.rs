use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// S×S×S lattice of RGB outputs spanning the unit cube. Entry `(r, g, b)`
/// lives at `r + g·S + b·S²` (red fastest, as in `.cube` files).
#[derive(Debug, Clone, PartialEq)]
pub struct Lut3D<T> {
    size: usize,
    entries: Vec<[T; 3]>,
}

/// Default lattice resolution.
pub const DEFAULT_LUT_SIZE: usize = 33;

fn check_size(size: usize) -> Result<()> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("LUT size must be >= 2, got {size}")));
    }
    Ok(())
}

impl<T: Scalar> Lut3D<T> {
    pub fn identity(size: usize) -> Result<Self> {
        Self::from_fn(size, |rgb| rgb.map(T::lit))
    }

    pub fn zeros(size: usize) -> Result<Self> {
        check_size(size)?;
        Ok(Self {
            size,
            entries: vec![[T::zero(); 3]; size * size * size],
        })
    }

    /// Samples `f` at every lattice node `(i, j, k) / (S - 1)`.
    pub fn from_fn(size: usize, mut f: impl FnMut([f64; 3]) -> [T; 3]) -> Result<Self> {
        check_size(size)?;
        let step = 1.0 / (size - 1) as f64;
        let mut entries = Vec::with_capacity(size * size * size);
        for b in 0..size {
            for g in 0..size {
                for r in 0..size {
                    entries.push(f([r as f64 * step, g as f64 * step, b as f64 * step]));
                }
            }
        }
        Ok(Self { size, entries })
    }

    pub fn from_entries(size: usize, entries: Vec<[T; 3]>) -> Result<Self> {
        check_size(size)?;
        if entries.len() != size * size * size {
            return Err(Error::LengthMismatch(entries.len(), size * size * size));
        }
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("LUT entries must be finite".into()));
        }
        Ok(Self { size, entries })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn index(&self, r: usize, g: usize, b: usize) -> usize {
        r + self.size * (g + self.size * b)
    }

    #[inline]
    pub fn entry(&self, r: usize, g: usize, b: usize) -> [T; 3] {
        self.entries[self.index(r, g, b)]
    }

    pub fn set_entry(&mut self, r: usize, g: usize, b: usize, v: [T; 3]) {
        let i = self.index(r, g, b);
        self.entries[i] = v;
    }

    #[inline]
    pub fn entries(&self) -> &[[T; 3]] {
        &self.entries
    }

    #[inline]
    pub fn entries_mut(&mut self) -> &mut [[T; 3]] {
        &mut self.entries
    }

    /// Adds seeded uniform noise in ±`magnitude` to every entry, clamped to [0,1].
    pub fn perturb(&self, magnitude: f64, seed: u64) -> Self {
        if magnitude == 0.0 {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = self
            .entries
            .iter()
            .map(|e| {
                e.map(|v| {
                    let n = rng.random_range(-magnitude..=magnitude);
                    T::lit(v.as_f64() + n).clamp01()
                })
            })
            .collect();
        Self {
            size: self.size,
            entries,
        }
    }

    pub fn cast<U: Scalar>(&self) -> Lut3D<U> {
        Lut3D {
            size: self.size,
            entries: self
                .entries
                .iter()
                .map(|e| e.map(|v| U::from_f64_lossy(v.as_f64())))
                .collect(),
        }
    }

    /// Coordinatewise monotone: each output channel is non-decreasing along every axis.
    pub fn is_monotone(&self) -> bool {
        let s = self.size;
        for b in 0..s {
            for g in 0..s {
                for r in 0..s {
                    let here = self.entry(r, g, b);
                    let next = [
                        (r + 1 < s).then(|| self.entry(r + 1, g, b)),
                        (g + 1 < s).then(|| self.entry(r, g + 1, b)),
                        (b + 1 < s).then(|| self.entry(r, g, b + 1)),
                    ];
                    for n in next.into_iter().flatten() {
                        if (0..3).any(|c| n[c] < here[c]) {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_two_is_cube_corners() {
        let lut = Lut3D::<f32>::identity(2).unwrap();
        let mut corners: Vec<[f32; 3]> = lut.entries().to_vec();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = Vec::new();
        for r in 0..2 {
            for g in 0..2 {
                for b in 0..2 {
                    want.push([r as f32, g as f32, b as f32]);
                }
            }
        }
        assert_eq!(corners, want);
        assert_eq!(lut.entry(1, 0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(lut.entry(0, 0, 1), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_entries_are_node_coordinates() {
        let lut = Lut3D::<f64>::identity(33).unwrap();
        assert_eq!(lut.entry(3, 7, 31), [3.0 / 32.0, 7.0 / 32.0, 31.0 / 32.0]);
    }

    #[test]
    fn size_below_two_rejected() {
        assert!(Lut3D::<f32>::identity(1).is_err());
        assert!(Lut3D::<f32>::zeros(0).is_err());
    }

    #[test]
    fn perturb_zero_and_determinism() {
        let lut = Lut3D::<f32>::identity(5).unwrap();
        assert_eq!(lut.perturb(0.0, 9), lut);
        let a = lut.perturb(0.1, 42);
        let b = lut.perturb(0.1, 42);
        assert_eq!(a, b);
        assert_ne!(a, lut.perturb(0.1, 43));
        for (p, q) in a.entries().iter().zip(lut.entries()) {
            for c in 0..3 {
                assert!((p[c] - q[c]).abs() <= 0.1 + 1e-6);
                assert!((0.0..=1.0).contains(&p[c]));
            }
        }
    }

    #[test]
    fn from_entries_rejects_non_finite() {
        let mut e = vec![[0.0f32; 3]; 8];
        e[3][1] = f32::NAN;
        assert!(Lut3D::from_entries(2, e).is_err());
        assert!(Lut3D::from_entries(2, vec![[0.0f32; 3]; 7]).is_err());
    }
}
