//! Trilinear evaluation shared by the forward pass and the gradient scatter.

use crate::scalar::Scalar;

/// The eight lattice entries enclosing a point and their trilinear weights.
#[derive(Debug, Clone, Copy)]
pub struct Cell<T> {
    pub indices: [usize; 8],
    pub weights: [T; 8],
}

#[inline(always)]
fn axis<T: Scalar>(v: T, scale: T, max_cell: usize, tol: T) -> (usize, T) {
    let s = v.clamp01() * scale;
    let i = s.trunc_index().min(max_cell);
    let f = s - T::from_index(i);
    // Snap coordinates that are a rounding error away from a node, so a
    // node input returns that entry exactly.
    if f <= tol {
        (i, T::zero())
    } else if f >= T::one() - tol {
        if i < max_cell {
            (i + 1, T::zero())
        } else {
            (i, T::one())
        }
    } else {
        (i, f)
    }
}

/// Per-lattice constants, computed once per slice rather than per pixel.
#[derive(Debug, Clone, Copy)]
pub struct Grid<T> {
    size: usize,
    scale: T,
    max_cell: usize,
    tol: T,
}

impl<T: Scalar> Grid<T> {
    #[inline(always)]
    pub fn new(size: usize) -> Self {
        let scale = T::lit((size - 1) as f64);
        Self {
            size,
            scale,
            max_cell: size - 2,
            tol: T::epsilon() * scale * T::lit(4.0),
        }
    }

    /// Index of the lower corner and the three fractional offsets.
    #[inline(always)]
    fn corner(&self, rgb: [T; 3]) -> (usize, T, T, T) {
        let (r, fr) = axis(rgb[0], self.scale, self.max_cell, self.tol);
        let (g, fg) = axis(rgb[1], self.scale, self.max_cell, self.tol);
        let (b, fb) = axis(rgb[2], self.scale, self.max_cell, self.tol);
        (r + self.size * (g + self.size * b), fr, fg, fb)
    }

    #[inline(always)]
    pub fn locate(&self, rgb: [T; 3]) -> Cell<T> {
        let (base, fr, fg, fb) = self.corner(rgb);
        let one = T::one();
        let (gr, gg, gb) = (one - fr, one - fg, one - fb);
        let s = self.size;
        let s2 = s * s;
        let w00 = gg * gb;
        let w10 = fg * gb;
        let w01 = gg * fb;
        let w11 = fg * fb;
        Cell {
            indices: [
                base,
                base + 1,
                base + s,
                base + s + 1,
                base + s2,
                base + s2 + 1,
                base + s2 + s,
                base + s2 + s + 1,
            ],
            weights: [
                gr * w00,
                fr * w00,
                gr * w10,
                fr * w10,
                gr * w01,
                fr * w01,
                gr * w11,
                fr * w11,
            ],
        }
    }

    /// Unclamped trilinear interpolation: four lerps along r, weighted by
    /// the (g, b) bilinear factors.
    #[inline(always)]
    pub fn eval(&self, entries: &[[T; 3]], rgb: [T; 3]) -> [T; 3] {
        debug_assert_eq!(entries.len(), self.size * self.size * self.size);
        let (base, fr, fg, fb) = self.corner(rgb);
        let one = T::one();
        let (gr, gg, gb) = (one - fr, one - fg, one - fb);
        let s = self.size;
        let rows = [(0, gg * gb), (s, fg * gb), (s * s, gg * fb), (s * s + s, fg * fb)];
        let mut out = [T::zero(); 3];
        for (off, w) in rows {
            // SAFETY: the lower corner is at most (S-2)(1+S+S²), so every
            // corner index, including the far one, stays below S³.
            let (a, c) = unsafe { (*entries.get_unchecked(base + off), *entries.get_unchecked(base + off + 1)) };
            for k in 0..3 {
                out[k] += w * (gr * a[k] + fr * c[k]);
            }
        }
        out
    }
}

/// Unclamped trilinear interpolation of one pixel.
#[cfg(test)]
pub fn eval<T: Scalar>(lut: &super::Lut3D<T>, rgb: [T; 3]) -> [T; 3] {
    Grid::new(lut.size()).eval(lut.entries(), rgb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lut::Lut3D;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn factored_eval_matches_eight_weight_sum(r in -0.1f64..1.1, g in -0.1f64..1.1, b in -0.1f64..1.1, seed in 0u64..50) {
            let lut = Lut3D::<f64>::identity(6).unwrap().perturb(0.3, seed);
            let grid = Grid::new(6);
            let cell = grid.locate([r, g, b]);
            let mut want = [0.0; 3];
            for k in 0..8 {
                let e = lut.entries()[cell.indices[k]];
                for c in 0..3 {
                    want[c] += cell.weights[k] * e[c];
                }
            }
            let got = grid.eval(lut.entries(), [r, g, b]);
            for c in 0..3 {
                prop_assert!((got[c] - want[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn clamp_sends_nan_to_zero() {
        assert_eq!(f32::NAN.clamp01(), 0.0);
        assert_eq!(2.0f64.clamp01(), 1.0);
        assert_eq!((-0.5f32).clamp01(), 0.0);
    }
}
