use std::borrow::Cow;

use rayon::prelude::*;

use super::interp::Grid;
use super::Lut3D;
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;
use crate::scalar::Scalar;

/// Rows handed to one rayon task at a time.
const ROWS_PER_TASK: usize = 8;

/// Anything that resolves to a single effective lattice.
pub trait AsLut<T: Scalar> {
    fn as_lut(&self) -> Cow<'_, Lut3D<T>>;
}

impl<T: Scalar> AsLut<T> for Lut3D<T> {
    fn as_lut(&self) -> Cow<'_, Lut3D<T>> {
        Cow::Borrowed(self)
    }
}

/// A weighted sum of basis lattices sharing one size.
#[derive(Debug, Clone, PartialEq)]
pub struct LutBlend<T> {
    basis: Vec<Lut3D<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> LutBlend<T> {
    pub fn new(basis: Vec<Lut3D<T>>, weights: Vec<T>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::InvalidArgument("blend needs at least one basis LUT".into()));
        }
        if basis.len() != weights.len() {
            return Err(Error::LengthMismatch(basis.len(), weights.len()));
        }
        let size = basis[0].size();
        if basis.iter().any(|b| b.size() != size) {
            return Err(Error::InvalidArgument("basis LUTs differ in size".into()));
        }
        Ok(Self { basis, weights })
    }

    pub fn basis(&self) -> &[Lut3D<T>] {
        &self.basis
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn size(&self) -> usize {
        self.basis[0].size()
    }

    /// Σₙ weightₙ · basisₙ.
    pub fn effective(&self) -> Lut3D<T> {
        blend_luts(&self.basis, &self.weights)
    }
}

/// Σₙ weightsₙ · basisₙ over lattices of one size.
pub fn blend_luts<T: Scalar>(basis: &[Lut3D<T>], weights: &[T]) -> Lut3D<T> {
    let mut entries = vec![[T::zero(); 3]; basis[0].entries().len()];
    for (lut, &w) in basis.iter().zip(weights) {
        if w == T::zero() {
            continue;
        }
        for (acc, e) in entries.iter_mut().zip(lut.entries()) {
            acc[0] += w * e[0];
            acc[1] += w * e[1];
            acc[2] += w * e[2];
        }
    }
    Lut3D::from_entries(basis[0].size(), entries).expect("blend of finite LUTs")
}

impl<T: Scalar> AsLut<T> for LutBlend<T> {
    fn as_lut(&self) -> Cow<'_, Lut3D<T>> {
        Cow::Owned(self.effective())
    }
}

fn require_rgb<T: Scalar>(img: &ImageBuffer<T>) -> Result<()> {
    if !img.tag().is_rgb() {
        return Err(Error::TagMismatch {
            expected: crate::color::ColorSpaceTag::SrgbNonlinear,
            actual: img.tag(),
        });
    }
    Ok(())
}

#[inline(always)]
fn finish<T: Scalar>(out: [T; 3], clamp: bool) -> [T; 3] {
    if clamp {
        out.map(Scalar::clamp01)
    } else {
        out
    }
}

/// Applies `lut` to a buffer of interleaved RGB samples in place.
pub fn apply_slice<T: Scalar>(lut: &Lut3D<T>, data: &mut [T], clamp: bool) {
    let grid = Grid::new(lut.size());
    let entries = lut.entries();
    for px in data.chunks_exact_mut(3) {
        let [r, g, b] = finish(grid.eval(entries, [px[0], px[1], px[2]]), clamp);
        (px[0], px[1], px[2]) = (r, g, b);
    }
}

fn apply_into<T: Scalar>(lut: &Lut3D<T>, src: &[T], dst: &mut [T], clamp: bool) {
    let grid = Grid::new(lut.size());
    let entries = lut.entries();
    for (s, d) in src.chunks_exact(3).zip(dst.chunks_exact_mut(3)) {
        let [r, g, b] = finish(grid.eval(entries, [s[0], s[1], s[2]]), clamp);
        (d[0], d[1], d[2]) = (r, g, b);
    }
}

fn apply_impl<T: Scalar>(lut: &Lut3D<T>, img: &ImageBuffer<T>, clamp: bool) -> Result<ImageBuffer<T>> {
    require_rgb(img)?;
    // written once by the kernel; no copy of the input first
    let mut out = vec![T::zero(); img.data().len()];
    let chunk = (img.width() * 3 * ROWS_PER_TASK).max(3);
    out.par_chunks_mut(chunk)
        .zip(img.data().par_chunks(chunk))
        .for_each(|(d, s)| apply_into(lut, s, d, clamp));
    ImageBuffer::from_raw(img.height(), img.width(), out, img.tag())
}

/// Trilinear application; input clamped to [0,1] on entry, output clamped to [0,1].
pub fn apply<T: Scalar, L: AsLut<T> + ?Sized>(lut: &L, img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    apply_impl(&lut.as_lut(), img, true)
}

/// Trilinear application without the output clamp; linear in the LUT entries.
pub fn apply_raw<T: Scalar, L: AsLut<T> + ?Sized>(lut: &L, img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
    apply_impl(&lut.as_lut(), img, false)
}

/// Accumulates Σ_pixels trilinear_weight · upstream into `acc` (one slot per
/// LUT entry), sequentially in pixel order.
pub fn scatter_into<T: Scalar, U: Scalar>(size: usize, pixels: &[T], upstream: &[U], acc: &mut [[f64; 3]]) {
    let grid = Grid::new(size);
    for (px, up) in pixels.chunks_exact(3).zip(upstream.chunks_exact(3)) {
        let (u0, u1, u2) = (up[0].as_f64(), up[1].as_f64(), up[2].as_f64());
        if u0 == 0.0 && u1 == 0.0 && u2 == 0.0 {
            continue;
        }
        let cell = grid.locate([px[0], px[1], px[2]]);
        for k in 0..8 {
            let w = cell.weights[k].as_f64();
            let a = &mut acc[cell.indices[k]];
            a[0] += w * u0;
            a[1] += w * u1;
            a[2] += w * u2;
        }
    }
}

/// Pixels per partial accumulator in [`scatter`]; fixed so the reduction
/// order does not depend on the thread count.
const SCATTER_CHUNK: usize = 1 << 16;

/// Gradient of `Σ upstream · apply_raw(lut, img)` with respect to every
/// entry of `lut` (of lattice size `size`). The map is linear in the
/// entries, so this is the trilinear weights scattered to the eight touched
/// entries. Partial sums over fixed pixel chunks are merged in chunk order.
pub fn scatter<T: Scalar, U: Scalar>(size: usize, img: &ImageBuffer<T>, upstream: &[U]) -> Result<Vec<[f64; 3]>> {
    require_rgb(img)?;
    if upstream.len() != img.data().len() {
        return Err(Error::LengthMismatch(upstream.len(), img.data().len()));
    }
    let n = size * size * size;
    let chunk = SCATTER_CHUNK * 3;
    if img.data().len() <= chunk {
        let mut acc = vec![[0.0; 3]; n];
        scatter_into(size, img.data(), upstream, &mut acc);
        return Ok(acc);
    }
    let partials: Vec<Vec<[f64; 3]>> = img
        .data()
        .par_chunks(chunk)
        .zip(upstream.par_chunks(chunk))
        .map(|(px, up)| {
            let mut acc = vec![[0.0; 3]; n];
            scatter_into(size, px, up, &mut acc);
            acc
        })
        .collect();
    Ok(tree_sum(partials))
}

/// Pairwise sum in a fixed tree shape.
pub(crate) fn tree_sum(mut parts: Vec<Vec<[f64; 3]>>) -> Vec<[f64; 3]> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                for (x, y) in a.iter_mut().zip(&b) {
                    x[0] += y[0];
                    x[1] += y[1];
                    x[2] += y[2];
                }
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap_or_default()
}

/// Gradients of `Σ upstream · apply_raw(blend, img)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlendGradient {
    /// One gradient lattice per basis LUT.
    pub basis: Vec<Vec<[f64; 3]>>,
    /// One scalar per blend weight.
    pub weights: Vec<f64>,
}

/// Per-weight gradient ⟨basisₙ, G⟩, equal to `apply_raw(basisₙ, img) · upstream`.
pub fn weight_gradients<T: Scalar>(basis: &[Lut3D<T>], scattered: &[[f64; 3]]) -> Vec<f64> {
    basis
        .iter()
        .map(|b| {
            b.entries()
                .iter()
                .zip(scattered)
                .map(|(e, g)| e[0].as_f64() * g[0] + e[1].as_f64() * g[1] + e[2].as_f64() * g[2])
                .sum()
        })
        .collect()
}

pub fn gradients<T: Scalar, U: Scalar>(blend: &LutBlend<T>, img: &ImageBuffer<T>, upstream: &[U]) -> Result<BlendGradient> {
    let g = scatter(blend.size(), img, upstream)?;
    let weights = weight_gradients(blend.basis(), &g);
    let basis = blend
        .weights()
        .iter()
        .map(|w| {
            let w = w.as_f64();
            g.iter().map(|v| [w * v[0], w * v[1], w * v[2]]).collect()
        })
        .collect();
    Ok(BlendGradient { basis, weights })
}
