//! Image-adaptive weight prediction: global image statistics mapped by an
//! affine predictor to blend weights over a set of basis LUTs.

mod checkpoint;
mod features;
mod predictor;

pub use checkpoint::{config_hash, Checkpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use features::{extract_features, FeatureVector, HIST_BINS, NUM_FEATURES};
pub use predictor::{Predictor, PredictorGradient};

use crate::error::{Error, Result};
use crate::imaging::{resize_short_side, ImageBuffer};
use crate::lut::{self, blend_luts, scatter, weight_gradients, Lut3D, DEFAULT_BASIS_COUNT, DEFAULT_LUT_SIZE};
use crate::scalar::Scalar;

/// Features are always computed on a render with this short side.
pub const FEATURE_SHORT_SIDE: usize = 360;

#[derive(Debug, Clone, PartialEq)]
pub struct Model<T> {
    pub basis: Vec<Lut3D<T>>,
    pub predictor: Predictor<T>,
}

impl<T: Scalar> Model<T> {
    /// Basis 0 identity, the rest zero lattices, predictor outputs (1,0,…,0):
    /// the untrained model is the identity map.
    pub fn identity(lut_size: usize, num_basis: usize) -> Result<Self> {
        if num_basis == 0 {
            return Err(Error::InvalidArgument("model needs at least one basis LUT".into()));
        }
        let mut basis = vec![Lut3D::identity(lut_size)?];
        for _ in 1..num_basis {
            basis.push(Lut3D::zeros(lut_size)?);
        }
        Ok(Self {
            basis,
            predictor: Predictor::identity_init(NUM_FEATURES, num_basis)?,
        })
    }

    pub fn default_identity() -> Self {
        Self::identity(DEFAULT_LUT_SIZE, DEFAULT_BASIS_COUNT).expect("default sizes are valid")
    }

    pub fn lut_size(&self) -> usize {
        self.basis[0].size()
    }

    pub fn num_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn blend_weights(&self, f: &FeatureVector) -> Result<Vec<T>> {
        self.predictor.predict(f)
    }

    pub fn effective_lut(&self, weights: &[T]) -> Lut3D<T> {
        blend_luts(&self.basis, weights)
    }

    /// Features of `img`, taken from its 360p render when it is larger.
    pub fn features_of(img: &ImageBuffer<T>) -> Result<FeatureVector> {
        let short = img.height().min(img.width());
        if short > FEATURE_SHORT_SIDE {
            extract_features(&resize_short_side(img, FEATURE_SHORT_SIDE))
        } else {
            extract_features(img)
        }
    }

    /// Effective LUT predicted for `img`.
    pub fn lut_for(&self, img: &ImageBuffer<T>) -> Result<Lut3D<T>> {
        let w = self.blend_weights(&Self::features_of(img)?)?;
        Ok(self.effective_lut(&w))
    }

    /// Retouches `img` at its own resolution (clamped output).
    pub fn retouch(&self, img: &ImageBuffer<T>) -> Result<ImageBuffer<T>> {
        lut::apply(&self.lut_for(img)?, img)
    }

    /// Gradients of Σ upstream · apply_raw(effective, img) w.r.t. every
    /// basis entry and predictor parameter, where `weights` = predict(f).
    pub fn backward<U: Scalar>(
        &self,
        f: &FeatureVector,
        weights: &[T],
        img: &ImageBuffer<T>,
        upstream: &[U],
    ) -> Result<ModelGradient> {
        let g = scatter(self.lut_size(), img, upstream)?;
        self.backward_scattered(f, weights, &g)
    }

    /// As [`Model::backward`], from an already scattered lattice gradient.
    pub fn backward_scattered(&self, f: &FeatureVector, weights: &[T], g: &[[f64; 3]]) -> Result<ModelGradient> {
        let gw = weight_gradients(&self.basis, g);
        let basis = weights
            .iter()
            .map(|w| {
                let w = w.as_f64();
                g.iter().map(|v| [w * v[0], w * v[1], w * v[2]]).collect()
            })
            .collect();
        Ok(ModelGradient {
            basis,
            predictor: self.predictor.backward(f, &gw)?,
        })
    }

    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let p = &self.predictor;
        Model {
            basis: self.basis.iter().map(|b| b.cast()).collect(),
            predictor: Predictor::from_parts(
                p.num_features(),
                p.num_basis(),
                p.weights().iter().map(|v| U::lit(v.as_f64())).collect(),
                p.bias().iter().map(|v| U::lit(v.as_f64())).collect(),
            )
            .expect("cast keeps shapes"),
        }
    }
}

/// Gradient of a scalar loss w.r.t. all model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelGradient {
    pub basis: Vec<Vec<[f64; 3]>>,
    pub predictor: PredictorGradient,
}

impl ModelGradient {
    pub fn zeros_like<T: Scalar>(model: &Model<T>) -> Self {
        let e = model.basis[0].entries().len();
        Self {
            basis: vec![vec![[0.0; 3]; e]; model.num_basis()],
            predictor: PredictorGradient {
                weights: vec![0.0; model.predictor.weights().len()],
                bias: vec![0.0; model.num_basis()],
            },
        }
    }

    pub fn add_assign(&mut self, other: &ModelGradient) {
        for (a, b) in self.basis.iter_mut().zip(&other.basis) {
            for (x, y) in a.iter_mut().zip(b) {
                x[0] += y[0];
                x[1] += y[1];
                x[2] += y[2];
            }
        }
        for (x, y) in self.predictor.weights.iter_mut().zip(&other.predictor.weights) {
            *x += y;
        }
        for (x, y) in self.predictor.bias.iter_mut().zip(&other.predictor.bias) {
            *x += y;
        }
    }

    pub fn scale(&mut self, k: f64) {
        for v in self.basis.iter_mut().flatten() {
            v[0] *= k;
            v[1] *= k;
            v[2] *= k;
        }
        self.predictor.weights.iter_mut().for_each(|x| *x *= k);
        self.predictor.bias.iter_mut().for_each(|x| *x *= k);
    }

    pub fn is_finite(&self) -> bool {
        self.basis.iter().flatten().flatten().all(|v| v.is_finite())
            && self.predictor.weights.iter().all(|v| v.is_finite())
            && self.predictor.bias.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorSpaceTag;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(h: usize, w: usize, seed: u64) -> ImageBuffer<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ImageBuffer::from_fn(h, w, ColorSpaceTag::SrgbNonlinear, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    #[test]
    fn untrained_model_is_identity() {
        let m = Model::<f32>::identity(17, 5).unwrap();
        let img = random_image(10, 12, 1).cast::<f32>();
        assert!(m.retouch(&img).unwrap().max_abs_diff(&img) < 1e-6);
    }

    #[test]
    fn retouch_is_deterministic() {
        let mut m = Model::<f32>::identity(9, 3).unwrap();
        m.basis[1] = Lut3D::identity(9).unwrap().perturb(0.2, 4);
        m.predictor = m.predictor.clone().with_column_noise(0.3, 2);
        let img = random_image(20, 30, 3).cast::<f32>();
        assert_eq!(m.retouch(&img).unwrap(), m.retouch(&img).unwrap());
    }

    /// Σ u · apply_raw(model(img), img), the loss for the FD checks.
    fn loss(m: &Model<f64>, img: &ImageBuffer<f64>, up: &[f64]) -> f64 {
        let f = extract_features(img).unwrap();
        let w = m.blend_weights(&f).unwrap();
        let out = lut::apply_raw(&m.effective_lut(&w), img).unwrap();
        out.data().iter().zip(up).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn predictor_gradients_match_finite_differences() {
        let mut m = Model::<f64>::identity(5, 3).unwrap();
        m.basis[1] = Lut3D::identity(5).unwrap().perturb(0.3, 1);
        m.basis[2] = Lut3D::identity(5).unwrap().perturb(0.3, 2);
        m.predictor = m.predictor.clone().with_column_noise(0.2, 7);
        let img = random_image(8, 8, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let up: Vec<f64> = (0..img.data().len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = extract_features(&img).unwrap();
        let w = m.blend_weights(&f).unwrap();
        let g = m.backward(&f, &w, &img, &up).unwrap();
        let h = 1e-3;
        let check = |analytic: f64, num: f64, what: &str| {
            let scale = analytic.abs().max(num.abs());
            assert!(scale < 1e-9 || (analytic - num).abs() / scale < 1e-4, "{what}: {analytic} vs {num}");
        };
        for k in (0..m.predictor.weights().len()).step_by(7) {
            let mut p = m.clone();
            p.predictor.weights_mut()[k] += h;
            let plus = loss(&p, &img, &up);
            p.predictor.weights_mut()[k] -= 2.0 * h;
            let minus = loss(&p, &img, &up);
            check(g.predictor.weights[k], (plus - minus) / (2.0 * h), "matrix");
        }
        for n in 0..3 {
            let mut p = m.clone();
            p.predictor.bias_mut()[n] += h;
            let plus = loss(&p, &img, &up);
            p.predictor.bias_mut()[n] -= 2.0 * h;
            let minus = loss(&p, &img, &up);
            check(g.predictor.bias[n], (plus - minus) / (2.0 * h), "bias");
        }
        for e in (0..125).step_by(11) {
            let mut p = m.clone();
            p.basis[2].entries_mut()[e][1] += h;
            let plus = loss(&p, &img, &up);
            p.basis[2].entries_mut()[e][1] -= 2.0 * h;
            let minus = loss(&p, &img, &up);
            check(g.basis[2][e][1], (plus - minus) / (2.0 * h), "basis");
        }
    }
}
