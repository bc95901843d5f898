use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureVector;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Affine map from features to blend weights: β = Wᵀf + b.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor<T> {
    num_features: usize,
    num_basis: usize,
    /// Row-major F×N.
    weights: Vec<T>,
    bias: Vec<T>,
}

impl<T: Scalar> Predictor<T> {
    /// Zero matrix with bias (1, 0, …, 0).
    pub fn identity_init(num_features: usize, num_basis: usize) -> Result<Self> {
        if num_basis == 0 {
            return Err(Error::InvalidArgument("predictor needs at least one output".into()));
        }
        let mut bias = vec![T::zero(); num_basis];
        bias[0] = T::one();
        Ok(Self {
            num_features,
            num_basis,
            weights: vec![T::zero(); num_features * num_basis],
            bias,
        })
    }

    pub fn from_parts(num_features: usize, num_basis: usize, weights: Vec<T>, bias: Vec<T>) -> Result<Self> {
        if weights.len() != num_features * num_basis {
            return Err(Error::LengthMismatch(weights.len(), num_features * num_basis));
        }
        if bias.len() != num_basis {
            return Err(Error::LengthMismatch(bias.len(), num_basis));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite predictor parameter".into()));
        }
        Ok(Self {
            num_features,
            num_basis,
            weights,
            bias,
        })
    }

    /// Adds seeded uniform noise in ±magnitude to the matrix columns for
    /// outputs 1..N, leaving output 0 (the identity basis) untouched.
    pub fn with_column_noise(mut self, magnitude: f64, seed: u64) -> Self {
        if magnitude <= 0.0 {
            return self;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for f in 0..self.num_features {
            for n in 1..self.num_basis {
                self.weights[f * self.num_basis + n] = T::lit(rng.random_range(-magnitude..=magnitude));
            }
        }
        self
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_basis(&self) -> usize {
        self.num_basis
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn weights_mut(&mut self) -> &mut [T] {
        &mut self.weights
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    fn check(&self, f: &FeatureVector) -> Result<()> {
        if f.0.len() != self.num_features {
            return Err(Error::LengthMismatch(f.0.len(), self.num_features));
        }
        Ok(())
    }

    pub fn predict(&self, f: &FeatureVector) -> Result<Vec<T>> {
        self.check(f)?;
        Ok((0..self.num_basis)
            .map(|n| {
                let mut acc = self.bias[n].as_f64();
                for (k, x) in f.0.iter().enumerate() {
                    acc += self.weights[k * self.num_basis + n].as_f64() * x;
                }
                T::lit(acc)
            })
            .collect())
    }

    /// Gradients w.r.t. (matrix, bias) given ∂L/∂β.
    pub fn backward(&self, f: &FeatureVector, grad_out: &[f64]) -> Result<PredictorGradient> {
        self.check(f)?;
        if grad_out.len() != self.num_basis {
            return Err(Error::LengthMismatch(grad_out.len(), self.num_basis));
        }
        let mut weights = vec![0.0; self.weights.len()];
        for (k, x) in f.0.iter().enumerate() {
            for n in 0..self.num_basis {
                weights[k * self.num_basis + n] = x * grad_out[n];
            }
        }
        Ok(PredictorGradient {
            weights,
            bias: grad_out.to_vec(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictorGradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(seed: u64) -> FeatureVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FeatureVector((0..54).map(|_| rng.random::<f64>()).collect())
    }

    #[test]
    fn initial_output_is_one_hot() {
        let p = Predictor::<f32>::identity_init(54, 5).unwrap();
        for s in 0..3 {
            assert_eq!(p.predict(&features(s)).unwrap(), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn bias_shift_passes_through() {
        let p = Predictor::<f64>::identity_init(54, 5).unwrap().with_column_noise(0.1, 3);
        let mut q = p.clone();
        let delta = [0.1, -0.2, 0.3, 0.0, 0.05];
        for (b, d) in q.bias_mut().iter_mut().zip(delta) {
            *b += d;
        }
        let f = features(1);
        let a = p.predict(&f).unwrap();
        let b = q.predict(&f).unwrap();
        for n in 0..5 {
            assert!((b[n] - a[n] - delta[n]).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_matrix_vector_oracle() {
        let p = Predictor::<f64>::identity_init(54, 5).unwrap().with_column_noise(0.5, 9);
        let f = features(2);
        let got = p.predict(&f).unwrap();
        for n in 0..5 {
            let mut want = p.bias()[n];
            for k in 0..54 {
                want += p.weights()[k * 5 + n] * f.0[k];
            }
            assert!((got[n] - want).abs() < 1e-12);
        }
        assert!(p.weights().iter().step_by(5).all(|&w| w == 0.0));
    }

    #[test]
    fn backward_is_outer_product() {
        let p = Predictor::<f64>::identity_init(54, 5).unwrap();
        let f = features(4);
        let g = p.backward(&f, &[1.0, 2.0, 0.0, -1.0, 0.5]).unwrap();
        assert_eq!(g.weights[7 * 5 + 1], 2.0 * f.0[7]);
        assert_eq!(g.bias, vec![1.0, 2.0, 0.0, -1.0, 0.5]);
        assert!(p.predict(&FeatureVector(vec![0.0; 3])).is_err());
    }
}
