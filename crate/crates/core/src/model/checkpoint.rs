use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Model, Predictor};
use crate::error::{Error, Result};
use crate::lut::Lut3D;
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "ppr-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Hex SHA-256 of a canonical config serialization.
pub fn config_hash(canonical: &[u8]) -> String {
    hex::encode(Sha256::digest(canonical))
}

/// On-disk model: all LUT entries and predictor parameters as f64 (exact
/// for f32 models), plus the hash of the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub lut_size: usize,
    pub num_basis: usize,
    pub num_features: usize,
    pub config_hash: String,
    pub basis: Vec<Vec<[f64; 3]>>,
    pub predictor_weights: Vec<f64>,
    pub predictor_bias: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &Model<T>, config_hash: impl Into<String>) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            lut_size: model.lut_size(),
            num_basis: model.num_basis(),
            num_features: model.predictor.num_features(),
            config_hash: config_hash.into(),
            basis: model
                .basis
                .iter()
                .map(|b| b.entries().iter().map(|e| e.map(|v| v.as_f64())).collect())
                .collect(),
            predictor_weights: model.predictor.weights().iter().map(|v| v.as_f64()).collect(),
            predictor_bias: model.predictor.bias().iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<Model<T>> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format '{}'", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        if self.basis.len() != self.num_basis || self.num_basis == 0 {
            return Err(Error::Checkpoint(format!(
                "num_basis {} but {} basis LUTs",
                self.num_basis,
                self.basis.len()
            )));
        }
        let basis = self
            .basis
            .iter()
            .map(|entries| {
                Lut3D::from_entries(self.lut_size, entries.iter().map(|e| e.map(T::lit)).collect())
                    .map_err(|e| Error::Checkpoint(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let predictor = Predictor::from_parts(
            self.num_features,
            self.num_basis,
            self.predictor_weights.iter().map(|&v| T::lit(v)).collect(),
            self.predictor_bias.iter().map(|&v| T::lit(v)).collect(),
        )
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
        Ok(Model { basis, predictor })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut m = Model::<f32>::identity(5, 3).unwrap();
        m.basis[1] = Lut3D::identity(5).unwrap().perturb(0.25, 3);
        m.predictor = m.predictor.clone().with_column_noise(0.01, 1);
        let ck = Checkpoint::from_model(&m, config_hash(b"cfg"));
        let back = Checkpoint::from_json(&ck.to_json()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.to_model::<f32>().unwrap(), m);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        ck.save(&p).unwrap();
        assert_eq!(Checkpoint::load(&p).unwrap(), ck);
    }

    #[test]
    fn rejects_inconsistent_files() {
        let m = Model::<f32>::identity(3, 2).unwrap();
        let mut ck = Checkpoint::from_model(&m, "x");
        ck.num_basis = 3;
        assert!(ck.to_model::<f32>().is_err());
        let mut ck = Checkpoint::from_model(&m, "x");
        ck.basis[0].pop();
        assert!(ck.to_model::<f32>().is_err());
        assert!(Checkpoint::from_json("{}").is_err());
    }

    #[test]
    fn hash_is_sha256_hex() {
        assert_eq!(
            config_hash(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
