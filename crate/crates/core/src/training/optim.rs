use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelGradient};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr_lut: f64,
    pub lr_predictor: f64,
    /// SGD momentum, or Adam's first-moment decay.
    pub momentum: f64,
    /// Adam's second-moment decay.
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            kind: OptimizerKind::Adam,
            lr_lut: 1e-2,
            lr_predictor: 1e-3,
            momentum: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lr_lut >= 0.0
            && self.lr_predictor >= 0.0
            && (0.0..1.0).contains(&self.momentum)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0;
        if !ok {
            return Err(Error::Config(format!("invalid optimizer settings {self:?}")));
        }
        Ok(())
    }
}

/// Flat view of every parameter group: (values, lr).
fn for_each_param<T: Scalar>(
    model: &mut Model<T>,
    grad: &ModelGradient,
    cfg: &OptimizerConfig,
    mut f: impl FnMut(usize, &mut T, f64, f64),
) {
    let mut k = 0;
    for (lut, g) in model.basis.iter_mut().zip(&grad.basis) {
        for (e, ge) in lut.entries_mut().iter_mut().zip(g) {
            for c in 0..3 {
                f(k, &mut e[c], ge[c], cfg.lr_lut);
                k += 1;
            }
        }
    }
    let (w, b) = (&grad.predictor.weights, &grad.predictor.bias);
    for (p, g) in model.predictor.weights_mut().iter_mut().zip(w) {
        f(k, p, *g, cfg.lr_predictor);
        k += 1;
    }
    for (p, g) in model.predictor.bias_mut().iter_mut().zip(b) {
        f(k, p, *g, cfg.lr_predictor);
        k += 1;
    }
}

/// Optimizer state over the flattened parameter vector.
#[derive(Debug, Clone)]
pub struct Optimizer {
    cfg: OptimizerConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new<T: Scalar>(cfg: OptimizerConfig, model: &Model<T>) -> Self {
        let n = model.basis.iter().map(|b| b.entries().len() * 3).sum::<usize>()
            + model.predictor.weights().len()
            + model.predictor.bias().len();
        Self {
            cfg,
            m: vec![0.0; n],
            v: if cfg.kind == OptimizerKind::Adam { vec![0.0; n] } else { Vec::new() },
            t: 0,
        }
    }

    pub fn step<T: Scalar>(&mut self, model: &mut Model<T>, grad: &ModelGradient) {
        self.t += 1;
        let cfg = self.cfg;
        let (m, v) = (&mut self.m, &mut self.v);
        match cfg.kind {
            OptimizerKind::Sgd => for_each_param(model, grad, &cfg, |k, p, g, lr| {
                m[k] = cfg.momentum * m[k] + g;
                *p = T::lit(p.as_f64() - lr * m[k]);
            }),
            OptimizerKind::Adam => {
                let bc1 = 1.0 - cfg.momentum.powi(self.t);
                let bc2 = 1.0 - cfg.beta2.powi(self.t);
                for_each_param(model, grad, &cfg, |k, p, g, lr| {
                    m[k] = cfg.momentum * m[k] + (1.0 - cfg.momentum) * g;
                    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g * g;
                    let upd = (m[k] / bc1) / ((v[k] / bc2).sqrt() + cfg.eps);
                    *p = T::lit(p.as_f64() - lr * upd);
                });
            }
        }
    }
}
