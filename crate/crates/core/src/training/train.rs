use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_glc_slices, loss_hc};
use super::{evaluate_samples, LossBreakdown, Optimizer, Sample, TrainConfig};
use crate::augment::{apply_jitter_ordered, sample_crop_pair};
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;
use crate::lut;
use crate::model::{Model, ModelGradient};
use crate::scalar::Scalar;

/// One row of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub l_hc: f64,
    pub l_glc: f64,
    pub total: f64,
    pub psnr: Option<f64>,
    pub psnr_hc: Option<f64>,
    pub delta_e: Option<f64>,
    pub delta_e_hc: Option<f64>,
    pub m_glc: Option<f64>,
}

pub fn write_log_csv<W: Write>(w: W, log: &[EpochLog]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for row in log {
        wr.serialize(row).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    if log.is_empty() {
        wr.write_record(["epoch", "l_hc", "l_glc", "total", "psnr", "psnr_hc", "delta_e", "delta_e_hc", "m_glc"])
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    wr.flush().map_err(|e| Error::InvalidArgument(e.to_string()))
}

pub fn save_log_csv(path: &Path, log: &[EpochLog]) -> Result<()> {
    let mut buf = Vec::new();
    write_log_csv(&mut buf, log)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    pub model: Model<T>,
    pub log: Vec<EpochLog>,
    pub steps: usize,
}

/// Identity model with seeded noise on predictor columns 1..N.
pub fn init_model<T: Scalar>(cfg: &TrainConfig) -> Result<Model<T>> {
    let mut m = Model::identity(cfg.lut_size, cfg.num_basis)?;
    m.predictor = m.predictor.with_column_noise(cfg.predictor_init_noise, cfg.seed);
    Ok(m)
}

fn sample_rng(cfg: &TrainConfig, epoch: usize, position: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ cfg.augment.seed.rotate_left(32));
    rng.set_stream(((epoch as u64) << 32) | position as u64);
    rng
}

fn epoch_order(cfg: &TrainConfig, epoch: usize, n: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX - epoch as u64);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    order
}

/// Forward pass of one image through the adaptive model; returns the
/// features, blend weights and the unclamped output.
fn forward<T: Scalar>(
    model: &Model<T>,
    img: &ImageBuffer<T>,
) -> Result<(crate::model::FeatureVector, Vec<T>, ImageBuffer<T>)> {
    let f = Model::features_of(img)?;
    let w = model.blend_weights(&f)?;
    let out = lut::apply_raw(&model.effective_lut(&w), img)?;
    Ok((f, w, out))
}

struct StepResult {
    grad: ModelGradient,
    l_hc: f64,
    l_glc: f64,
}

fn sample_step<T: Scalar>(model: &Model<T>, s: &Sample<T>, cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<StepResult> {
    let op = cfg.augment.sample_geometric(rng);
    let img = s.input.transformed(op);
    let target = s.target.transformed(op);
    let mask = s.mask.transformed(op);
    let weights = mask.weights(T::lit(cfg.human_weight), T::lit(cfg.alpha))?;

    let (f, w, pred) = forward(model, &img)?;
    let (l_hc, g) = loss_hc(&pred, &target, &weights)?;
    let mut grad = model.backward(&f, &w, &img, &g)?;

    let mut l_glc = 0.0;
    if cfg.lambda > 0.0 {
        let (c1, c2, pair) = sample_crop_pair(&img, rng, &cfg.augment.crop)?;
        let j1 = cfg.augment.sample_jitter(rng);
        let j2 = cfg.augment.sample_jitter(rng);
        let c1 = apply_jitter_ordered(&c1, &j1, &cfg.augment.order)?;
        let c2 = apply_jitter_ordered(&c2, &j2, &cfg.augment.order)?;
        let (f1, w1, o1) = forward(model, &c1)?;
        let (f2, w2, o2) = forward(model, &c2)?;
        let gather = |img: &ImageBuffer<T>, idx: &[usize]| -> Vec<T> {
            idx.iter().flat_map(|&i| img.data()[3 * i..3 * i + 3].iter().copied()).collect()
        };
        let (l, ga, gb) = loss_glc_slices(&gather(&o1, &pair.first_indices), &gather(&o2, &pair.second_indices))?;
        l_glc = l;
        let spread = |len: usize, idx: &[usize], g: &[f64]| {
            let mut up = vec![0.0f64; len];
            for (k, &i) in idx.iter().enumerate() {
                for c in 0..3 {
                    up[3 * i + c] = cfg.lambda * g[3 * k + c];
                }
            }
            up
        };
        let u1 = spread(c1.data().len(), &pair.first_indices, &ga);
        let u2 = spread(c2.data().len(), &pair.second_indices, &gb);
        grad.add_assign(&model.backward(&f1, &w1, &c1, &u1)?);
        grad.add_assign(&model.backward(&f2, &w2, &c2, &u2)?);
    }
    Ok(StepResult { grad, l_hc, l_glc })
}

/// Runs one optimizer step on `batch` (indices into `data`). Returns the
/// batch-mean losses.
pub fn train_step<T: Scalar>(
    model: &mut Model<T>,
    opt: &mut Optimizer,
    data: &[Sample<T>],
    batch: &[(usize, usize)],
    cfg: &TrainConfig,
    epoch: usize,
    step: usize,
) -> Result<LossBreakdown> {
    let results: Vec<StepResult> = batch
        .par_iter()
        .map(|&(position, i)| {
            let mut rng = sample_rng(cfg, epoch, position);
            sample_step(model, &data[i], cfg, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut grad = ModelGradient::zeros_like(model);
    let (mut l_hc, mut l_glc) = (0.0, 0.0);
    for r in &results {
        grad.add_assign(&r.grad);
        l_hc += r.l_hc;
        l_glc += r.l_glc;
    }
    let k = 1.0 / results.len().max(1) as f64;
    grad.scale(k);
    let loss = LossBreakdown::new(l_hc * k, l_glc * k, cfg.lambda);
    if !loss.is_finite() || !grad.is_finite() {
        return Err(Error::Diverged {
            epoch,
            step,
            loss: loss.total,
        });
    }
    opt.step(model, &grad);
    Ok(loss)
}

/// Mini-batch training from `init`. `eval` (may be empty) feeds the metric
/// columns of the log; `on_epoch` sees each log row as it is produced.
pub fn train_from<T: Scalar>(
    init: Model<T>,
    data: &[Sample<T>],
    eval: &[Sample<T>],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome<T>> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training split is empty".into()));
    }
    let mut model = init;
    let mut opt = Optimizer::new(cfg.optimizer, &model);
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut step = 0;
    for epoch in 1..=cfg.epochs {
        let order = epoch_order(cfg, epoch, data.len());
        let mut sums = (0.0, 0.0);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<(usize, usize)> = chunk
                .iter()
                .enumerate()
                .map(|(k, &i)| (b * cfg.batch_size + k, i))
                .collect();
            step += 1;
            let l = train_step(&mut model, &mut opt, data, &batch, cfg, epoch, step)?;
            sums.0 += l.l_hc * chunk.len() as f64;
            sums.1 += l.l_glc * chunk.len() as f64;
        }
        let n = data.len() as f64;
        let loss = LossBreakdown::new(sums.0 / n, sums.1 / n, cfg.lambda);
        let metrics = if cfg.log_metrics && !eval.is_empty() {
            Some(evaluate_samples(&model, eval, cfg.eval_weights, &cfg.channels)?.summary)
        } else {
            None
        };
        let row = EpochLog {
            epoch,
            l_hc: loss.l_hc,
            l_glc: loss.l_glc,
            total: loss.total,
            psnr: metrics.as_ref().map(|m| m.psnr),
            psnr_hc: metrics.as_ref().map(|m| m.psnr_hc),
            delta_e: metrics.as_ref().map(|m| m.delta_e),
            delta_e_hc: metrics.as_ref().map(|m| m.delta_e_hc),
            m_glc: metrics.as_ref().and_then(|m| m.m_glc),
        };
        log::info!(
            "epoch {epoch}: l_hc {:.6} l_glc {:.6} total {:.6}{}",
            row.l_hc,
            row.l_glc,
            row.total,
            row.psnr.map(|p| format!(" psnr {p:.3}")).unwrap_or_default()
        );
        on_epoch(&row);
        log.push(row);
    }
    Ok(TrainOutcome { model, log, steps: step })
}

pub fn train<T: Scalar>(data: &[Sample<T>], eval: &[Sample<T>], cfg: &TrainConfig) -> Result<TrainOutcome<T>> {
    train_from(init_model(cfg)?, data, eval, cfg, |_| {})
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::{expert_styles, generate_group, lut_pairs, random_smooth_lut, SynthSpec};
    use crate::BinaryMask;

    fn tiny_cfg() -> TrainConfig {
        TrainConfig {
            lut_size: 5,
            num_basis: 2,
            epochs: 2,
            batch_size: 3,
            train_short_side: 0,
            log_metrics: false,
            ..TrainConfig::default()
        }
    }

    fn tiny_data() -> Vec<Sample<f32>> {
        let spec = SynthSpec {
            groups: 2,
            height: 40,
            width: 60,
            ..SynthSpec::default()
        };
        let styles = expert_styles(&spec);
        (0..2)
            .flat_map(|g| generate_group(&spec, &styles, g).unwrap())
            .map(|p| Sample {
                id: p.id,
                group_id: p.group_id,
                input: p.input,
                target: p.targets[0].clone(),
                mask: p.mask,
            })
            .collect()
    }

    #[test]
    fn zero_epochs_return_the_initial_model() {
        let cfg = TrainConfig { epochs: 0, ..tiny_cfg() };
        let out = train(&tiny_data(), &[], &cfg).unwrap();
        assert_eq!(out.model, init_model::<f32>(&cfg).unwrap());
        assert_eq!(out.steps, 0);
        assert!(out.log.is_empty());
    }

    #[test]
    fn zero_learning_rate_leaves_the_model_unchanged() {
        let mut cfg = tiny_cfg();
        cfg.optimizer.lr_lut = 0.0;
        cfg.optimizer.lr_predictor = 0.0;
        let out = train(&tiny_data(), &[], &cfg).unwrap();
        assert_eq!(out.model, init_model::<f32>(&cfg).unwrap());
        assert!(out.steps > 0);
    }

    #[test]
    fn same_seed_same_model() {
        let data = tiny_data();
        let cfg = tiny_cfg();
        let a = train(&data, &[], &cfg).unwrap();
        let b = train(&data, &[], &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.log, b.log);
        let c = train(&data, &[], &TrainConfig { seed: 9, ..cfg }).unwrap();
        assert_ne!(a.model, c.model);
    }

    #[test]
    fn loss_falls_on_lut_recovery() {
        let gt = random_smooth_lut(9, 0.08, 4);
        let data: Vec<Sample<f32>> = lut_pairs(&gt, 16, 16, 16, 0)
            .into_iter()
            .enumerate()
            .map(|(k, (input, target))| Sample {
                id: format!("p{k}"),
                group_id: "g".into(),
                input,
                target,
                mask: BinaryMask::empty(16, 16),
            })
            .collect();
        let mut cfg = TrainConfig {
            lut_size: 9,
            num_basis: 1,
            lambda: 0.0,
            human_weight: 1.0,
            alpha: 1.0,
            batch_size: 16,
            epochs: 10,
            ..tiny_cfg()
        };
        cfg.augment.hflip_prob = 0.0;
        let out = train(&data, &[], &cfg).unwrap();
        let losses: Vec<f64> = out.log.iter().map(|r| r.total).collect();
        assert!(losses.windows(2).all(|w| w[1] < w[0]), "{losses:?}");
    }

    #[test]
    fn lambda_zero_has_no_consistency_term() {
        let cfg = TrainConfig { lambda: 0.0, epochs: 1, ..tiny_cfg() };
        let out = train(&tiny_data(), &[], &cfg).unwrap();
        assert_eq!(out.log[0].l_glc, 0.0);
        assert_eq!(out.log[0].total, out.log[0].l_hc);
    }

    #[test]
    fn log_csv_has_a_row_per_epoch() {
        let out = train(&tiny_data(), &[], &tiny_cfg()).unwrap();
        let mut buf = Vec::new();
        write_log_csv(&mut buf, &out.log).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + out.log.len());
    }

    #[test]
    fn empty_training_set_is_rejected() {
        assert!(train::<f32>(&[], &[], &tiny_cfg()).is_err());
    }
}
