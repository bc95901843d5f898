use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Sample;
use crate::error::Result;
use crate::imaging::{
    load_image, load_mask_for, resize_mask_short_side, resize_short_side, BinaryMask, Expert, Group, ImageBuffer,
};
use crate::lut::{self, Lut3D};
use crate::metrics::{channel_means, score_pair, ChannelSet, GroupStats, HcWeights, MetricReport, PhotoRow, ResolutionReport};
use crate::model::{Model, FEATURE_SHORT_SIDE};
use crate::scalar::Scalar;

/// Anything that picks a LUT for an image from its 360p render.
pub trait Retoucher<T: Scalar>: Sync {
    fn lut_for(&self, lr: &ImageBuffer<T>) -> Result<Cow<'_, Lut3D<T>>>;
}

impl<T: Scalar> Retoucher<T> for Model<T> {
    fn lut_for(&self, lr: &ImageBuffer<T>) -> Result<Cow<'_, Lut3D<T>>> {
        Model::lut_for(self, lr).map(Cow::Owned)
    }
}

impl<T: Scalar> Retoucher<T> for Lut3D<T> {
    fn lut_for(&self, _: &ImageBuffer<T>) -> Result<Cow<'_, Lut3D<T>>> {
        Ok(Cow::Borrowed(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resolution {
    /// 360p renders.
    Lr,
    /// Stored resolution.
    Hr,
}

impl Resolution {
    pub fn label(self) -> &'static str {
        match self {
            Resolution::Lr => "lr",
            Resolution::Hr => "hr",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub expert: Expert,
    pub resolutions: Vec<Resolution>,
    pub hc: HcWeights,
    pub channels: ChannelSet,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            expert: Expert::A,
            resolutions: vec![Resolution::Lr],
            hc: HcWeights::default(),
            channels: ChannelSet::default(),
        }
    }
}

fn to_lr<T: Scalar>(img: &ImageBuffer<T>) -> ImageBuffer<T> {
    if img.height().min(img.width()) > FEATURE_SHORT_SIDE {
        resize_short_side(img, FEATURE_SHORT_SIDE)
    } else {
        img.clone()
    }
}

fn lr_mask(mask: &BinaryMask) -> BinaryMask {
    if mask.height().min(mask.width()) > FEATURE_SHORT_SIDE {
        resize_mask_short_side(mask, FEATURE_SHORT_SIDE)
    } else {
        mask.clone()
    }
}

struct PhotoResult {
    id: String,
    group_id: String,
    rows: Vec<(PhotoRow, Vec<f64>)>,
}

fn score<T: Scalar>(
    lut: &Lut3D<T>,
    img: &ImageBuffer<T>,
    target: &ImageBuffer<T>,
    mask: &BinaryMask,
    id: &str,
    group_id: &str,
    opts: &EvalOptions,
) -> Result<(PhotoRow, Vec<f64>)> {
    let pred = lut::apply(lut, img)?;
    let s = score_pair(&pred, target, Some(mask), opts.hc)?;
    Ok((PhotoRow::new(id, group_id, s), channel_means(&pred, &opts.channels)?))
}

fn assemble(results: Vec<PhotoResult>, opts: &EvalOptions) -> Result<Vec<ResolutionReport>> {
    let mut out = Vec::new();
    for (k, res) in opts.resolutions.iter().enumerate() {
        let mut rows = Vec::with_capacity(results.len());
        let mut stats: Vec<GroupStats> = Vec::new();
        for r in &results {
            let (row, means) = &r.rows[k];
            rows.push(row.clone());
            match stats.iter_mut().find(|g| g.group_id == r.group_id) {
                Some(g) => g.push(r.id.clone(), means.clone())?,
                None => {
                    let mut g = GroupStats::new(r.group_id.clone(), opts.channels.clone());
                    g.push(r.id.clone(), means.clone())?;
                    stats.push(g);
                }
            }
        }
        out.push(ResolutionReport::build(res.label(), rows, stats));
    }
    Ok(out)
}

/// Evaluates every photo of `groups` against the configured expert at each
/// requested resolution. The LUT is always chosen from the 360p render.
pub fn evaluate<T: Scalar, R: Retoucher<T>>(r: &R, groups: &[Group], opts: &EvalOptions) -> Result<MetricReport> {
    let records: Vec<_> = groups.iter().flat_map(|g| &g.members).collect();
    let results: Vec<PhotoResult> = records
        .par_iter()
        .map(|rec| {
            let (input, _) = load_image::<T>(&rec.input)?;
            let (target, _) = load_image::<T>(rec.target(opts.expert)?)?;
            input.require_same_dims(&target)?;
            let mask = load_mask_for(&rec.mask, input.dims())?;
            let lr_in = to_lr(&input);
            let lut = r.lut_for(&lr_in)?;
            let mut rows = Vec::new();
            for res in &opts.resolutions {
                rows.push(match res {
                    Resolution::Lr => score(&lut, &lr_in, &to_lr(&target), &lr_mask(&mask), &rec.id, &rec.group_id, opts)?,
                    Resolution::Hr => score(&lut, &input, &target, &mask, &rec.id, &rec.group_id, opts)?,
                });
            }
            Ok(PhotoResult {
                id: rec.id.clone(),
                group_id: rec.group_id.clone(),
                rows,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MetricReport {
        expert: opts.expert.to_string(),
        channels: opts.channels.clone(),
        hc_weights: opts.hc,
        resolutions: assemble(results, opts)?,
    })
}

/// In-memory evaluation of already loaded samples (one "lr" block).
pub fn evaluate_samples<T: Scalar, R: Retoucher<T>>(
    r: &R,
    samples: &[Sample<T>],
    hc: HcWeights,
    channels: &ChannelSet,
) -> Result<ResolutionReport> {
    let opts = EvalOptions {
        expert: Expert::A,
        resolutions: vec![Resolution::Lr],
        hc,
        channels: channels.clone(),
    };
    let results: Vec<PhotoResult> = samples
        .par_iter()
        .map(|s| {
            let lut = r.lut_for(&to_lr(&s.input))?;
            Ok(PhotoResult {
                id: s.id.clone(),
                group_id: s.group_id.clone(),
                rows: vec![score(&lut, &s.input, &s.target, &s.mask, &s.id, &s.group_id, &opts)?],
            })
        })
        .collect::<Result<_>>()?;
    Ok(assemble(results, &opts)?.remove(0))
}
