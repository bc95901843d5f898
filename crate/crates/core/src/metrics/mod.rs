//! The five retouching measures: PSNR, ΔE*ab, their human-weighted
//! variants, and the group-level consistency measure.

mod glc;
mod measures;
pub mod report;

pub use glc::{
    channel_means, glc_from_means, glc_measure, glc_measure_images, Channel, ChannelSet, GlcSummary, GroupStats,
};
pub use measures::{
    delta_e, delta_e_unweighted, mse_weighted, psnr, psnr_from_mse, psnr_unweighted, score_pair, PairScores,
    PSNR_CAP_DB,
};
pub use report::{write_all_atomic, GroupRow, MetricReport, PhotoRow, ResolutionReport, Summary};

use serde::{Deserialize, Serialize};

/// Weights used for the human-centered measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HcWeights {
    pub human_weight: f64,
    pub alpha: f64,
}

impl Default for HcWeights {
    fn default() -> Self {
        Self {
            human_weight: 1.0,
            alpha: 0.5,
        }
    }
}
