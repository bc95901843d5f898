//! Metric reports: per-photo rows, per-group M_GLC rows and a summary block,
//! emitted as JSON, CSV and a plain-text table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{glc_measure, ChannelSet, GroupStats, HcWeights, PairScores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotoRow {
    pub id: String,
    pub group_id: String,
    pub psnr: f64,
    pub delta_e: f64,
    pub psnr_hc: f64,
    pub delta_e_hc: f64,
}

impl PhotoRow {
    pub fn new(id: impl Into<String>, group_id: impl Into<String>, s: PairScores) -> Self {
        Self {
            id: id.into(),
            group_id: group_id.into(),
            psnr: s.psnr,
            delta_e: s.delta_e,
            psnr_hc: s.psnr_hc,
            delta_e_hc: s.delta_e_hc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group_id: String,
    pub m: usize,
    pub m_glc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub photos: usize,
    pub groups: usize,
    pub psnr: f64,
    pub delta_e: f64,
    pub psnr_hc: f64,
    pub delta_e_hc: f64,
    pub m_glc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub resolution: String,
    pub photos: Vec<PhotoRow>,
    pub groups: Vec<GroupRow>,
    pub summary: Summary,
}

impl ResolutionReport {
    /// Photo rows are sorted by (group, id) and groups by id so the report
    /// does not depend on evaluation order.
    pub fn build(resolution: impl Into<String>, mut photos: Vec<PhotoRow>, mut stats: Vec<GroupStats>) -> Self {
        photos.sort_by(|a, b| (&a.group_id, &a.id).cmp(&(&b.group_id, &b.id)));
        stats.sort_by(|a, b| a.group_id.cmp(&b.group_id));
        let glc = glc_measure(&stats);
        let n = photos.len();
        let mean = |f: fn(&PhotoRow) -> f64| {
            if n == 0 {
                f64::NAN
            } else {
                photos.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let summary = Summary {
            photos: n,
            groups: glc.per_group.iter().filter(|g| g.2.is_some()).count(),
            psnr: mean(|p| p.psnr),
            delta_e: mean(|p| p.delta_e),
            psnr_hc: mean(|p| p.psnr_hc),
            delta_e_hc: mean(|p| p.delta_e_hc),
            m_glc: glc.mean,
        };
        Self {
            resolution: resolution.into(),
            photos,
            groups: glc
                .per_group
                .into_iter()
                .map(|(group_id, m, m_glc)| GroupRow { group_id, m, m_glc })
                .collect(),
            summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub expert: String,
    pub channels: ChannelSet,
    pub hc_weights: HcWeights,
    pub resolutions: Vec<ResolutionReport>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    kind: &'a str,
    resolution: &'a str,
    id: &'a str,
    group_id: &'a str,
    m: Option<usize>,
    psnr: Option<f64>,
    delta_e: Option<f64>,
    psnr_hc: Option<f64>,
    delta_e_hc: Option<f64>,
    m_glc: Option<f64>,
}

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.prec$}"))
}

impl MetricReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// One CSV table with a `kind` column: `photo`, `group` or `summary`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidArgument(e.to_string());
        for r in &self.resolutions {
            for p in &r.photos {
                w.serialize(CsvRow {
                    kind: "photo",
                    resolution: &r.resolution,
                    id: &p.id,
                    group_id: &p.group_id,
                    m: None,
                    psnr: Some(p.psnr),
                    delta_e: Some(p.delta_e),
                    psnr_hc: Some(p.psnr_hc),
                    delta_e_hc: Some(p.delta_e_hc),
                    m_glc: None,
                })
                .map_err(csv_err)?;
            }
            for g in &r.groups {
                w.serialize(CsvRow {
                    kind: "group",
                    resolution: &r.resolution,
                    id: "",
                    group_id: &g.group_id,
                    m: Some(g.m),
                    psnr: None,
                    delta_e: None,
                    psnr_hc: None,
                    delta_e_hc: None,
                    m_glc: g.m_glc,
                })
                .map_err(csv_err)?;
            }
            let s = &r.summary;
            w.serialize(CsvRow {
                kind: "summary",
                resolution: &r.resolution,
                id: "",
                group_id: "",
                m: Some(s.photos),
                psnr: Some(s.psnr),
                delta_e: Some(s.delta_e),
                psnr_hc: Some(s.psnr_hc),
                delta_e_hc: Some(s.delta_e_hc),
                m_glc: s.m_glc,
            })
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Plain-text block: one row per resolution with the five measures.
    pub fn summary_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "expert {}  channels {}  hc weights human={} alpha={}",
            self.expert, self.channels, self.hc_weights.human_weight, self.hc_weights.alpha
        );
        let _ = writeln!(
            s,
            "{:<4} {:>7} {:>7} {:>9} {:>9} {:>9} {:>10} {:>7}",
            "res", "photos", "PSNR", "dE", "PSNR^HC", "dE^HC", "M_GLC", "groups"
        );
        for r in &self.resolutions {
            let m = &r.summary;
            let _ = writeln!(
                s,
                "{:<4} {:>7} {:>7.2} {:>9.2} {:>9.2} {:>9.2} {:>10} {:>7}",
                r.resolution,
                m.photos,
                m.psnr,
                m.delta_e,
                m.psnr_hc,
                m.delta_e_hc,
                opt(m.m_glc, 4),
                m.groups
            );
        }
        s
    }

    pub fn resolution(&self, name: &str) -> Option<&ResolutionReport> {
        self.resolutions.iter().find(|r| r.resolution == name)
    }

    /// Writes `<stem>.json`, `<stem>.csv` and `<stem>.txt` into `dir`. All
    /// three are rendered and staged first, then renamed into place.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
        let outputs = [
            (format!("{stem}.json"), self.to_json()?),
            (format!("{stem}.csv"), self.to_csv()?),
            (format!("{stem}.txt"), self.summary_table()),
        ];
        write_all_atomic(dir, &outputs)
    }
}

/// Stages every file as a hidden temp file, then renames them all; on any
/// failure the temps are removed and no final file is touched.
pub fn write_all_atomic(dir: &Path, files: &[(String, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::new();
    for (name, body) in files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, body) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            let _ = fs::remove_file(&tmp);
            return Err(Error::io(tmp, e));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut out = Vec::new();
    for (tmp, fin) in staged {
        fs::rename(&tmp, &fin).map_err(|e| Error::io(&fin, e))?;
        out.push(fin);
    }
    Ok(out)
}
