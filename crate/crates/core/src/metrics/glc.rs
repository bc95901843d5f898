use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::color::srgb_pixel_to_lab;
use crate::error::{Error, Result};
use crate::imaging::ImageBuffer;
use crate::reduce::chunked_sum;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Channel {
    R,
    G,
    B,
    L,
    #[serde(rename = "a")]
    LabA,
    #[serde(rename = "b")]
    LabB,
}

impl Channel {
    pub const ALL: [Channel; 6] = [Channel::R, Channel::G, Channel::B, Channel::L, Channel::LabA, Channel::LabB];

    pub fn symbol(self) -> char {
        match self {
            Channel::R => 'R',
            Channel::G => 'G',
            Channel::B => 'B',
            Channel::L => 'L',
            Channel::LabA => 'a',
            Channel::LabB => 'b',
        }
    }

    fn is_lab(self) -> bool {
        matches!(self, Channel::L | Channel::LabA | Channel::LabB)
    }
}

/// Subset of {R,G,B,L,a,b}, kept in canonical order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelSet(Vec<Channel>);

impl ChannelSet {
    pub fn new(channels: impl IntoIterator<Item = Channel>) -> Result<Self> {
        let mut v: Vec<Channel> = channels.into_iter().collect();
        v.sort();
        v.dedup();
        if v.is_empty() {
            return Err(Error::InvalidArgument("empty channel set".into()));
        }
        Ok(Self(v))
    }

    pub fn channels(&self) -> &[Channel] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn needs_lab(&self) -> bool {
        self.0.iter().any(|c| c.is_lab())
    }
}

impl Default for ChannelSet {
    fn default() -> Self {
        Self(vec![Channel::LabA, Channel::LabB])
    }
}

impl FromStr for ChannelSet {
    type Err = Error;

    /// Case-sensitive: `R G B` are RGB channels, `L a b` are CIELAB.
    fn from_str(s: &str) -> Result<Self> {
        let chans = s
            .chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c {
                'R' => Ok(Channel::R),
                'G' => Ok(Channel::G),
                'B' => Ok(Channel::B),
                'L' => Ok(Channel::L),
                'a' => Ok(Channel::LabA),
                'b' => Ok(Channel::LabB),
                other => Err(Error::InvalidArgument(format!(
                    "unknown channel '{other}' (expected letters from R,G,B,L,a,b)"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelSet::new(chans)
    }
}

impl fmt::Display for ChannelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{}", c.symbol()))
    }
}

impl Serialize for ChannelSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ChannelSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Per-channel mean of an sRGB image, in the order of `channels`.
/// L/a/b means are taken over per-pixel CIELAB values.
pub fn channel_means<T: Scalar>(img: &ImageBuffer<T>, channels: &ChannelSet) -> Result<Vec<f64>> {
    img.tag().require(crate::ColorSpaceTag::SrgbNonlinear)?;
    let n = img.pixel_count();
    if n == 0 {
        return Err(Error::InvalidArgument("empty image has no mean color".into()));
    }
    let data = img.data();
    let lab = channels.needs_lab();
    let sums = chunked_sum::<6>(n, |r| {
        let mut acc = [0.0; 6];
        for i in r {
            let rgb = [data[3 * i].as_f64(), data[3 * i + 1].as_f64(), data[3 * i + 2].as_f64()];
            acc[0] += rgb[0];
            acc[1] += rgb[1];
            acc[2] += rgb[2];
            if lab {
                let p = srgb_pixel_to_lab(rgb);
                acc[3] += p.l;
                acc[4] += p.a;
                acc[5] += p.b;
            }
        }
        acc
    });
    Ok(channels
        .channels()
        .iter()
        .map(|c| {
            let k = Channel::ALL.iter().position(|x| x == c).unwrap_or(0);
            sums[k] / n as f64
        })
        .collect())
}

/// Σ_c population variance of the members' channel means. Each channel's
/// values are sorted first, so the result does not depend on member order.
pub fn glc_from_means(means: &[Vec<f64>]) -> f64 {
    let m = means.len();
    if m == 0 {
        return 0.0;
    }
    let k = means[0].len();
    let mut total = 0.0;
    for c in 0..k {
        let mut vals: Vec<f64> = means.iter().map(|v| v[c]).collect();
        vals.sort_by(f64::total_cmp);
        let mu = vals.iter().sum::<f64>() / m as f64;
        total += vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64;
    }
    total
}

/// Mean colors of one group's members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub group_id: String,
    pub channels: ChannelSet,
    pub member_ids: Vec<String>,
    pub means: Vec<Vec<f64>>,
}

impl GroupStats {
    pub fn new(group_id: impl Into<String>, channels: ChannelSet) -> Self {
        Self {
            group_id: group_id.into(),
            channels,
            member_ids: Vec::new(),
            means: Vec::new(),
        }
    }

    pub fn push(&mut self, id: impl Into<String>, means: Vec<f64>) -> Result<()> {
        if means.len() != self.channels.len() {
            return Err(Error::LengthMismatch(means.len(), self.channels.len()));
        }
        self.member_ids.push(id.into());
        self.means.push(means);
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.means.len()
    }

    /// None for groups with fewer than two members.
    pub fn measure(&self) -> Option<f64> {
        (self.m() >= 2).then(|| glc_from_means(&self.means))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlcSummary {
    /// (group id, member count, M_GLC); groups with m < 2 carry None.
    pub per_group: Vec<(String, usize, Option<f64>)>,
    /// Mean over counted groups; None when no group qualifies.
    pub mean: Option<f64>,
    pub skipped: Vec<String>,
}

pub fn glc_measure(groups: &[GroupStats]) -> GlcSummary {
    let mut per_group = Vec::with_capacity(groups.len());
    let mut skipped = Vec::new();
    let mut sum = 0.0;
    let mut counted = 0usize;
    for g in groups {
        let v = g.measure();
        match v {
            Some(x) => {
                sum += x;
                counted += 1;
            }
            None => {
                log::warn!("group {} has {} member(s); skipped for M_GLC", g.group_id, g.m());
                skipped.push(g.group_id.clone());
            }
        }
        per_group.push((g.group_id.clone(), g.m(), v));
    }
    GlcSummary {
        per_group,
        mean: (counted > 0).then(|| sum / counted as f64),
        skipped,
    }
}

/// Convenience wrapper over in-memory groups of predictions.
pub fn glc_measure_images<T: Scalar>(
    groups: &[(String, Vec<ImageBuffer<T>>)],
    channels: &ChannelSet,
) -> Result<GlcSummary> {
    let mut stats = Vec::with_capacity(groups.len());
    for (gid, imgs) in groups {
        let mut s = GroupStats::new(gid.clone(), channels.clone());
        for (k, img) in imgs.iter().enumerate() {
            s.push(k.to_string(), channel_means(img, channels)?)?;
        }
        stats.push(s);
    }
    Ok(glc_measure(&stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ColorSpaceTag;

    #[test]
    fn parses_channel_sets() {
        assert_eq!("ab".parse::<ChannelSet>().unwrap(), ChannelSet::default());
        assert_eq!("Lab".parse::<ChannelSet>().unwrap().len(), 3);
        assert_eq!("BGR".parse::<ChannelSet>().unwrap().to_string(), "RGB");
        assert!("x".parse::<ChannelSet>().is_err());
        assert!("".parse::<ChannelSet>().is_err());
        assert_eq!("RGBLab".parse::<ChannelSet>().unwrap().len(), 6);
    }

    #[test]
    fn two_member_example() {
        assert!((glc_from_means(&[vec![0.0, 0.0], vec![2.0, 4.0]]) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn identical_members_are_zero() {
        let img = ImageBuffer::filled(3, 3, [0.2f32, 0.5, 0.7], ColorSpaceTag::SrgbNonlinear);
        let s = glc_measure_images(&[("g".into(), vec![img.clone(), img.clone(), img])], &ChannelSet::default())
            .unwrap();
        assert_eq!(s.mean, Some(0.0));
    }

    #[test]
    fn singleton_groups_are_skipped() {
        let mut g1 = GroupStats::new("one", ChannelSet::default());
        g1.push("x", vec![1.0, 2.0]).unwrap();
        let mut g2 = GroupStats::new("two", ChannelSet::default());
        g2.push("x", vec![0.0, 0.0]).unwrap();
        g2.push("y", vec![2.0, 4.0]).unwrap();
        let s = glc_measure(&[g1, g2]);
        assert_eq!(s.skipped, vec!["one".to_string()]);
        assert_eq!(s.mean, Some(5.0));
        assert_eq!(glc_measure(&[]).mean, None);
    }

    #[test]
    fn rgb_means_match_direct_average() {
        let img = ImageBuffer::from_fn(4, 4, ColorSpaceTag::SrgbNonlinear, |y, x| [x as f32 / 4.0, y as f32 / 8.0, 0.5]);
        let m = channel_means(&img, &"RGB".parse().unwrap()).unwrap();
        assert!((m[0] - 0.375).abs() < 1e-12);
        assert!((m[1] - 0.1875).abs() < 1e-12);
        assert!((m[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn additive_shift_leaves_measure_unchanged() {
        let means = vec![vec![1.0, -3.0], vec![2.5, 0.5], vec![-1.0, 2.0]];
        let shifted: Vec<Vec<f64>> = means.iter().map(|v| vec![v[0] + 7.0, v[1] - 2.0]).collect();
        assert!((glc_from_means(&means) - glc_from_means(&shifted)).abs() < 1e-12);
    }
}
