//! Procedural benchmark: groups of jittered views of one scene, elliptical
//! subject masks, and three expert styles that correct subject and
//! background differently.

mod scene;

pub use scene::{random_smooth_lut, render_scene, Scene};

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{apply_jitter, jitter_pixel, JitterRanges, TonalJitter, DEFAULT_ORDER};
use crate::color::ColorSpaceTag;
use crate::error::{Error, Result};
use crate::imaging::manifest::{write_manifest, ManifestLine};
use crate::imaging::{save_image, save_mask, BinaryMask, BitDepth, Expert, ImageBuffer, Split};
use crate::lut::{self, save_cube, Lut3D};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub groups: usize,
    pub min_photos: usize,
    pub max_photos: usize,
    pub height: usize,
    pub width: usize,
    /// Base scenes are this much larger than a photo on each side; members
    /// are crops at random offsets.
    pub base_margin: f64,
    /// Per-member tonal variation applied to inputs.
    pub member_jitter: JitterRanges,
    /// Lattice size of the ground-truth style LUTs.
    pub gt_lut_size: usize,
    /// Strength of the random part of each style.
    pub style_strength: f64,
    /// Extra adjustment separating subject and background corrections.
    pub subject_shift: TonalJitter,
    pub background_shift: TonalJitter,
    pub test_fraction: f64,
    pub input_depth: BitDepth,
    pub target_depth: BitDepth,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            groups: 40,
            min_photos: 3,
            max_photos: 9,
            height: 360,
            width: 540,
            base_margin: 0.2,
            member_jitter: JitterRanges {
                exposure: 0.5,
                temperature: 0.4,
                tint: 0.25,
                highlights: 0.2,
                contrast: 0.2,
                saturation: 0.25,
            },
            gt_lut_size: 17,
            style_strength: 0.08,
            subject_shift: TonalJitter {
                exposure: 0.35,
                temperature: 0.35,
                contrast: -0.1,
                saturation: -0.15,
                ..TonalJitter::default()
            },
            background_shift: TonalJitter {
                exposure: -0.3,
                temperature: -0.3,
                contrast: 0.2,
                saturation: 0.3,
                ..TonalJitter::default()
            },
            test_fraction: 0.2,
            input_depth: BitDepth::Sixteen,
            target_depth: BitDepth::Eight,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.groups >= 1
            && 1 <= self.min_photos
            && self.min_photos <= self.max_photos
            && self.height >= 8
            && self.width >= 8
            && self.base_margin >= 0.0
            && self.gt_lut_size >= 2
            && (0.0..=1.0).contains(&self.test_fraction);
        if !ok {
            return Err(Error::Config(format!("invalid synthetic spec {self:?}")));
        }
        self.member_jitter.validate()
    }

    /// Number of test groups: round(fraction · groups).
    pub fn test_groups(&self) -> usize {
        (self.test_fraction * self.groups as f64).round() as usize
    }
}

/// Subject and background ground-truth LUTs of one expert.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertStyle {
    pub subject: Lut3D<f32>,
    pub background: Lut3D<f32>,
}

fn shifted(base: &Lut3D<f32>, j: &TonalJitter) -> Lut3D<f32> {
    let entries = base
        .entries()
        .iter()
        .map(|e| jitter_pixel(e.map(f64::from), j, &DEFAULT_ORDER).map(|v| v as f32))
        .collect();
    Lut3D::from_entries(base.size(), entries).expect("jittered entries are finite")
}

pub fn expert_styles(spec: &SynthSpec) -> Vec<ExpertStyle> {
    Expert::ALL
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let base = random_smooth_lut(spec.gt_lut_size, spec.style_strength, spec.seed ^ (0x5EED_0000 + k as u64));
            ExpertStyle {
                subject: shifted(&base, &spec.subject_shift),
                background: shifted(&base, &spec.background_shift),
            }
        })
        .collect()
}

/// Retouches `content` with the subject LUT inside `mask`, the background
/// LUT elsewhere.
pub fn render_target(content: &ImageBuffer<f32>, mask: &BinaryMask, style: &ExpertStyle) -> Result<ImageBuffer<f32>> {
    let subj = lut::apply(&style.subject, content)?;
    let bg = lut::apply(&style.background, content)?;
    let mut out = bg;
    for (i, &m) in mask.data().iter().enumerate() {
        if m {
            out.data_mut()[3 * i..3 * i + 3].copy_from_slice(&subj.data()[3 * i..3 * i + 3]);
        }
    }
    Ok(out)
}

/// One generated photo, kept in memory.
#[derive(Debug, Clone)]
pub struct SynthPhoto {
    pub id: String,
    pub group_id: String,
    pub input: ImageBuffer<f32>,
    /// Un-jittered aligned content of the member.
    pub content: ImageBuffer<f32>,
    pub mask: BinaryMask,
    pub targets: Vec<ImageBuffer<f32>>,
    pub jitter: TonalJitter,
}

pub fn group_id(g: usize) -> String {
    format!("g{g:03}")
}

/// Builds group `g` in memory; its RNG stream depends only on (seed, g).
pub fn generate_group(spec: &SynthSpec, styles: &[ExpertStyle], g: usize) -> Result<Vec<SynthPhoto>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(g as u64 + 1);
    let bh = (spec.height as f64 * (1.0 + spec.base_margin)).round() as usize;
    let bw = (spec.width as f64 * (1.0 + spec.base_margin)).round() as usize;
    let scene = Scene::random(&mut rng);
    let (base, base_mask) = render_scene(&scene, bh, bw);
    let n = rng.random_range(spec.min_photos..=spec.max_photos);
    let gid = group_id(g);
    let mut out = Vec::with_capacity(n);
    for p in 0..n {
        let y = rng.random_range(0..=bh - spec.height);
        let x = rng.random_range(0..=bw - spec.width);
        let jitter = spec.member_jitter.sample(&mut rng);
        let content = base.crop(y, x, spec.height, spec.width)?;
        let mask = base_mask.crop(y, x, spec.height, spec.width)?;
        let input = apply_jitter(&content, &jitter)?;
        let targets = styles
            .iter()
            .map(|s| render_target(&content, &mask, s))
            .collect::<Result<Vec<_>>>()?;
        out.push(SynthPhoto {
            id: format!("{gid}_p{p:02}"),
            group_id: gid.clone(),
            input,
            content,
            mask,
            targets,
            jitter,
        });
    }
    Ok(out)
}

/// Writes the dataset under `dir`: `inputs/`, `targets_{a,b,c}/`, `masks/`,
/// `gt/` style LUTs, `manifest.jsonl` and `synth_spec.json`. Returns the
/// manifest path.
pub fn generate(spec: &SynthSpec, dir: &Path) -> Result<PathBuf> {
    spec.validate()?;
    let subdirs = ["inputs", "targets_a", "targets_b", "targets_c", "masks", "gt"];
    for s in subdirs {
        fs::create_dir_all(dir.join(s)).map_err(|e| Error::io(dir.join(s), e))?;
    }
    let styles = expert_styles(spec);
    for (e, st) in Expert::ALL.iter().zip(&styles) {
        save_cube(&dir.join(format!("gt/expert_{e}_subject.cube")), &st.subject, &format!("expert {e} subject"))?;
        save_cube(
            &dir.join(format!("gt/expert_{e}_background.cube")),
            &st.background,
            &format!("expert {e} background"),
        )?;
    }
    // test groups: a seeded choice independent of generation order
    let mut ids: Vec<usize> = (0..spec.groups).collect();
    let mut split_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    split_rng.set_stream(0);
    rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut split_rng);
    let test: std::collections::HashSet<usize> = ids.into_iter().take(spec.test_groups()).collect();

    let per_group: Vec<Vec<ManifestLine>> = (0..spec.groups)
        .into_par_iter()
        .map(|g| {
            let photos = generate_group(spec, &styles, g)?;
            let split = if test.contains(&g) { Split::Test } else { Split::Train };
            photos
                .iter()
                .map(|ph| {
                    let input = PathBuf::from(format!("inputs/{}.png", ph.id));
                    let mask = PathBuf::from(format!("masks/{}.png", ph.id));
                    save_image(&dir.join(&input), &ph.input, spec.input_depth)?;
                    save_mask(&dir.join(&mask), &ph.mask)?;
                    let mut targets = Vec::new();
                    for (e, t) in Expert::ALL.iter().zip(&ph.targets) {
                        let p = PathBuf::from(format!("targets_{e}/{}.png", ph.id));
                        save_image(&dir.join(&p), t, spec.target_depth)?;
                        targets.push(p);
                    }
                    Ok(ManifestLine {
                        id: Some(ph.id.clone()),
                        group_id: Some(ph.group_id.clone()),
                        input: Some(input),
                        target_a: Some(targets[0].clone()),
                        target_b: Some(targets[1].clone()),
                        target_c: Some(targets[2].clone()),
                        mask: Some(mask),
                        split: Some(split),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let lines: Vec<ManifestLine> = per_group.into_iter().flatten().collect();
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &lines)?;
    let spec_json = serde_json::to_string_pretty(spec).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(dir.join("synth_spec.json"), spec_json).map_err(|e| Error::io(dir.join("synth_spec.json"), e))?;
    Ok(manifest)
}

/// In-memory pairs for LUT-recovery experiments: uniformly random pixels
/// mapped through `gt`.
pub fn lut_pairs(gt: &Lut3D<f32>, count: usize, height: usize, width: usize, seed: u64) -> Vec<(ImageBuffer<f32>, ImageBuffer<f32>)> {
    (0..count)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let input = ImageBuffer::from_fn(height, width, ColorSpaceTag::SrgbNonlinear, |_, _| {
                [rng.random::<f32>(), rng.random::<f32>(), rng.random::<f32>()]
            });
            let target = lut::apply(gt, &input).expect("rgb input");
            (input, target)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SynthSpec {
        SynthSpec {
            groups: 3,
            min_photos: 3,
            max_photos: 4,
            height: 24,
            width: 36,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn group_generation_is_deterministic() {
        let spec = tiny();
        let styles = expert_styles(&spec);
        let a = generate_group(&spec, &styles, 1).unwrap();
        let b = generate_group(&spec, &styles, 1).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.input, y.input);
            assert_eq!(x.targets, y.targets);
        }
        assert!((3..=4).contains(&a.len()));
    }

    #[test]
    fn targets_follow_mask() {
        let spec = tiny();
        let styles = expert_styles(&spec);
        let photos = generate_group(&spec, &styles, 0).unwrap();
        let ph = &photos[0];
        let subj = lut::apply(&styles[0].subject, &ph.content).unwrap();
        let bg = lut::apply(&styles[0].background, &ph.content).unwrap();
        for (i, &m) in ph.mask.data().iter().enumerate() {
            let want = if m { &subj } else { &bg };
            assert_eq!(ph.targets[0].data()[3 * i..3 * i + 3], want.data()[3 * i..3 * i + 3]);
        }
    }
}
