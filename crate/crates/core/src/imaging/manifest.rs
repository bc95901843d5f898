//! JSON-lines dataset manifest: one photo record per line, grouped by `group_id`.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::read_dimensions;
use crate::error::{Error, Result};

/// One of the three expert retouching styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expert {
    A,
    B,
    C,
}

impl Expert {
    pub const ALL: [Expert; 3] = [Expert::A, Expert::B, Expert::C];

    pub fn letter(self) -> char {
        match self {
            Expert::A => 'a',
            Expert::B => 'b',
            Expert::C => 'c',
        }
    }
}

impl fmt::Display for Expert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for Expert {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(Expert::A),
            "b" | "B" => Ok(Expert::B),
            "c" | "C" => Ok(Expert::C),
            other => Err(Error::InvalidArgument(format!("unknown expert '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Manifest line as written on disk. Every field is optional here so that
/// validation can report all problems at once.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ManifestLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_a: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_b: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_c: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhotoRecord {
    pub id: String,
    pub group_id: String,
    pub input: PathBuf,
    pub targets: BTreeMap<Expert, PathBuf>,
    pub mask: PathBuf,
}

impl PhotoRecord {
    pub fn target(&self, expert: Expert) -> Result<&Path> {
        self.targets
            .get(&expert)
            .map(PathBuf::as_path)
            .ok_or_else(|| Error::MissingTarget {
                expert: expert.letter(),
                id: self.id.clone(),
            })
    }
}

/// Photos sharing a group id, ordered by photo id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub group_id: String,
    pub members: Vec<PhotoRecord>,
}

impl Group {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPolicy {
    /// Fraction of groups (without an explicit split) sent to the test set.
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for SplitPolicy {
    fn default() -> Self {
        Self {
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<Group>,
    pub test: Vec<Group>,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Group] {
        match split {
            Split::Train => &self.train,
            Split::Test => &self.test,
        }
    }

    pub fn photo_count(&self) -> usize {
        self.train.iter().chain(&self.test).map(Group::len).sum()
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(path: &Path, policy: SplitPolicy) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_manifest(&text, base, policy)
}

/// Parses and validates manifest text; relative paths resolve against `base`.
pub fn parse_manifest(text: &str, base: &Path, policy: SplitPolicy) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&policy.test_fraction) {
        return Err(Error::InvalidArgument(format!(
            "test fraction {} outside [0,1]",
            policy.test_fraction
        )));
    }
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    let mut groups: BTreeMap<String, (Vec<PhotoRecord>, Vec<Option<Split>>)> = BTreeMap::new();

    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ManifestLine = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("line {lineno}: invalid JSON: {e}"));
                continue;
            }
        };
        let id = match rec.id.as_deref().map(str::trim) {
            Some(id) if !id.is_empty() => id.to_string(),
            _ => {
                problems.push(format!("line {lineno}: missing id"));
                continue;
            }
        };
        if !seen.insert(id.clone()) {
            problems.push(format!("line {lineno}: duplicate photo id '{id}'"));
            continue;
        }
        let group_id = match rec.group_id.as_deref().map(str::trim) {
            Some(g) if !g.is_empty() => g.to_string(),
            _ => {
                problems.push(format!("photo '{id}': unknown group (no group_id)"));
                continue;
            }
        };
        let mut ok = true;
        let mut require = |field: &str, p: &Option<PathBuf>| -> Option<PathBuf> {
            match p {
                None => {
                    problems.push(format!("photo '{id}': missing {field}"));
                    ok = false;
                    None
                }
                Some(p) => {
                    let full = resolve(base, p);
                    if !full.is_file() {
                        problems.push(format!("photo '{id}': {field} file not found: {}", full.display()));
                        ok = false;
                    }
                    Some(full)
                }
            }
        };
        let input = require("input", &rec.input);
        let mask = require("mask", &rec.mask);
        let mut targets = BTreeMap::new();
        for (expert, p) in Expert::ALL.iter().zip([&rec.target_a, &rec.target_b, &rec.target_c]) {
            if p.is_some() {
                if let Some(full) = require(&format!("target_{expert}"), p) {
                    targets.insert(*expert, full);
                }
            }
        }
        if targets.is_empty() && ok {
            problems.push(format!("photo '{id}': no expert target"));
            ok = false;
        }
        let (Some(input), Some(mask), true) = (input, mask, ok) else {
            continue;
        };
        // Every referenced raster must share the input's pixel grid.
        match read_dimensions(&input) {
            Ok(dims) => {
                for p in targets.values().chain(std::iter::once(&mask)) {
                    match read_dimensions(p) {
                        Ok(d) if d == dims => {}
                        Ok(d) => problems.push(format!(
                            "photo '{id}': {} is {}x{} but input is {}x{}",
                            p.display(),
                            d.0,
                            d.1,
                            dims.0,
                            dims.1
                        )),
                        Err(e) => problems.push(format!("photo '{id}': {e}")),
                    }
                }
            }
            Err(e) => problems.push(format!("photo '{id}': {e}")),
        }
        let entry = groups.entry(group_id.clone()).or_default();
        entry.0.push(PhotoRecord {
            id,
            group_id,
            input,
            targets,
            mask,
        });
        entry.1.push(rec.split);
    }

    let mut explicit: BTreeMap<String, Split> = BTreeMap::new();
    for (gid, (_, splits)) in &groups {
        let set: HashSet<Split> = splits.iter().flatten().copied().collect();
        match set.len() {
            0 => {}
            1 if splits.iter().all(Option::is_some) => {
                explicit.insert(gid.clone(), *set.iter().next().unwrap());
            }
            _ => problems.push(format!("group '{gid}': members disagree on split")),
        }
    }

    if !problems.is_empty() {
        return Err(Error::Manifest(problems));
    }

    let mut warnings = Vec::new();
    if groups.is_empty() {
        warnings.push("manifest contains no photos".to_string());
        log::warn!("manifest contains no photos");
    }

    let test_ids = assign_split(
        groups.keys().filter(|g| !explicit.contains_key(*g)).cloned().collect(),
        policy,
    );

    let mut dataset = Dataset {
        warnings,
        ..Dataset::default()
    };
    for (gid, (mut members, _)) in groups {
        members.sort_by(|a, b| a.id.cmp(&b.id));
        let split = explicit.get(&gid).copied().unwrap_or(if test_ids.contains(&gid) {
            Split::Test
        } else {
            Split::Train
        });
        let group = Group {
            group_id: gid,
            members,
        };
        match split {
            Split::Train => dataset.train.push(group),
            Split::Test => dataset.test.push(group),
        }
    }
    Ok(dataset)
}

/// Seeded shuffle of the sorted group ids; the first `round(fraction * n)` go to test.
pub fn assign_split(mut group_ids: Vec<String>, policy: SplitPolicy) -> HashSet<String> {
    group_ids.sort();
    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    group_ids.shuffle(&mut rng);
    let n_test = (policy.test_fraction * group_ids.len() as f64).round() as usize;
    group_ids.into_iter().take(n_test).collect()
}

pub fn write_manifest(path: &Path, lines: &[ManifestLine]) -> Result<()> {
    let mut out = Vec::new();
    for line in lines {
        serde_json::to_writer(&mut out, line).map_err(|e| Error::format(path, e.to_string()))?;
        out.push(b'\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
