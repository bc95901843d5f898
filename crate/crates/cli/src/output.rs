//! Result, summary and sidecar metadata files shared by all commands.

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use ppr_core::metrics::write_all_atomic;
use serde::Serialize;

/// Tracks one command run; timestamps only ever reach the `.meta.json`
/// sidecar so the result files stay byte-identical across reruns.
pub struct Run {
    name: &'static str,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    pub fn start(name: &'static str) -> Self {
        Self {
            name,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    /// Writes `<name>.json` and `<name>.txt` together, then the sidecar.
    pub fn finish<R: Serialize>(self, dir: &Path, result: &R, summary: &str) -> anyhow::Result<Vec<PathBuf>> {
        let json = serde_json::to_string_pretty(result)? + "\n";
        let files = [
            (format!("{}.json", self.name), json),
            (format!("{}.txt", self.name), summary.to_string()),
        ];
        let out = write_all_atomic(dir, &files).with_context(|| format!("writing {} results", self.name))?;
        self.write_meta(dir)?;
        print!("{summary}");
        Ok(out)
    }

    pub fn write_meta(&self, dir: &Path) -> anyhow::Result<()> {
        let secs = |t: SystemTime| t.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let meta = serde_json::json!({
            "command": self.name,
            "argv": std::env::args().collect::<Vec<_>>(),
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
            "started_unix": secs(self.started),
            "finished_unix": secs(SystemTime::now()),
            "elapsed_s": self.clock.elapsed().as_secs_f64(),
        });
        let path = dir.join(format!("{}.meta.json", self.name));
        std::fs::write(&path, serde_json::to_string_pretty(&meta)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}

/// Parses TOML for `.toml` files and JSON otherwise.
pub fn load_structured<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    } else {
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
