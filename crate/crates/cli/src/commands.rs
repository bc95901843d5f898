use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ppr_core::augment::apply_jitter_ordered;
use ppr_core::imaging::{load_image, load_manifest, save_image, Group, ImageBuffer, SplitPolicy};
use ppr_core::lut::{apply_file, load_cube};
use ppr_core::metrics::{ChannelSet, HcWeights, MetricReport};
use ppr_core::synthdata::{self, SynthSpec};
use ppr_core::training::{evaluate, init_model, load_samples, save_log_csv, train_from, EvalOptions, Resolution};
use ppr_core::{Checkpoint, Lut, RetouchModel, TrainConfig};

use crate::output::{load_structured, Run};
use crate::{ApplyArgs, AugmentPreviewArgs, EvalArgs, GenDataArgs, ReportArgs, ResolutionArg, SplitArg, TrainArgs};

pub fn gen_data(a: GenDataArgs) -> anyhow::Result<()> {
    let run = Run::start("gen_data");
    let mut spec: SynthSpec = match &a.config {
        Some(p) => load_structured(p)?,
        None => SynthSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let manifest = synthdata::generate(&spec, &a.out_dir).context("generating synthetic data")?;
    let ds = load_manifest(&manifest, SplitPolicy::default())?;

    #[derive(Serialize)]
    struct Out {
        manifest: String,
        groups: usize,
        train_groups: usize,
        test_groups: usize,
        photos: usize,
        seed: u64,
    }
    let out = Out {
        manifest: "manifest.jsonl".into(),
        groups: ds.train.len() + ds.test.len(),
        train_groups: ds.train.len(),
        test_groups: ds.test.len(),
        photos: ds.photo_count(),
        seed: spec.seed,
    };
    let summary = format!(
        "generated {} photos in {} groups ({} train / {} test) at {}x{}, seed {}\nmanifest: {}\n",
        out.photos,
        out.groups,
        out.train_groups,
        out.test_groups,
        spec.height,
        spec.width,
        spec.seed,
        out.manifest
    );
    run.finish(&a.out_dir, &out, &summary)?;
    Ok(())
}

fn train_config(path: Option<&Path>) -> anyhow::Result<TrainConfig> {
    match path {
        Some(p) => Ok(TrainConfig::load(p)?),
        None => Ok(TrainConfig::default()),
    }
}

pub fn train(a: TrainArgs) -> anyhow::Result<()> {
    let run = Run::start("train");
    let mut cfg = train_config(a.config.as_deref())?;
    if let Some(e) = a.expert {
        cfg.expert = e.into();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.epochs {
        cfg.epochs = n;
    }
    cfg.validate()?;
    let ds = load_manifest(&a.manifest, cfg.split_policy())?;
    for w in &ds.warnings {
        log::warn!("{w}");
    }
    let train_set = load_samples::<f32>(&ds.train, cfg.expert, cfg.train_short_side)?;
    let eval_set = if cfg.log_metrics {
        load_samples::<f32>(&ds.test, cfg.expert, cfg.train_short_side)?
    } else {
        Vec::new()
    };
    let init: RetouchModel = init_model(&cfg)?;
    let outcome = train_from(init, &train_set, &eval_set, &cfg, |row| {
        eprintln!("epoch {:>4}  loss {:.6}", row.epoch, row.total);
    })?;

    std::fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let hash = cfg.hash();
    Checkpoint::from_model(&outcome.model, hash.clone()).save(&a.out_dir.join("checkpoint.json"))?;
    save_log_csv(&a.out_dir.join("train_log.csv"), &outcome.log)?;
    std::fs::write(a.out_dir.join("config.toml"), cfg.to_toml())?;

    #[derive(Serialize)]
    struct Out {
        checkpoint: String,
        log: String,
        config_hash: String,
        epochs: usize,
        steps: usize,
        train_photos: usize,
        final_loss: Option<f64>,
    }
    let out = Out {
        checkpoint: "checkpoint.json".into(),
        log: "train_log.csv".into(),
        config_hash: hash,
        epochs: cfg.epochs,
        steps: outcome.steps,
        train_photos: train_set.len(),
        final_loss: outcome.log.last().map(|r| r.total),
    };
    let mut summary = format!(
        "trained {} epochs ({} steps) on {} photos, expert {}, lambda {}, human_weight {}, alpha {}\n",
        cfg.epochs, outcome.steps, out.train_photos, cfg.expert, cfg.lambda, cfg.human_weight, cfg.alpha
    );
    if let Some(r) = outcome.log.last() {
        let _ = writeln!(summary, "final loss: l_hc {:.6}  l_glc {:.6}  total {:.6}", r.l_hc, r.l_glc, r.total);
        if let (Some(p), Some(ph)) = (r.psnr, r.psnr_hc) {
            let _ = writeln!(summary, "test PSNR {p:.3}  PSNR^HC {ph:.3}");
        }
    }
    run.finish(&a.out_dir, &out, &summary)?;
    Ok(())
}

enum Loaded {
    Model(RetouchModel),
    Lut(Lut),
}

fn load_retoucher(checkpoint: Option<&Path>, lut: Option<&Path>) -> anyhow::Result<Loaded> {
    match (checkpoint, lut) {
        (Some(c), None) => Ok(Loaded::Model(Checkpoint::load(c)?.to_model()?)),
        (None, Some(l)) => Ok(Loaded::Lut(load_cube(l)?)),
        _ => bail!("exactly one of --checkpoint and --lut is required"),
    }
}

pub fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let run = Run::start("eval");
    let cfg = train_config(a.config.as_deref())?;
    let mut policy = cfg.split_policy();
    if let Some(s) = a.seed {
        policy.seed = s;
    }
    let channels: ChannelSet = match &a.channels {
        Some(s) => s.parse()?,
        None => cfg.channels.clone(),
    };
    let mut hc: HcWeights = cfg.eval_weights;
    if let Some(h) = a.human_weight {
        hc.human_weight = h;
    }
    if let Some(al) = a.alpha {
        hc.alpha = al;
    }
    if !(hc.human_weight > 0.0 && hc.alpha > 0.0) {
        bail!("--human-weight and --alpha must be positive");
    }
    let resolutions = match a.resolution {
        ResolutionArg::Lr => vec![Resolution::Lr],
        ResolutionArg::Hr => vec![Resolution::Hr],
        ResolutionArg::Both => vec![Resolution::Lr, Resolution::Hr],
    };
    let ds = load_manifest(&a.manifest, policy)?;
    let groups: Vec<Group> = match a.split {
        SplitArg::Train => ds.train.clone(),
        SplitArg::Test => ds.test.clone(),
        SplitArg::All => ds.train.iter().chain(&ds.test).cloned().collect(),
    };
    if groups.is_empty() {
        bail!("no groups in the selected split");
    }
    let opts = EvalOptions {
        expert: a.expert.into(),
        resolutions,
        hc,
        channels,
    };
    let report = match load_retoucher(a.checkpoint.as_deref(), a.lut.as_deref())? {
        Loaded::Model(m) => evaluate(&m, &groups, &opts)?,
        Loaded::Lut(l) => evaluate(&l, &groups, &opts)?,
    };
    report.write_files(&a.out_dir, "report")?;
    run.write_meta(&a.out_dir)?;
    print!("{}", report.summary_table());
    Ok(())
}

pub fn apply(a: ApplyArgs) -> anyhow::Result<()> {
    let run = Run::start("apply");
    let lut = match load_retoucher(a.checkpoint.as_deref(), a.lut.as_deref())? {
        Loaded::Lut(l) => l,
        // the model picks its LUT from the 360p render, so the image is read once up front
        Loaded::Model(m) => {
            let (img, _) = load_image::<f32>(&a.input)?;
            m.lut_for(&img)?
        }
    };
    if let Some(parent) = a.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let info = apply_file(&lut, &a.input, &a.output, a.tile_rows)
        .with_context(|| format!("applying LUT to {}", a.input.display()))?;

    #[derive(Serialize)]
    struct Out {
        input: String,
        output: String,
        height: usize,
        width: usize,
        bit_depth: u32,
        lut_size: usize,
        tile_rows: usize,
    }
    let out = Out {
        input: a.input.display().to_string(),
        output: a.output.display().to_string(),
        height: info.height,
        width: info.width,
        bit_depth: info.depth.bits(),
        lut_size: lut.size(),
        tile_rows: a.tile_rows,
    };
    let summary = format!(
        "applied S={} LUT to {}x{} {}-bit image\n{} -> {}\n",
        out.lut_size, out.width, out.height, out.bit_depth, out.input, out.output
    );
    let dir = match a.out_dir {
        Some(d) => d,
        None => a.output.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    let dir = if dir.as_os_str().is_empty() { PathBuf::from(".") } else { dir };
    run.finish(&dir, &out, &summary)?;
    Ok(())
}

fn side_by_side(a: &ImageBuffer<f32>, b: &ImageBuffer<f32>) -> ImageBuffer<f32> {
    let (h, w) = a.dims();
    ImageBuffer::from_fn(h, 2 * w, a.tag(), |y, x| if x < w { a.pixel(y, x) } else { b.pixel(y, x - w) })
}

pub fn augment_preview(a: AugmentPreviewArgs) -> anyhow::Result<()> {
    let run = Run::start("augment_preview");
    let cfg = train_config(a.config.as_deref())?;
    let (img, depth) = load_image::<f32>(&a.input)?;
    std::fs::create_dir_all(&a.out_dir)?;

    #[derive(Serialize)]
    struct Item {
        after: String,
        pair: String,
        jitter: ppr_core::augment::TonalJitter,
    }
    let mut items = Vec::with_capacity(a.count);
    let mut summary = format!("{} jittered variants of {}\n", a.count, a.input.display());
    save_image(&a.out_dir.join("before.png"), &img, depth)?;
    for k in 0..a.count {
        let mut rng = ChaCha8Rng::seed_from_u64(a.seed ^ cfg.augment.seed);
        rng.set_stream(k as u64);
        let j = cfg.augment.ranges.sample(&mut rng);
        let after = apply_jitter_ordered(&img, &j, &cfg.augment.order)?;
        let after_name = format!("after_{k:02}.png");
        let pair_name = format!("pair_{k:02}.png");
        save_image(&a.out_dir.join(&after_name), &after, depth)?;
        save_image(&a.out_dir.join(&pair_name), &side_by_side(&img, &after), depth)?;
        let _ = writeln!(
            summary,
            "{after_name}: exposure {:+.3} temperature {:+.3} tint {:+.3} highlights {:+.3} contrast {:+.3} saturation {:+.3}",
            j.exposure, j.temperature, j.tint, j.highlights, j.contrast, j.saturation
        );
        items.push(Item {
            after: after_name,
            pair: pair_name,
            jitter: j,
        });
    }
    run.finish(&a.out_dir, &items, &summary)?;
    Ok(())
}

pub fn report(a: ReportArgs) -> anyhow::Result<()> {
    let run = Run::start("report");

    #[derive(Serialize)]
    struct Row {
        source: String,
        expert: String,
        resolution: String,
        photos: usize,
        psnr: f64,
        delta_e: f64,
        psnr_hc: f64,
        delta_e_hc: f64,
        m_glc: Option<f64>,
    }
    let mut rows = Vec::new();
    for p in &a.inputs {
        let r: MetricReport = load_structured(p)?;
        for res in &r.resolutions {
            let s = &res.summary;
            rows.push(Row {
                source: p.display().to_string(),
                expert: r.expert.clone(),
                resolution: res.resolution.clone(),
                photos: s.photos,
                psnr: s.psnr,
                delta_e: s.delta_e,
                psnr_hc: s.psnr_hc,
                delta_e_hc: s.delta_e_hc,
                m_glc: s.m_glc,
            });
        }
    }
    let width = rows.iter().map(|r| r.source.len()).max().unwrap_or(6).max(6);
    let mut summary = format!(
        "{:<width$} {:>3} {:>4} {:>7} {:>7} {:>9} {:>9} {:>9} {:>10}\n",
        "source", "exp", "res", "photos", "PSNR", "dE", "PSNR^HC", "dE^HC", "M_GLC"
    );
    for r in &rows {
        let _ = writeln!(
            summary,
            "{:<width$} {:>3} {:>4} {:>7} {:>7.2} {:>9.2} {:>9.2} {:>9.2} {:>10}",
            r.source,
            r.expert,
            r.resolution,
            r.photos,
            r.psnr,
            r.delta_e,
            r.psnr_hc,
            r.delta_e_hc,
            r.m_glc.map_or_else(|| "-".to_string(), |m| format!("{m:.4}"))
        );
    }
    run.finish(&a.out_dir, &rows, &summary)?;
    Ok(())
}
