use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppr_core::imaging::{load_image, save_image, BitDepth};
use ppr_core::lut::save_cube;
use ppr_core::training::init_model;
use ppr_core::{Checkpoint, ColorSpaceTag, ImageBuffer, Lut, TrainConfig};

fn ppr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppr"))
        .args(args)
        .env_remove("PPR_THREADS")
        .output()
        .expect("spawn ppr")
}

fn ok(args: &[&str]) -> Output {
    let out = ppr(args);
    assert!(
        out.status.success(),
        "ppr {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, seed: u64) -> PathBuf {
    fs::create_dir_all(dir).unwrap();
    let cfg = dir.join("synth.toml");
    fs::write(&cfg, "groups = 4\nmin_photos = 3\nmax_photos = 4\nheight = 24\nwidth = 36\n").unwrap();
    let data = dir.join("data");
    ok(&["gen-data", "--out-dir", s(&data), "--config", s(&cfg), "--seed", &seed.to_string()]);
    data.join("manifest.jsonl")
}

fn identity_cube(dir: &Path) -> PathBuf {
    let p = dir.join("identity.cube");
    save_cube(&p, &Lut::identity(17).unwrap(), "identity").unwrap();
    p
}

#[test]
fn unknown_expert_is_a_usage_error() {
    let out = ppr(&["eval", "--manifest", "m.jsonl", "--lut", "x.cube", "--expert", "d", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn checkpoint_and_lut_are_exclusive() {
    let out = ppr(&["eval", "--manifest", "m", "--lut", "x", "--checkpoint", "y", "--out-dir", "o"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_eval_writes_no_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cube = identity_cube(dir.path());
    let out = ppr(&["eval", "--manifest", "missing.jsonl", "--lut", s(&cube), "--out-dir", s(&out_dir)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn identity_apply_reproduces_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let cube = identity_cube(dir.path());
    let img = ImageBuffer::<f64>::from_fn(37, 23, ColorSpaceTag::SrgbNonlinear, |y, x| {
        [y as f64 / 36.0, x as f64 / 22.0, ((x * y) % 7) as f64 / 6.0]
    });
    for (ext, depth) in [("png", BitDepth::Sixteen), ("ppm", BitDepth::Eight), ("png", BitDepth::Eight)] {
        let input = dir.path().join(format!("in{}.{ext}", depth.bits()));
        let output = dir.path().join(format!("out/o{}.{ext}", depth.bits()));
        save_image(&input, &img, depth).unwrap();
        ok(&["apply", "--lut", s(&cube), "--input", s(&input), "--output", s(&output), "--tile-rows", "5"]);
        let (a, da) = load_image::<f64>(&input).unwrap();
        let (b, db) = load_image::<f64>(&output).unwrap();
        assert_eq!(da, db);
        assert_eq!(a, b, "{ext} {depth:?}");
    }
    assert!(dir.path().join("out/apply.json").exists());
    assert!(dir.path().join("out/apply.meta.json").exists());
}

#[test]
fn zero_epochs_save_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(dir.path(), 3);
    let cfg_path = dir.path().join("train.toml");
    fs::write(&cfg_path, "lut_size = 9\nnum_basis = 3\nseed = 4\n").unwrap();
    let run = dir.path().join("run");
    ok(&["train", "--manifest", s(&manifest), "--config", s(&cfg_path), "--epochs", "0", "--out-dir", s(&run)]);
    let cfg = TrainConfig {
        lut_size: 9,
        num_basis: 3,
        seed: 4,
        epochs: 0,
        ..TrainConfig::default()
    };
    let want = Checkpoint::from_model(&init_model::<f32>(&cfg).unwrap(), cfg.hash());
    let got = Checkpoint::load(&run.join("checkpoint.json")).unwrap();
    assert_eq!(got, want);
}

fn eval_csv(manifest: &Path, lut: &Path, out: &Path, extra: &[&str]) -> String {
    let mut args = vec!["eval", "--manifest", s(manifest), "--lut", s(lut), "--out-dir", s(out)];
    args.extend_from_slice(extra);
    ok(&args);
    fs::read_to_string(out.join("report.csv")).unwrap()
}

#[test]
fn identity_on_targets_has_zero_delta_e() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(dir.path(), 1);
    let text = fs::read_to_string(&manifest).unwrap();
    let lines: Vec<String> = text
        .lines()
        .map(|l| {
            let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
            v["input"] = v["target_b"].clone();
            v.to_string()
        })
        .collect();
    let m2 = manifest.with_file_name("as_inputs.jsonl");
    fs::write(&m2, lines.join("\n")).unwrap();
    let cube = identity_cube(dir.path());
    let csv = eval_csv(&m2, &cube, &dir.path().join("ev"), &["--expert", "b", "--split", "all", "--resolution", "both"]);
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "delta_e").unwrap();
    let kind = headers.iter().position(|h| h == "kind").unwrap();
    let mut photos = 0;
    for r in rdr.records() {
        let r = r.unwrap();
        if &r[kind] == "photo" {
            photos += 1;
            let v: f64 = r[col].parse().unwrap();
            assert!(v < 1e-4, "{v}");
        }
    }
    assert!(photos > 0);
}

#[test]
fn lab_and_ab_differ_by_the_lightness_term() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(dir.path(), 2);
    let cube = identity_cube(dir.path());
    let m_glc = |ch: &str| {
        let out = dir.path().join(format!("ev_{ch}"));
        eval_csv(&manifest, &cube, &out, &["--channels", ch, "--split", "all"]);
        let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        r["resolutions"][0]["summary"]["m_glc"].as_f64().unwrap()
    };
    let (lab, ab, l) = (m_glc("Lab"), m_glc("ab"), m_glc("L"));
    assert!((lab - ab - l).abs() <= 1e-9 * lab, "{lab} {ab} {l}");
}

#[test]
fn reruns_are_byte_identical_apart_from_meta() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(&dir.path().join("a"), 7);
    let b = gen(&dir.path().join("b"), 7);
    for f in ["manifest.jsonl", "gen_data.json", "gen_data.txt", "inputs/g000_p00.png", "targets_c/g001_p01.png"] {
        assert_eq!(
            fs::read(a.with_file_name(f)).unwrap(),
            fs::read(b.with_file_name(f)).unwrap(),
            "{f}"
        );
    }
    let cube = identity_cube(dir.path());
    let r1 = eval_csv(&a, &cube, &dir.path().join("e1"), &[]);
    let r2 = eval_csv(&a, &cube, &dir.path().join("e2"), &[]);
    assert_eq!(r1, r2);
}

#[test]
fn thread_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cube = identity_cube(dir.path());
    let input = dir.path().join("in.png");
    save_image(&input, &ImageBuffer::<f32>::filled(4, 4, [0.5; 3], ColorSpaceTag::SrgbNonlinear), BitDepth::Eight).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_ppr"))
        .args(["--threads", "3", "apply", "--lut", s(&cube), "--input", s(&input), "--output"])
        .arg(dir.path().join("o.png"))
        .env("PPR_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("apply.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["threads"], 2);

    let bad = Command::new(env!("CARGO_BIN_EXE_ppr"))
        .args(["apply", "--lut", s(&cube), "--input", s(&input), "--output"])
        .arg(dir.path().join("o.png"))
        .env("PPR_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn preview_and_report_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = gen(dir.path(), 5);
    let input = manifest.with_file_name("inputs/g000_p00.png");
    let prev = dir.path().join("prev");
    ok(&["augment-preview", "--input", s(&input), "--out-dir", s(&prev), "--count", "3", "--seed", "9"]);
    for f in ["before.png", "after_00.png", "after_02.png", "pair_01.png", "augment_preview.json", "augment_preview.txt"] {
        assert!(prev.join(f).exists(), "{f}");
    }
    let (pair, _) = load_image::<f32>(&prev.join("pair_00.png")).unwrap();
    let (before, _) = load_image::<f32>(&input).unwrap();
    assert_eq!(pair.width(), 2 * before.width());

    let cube = identity_cube(dir.path());
    eval_csv(&manifest, &cube, &dir.path().join("ev"), &["--resolution", "both"]);
    let rep = dir.path().join("rep");
    let ev = dir.path().join("ev/report.json");
    ok(&["report", "--input", s(&ev), "--input", s(&ev), "--out-dir", s(&rep)]);
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}
