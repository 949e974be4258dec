//! Training, checkpoints and the command line, end to end on small runs.

use std::path::{Path, PathBuf};

use hgcnn::cli::{self, RunConfig, CHECKPOINT_FILE, REPORT_FILE, SCORES_FILE, SPLIT_FILE};
use hgcnn::landmarks::{Label, LandmarkPoint, LandmarkSample, N_LANDMARKS};
use hgcnn::model::{
    load_checkpoint, predict, save_checkpoint, train, Ablation, ArchitectureConfig, GraphMode, Hgcnn, PreparedSample,
    PreprocessConfig, Preprocessor, TrainConfig,
};
use hgcnn::nn::Mode;
use hgcnn::protocol::{Protocol, SplitManifest};
use hgcnn::synthdata::{generate, GeneratorConfig};
use hgcnn::template::canonical_68;
use hgcnn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_arch() -> ArchitectureConfig {
    ArchitectureConfig {
        color_widths: vec![8, 8],
        depth_widths: vec![8, 8],
        mlp_widths: vec![16, 2],
        ..ArchitectureConfig::default()
    }
}

fn prepared(arch: &ArchitectureConfig, cfg: &GeneratorConfig) -> Vec<PreparedSample> {
    let d = generate(cfg).unwrap();
    Preprocessor::new(arch.preprocess).unwrap().prepare_all(&d.samples, arch).unwrap()
}

fn one_subject(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        n_subjects: 1,
        samples_per_subject_per_class: 1,
        seed,
        ..GeneratorConfig::default()
    }
}

/// A model whose batch-norm running statistics have moved off their initial values.
fn warmed_model(arch: ArchitectureConfig, data: &[PreparedSample]) -> Hgcnn {
    let mut m = Hgcnn::new(arch, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let batch: Vec<&PreparedSample> = data.iter().collect();
    m.forward(&batch, Mode::Train).unwrap();
    m.clear_caches();
    m
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let arch = ArchitectureConfig::ablation(Ablation::Model4);
    let data = prepared(&arch, &one_subject(2));
    let mut model = warmed_model(arch, &data);
    let mut bytes = Vec::new();
    save_checkpoint(&model, &mut bytes).unwrap();
    let mut loaded = load_checkpoint(bytes.as_slice()).unwrap();
    let batch: Vec<&PreparedSample> = data.iter().collect();
    let a = model.forward(&batch, Mode::Eval).unwrap();
    let b = loaded.forward(&batch, Mode::Eval).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));

    let mut again = Vec::new();
    save_checkpoint(&loaded, &mut again).unwrap();
    assert_eq!(bytes, again);
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let arch = small_arch();
    let model = Hgcnn::new(arch, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mut bytes = Vec::new();
    save_checkpoint(&model, &mut bytes).unwrap();

    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'x';
    assert!(matches!(load_checkpoint(bad_magic.as_slice()), Err(Error::Checkpoint(_))));
    let truncated = &bytes[..bytes.len() - 8];
    assert!(matches!(load_checkpoint(truncated), Err(Error::Checkpoint(_))));
}

#[test]
fn logits_ignore_vertex_order() {
    for ablation in [Ablation::Model4, Ablation::Model3] {
        let arch = ArchitectureConfig::ablation(ablation);
        let data = prepared(&arch, &one_subject(5));
        let mut model = warmed_model(arch, &data);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for s in data.iter().take(2) {
            let mut perm: Vec<usize> = (0..s.n_vertices()).collect();
            rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
            let p = s.permuted(&perm).unwrap();
            let a = model.forward(&[s], Mode::Eval).unwrap();
            let b = model.forward(&[&p], Mode::Eval).unwrap();
            let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            assert!(diff <= 1e-8, "{ablation:?}: {diff}");
        }
    }
}

/// Flat versus hemispherical depth on the canonical layout, identical
/// colour statistics: only the depth channel separates the classes.
fn toy_sample(i: usize, subject: usize, curved: bool, rng: &mut ChaCha8Rng) -> LandmarkSample {
    let t = canonical_68();
    let radius = 90.0;
    let points = (0..N_LANDMARKS)
        .map(|k| {
            let (x, y) = (t[[k, 0]] + rng.gen_range(-2.0..2.0), t[[k, 1]] + rng.gen_range(-2.0..2.0));
            let r2 = ((x - 128.0).powi(2) + (y - 128.0).powi(2)) / (radius * radius);
            let depth = if curved { 0.2 + 0.5 * (1.0 - r2.min(1.0)).sqrt() } else { 0.45 };
            let g: f64 = rng.gen_range(0.3..0.7);
            LandmarkPoint {
                xy: [x, y],
                rgb: [g, g * 0.9, g * 0.8],
                depth: (depth + rng.gen_range(-0.01..0.01)).clamp(0.0, 1.0),
            }
        })
        .collect();
    LandmarkSample {
        id: format!("toy{i}"),
        subject: Some(format!("s{subject}")),
        label: if curved { Label::Genuine } else { Label::Print },
        points,
    }
}

fn toy_split(offset: usize, subjects: std::ops::Range<usize>, per_subject: usize) -> Vec<LandmarkSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(offset as u64);
    let mut out = Vec::new();
    for s in subjects {
        for k in 0..per_subject {
            out.push(toy_sample(offset + out.len(), s, k % 2 == 0, &mut rng));
        }
    }
    out
}

#[test]
fn separable_toy_set_is_learned_deterministically() {
    let arch = ArchitectureConfig {
        preprocess: PreprocessConfig {
            k_interp: 1,
            total_points: 80,
            ..PreprocessConfig::default()
        },
        ..small_arch()
    };
    let pre = Preprocessor::new(arch.preprocess).unwrap();
    let train_set = pre.prepare_all(&toy_split(0, 0..6, 10), &arch).unwrap();
    let dev_set = pre.prepare_all(&toy_split(1000, 6..8, 10), &arch).unwrap();
    let held_out = pre.prepare_all(&toy_split(2000, 8..10, 10), &arch).unwrap();
    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 10,
        lr_decay_epoch: None,
        ..TrainConfig::default()
    };
    let run = || train(&arch, &train_set, &dev_set, &cfg, |_| {}).unwrap();
    let a = run();
    let b = run();
    assert_eq!(a.log, b.log);

    let scores = predict(&a.model, &train_set, 1).unwrap();
    let correct = scores.records.iter().filter(|r| (r.score > 0.5) == r.genuine).count();
    assert!(correct as f64 / train_set.len() as f64 >= 0.99, "{correct}/{}", train_set.len());
    let held = predict(&a.model, &held_out, 1).unwrap();
    assert!(held.records.iter().filter(|r| r.genuine).all(|r| r.score > 0.5));
}

#[test]
fn training_rejects_shared_subjects_and_empty_splits() {
    let arch = small_arch();
    let data = prepared(&arch, &one_subject(0));
    let cfg = TrainConfig::default();
    assert!(matches!(train(&arch, &data, &data, &cfg, |_| {}), Err(Error::Split(_))));
    assert!(matches!(train(&arch, &[], &data, &cfg, |_| {}), Err(Error::Split(_))));
}

#[test]
fn prediction_rejects_a_different_layout() {
    let arch = small_arch();
    let other = ArchitectureConfig {
        graph_mode: GraphMode::None,
        chebyshev_k: 1,
        ..small_arch()
    };
    let data = prepared(&other, &one_subject(0));
    let model = Hgcnn::new(arch, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    assert!(predict(&model, &data, 1).is_err());
}

// ---- command line ----

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("hgcnn").chain(args.iter().copied()))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_run_config(dir: &Path, protocol: Protocol) -> PathBuf {
    let cfg = RunConfig {
        protocol,
        architecture: small_arch(),
        training: TrainConfig {
            epochs: 3,
            batch_size: 16,
            lr_decay_epoch: None,
            ..TrainConfig::default()
        },
    };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    path
}

fn generate_into(dir: &Path, seed: &str, subjects: &str) -> PathBuf {
    let out = dir.join(format!("data-{seed}-{subjects}"));
    assert_eq!(run(&["generate", "--seed", seed, "--subjects", subjects, "--samples-per-class", "2", "--out", p(&out)]), 0);
    out
}

/// `generate → train → eval`, returning the eval directory.
fn pipeline(dir: &Path, tag: &str, threads: &str) -> PathBuf {
    let data = generate_into(dir, "7", "5");
    let cfg = small_run_config(dir, Protocol::Subjects);
    let run_dir = dir.join(format!("run-{tag}"));
    let eval_dir = dir.join(format!("eval-{tag}"));
    assert_eq!(run(&["train", "--data", p(&data), "--config", p(&cfg), "--out", p(&run_dir), "--threads", threads, "--quiet"]), 0);
    assert_eq!(run(&["eval", "--run", p(&run_dir), "--data", p(&data), "--out", p(&eval_dir), "--threads", threads]), 0);
    eval_dir
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_into(dir.path(), "7", "10");
    let b = dir.path().join("again");
    assert_eq!(run(&["generate", "--seed", "7", "--subjects", "10", "--samples-per-class", "2", "--out", p(&b)]), 0);
    for f in ["manifest.json", "samples.jsonl"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subjects"].as_array().unwrap().len(), 10);
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    assert_eq!(run(&["generate", "--subjects", "0", "--out", p(&missing)]), 2);
    assert_eq!(run(&["train", "--data", p(&missing), "--out", p(&dir.path().join("r"))]), 2);
    assert_eq!(run(&["eval", "--run", p(&missing), "--data", p(&missing), "--out", p(&missing)]), 2);
    assert_eq!(run(&["distances", "--checkpoint", p(&missing), "--data", p(&missing), "--out", p(&missing)]), 2);
    assert_eq!(run(&["frobnicate"]), 2);

    let status = std::process::Command::new(env!("CARGO_BIN_EXE_hgcnn"))
        .args(["generate", "--subjects", "0", "--out"])
        .arg(&missing)
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "not json\n").unwrap();
    assert_eq!(run(&["train", "--data", p(&bad), "--out", p(&dir.path().join("r"))]), 1);
}

#[test]
fn scores_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = pipeline(dir.path(), "a", "1");
    let b = pipeline(dir.path(), "b", "1");
    let c = pipeline(dir.path(), "c", "3");
    let scores = std::fs::read(a.join(SCORES_FILE)).unwrap();
    assert_eq!(scores, std::fs::read(b.join(SCORES_FILE)).unwrap());
    assert_eq!(scores, std::fs::read(c.join(SCORES_FILE)).unwrap());

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join(REPORT_FILE)).unwrap()).unwrap();
    let m = &report["metrics"];
    assert_eq!(m["threshold"]["provenance"], "dev-eer");
    assert_eq!(m["tdr_at_fdr"].as_object().unwrap().len(), 4);
    assert_eq!(report["cross"], false);
}

#[test]
fn attack_types_protocol_and_cross_test() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_into(dir.path(), "3", "5");
    let other = generate_into(dir.path(), "4", "3");
    let cfg = small_run_config(dir.path(), Protocol::AttackTypes);
    let run_dir = dir.path().join("run");
    assert_eq!(run(&["train", "--data", p(&data), "--config", p(&cfg), "--out", p(&run_dir), "--quiet"]), 0);

    let split: SplitManifest = serde_json::from_slice(&std::fs::read(run_dir.join(SPLIT_FILE)).unwrap()).unwrap();
    assert_eq!(split.protocol, Protocol::AttackTypes);
    assert_eq!(split.train_attacks, vec![Label::Mask]);
    assert!(split.test_attacks.iter().all(|a| !split.train_attacks.contains(a)));

    let eval_dir = dir.path().join("cross");
    assert_eq!(
        run(&["eval", "--run", p(&run_dir), "--data", p(&data), "--cross", p(&other), "--tdr-at", "0.05", "--out", p(&eval_dir)]),
        0
    );
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(eval_dir.join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(report["cross"], true);
    assert_eq!(report["metrics"]["n_samples"], 3 * 4 * 2);
}

fn read_matrix(path: &Path) -> Vec<Vec<f64>> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn distance_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let data = generate_into(dir.path(), "1", "1");
    let model = Hgcnn::new(small_arch(), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let ckpt = dir.path().join(CHECKPOINT_FILE);
    hgcnn::model::save_checkpoint_file(&model, &ckpt).unwrap();
    let out = dir.path().join("dist");
    assert_eq!(run(&["distances", "--checkpoint", p(&ckpt), "--data", p(&data), "--out", p(&out)]), 0);

    let summary: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary.as_array().unwrap().len(), 3);
    for layer in 0..3 {
        let d = read_matrix(&out.join(format!("layer{layer}.csv")));
        assert_eq!(d.len(), N_LANDMARKS);
        for i in 0..N_LANDMARKS {
            assert_eq!(d[i][i], 0.0);
            for j in 0..N_LANDMARKS {
                assert_eq!(d[i][j], d[j][i]);
            }
        }
    }

    let sample = cli::load_samples(&data).unwrap().into_iter().find(|s| s.label == Label::Genuine).unwrap();
    let d0 = read_matrix(&out.join("layer0.csv"));
    for i in 0..N_LANDMARKS {
        for j in 0..N_LANDMARKS {
            let (a, b) = (&sample.points[i], &sample.points[j]);
            let raw = a.rgb.iter().chain([&a.depth]).zip(b.rgb.iter().chain([&b.depth])).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            assert!((d0[i][j] - raw).abs() <= 1e-9 * (1.0 + raw), "({i},{j}) {} vs {raw}", d0[i][j]);
        }
    }
}
