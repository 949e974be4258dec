//! Train a small hypergraph network on synthetic data, save a checkpoint
//! and score the held-out subjects with it.
//!
//! ```text
//! cargo run --release --example train_model
//! ```

use hgcnn::metrics::{MetricsReport, Threshold};
use hgcnn::model::{load_checkpoint_file, predict, save_checkpoint_file, train, ArchitectureConfig, Preprocessor, TrainConfig};
use hgcnn::protocol::{split, Protocol};
use hgcnn::synthdata::{generate, GeneratorConfig};

fn main() -> hgcnn::Result<()> {
    let data = generate(&GeneratorConfig { n_subjects: 5, seed: 1, ..GeneratorConfig::default() })?;
    let splits = split(Protocol::Subjects, &data.samples)?;
    println!(
        "train {:?}, dev {:?}, test {:?}",
        splits.manifest.train_subjects, splits.manifest.dev_subjects, splits.manifest.test_subjects
    );

    let arch = ArchitectureConfig {
        color_widths: vec![16, 16],
        depth_widths: vec![16, 16],
        mlp_widths: vec![32, 2],
        ..ArchitectureConfig::default()
    };
    let pre = Preprocessor::new(arch.preprocess)?;
    let (tr, dv, te) = (
        pre.prepare_all(&splits.train, &arch)?,
        pre.prepare_all(&splits.dev, &arch)?,
        pre.prepare_all(&splits.test, &arch)?,
    );

    let cfg = TrainConfig { epochs: 10, ..TrainConfig::default() };
    let out = train(&arch, &tr, &dv, &cfg, |e| {
        println!(
            "epoch {:>2}  loss {:.4}  acc {:.3}  dev loss {:.4}  dev acer {:.3}",
            e.epoch, e.train_loss, e.train_acc, e.dev_loss, e.dev_acer
        )
    })?;
    println!("kept epoch {}", out.best_epoch);

    let path = std::env::temp_dir().join("hgcnn-example.ckpt");
    save_checkpoint_file(&out.model, &path)?;
    let model = load_checkpoint_file(&path)?;
    println!("checkpoint: {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());

    let th = Threshold::from_dev(&predict(&model, &dv, 1)?)?;
    let report = MetricsReport::compute(&predict(&model, &te, 1)?, th, &[0.01, 0.05])?;
    println!("test ACER {:.3} at threshold {:.4}, AUC {:.3}", report.apcer.acer, th.value, report.auc);
    Ok(())
}
