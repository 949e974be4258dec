//! Train the four ablation variants on the same split and compare them.
//! Uses the full-size architecture, so this takes a few minutes.
//!
//! ```text
//! cargo run --release --example ablation [-- EPOCHS]
//! ```

use hgcnn::metrics::{MetricsReport, Threshold};
use hgcnn::model::{predict, train, Ablation, ArchitectureConfig, Preprocessor, TrainConfig};
use hgcnn::protocol::{split, Protocol};
use hgcnn::synthdata::{generate, GeneratorConfig};

fn main() -> hgcnn::Result<()> {
    let epochs = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let data = generate(&GeneratorConfig { seed: 7, ..GeneratorConfig::default() })?;
    let splits = split(Protocol::Subjects, &data.samples)?;
    let cfg = TrainConfig { epochs, ..TrainConfig::default() };

    println!("{:<8} {:>8} {:>8} {:>10} {:>10}", "model", "dev auc", "test auc", "tdr@5%", "test acer");
    for which in Ablation::ALL {
        let arch = ArchitectureConfig::ablation(which);
        let pre = Preprocessor::new(arch.preprocess)?;
        let (tr, dv, te) = (
            pre.prepare_all(&splits.train, &arch)?,
            pre.prepare_all(&splits.dev, &arch)?,
            pre.prepare_all(&splits.test, &arch)?,
        );
        let out = train(&arch, &tr, &dv, &cfg, |_| {})?;
        let dev = predict(&out.model, &dv, 1)?;
        let dev_auc = hgcnn::metrics::auc(&dev)?;
        let report = MetricsReport::compute(&predict(&out.model, &te, 1)?, Threshold::from_dev(&dev)?, &[0.05])?;
        println!(
            "{:<8} {:>8.4} {:>8.4} {:>10.4} {:>10.4}",
            format!("{which:?}"),
            dev_auc,
            report.auc,
            report.tdr_at_fdr["0.05"],
            report.apcer.acer
        );
    }
    Ok(())
}
