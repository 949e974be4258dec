//! Pairwise feature distances between the 68 landmarks at each layer of a
//! briefly trained network.
//!
//! ```text
//! cargo run --release --example feature_distances
//! ```

use hgcnn::cli::landmark_distances;
use hgcnn::model::{train, ArchitectureConfig, Preprocessor, TrainConfig};
use hgcnn::protocol::{split, Protocol};
use hgcnn::synthdata::{generate, GeneratorConfig};

fn main() -> hgcnn::Result<()> {
    let data = generate(&GeneratorConfig { n_subjects: 5, seed: 2, ..GeneratorConfig::default() })?;
    let splits = split(Protocol::Subjects, &data.samples)?;
    let arch = ArchitectureConfig {
        color_widths: vec![16, 16],
        depth_widths: vec![16, 16],
        mlp_widths: vec![32, 2],
        ..ArchitectureConfig::default()
    };
    let pre = Preprocessor::new(arch.preprocess)?;
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let mut model = train(&arch, &pre.prepare_all(&splits.train, &arch)?, &pre.prepare_all(&splits.dev, &arch)?, &cfg, |_| {})?.model;

    let sample = &splits.test[0];
    println!("sample {}", sample.id);
    for (d, s) in landmark_distances(&mut model, sample)? {
        println!(
            "layer {}: {}x{} matrix, mean {:.4}, mouth mean {:.4}, mouth ratio {:.3}",
            s.layer,
            d.nrows(),
            d.ncols(),
            s.mean_distance,
            s.mean_mouth_distance,
            s.mouth_ratio
        );
    }
    Ok(())
}
