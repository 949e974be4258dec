//! From 68 landmarks to the augmented point set and its k-NN hypergraph.
//!
//! ```text
//! cargo run --example landmark_hypergraph
//! ```

use hgcnn::landmarks::{build_knn_hypergraph, calibrate_k_interp, rgb_to_hsv_channels, HypergraphConfig};
use hgcnn::model::PreprocessConfig;
use hgcnn::synthdata::{generate, GeneratorConfig};
use hgcnn::template::canonical_68;

fn main() -> hgcnn::Result<()> {
    let cfg = PreprocessConfig::default();
    let template = hgcnn::landmarks::PointSet::from_coords(canonical_68());
    let (k, total) = calibrate_k_interp(&template, cfg.total_points, cfg.dedup_tolerance)?;
    println!("interpolating towards the {k} nearest neighbours gives {total} points on the template");

    let data = generate(&GeneratorConfig {
        n_subjects: 1,
        samples_per_subject_per_class: 1,
        ..GeneratorConfig::default()
    })?;
    let sample = &data.samples[0];
    let pre = hgcnn::model::Preprocessor::new(cfg)?;
    let points = pre.plan().apply(&sample.to_point_set()?)?;
    println!("{}: {} landmarks -> {} points", sample.id, sample.points.len(), points.len());

    let hg = build_knn_hypergraph(&points, &HypergraphConfig { k_nn: cfg.k_nn })?;
    println!(
        "{} hyperedges, {}-uniform, first: {:?}",
        hg.n_edges(),
        hg.uniformity().unwrap_or(0),
        hg.hyperedges()[0]
    );

    let hsv = rgb_to_hsv_channels(&points)?;
    println!("channels: {:?}", hsv.layout().0);
    println!("first point: {:.3}", hsv.channels().row(0));
    Ok(())
}
