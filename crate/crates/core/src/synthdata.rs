//! Seeded synthetic RGB-D landmark data with genuine, print, replay and mask
//! classes.
//!
//! All randomness comes from one ChaCha8 stream, drawn in this order:
//!
//! 1. per subject, in subject order: face shape (width, height, per-landmark
//!    jitter), skin colour, colour gradient, depth surface;
//! 2. per subject, per class in [`Label::ALL`] order, per sample: posture
//!    (rotation, scale, translation), illumination gain, tilt (print and
//!    replay only), then per-landmark colour and depth noise.
//!
//! Classes:
//! * genuine: curved depth surface, smooth colour field plus fine per-point
//!   skin texture;
//! * print: genuine colour on a near-planar, slightly tilted depth;
//! * replay: planar depth, colour with strong high-frequency noise;
//! * mask: genuine-like depth and colour, but a shared, much smoother
//!   texture, so it differs from genuine in second-order statistics only.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{write_samples, Label, LandmarkPoint, LandmarkSample};
use crate::template::{canonical_offsets, CENTER, NOSE_BRIDGE};

pub const GENERATOR_VERSION: &str = "1";
pub const SAMPLES_FILE: &str = "samples.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_subjects: usize,
    pub samples_per_subject_per_class: usize,
    pub seed: u64,
    /// Head rotation range in degrees, applied in the image plane.
    pub max_yaw_deg: f64,
    pub max_translation_px: f64,
    pub scale_range: (f64, f64),
    /// Standard deviation of the per-point genuine skin texture.
    pub genuine_texture: f64,
    /// Standard deviation of the shared mask texture.
    pub mask_texture: f64,
    /// Standard deviation of the replay screen noise.
    pub replay_noise: f64,
    /// Largest depth change across the face caused by a tilted print.
    pub print_tilt: f64,
    /// Depth sensor noise on curved surfaces.
    pub depth_noise: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_subjects: 10,
            samples_per_subject_per_class: 8,
            seed: 0,
            max_yaw_deg: 15.0,
            max_translation_px: 10.0,
            scale_range: (0.9, 1.1),
            genuine_texture: 0.12,
            mask_texture: 0.005,
            replay_noise: 0.12,
            print_tilt: 5e-4,
            depth_noise: 0.004,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 || self.samples_per_subject_per_class == 0 {
            return Err(Error::Config("n_subjects and samples_per_subject_per_class must be positive".into()));
        }
        let (lo, hi) = self.scale_range;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Config(format!("bad scale range ({lo}, {hi})")));
        }
        let nonneg = [
            self.max_yaw_deg,
            self.max_translation_px,
            self.genuine_texture,
            self.mask_texture,
            self.replay_noise,
            self.print_tilt,
            self.depth_noise,
        ];
        if nonneg.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Config("ranges and noise levels must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator_version: String,
    pub seed: u64,
    pub subjects: Vec<String>,
    pub classes: Vec<Label>,
    pub counts: BTreeMap<String, usize>,
    pub samples_file: String,
    pub config: GeneratorConfig,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub samples: Vec<LandmarkSample>,
    pub manifest: Manifest,
}

struct Subject {
    shape: Vec<[f64; 2]>,
    skin: [f64; 3],
    gradient: [[f64; 2]; 3],
    depth_base: f64,
    depth_amp: f64,
    nose_amp: f64,
}

/// Landmark offsets in face units (about one unit per 100 px).
const FACE_UNIT: f64 = 100.0;

pub fn subject_id(i: usize) -> String {
    format!("s{i:03}")
}

fn draw_subject<R: Rng>(rng: &mut R) -> Subject {
    let wide = rng.gen_range(0.92..1.08);
    let tall = rng.gen_range(0.92..1.08);
    let jitter = Normal::new(0.0, 1.5).unwrap();
    let shape = canonical_offsets()
        .into_iter()
        .map(|[x, y]| [x * wide + jitter.sample(rng), y * tall + jitter.sample(rng)])
        .collect();
    let skin = [rng.gen_range(0.35..0.7), rng.gen_range(0.28..0.6), rng.gen_range(0.22..0.52)];
    let mut gradient = [[0.0; 2]; 3];
    for g in gradient.iter_mut() {
        *g = [rng.gen_range(-0.06..0.06), rng.gen_range(-0.06..0.06)];
    }
    Subject {
        shape,
        skin,
        gradient,
        depth_base: rng.gen_range(0.15..0.25),
        depth_amp: rng.gen_range(0.3..0.45),
        nose_amp: rng.gen_range(0.1..0.2),
    }
}

/// Height of the face surface at a face-frame offset, before scaling.
fn face_surface(s: &Subject, x: f64, y: f64) -> f64 {
    let (u, v) = (x / FACE_UNIT, y / FACE_UNIT);
    let dome = (-(u * u) / (2.0 * 0.55 * 0.55) - (v * v) / (2.0 * 0.8 * 0.8)).exp();
    let nose = (-(u * u) / (2.0 * 0.12 * 0.12) - (v + 0.1).powi(2) / (2.0 * 0.3 * 0.3)).exp();
    s.depth_amp * dome + s.nose_amp * nose
}

fn sample<R: Rng>(cfg: &GeneratorConfig, s: &Subject, label: Label, rng: &mut R) -> Vec<LandmarkPoint> {
    let yaw = rng.gen_range(-cfg.max_yaw_deg..=cfg.max_yaw_deg).to_radians();
    let scale = rng.gen_range(cfg.scale_range.0..=cfg.scale_range.1);
    let t = cfg.max_translation_px;
    let shift = [rng.gen_range(-t..=t), rng.gen_range(-t..=t)];
    let gain = rng.gen_range(0.92..1.08);
    let flat = matches!(label, Label::Print | Label::Replay);
    let (tilt, flat_level) = if flat {
        let a = rng.gen_range(0.0..std::f64::consts::TAU);
        let level = rng.gen_range(0.2..0.6);
        ([a.cos() * cfg.print_tilt / 2.0, a.sin() * cfg.print_tilt / 2.0], level)
    } else {
        ([0.0; 2], 0.0)
    };
    let texture = match label {
        Label::Genuine | Label::Print => cfg.genuine_texture,
        Label::Replay => cfg.replay_noise,
        Label::Mask => cfg.mask_texture,
    };
    let texture = Normal::new(0.0, texture).unwrap();
    let depth_noise = Normal::new(0.0, cfg.depth_noise).unwrap();

    let (sin, cos) = yaw.sin_cos();
    s.shape
        .iter()
        .map(|&[x, y]| {
            let (u, v) = (x / FACE_UNIT, y / FACE_UNIT);
            let mut rgb = [0.0; 3];
            for (c, out) in rgb.iter_mut().enumerate() {
                let smooth = s.skin[c] + s.gradient[c][0] * u + s.gradient[c][1] * v;
                *out = (gain * smooth + texture.sample(rng)).clamp(0.0, 1.0);
            }
            let depth = if flat {
                flat_level + tilt[0] * u + tilt[1] * v
            } else {
                s.depth_base + face_surface(s, x, y) + depth_noise.sample(rng)
            };
            let xy = [
                CENTER.0 + shift[0] + scale * (cos * x - sin * y),
                CENTER.1 + shift[1] + scale * (sin * x + cos * y),
            ];
            LandmarkPoint {
                xy,
                rgb,
                depth: depth.clamp(0.0, 1.0),
            }
        })
        .collect()
}

/// Generates the full dataset in memory.
pub fn generate(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let subjects: Vec<Subject> = (0..cfg.n_subjects).map(|_| draw_subject(&mut rng)).collect();
    let mut samples = Vec::with_capacity(cfg.n_subjects * 4 * cfg.samples_per_subject_per_class);
    let mut counts = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        let sid = subject_id(i);
        for label in Label::ALL {
            for k in 0..cfg.samples_per_subject_per_class {
                samples.push(LandmarkSample {
                    id: format!("{sid}-{}-{k:02}", label.as_str()),
                    subject: Some(sid.clone()),
                    label,
                    points: sample(cfg, s, label, &mut rng),
                });
                *counts.entry(label.as_str().to_string()).or_insert(0) += 1;
            }
        }
    }
    let manifest = Manifest {
        generator_version: GENERATOR_VERSION.into(),
        seed: cfg.seed,
        subjects: (0..cfg.n_subjects).map(subject_id).collect(),
        classes: Label::ALL.to_vec(),
        counts,
        samples_file: SAMPLES_FILE.into(),
        config: cfg.clone(),
    };
    Ok(Dataset { samples, manifest })
}

/// Writes `samples.jsonl` and `manifest.json` into `dir`, creating it if needed.
pub fn write_dataset(dataset: &Dataset, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let f = std::fs::File::create(dir.join(SAMPLES_FILE))?;
    let mut w = std::io::BufWriter::new(f);
    write_samples(&mut w, &dataset.samples)?;
    std::io::Write::flush(&mut w)?;
    let mut manifest = serde_json::to_string_pretty(&dataset.manifest)?;
    manifest.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), manifest)?;
    Ok(())
}

/// Index of the nose tip in the 68-point layout.
pub const NOSE_TIP: usize = NOSE_BRIDGE.end - 1;

/// Nose-tip depth minus mean depth: a linear functional of the depth
/// channel that is large for curved faces and near zero for flat ones.
pub fn depth_relief(sample: &LandmarkSample) -> f64 {
    let pts = &sample.points[..crate::landmarks::N_LANDMARKS];
    let mean = pts.iter().map(|p| p.depth).sum::<f64>() / pts.len() as f64;
    pts[NOSE_TIP].depth - mean
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GeneratorConfig {
        GeneratorConfig {
            n_subjects: 3,
            samples_per_subject_per_class: 2,
            seed: 11,
            ..GeneratorConfig::default()
        }
    }

    fn depth_var(s: &LandmarkSample) -> f64 {
        let n = s.points.len() as f64;
        let m = s.points.iter().map(|p| p.depth).sum::<f64>() / n;
        s.points.iter().map(|p| (p.depth - m).powi(2)).sum::<f64>() / n
    }

    #[test]
    fn counts_and_ids() {
        let d = generate(&small()).unwrap();
        assert_eq!(d.samples.len(), 24);
        assert_eq!(d.manifest.subjects, vec!["s000", "s001", "s002"]);
        assert!(d.manifest.counts.values().all(|&c| c == 6));
        for s in &d.samples {
            s.validate().unwrap();
            assert_eq!(s.points.len(), 68);
        }
    }

    #[test]
    fn same_seed_same_data() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = generate(&GeneratorConfig { seed: 12, ..small() }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn print_depth_is_planar() {
        let d = generate(&small()).unwrap();
        let genuine: Vec<f64> = d.samples.iter().filter(|s| s.label == Label::Genuine).map(depth_var).collect();
        let min_genuine = genuine.iter().copied().fold(f64::INFINITY, f64::min);
        for s in d.samples.iter().filter(|s| s.label == Label::Print) {
            assert!(depth_var(s) < 1e-4 * min_genuine, "{}", s.id);
        }
    }

    #[test]
    fn relief_separates_flat_from_curved() {
        let d = generate(&small()).unwrap();
        for s in &d.samples {
            let curved = matches!(s.label, Label::Genuine | Label::Mask);
            assert_eq!(depth_relief(s) > 0.05, curved, "{}", s.id);
        }
    }

    #[test]
    fn zero_subjects_rejected() {
        assert!(generate(&GeneratorConfig { n_subjects: 0, ..small() }).is_err());
    }
}
