use std::collections::BTreeSet;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ArchitectureConfig;
use super::data::PreparedSample;
use super::network::{batch_operators, BatchInputs, Hgcnn};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, apcer_bpcer_acer, auc, ScoreRecord, ScoreSet, Threshold};
use crate::nn::{clip_global_norm, cross_entropy_loss, softmax_rows, AdamState, Mode, Parameterized};
use crate::spectral::LaplacianOperator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Epoch (0-based) from which the learning rate is multiplied by `lr_decay`.
    pub lr_decay_epoch: Option<usize>,
    pub lr_decay: f64,
    pub grad_clip: f64,
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 30,
            batch_size: 50,
            learning_rate: 1e-3,
            lr_decay_epoch: Some(15),
            lr_decay: 0.1,
            grad_clip: 5.0,
            patience: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::Config("grad_clip must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub dev_loss: f64,
    pub dev_acc: f64,
    pub dev_acer: f64,
    pub dev_auc: f64,
}

pub fn write_log_csv<W: Write>(log: &[EpochLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for e in log {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Hgcnn,
    pub log: Vec<EpochLog>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Fails when any subject appears in more than one split.
pub fn check_subject_disjoint(splits: &[(&str, &[PreparedSample])]) -> Result<()> {
    for (i, (na, a)) in splits.iter().enumerate() {
        let sa: BTreeSet<&str> = a.iter().map(|s| s.subject.as_str()).collect();
        for (nb, b) in &splits[i + 1..] {
            if let Some(s) = b.iter().map(|s| s.subject.as_str()).find(|s| sa.contains(s)) {
                return Err(Error::Split(format!("subject {s} appears in both {na} and {nb}")));
            }
        }
    }
    Ok(())
}

fn step_batch(model: &mut Hgcnn, batch: &[&PreparedSample], opt: &mut AdamState, clip: f64) -> Result<(f64, usize)> {
    let inputs = BatchInputs::from_samples(&model.config, batch)?;
    let ops = batch_operators(batch)?;
    let refs: Vec<&dyn LaplacianOperator> = ops.iter().map(|o| o as &dyn LaplacianOperator).collect();
    let targets: Vec<usize> = batch.iter().map(|s| s.target()).collect();
    model.zero_grads();
    let logits = model.forward_with(&refs, &inputs, Mode::Train)?;
    let (loss, dlogits) = cross_entropy_loss(logits.view(), &targets)?;
    model.backward_with(&refs, dlogits.view())?;
    clip_global_norm(model, clip);
    opt.step(model)?;
    let correct = logits
        .rows()
        .into_iter()
        .zip(&targets)
        .filter(|(r, &t)| usize::from(r[1] > r[0]) == t)
        .count();
    Ok((loss * batch.len() as f64, correct))
}

/// Mean loss and scores of `samples` in inference mode.
fn evaluate(model: &mut Hgcnn, samples: &[PreparedSample]) -> Result<(f64, ScoreSet)> {
    let mut total = 0.0;
    let mut records = Vec::with_capacity(samples.len());
    for s in samples {
        let logits = model.forward(&[s], Mode::Eval)?;
        let (loss, _) = cross_entropy_loss(logits.view(), &[s.target()])?;
        total += loss;
        records.push(score_record(s, softmax_rows(logits.view())[[0, 1]]));
    }
    model.clear_caches();
    Ok((total / samples.len() as f64, ScoreSet::new(records)))
}

fn score_record(s: &PreparedSample, score: f64) -> ScoreRecord {
    ScoreRecord {
        id: s.id.clone(),
        subject: s.subject.clone(),
        genuine: s.label.is_genuine(),
        attack_type: (!s.label.is_genuine()).then(|| s.label.as_str().to_string()),
        score,
    }
}

/// Trains from a seeded initialisation with per-epoch shuffling, keeping
/// the parameters of the epoch with the lowest dev ACER at the dev EER
/// threshold (ties broken by dev loss) and stopping after `patience` epochs without improvement.
pub fn train(
    arch: &ArchitectureConfig,
    train_set: &[PreparedSample],
    dev_set: &[PreparedSample],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::Split("train and dev splits must be non-empty".into()));
    }
    check_subject_disjoint(&[("train", train_set), ("dev", dev_set)])?;
    for s in train_set.iter().chain(dev_set) {
        s.check_compatible(arch)?;
    }
    let classes = |s: &[PreparedSample]| {
        let g = s.iter().filter(|x| x.label.is_genuine()).count();
        g > 0 && g < s.len()
    };
    if !classes(dev_set) {
        return Err(Error::Split("dev split needs both genuine and attack samples".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Hgcnn::new(arch.clone(), &mut rng)?;
    let mut opt = AdamState::new(cfg.learning_rate);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, f64, usize, Hgcnn)> = None;

    for epoch in 0..cfg.epochs {
        if cfg.lr_decay_epoch == Some(epoch) {
            opt.lr *= cfg.lr_decay;
        }
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&PreparedSample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (l, c) = step_batch(&mut model, &batch, &mut opt, cfg.grad_clip)?;
            loss_sum += l;
            correct += c;
        }
        model.clear_caches();
        let (dev_loss, dev_scores) = evaluate(&mut model, dev_set)?;
        let th = Threshold::from_dev(&dev_scores)?;
        let dev_acer = apcer_bpcer_acer(&dev_scores, &th)?.acer;
        let dev_acc = accuracy(&dev_scores, th.value)?;
        let dev_auc = auc(&dev_scores)?;
        let entry = EpochLog {
            epoch: epoch + 1,
            train_loss: loss_sum / train_set.len() as f64,
            train_acc: correct as f64 / train_set.len() as f64,
            dev_loss,
            dev_acc,
            dev_acer,
            dev_auc,
        };
        on_epoch(&entry);
        log.push(entry);

        let improved = match &best {
            None => true,
            Some((acer, loss, _, _)) => dev_acer < *acer || (dev_acer == *acer && dev_loss < *loss),
        };
        if improved {
            best = Some((dev_acer, dev_loss, epoch + 1, model.clone()));
        } else if epoch + 1 - best.as_ref().map_or(0, |b| b.2) >= cfg.patience {
            break;
        }
    }
    let (_, _, best_epoch, model) = best.expect("at least one epoch ran");
    Ok(TrainOutcome { model, log, best_epoch })
}

/// Genuine-class scores, one sample per forward pass so results do not
/// depend on batching or on the number of threads.
pub fn predict(model: &Hgcnn, samples: &[PreparedSample], threads: usize) -> Result<ScoreSet> {
    for s in samples {
        s.check_compatible(&model.config)?;
    }
    let threads = threads.clamp(1, samples.len().max(1));
    let score_chunk = |model: &mut Hgcnn, chunk: &[PreparedSample]| -> Result<Vec<ScoreRecord>> {
        chunk
            .iter()
            .map(|s| Ok(score_record(s, model.genuine_probabilities(&[s])?[0])))
            .collect()
    };
    if threads == 1 {
        return Ok(ScoreSet::new(score_chunk(&mut model.clone(), samples)?));
    }
    let per = samples.len().div_ceil(threads);
    let parts: Vec<Result<Vec<ScoreRecord>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = samples
            .chunks(per)
            .map(|chunk| {
                let mut m = model.clone();
                scope.spawn(move || score_chunk(&mut m, chunk))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("prediction thread panicked")).collect()
    });
    let mut records = Vec::with_capacity(samples.len());
    for p in parts {
        records.extend(p?);
    }
    Ok(ScoreSet::new(records))
}
