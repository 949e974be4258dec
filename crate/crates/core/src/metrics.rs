//! Presentation-attack-detection metrics and evaluation protocols.
//!
//! A score is the probability that a sample is genuine (bona fide). A
//! sample is accepted as genuine when `score >= threshold`; ties accept.
//!
//! * FAR / APCER: attacks accepted / attacks
//! * FRR / BPCER: genuine rejected / genuine
//! * TDR: attacks rejected / attacks, i.e. `1 - FAR`
//! * FDR: genuine flagged as attacks / genuine, i.e. `FRR`
//!
//! HTER and ACER are evaluated at a threshold fixed beforehand, normally the
//! EER threshold of a development set ([`ThresholdProvenance::DevEer`]).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    pub subject: String,
    pub genuine: bool,
    /// Attack type tag; `None` for genuine samples.
    pub attack_type: Option<String>,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreSet {
    pub records: Vec<ScoreRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    id: String,
    subject: String,
    label: String,
    attack_type: String,
    score: f64,
}

impl ScoreSet {
    pub fn new(records: Vec<ScoreRecord>) -> Self {
        Self { records }
    }

    /// Builds a set from `(score, genuine)` pairs with synthetic ids.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (f64, bool)>) -> Self {
        Self::new(
            pairs
                .into_iter()
                .enumerate()
                .map(|(i, (score, genuine))| ScoreRecord {
                    id: i.to_string(),
                    subject: i.to_string(),
                    genuine,
                    attack_type: (!genuine).then(|| "attack".to_string()),
                    score,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same records with every score passed through `f`.
    pub fn map_scores(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.records.iter_mut().for_each(|r| r.score = f(r.score));
        out
    }

    /// Records whose attack type is in `types` plus all genuine records.
    pub fn restrict_attacks(&self, types: &[&str]) -> Self {
        Self::new(
            self.records
                .iter()
                .filter(|r| r.genuine || r.attack_type.as_deref().is_some_and(|t| types.contains(&t)))
                .cloned()
                .collect(),
        )
    }

    /// Sorted genuine and attack scores after validation.
    fn split(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.records.iter().any(|r| !r.score.is_finite()) {
            return Err(Error::Metric("non-finite score".into()));
        }
        let mut gen: Vec<f64> = self.records.iter().filter(|r| r.genuine).map(|r| r.score).collect();
        let mut att: Vec<f64> = self.records.iter().filter(|r| !r.genuine).map(|r| r.score).collect();
        if gen.is_empty() || att.is_empty() {
            return Err(Error::Metric(format!(
                "need both classes, got {} genuine and {} attack scores",
                gen.len(),
                att.len()
            )));
        }
        gen.sort_by(f64::total_cmp);
        att.sort_by(f64::total_cmp);
        Ok((gen, att))
    }

    /// CSV `id,subject,label,attack_type,score`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(CsvRow {
                id: r.id.clone(),
                subject: r.subject.clone(),
                label: if r.genuine { "genuine" } else { "attack" }.into(),
                attack_type: r.attack_type.clone().unwrap_or_default(),
                score: r.score,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(input);
        let mut records = Vec::new();
        for row in rd.deserialize::<CsvRow>() {
            let row = row?;
            let genuine = match row.label.as_str() {
                "genuine" => true,
                "attack" => false,
                other => return Err(Error::Parse(format!("unknown score label {other:?}"))),
            };
            records.push(ScoreRecord {
                id: row.id,
                subject: row.subject,
                genuine,
                attack_type: (!row.attack_type.is_empty()).then_some(row.attack_type),
                score: row.score,
            });
        }
        Ok(Self { records })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdProvenance {
    DevEer,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub value: f64,
    pub provenance: ThresholdProvenance,
}

impl Threshold {
    pub fn fixed(value: f64) -> Self {
        Self {
            value,
            provenance: ThresholdProvenance::Fixed,
        }
    }

    /// EER threshold of a development set.
    pub fn from_dev(dev: &ScoreSet) -> Result<Self> {
        Ok(Self {
            value: eer(dev)?.threshold,
            provenance: ThresholdProvenance::DevEer,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub tdr: f64,
    pub fdr: f64,
}

fn count_below(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s < t)
}

fn point_at(gen: &[f64], att: &[f64], t: f64) -> RocPoint {
    let far = (att.len() - count_below(att, t)) as f64 / att.len() as f64;
    let frr = count_below(gen, t) as f64 / gen.len() as f64;
    RocPoint {
        threshold: t,
        far,
        frr,
        tdr: 1.0 - far,
        fdr: frr,
    }
}

/// Operating points at `-∞`, every distinct score (ascending) and `+∞`.
pub fn roc_curve(scores: &ScoreSet) -> Result<Vec<RocPoint>> {
    let (gen, att) = scores.split()?;
    let mut thresholds: Vec<f64> = gen.iter().chain(&att).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let mut pts = Vec::with_capacity(thresholds.len() + 2);
    pts.push(point_at(&gen, &att, f64::NEG_INFINITY));
    pts.extend(thresholds.iter().map(|&t| point_at(&gen, &att, t)));
    pts.push(point_at(&gen, &att, f64::INFINITY));
    Ok(pts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EerResult {
    pub rate: f64,
    pub threshold: f64,
}

/// Rate where FAR meets FRR on the ROC, interpolating linearly between the
/// two operating points that bracket the crossing. When the rates meet
/// exactly, the threshold is centred in the gap below that operating point.
pub fn eer_from_roc(roc: &[RocPoint]) -> EerResult {
    let i = roc
        .iter()
        .position(|p| p.frr >= p.far)
        .expect("the +inf operating point always has FRR >= FAR");
    let cur = roc[i];
    if i == 0 {
        return EerResult {
            rate: cur.far,
            threshold: cur.threshold,
        };
    }
    let prev = roc[i - 1];
    if cur.frr == cur.far {
        // Any threshold in (prev, cur] gives the same rates; take the middle.
        let threshold = if prev.threshold.is_finite() && cur.threshold.is_finite() {
            0.5 * (prev.threshold + cur.threshold)
        } else {
            cur.threshold
        };
        return EerResult {
            rate: cur.far,
            threshold,
        };
    }
    let d0 = prev.far - prev.frr;
    let d1 = cur.far - cur.frr;
    let alpha = d0 / (d0 - d1);
    let rate = prev.far + alpha * (cur.far - prev.far);
    let threshold = match (prev.threshold.is_finite(), cur.threshold.is_finite()) {
        (true, true) => prev.threshold + alpha * (cur.threshold - prev.threshold),
        (false, _) => cur.threshold,
        (true, false) => prev.threshold,
    };
    EerResult { rate, threshold }
}

pub fn eer(scores: &ScoreSet) -> Result<EerResult> {
    Ok(eer_from_roc(&roc_curve(scores)?))
}

/// `(FAR, FRR)` at a threshold.
pub fn error_rates(scores: &ScoreSet, th: f64) -> Result<(f64, f64)> {
    let (gen, att) = scores.split()?;
    let p = point_at(&gen, &att, th);
    Ok((p.far, p.frr))
}

pub fn hter(scores: &ScoreSet, th: &Threshold) -> Result<f64> {
    let (far, frr) = error_rates(scores, th.value)?;
    Ok((far + frr) / 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApcerReport {
    pub apcer: f64,
    pub apcer_per_type: BTreeMap<String, f64>,
    pub apcer_max: f64,
    pub bpcer: f64,
    /// `(apcer + bpcer) / 2`.
    pub acer: f64,
    /// `(apcer_max + bpcer) / 2`.
    pub acer_max: f64,
}

pub fn apcer_bpcer_acer(scores: &ScoreSet, th: &Threshold) -> Result<ApcerReport> {
    let (apcer, bpcer) = error_rates(scores, th.value)?;
    let mut per_type: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for r in scores.records.iter().filter(|r| !r.genuine) {
        let key = r.attack_type.clone().unwrap_or_else(|| "attack".into());
        let e = per_type.entry(key).or_default();
        e.1 += 1;
        if r.score >= th.value {
            e.0 += 1;
        }
    }
    let apcer_per_type: BTreeMap<String, f64> = per_type
        .into_iter()
        .map(|(k, (acc, n))| (k, acc as f64 / n as f64))
        .collect();
    let apcer_max = apcer_per_type.values().copied().fold(0.0, f64::max);
    Ok(ApcerReport {
        apcer,
        apcer_per_type,
        apcer_max,
        bpcer,
        acer: (apcer + bpcer) / 2.0,
        acer_max: (apcer_max + bpcer) / 2.0,
    })
}

/// TDR at the loosest operating point whose FDR does not exceed each
/// target, interpolating linearly along the ROC between operating points.
pub fn tdr_at_fdr(scores: &ScoreSet, fdr_targets: &[f64]) -> Result<Vec<f64>> {
    let roc = roc_curve(scores)?;
    fdr_targets
        .iter()
        .map(|&f| {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::Metric(format!("FDR target {f} outside [0, 1]")));
            }
            // FDR is non-decreasing along the curve; the last point within the
            // budget has the highest TDR among those points.
            let i = roc.iter().rposition(|p| p.fdr <= f).expect("-inf point has FDR 0");
            let p = roc[i];
            if p.fdr == f || i + 1 == roc.len() {
                return Ok(p.tdr);
            }
            let q = roc[i + 1];
            Ok(p.tdr + (f - p.fdr) / (q.fdr - p.fdr) * (q.tdr - p.tdr))
        })
        .collect()
}

/// Trapezoidal area under (FAR, 1 - FRR).
pub fn auc(scores: &ScoreSet) -> Result<f64> {
    let roc = roc_curve(scores)?;
    Ok(roc
        .windows(2)
        .map(|w| (w[0].far - w[1].far) * ((1.0 - w[0].frr) + (1.0 - w[1].frr)) / 2.0)
        .sum())
}

/// Fraction of samples classified correctly at a threshold.
pub fn accuracy(scores: &ScoreSet, th: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Metric("empty score set".into()));
    }
    let correct = scores.records.iter().filter(|r| (r.score >= th) == r.genuine).count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Everything reported for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    pub threshold: Threshold,
    pub accuracy: f64,
    pub hter: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub auc: f64,
    #[serde(flatten)]
    pub apcer: ApcerReport,
    pub tdr_at_fdr: BTreeMap<String, f64>,
}

impl MetricsReport {
    /// Full report for `test` at `threshold`, with TDR at each FDR target.
    pub fn compute(test: &ScoreSet, threshold: Threshold, fdr_targets: &[f64]) -> Result<Self> {
        let e = eer(test)?;
        let tdr = tdr_at_fdr(test, fdr_targets)?;
        Ok(Self {
            n_samples: test.len(),
            threshold,
            accuracy: accuracy(test, threshold.value)?,
            hter: hter(test, &threshold)?,
            eer: e.rate,
            eer_threshold: e.threshold,
            auc: auc(test)?,
            apcer: apcer_bpcer_acer(test, &threshold)?,
            tdr_at_fdr: fdr_targets
                .iter()
                .zip(tdr)
                .map(|(f, t)| (format!("{f}"), t))
                .collect(),
        })
    }
}

/// Per-fold and averaged metrics of a leave-one-subject-out run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoocvResult {
    pub folds: Vec<(String, BTreeMap<String, f64>)>,
    pub mean: BTreeMap<String, f64>,
}

/// Holds out each subject in ascending id order, calls
/// `runner(training_subjects, held_out)` and averages the returned metrics.
pub fn loocv_protocol<F>(subjects: &[String], mut runner: F) -> Result<LoocvResult>
where
    F: FnMut(&[String], &str) -> Result<BTreeMap<String, f64>>,
{
    let mut ids: Vec<String> = subjects.to_vec();
    ids.sort();
    ids.dedup();
    if ids.len() < 3 {
        return Err(Error::Split(format!("LOOCV needs at least 3 subjects, got {}", ids.len())));
    }
    let mut folds = Vec::with_capacity(ids.len());
    for held in &ids {
        let train: Vec<String> = ids.iter().filter(|s| *s != held).cloned().collect();
        folds.push((held.clone(), runner(&train, held)?));
    }
    let keys: Vec<&String> = folds[0].1.keys().collect();
    if folds.iter().any(|(_, m)| m.len() != keys.len() || keys.iter().any(|k| !m.contains_key(*k))) {
        return Err(Error::Metric("folds report different metric names".into()));
    }
    let n = folds.len() as f64;
    let mean = keys
        .iter()
        .map(|k| ((*k).clone(), folds.iter().map(|(_, m)| m[*k]).sum::<f64>() / n))
        .collect();
    Ok(LoocvResult { folds, mean })
}
