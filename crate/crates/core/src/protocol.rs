//! Subject-disjoint train/dev/test splits.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmarks::{Label, LandmarkSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    /// Every class everywhere; subjects split 60/20/20 in id order.
    Subjects,
    /// Train and dev see only masks as attacks; test sees only print and replay.
    AttackTypes,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub protocol: Protocol,
    pub train_subjects: Vec<String>,
    pub dev_subjects: Vec<String>,
    pub test_subjects: Vec<String>,
    pub train_attacks: Vec<Label>,
    pub test_attacks: Vec<Label>,
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<LandmarkSample>,
    pub dev: Vec<LandmarkSample>,
    pub test: Vec<LandmarkSample>,
    pub manifest: SplitManifest,
}

/// Subject counts for train, dev and test; dev and test get at least one each.
fn partition(n: usize) -> Result<(usize, usize, usize)> {
    if n < 3 {
        return Err(Error::Split(format!("need at least 3 subjects, got {n}")));
    }
    let dev = (n / 5).max(1);
    let test = (n / 5).max(1);
    Ok((n - dev - test, dev, test))
}

impl SplitManifest {
    pub fn new(protocol: Protocol, samples: &[LandmarkSample]) -> Result<Self> {
        let subjects: Vec<String> = samples
            .iter()
            .map(|s| s.subject_id().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let (tr, dv, _) = partition(subjects.len())?;
        let (train_attacks, test_attacks) = match protocol {
            Protocol::Subjects => (vec![Label::Print, Label::Replay, Label::Mask], vec![Label::Print, Label::Replay, Label::Mask]),
            Protocol::AttackTypes => (vec![Label::Mask], vec![Label::Print, Label::Replay]),
        };
        Ok(Self {
            protocol,
            train_subjects: subjects[..tr].to_vec(),
            dev_subjects: subjects[tr..tr + dv].to_vec(),
            test_subjects: subjects[tr + dv..].to_vec(),
            train_attacks,
            test_attacks,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let sets = [&self.train_subjects, &self.dev_subjects, &self.test_subjects];
        let mut seen = BTreeSet::new();
        for s in sets.iter().flat_map(|v| v.iter()) {
            if !seen.insert(s) {
                return Err(Error::Split(format!("subject {s} is assigned to more than one split")));
            }
        }
        if self.protocol == Protocol::AttackTypes && self.train_attacks.iter().any(|a| self.test_attacks.contains(a)) {
            return Err(Error::Split("attack types overlap between train and test".into()));
        }
        Ok(())
    }

    /// Distributes `samples` according to the manifest; samples of unlisted
    /// subjects or attack types are dropped.
    pub fn apply(&self, samples: &[LandmarkSample]) -> Result<Splits> {
        self.validate()?;
        let pick = |subjects: &[String], attacks: &[Label]| -> Vec<LandmarkSample> {
            samples
                .iter()
                .filter(|s| subjects.iter().any(|x| x == s.subject_id()))
                .filter(|s| s.label.is_genuine() || attacks.contains(&s.label))
                .cloned()
                .collect()
        };
        let splits = Splits {
            train: pick(&self.train_subjects, &self.train_attacks),
            dev: pick(&self.dev_subjects, &self.train_attacks),
            test: pick(&self.test_subjects, &self.test_attacks),
            manifest: self.clone(),
        };
        for (name, part) in [("train", &splits.train), ("dev", &splits.dev), ("test", &splits.test)] {
            if part.is_empty() {
                return Err(Error::Split(format!("{name} split is empty")));
            }
        }
        Ok(splits)
    }
}

pub fn split(protocol: Protocol, samples: &[LandmarkSample]) -> Result<Splits> {
    SplitManifest::new(protocol, samples)?.apply(samples)
}
