//! k-nearest-neighbour classification of observation traces.
//!
//! Neighbours at equal distance are ordered by their position in the
//! training set; when several classes share the highest vote count the
//! lexicographically smallest label wins.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::distances::{DistanceConfig, Metric, PreparedTrace};
use crate::traces::Trace;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k = {k} is invalid for a training set of {n} traces")]
    InvalidK { k: usize, n: usize },
    #[error("training trace {0} has no class label")]
    MissingLabel(usize),
}

/// Labelled observation traces, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct LabeledTraceSet {
    entries: Vec<(String, Trace)>,
}

impl LabeledTraceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, label: impl Into<String>, trace: Trace) {
        self.entries.push((label.into(), trace));
    }

    /// Builds a set from traces that carry their own labels.
    pub fn from_traces(traces: Vec<Trace>) -> Result<Self, ClassifyError> {
        let mut set = Self::new();
        for (i, t) in traces.into_iter().enumerate() {
            let label = t.label.clone().ok_or(ClassifyError::MissingLabel(i))?;
            set.push(label, t);
        }
        Ok(set)
    }

    pub fn entries(&self) -> &[(String, Trace)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct labels in sorted order.
    pub fn labels(&self) -> Vec<&str> {
        let mut l: Vec<&str> = self.entries.iter().map(|(l, _)| l.as_str()).collect();
        l.sort_unstable();
        l.dedup();
        l
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    /// Position in the training set.
    pub index: usize,
    pub label: String,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnlineResult {
    /// `predictions[i]` is the label after observing the first `i + 1` steps.
    pub predictions: Vec<String>,
    /// Smallest step index from which every prediction equals the final one.
    pub convergence_step: usize,
    pub final_label: String,
}

/// A training set prepared for repeated queries under one metric.
pub struct Knn {
    labels: Vec<String>,
    prepared: Vec<PreparedTrace>,
    k: usize,
    metric: Metric,
    cfg: DistanceConfig,
}

impl Knn {
    pub fn new(train: &LabeledTraceSet, k: usize, metric: Metric, cfg: DistanceConfig) -> Result<Self, ClassifyError> {
        if train.is_empty() {
            return Err(ClassifyError::EmptyTrainingSet);
        }
        if k == 0 || k > train.len() {
            return Err(ClassifyError::InvalidK { k, n: train.len() });
        }
        Ok(Knn {
            labels: train.entries.iter().map(|(l, _)| l.clone()).collect(),
            prepared: train.entries.iter().map(|(_, t)| PreparedTrace::new(t)).collect(),
            k,
            metric,
            cfg,
        })
    }

    /// The `k` nearest training traces, closest first.
    pub fn neighbors(&self, t: &Trace) -> Vec<Neighbor> {
        self.neighbors_prepared(&PreparedTrace::new(t))
    }

    fn neighbors_prepared(&self, q: &PreparedTrace) -> Vec<Neighbor> {
        let mut all: Vec<(f64, usize)> = self
            .prepared
            .iter()
            .enumerate()
            .map(|(i, p)| (q.distance(p, self.metric, &self.cfg), i))
            .collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(self.k);
        all.into_iter()
            .map(|(distance, index)| Neighbor {
                index,
                label: self.labels[index].clone(),
                distance,
            })
            .collect()
    }

    pub fn classify(&self, t: &Trace) -> String {
        mode(&self.neighbors(t))
    }

    /// Classifies every prefix of `t`, from one step up to the whole trace.
    pub fn classify_online(&self, t: &Trace) -> OnlineResult {
        let predictions: Vec<String> = (1..=t.len())
            .map(|n| mode(&self.neighbors(&t.prefix(n))))
            .collect();
        let final_label = match predictions.last() {
            Some(l) => l.clone(),
            None => self.classify(t),
        };
        let convergence_step = predictions
            .iter()
            .rposition(|p| *p != final_label)
            .map_or(0, |i| i + 1);
        OnlineResult {
            predictions,
            convergence_step,
            final_label,
        }
    }
}

/// Most frequent label; ties go to the smallest label.
fn mode(neigh: &[Neighbor]) -> String {
    let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
    for n in neigh {
        *votes.entry(&n.label).or_insert(0) += 1;
    }
    let best = votes.values().copied().max().unwrap_or(0);
    votes
        .into_iter()
        .find(|(_, v)| *v == best)
        .map(|(l, _)| l.to_owned())
        .unwrap_or_default()
}

pub fn knn_classify(
    train: &LabeledTraceSet,
    t: &Trace,
    k: usize,
    metric: Metric,
    cfg: &DistanceConfig,
) -> Result<String, ClassifyError> {
    Ok(Knn::new(train, k, metric, *cfg)?.classify(t))
}

pub fn online_classify(
    train: &LabeledTraceSet,
    t: &Trace,
    k: usize,
    metric: Metric,
    cfg: &DistanceConfig,
) -> Result<OnlineResult, ClassifyError> {
    Ok(Knn::new(train, k, metric, *cfg)?.classify_online(t))
}

/// The `k` closest training traces with their distances, closest first.
pub fn explain(
    train: &LabeledTraceSet,
    t: &Trace,
    k: usize,
    metric: Metric,
    cfg: &DistanceConfig,
) -> Result<Vec<Neighbor>, ClassifyError> {
    Ok(Knn::new(train, k, metric, *cfg)?.neighbors(t))
}
