//! Dataset generation and classification sweeps.
//!
//! Every episode seed is drawn from a ChaCha stream keyed by the run seed,
//! and parallel work is collected by index, so the output depends only on
//! the configuration.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::{ClassifyError, Knn, LabeledTraceSet};
use crate::distances::{DistanceConfig, Metric};
use crate::domains::{get_bundle, DomainBundle, DomainError};
use crate::planner::PlannerConfig;
use crate::simulator::{run_episode, BehaviorProfile, EndCause, Params, SimConfig, SimError};
use crate::traces::Trace;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("episode with seed {seed} ({label}) failed: {source}")]
    Episode {
        seed: u64,
        label: String,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A value in a sweep; written back exactly as given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Int(i) => write!(f, "{i}"),
            SweepValue::Float(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

/// One swept setting. Several sweeps combine as a Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub key: String,
    pub values: Vec<SweepValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: String,
    /// Training traces per class.
    pub n_train: usize,
    /// Test traces, classes drawn uniformly.
    pub n_test: usize,
    pub horizon: usize,
    pub similarity: Metric,
    pub k: usize,
    pub p_observe: f64,
    pub p_noise: f64,
    pub p_failure: f64,
    /// Per-class override of `probability-goal-appears`.
    pub goal_probability: BTreeMap<String, f64>,
    /// Per-class overrides of any profile parameter.
    pub params: BTreeMap<String, Params>,
    /// Replaces the bundle's profiles when non-empty.
    pub profiles: Vec<BehaviorProfile>,
    pub seeds: Vec<u64>,
    /// Fluent difference normalizer of `dr`.
    pub m: f64,
    /// Also classify every prefix of each test trace.
    pub online: bool,
    pub planner: PlannerConfig,
    pub sweep: Vec<Sweep>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: "terrorist".into(),
            n_train: 10,
            n_test: 20,
            horizon: 50,
            similarity: Metric::Dr,
            k: 1,
            p_observe: 1.0,
            p_noise: 0.0,
            p_failure: 0.0,
            goal_probability: BTreeMap::new(),
            params: BTreeMap::new(),
            profiles: vec![],
            seeds: vec![1, 2, 3, 4, 5],
            m: DistanceConfig::default().m,
            online: true,
            planner: PlannerConfig::default(),
            sweep: vec![],
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        for (name, p) in [("p_observe", self.p_observe), ("p_noise", self.p_noise), ("p_failure", self.p_failure)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} = {p} is outside [0, 1]"));
            }
        }
        for (label, p) in &self.goal_probability {
            if !(0.0..=1.0).contains(p) {
                return bad(format!("goal_probability.{label} = {p} is outside [0, 1]"));
            }
        }
        if self.n_train == 0 || self.n_test == 0 {
            return bad("n_train and n_test must be at least 1".into());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.m <= 0.0 || !self.m.is_finite() {
            return bad(format!("m = {} must be positive", self.m));
        }
        if self.k == 0 || self.k > 2 * self.n_train {
            return bad(format!("k = {} must be between 1 and the training set size", self.k));
        }
        Ok(())
    }

    /// Applies `key = value` as a command-line or sweep override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ExperimentError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ExperimentError> {
            v.parse()
                .map_err(|_| ExperimentError::Config(format!("bad value `{v}` for {key}")))
        }
        match key {
            "domain" => self.domain = value.to_owned(),
            "n_train" => self.n_train = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "similarity" => self.similarity = value.parse().map_err(ExperimentError::Config)?,
            "k" => self.k = num(key, value)?,
            "p_observe" => self.p_observe = num(key, value)?,
            "p_noise" => self.p_noise = num(key, value)?,
            "p_failure" => self.p_failure = num(key, value)?,
            "m" => self.m = num(key, value)?,
            _ => {
                if let Some(label) = key.strip_prefix("goal_probability.") {
                    self.goal_probability.insert(label.to_owned(), num(key, value)?);
                } else if let Some(rest) = key.strip_prefix("params.") {
                    let (label, name) = rest
                        .split_once('.')
                        .ok_or_else(|| ExperimentError::Config(format!("expected params.<class>.<name>, got {key}")))?;
                    self.params
                        .entry(label.to_owned())
                        .or_default()
                        .insert(name.to_owned(), num(key, value)?);
                } else {
                    return Err(ExperimentError::Config(format!("unknown setting `{key}`")));
                }
            }
        }
        Ok(())
    }

    /// Every combination of the sweep values, each with the settings that
    /// produced it.
    pub fn expand(&self) -> Result<Vec<(Vec<(String, String)>, ExperimentConfig)>, ExperimentError> {
        let mut out = vec![(Vec::new(), ExperimentConfig { sweep: vec![], ..self.clone() })];
        for s in &self.sweep {
            if s.values.is_empty() {
                return Err(ExperimentError::Config(format!("sweep over `{}` has no values", s.key)));
            }
            let mut next = Vec::new();
            for (settings, cfg) in &out {
                for v in &s.values {
                    let mut c = cfg.clone();
                    let text = v.to_string();
                    c.set(&s.key, &text)?;
                    let mut st = settings.clone();
                    st.push((s.key.clone(), text));
                    next.push((st, c));
                }
            }
            out = next;
        }
        Ok(out)
    }

    /// The bundle's profiles with this configuration's overrides applied.
    pub fn profiles(&self, bundle: &DomainBundle) -> Result<Vec<BehaviorProfile>, ExperimentError> {
        let mut profiles = if self.profiles.is_empty() {
            bundle.profiles.clone()
        } else {
            self.profiles.clone()
        };
        if profiles.len() < 2 {
            return Err(ExperimentError::Config("at least two behavior profiles are required".into()));
        }
        for label in self.goal_probability.keys().chain(self.params.keys()) {
            if !profiles.iter().any(|p| p.label == *label) {
                return Err(ExperimentError::Config(format!("no profile labelled `{label}`")));
            }
        }
        for p in &mut profiles {
            if let Some(v) = self.goal_probability.get(&p.label) {
                p.params.insert("probability-goal-appears".into(), *v);
            }
            if let Some(over) = self.params.get(&p.label) {
                p.params.extend(over.iter().map(|(k, v)| (k.clone(), *v)));
            }
        }
        Ok(profiles)
    }

    pub fn sim_config(&self, bundle: &DomainBundle, seed: u64) -> SimConfig {
        let mut obs = bundle.obs_model.clone();
        obs.p_observe = self.p_observe;
        obs.p_noise = self.p_noise;
        let mut sim = SimConfig::new(obs, seed);
        sim.horizon = self.horizon;
        sim.p_failure = self.p_failure;
        sim.planner = self.planner.clone();
        sim
    }

    pub fn distance_config(&self) -> DistanceConfig {
        DistanceConfig { m: self.m }
    }
}

/// Training and test corpora for one run seed.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub train: LabeledTraceSet,
    pub test: LabeledTraceSet,
    /// Full planning traces, training first.
    pub planning: Vec<Trace>,
    pub end_causes: Vec<EndCause>,
}

fn seed_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

pub fn generate_dataset(cfg: &ExperimentConfig, seed: u64) -> Result<Dataset, ExperimentError> {
    cfg.validate()?;
    let bundle = get_bundle(&cfg.domain)?;
    let profiles = cfg.profiles(&bundle)?;

    // (profile index, episode seed), training then test
    let mut jobs: Vec<(usize, u64)> = Vec::new();
    let mut seeds = seed_stream(seed, 1);
    for (i, _) in profiles.iter().enumerate() {
        for _ in 0..cfg.n_train {
            jobs.push((i, seeds.next_u64()));
        }
    }
    let mut classes = seed_stream(seed, 2);
    for _ in 0..cfg.n_test {
        let i = classes.gen_range(0..profiles.len());
        jobs.push((i, seeds.next_u64()));
    }

    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(i, ep_seed)| {
            let prob = bundle.generate_problem(ep_seed);
            run_episode(&bundle.domain, &prob, &profiles[i], &cfg.sim_config(&bundle, ep_seed)).map_err(|source| {
                ExperimentError::Episode {
                    seed: ep_seed,
                    label: profiles[i].label.clone(),
                    source,
                }
            })
        })
        .collect();

    let n_train = profiles.len() * cfg.n_train;
    let mut ds = Dataset {
        train: LabeledTraceSet::new(),
        test: LabeledTraceSet::new(),
        planning: Vec::with_capacity(jobs.len()),
        end_causes: Vec::with_capacity(jobs.len()),
    };
    for (n, (r, &(i, _))) in results.into_iter().zip(&jobs).enumerate() {
        let r = r?;
        let label = profiles[i].label.clone();
        if n < n_train {
            ds.train.push(label, r.observation_trace);
        } else {
            ds.test.push(label, r.observation_trace);
        }
        ds.planning.push(r.planning_trace);
        ds.end_causes.push(r.end_cause);
    }
    Ok(ds)
}

/// Outcome of classifying one test trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub truth: String,
    pub predicted: String,
    pub online_final: Option<String>,
    pub convergence_step: Option<usize>,
}

impl TestOutcome {
    pub fn correct(&self) -> bool {
        self.truth == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub outcomes: Vec<TestOutcome>,
    pub early_ends: usize,
}

impl SeedResult {
    pub fn accuracy(&self) -> f64 {
        self.outcomes.iter().filter(|o| o.correct()).count() as f64 / self.outcomes.len() as f64
    }
}

pub fn evaluate(cfg: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<SeedResult, ExperimentError> {
    let knn = Knn::new(&ds.train, cfg.k, cfg.similarity, cfg.distance_config())?;
    let outcomes = ds
        .test
        .entries()
        .par_iter()
        .map(|(truth, t)| {
            let predicted = knn.classify(t);
            let (online_final, convergence_step) = if cfg.online {
                let o = knn.classify_online(t);
                (Some(o.final_label), Some(o.convergence_step))
            } else {
                (None, None)
            };
            TestOutcome {
                truth: truth.clone(),
                predicted,
                online_final,
                convergence_step,
            }
        })
        .collect();
    Ok(SeedResult {
        seed,
        outcomes,
        early_ends: ds.end_causes.iter().filter(|c| **c != EndCause::Horizon).count(),
    })
}

/// One table row: a combination of swept settings and its per-seed results.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub settings: Vec<(String, String)>,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedResult>,
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl Row {
    pub fn accuracy(&self) -> f64 {
        mean(self.seeds.iter().map(SeedResult::accuracy)).unwrap_or(0.0)
    }

    pub fn accuracy_sd(&self) -> f64 {
        let m = self.accuracy();
        mean(self.seeds.iter().map(|s| (s.accuracy() - m).powi(2)))
            .unwrap_or(0.0)
            .sqrt()
    }

    fn outcomes(&self) -> impl Iterator<Item = &TestOutcome> {
        self.seeds.iter().flat_map(|s| s.outcomes.iter())
    }

    /// Mean convergence step over all test traces.
    pub fn convergence(&self) -> Option<f64> {
        mean(self.outcomes().filter_map(|o| o.convergence_step.map(|c| c as f64)))
    }

    /// Mean convergence step over correctly classified test traces.
    pub fn convergence_correct(&self) -> Option<f64> {
        mean(
            self.outcomes()
                .filter(|o| o.correct())
                .filter_map(|o| o.convergence_step.map(|c| c as f64)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub domain: String,
    pub rows: Vec<Row>,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable, ExperimentError> {
    let mut rows = Vec::new();
    for (settings, c) in cfg.expand()? {
        c.validate()?;
        let seeds = c
            .seeds
            .iter()
            .map(|&s| evaluate(&c, &generate_dataset(&c, s)?, s))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(Row {
            settings,
            config: c,
            seeds,
        });
    }
    Ok(ResultTable {
        domain: cfg.domain.clone(),
        rows,
    })
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.4}"))
}

/// Settings that always have their own CSV column.
const FIXED_COLUMNS: [&str; 7] = ["similarity", "k", "horizon", "p_observe", "p_noise", "p_failure", "seeds"];

impl ResultTable {
    pub fn to_csv(&self) -> String {
        let extra = |k: &str| !FIXED_COLUMNS.contains(&k);
        let keys: Vec<&str> = self
            .rows
            .first()
            .map(|r| r.settings.iter().map(|(k, _)| k.as_str()).filter(|k| extra(k)).collect())
            .unwrap_or_default();
        let mut out = String::from("domain");
        for k in &keys {
            let _ = write!(out, ",{k}");
        }
        out.push_str(",similarity,k,horizon,p_observe,p_noise,p_failure,seeds,accuracy,accuracy_sd,min_accuracy,max_accuracy,convergence,convergence_correct,early_ends\n");
        for r in &self.rows {
            let c = &r.config;
            let _ = write!(out, "{}", self.domain);
            for (_, v) in r.settings.iter().filter(|(k, _)| extra(k)) {
                let _ = write!(out, ",{v}");
            }
            let accs: Vec<f64> = r.seeds.iter().map(SeedResult::accuracy).collect();
            let seeds: Vec<String> = c.seeds.iter().map(u64::to_string).collect();
            let _ = writeln!(
                out,
                ",{},{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{},{},{}",
                c.similarity,
                c.k,
                c.horizon,
                c.p_observe,
                c.p_noise,
                c.p_failure,
                seeds.join(";"),
                r.accuracy(),
                r.accuracy_sd(),
                accs.iter().copied().fold(f64::INFINITY, f64::min),
                accs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                opt(r.convergence()),
                opt(r.convergence_correct()),
                r.seeds.iter().map(|s| s.early_ends).sum::<usize>(),
            );
        }
        out
    }

    /// Configuration echo, seeds and versions for reproducing the table.
    pub fn manifest(&self, cfg: &ExperimentConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# run manifest");
        let _ = writeln!(out, "tool = \"agentrace {}\"", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "rows = {}", self.rows.len());
        let _ = writeln!(
            out,
            "note = \"similarity {} is used for every row unless swept\"",
            cfg.similarity
        );
        let _ = writeln!(out, "\n[config]");
        for line in cfg.to_toml().lines() {
            if line.starts_with('[') {
                let _ = writeln!(out, "[config.{}", &line[1..]);
            } else {
                let _ = writeln!(out, "{line}");
            }
        }
        out
    }

    /// Writes `<stem>.csv` and `<stem>.manifest.toml`.
    pub fn write(&self, cfg: &ExperimentConfig, csv_path: &Path) -> Result<(), ExperimentError> {
        std::fs::write(csv_path, self.to_csv())?;
        std::fs::write(csv_path.with_extension("manifest.toml"), self.manifest(cfg))?;
        Ok(())
    }
}
