use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use agentrace::classifier::{Knn, LabeledTraceSet};
use agentrace::distances::{DistanceConfig, Metric};
use agentrace::domains::get_bundle;
use agentrace::experiment::{generate_dataset, run_experiment, ExperimentConfig, Sweep, SweepValue};
use agentrace::simulator::run_episode;
use agentrace::traces::{read_traces, write_traces, write_traces_to, Trace};

#[derive(Parser)]
#[command(name = "agentrace", version, about = "Simulate goal-driven agents and classify their behavior traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print or save both traces.
    Simulate(SimulateArgs),
    /// Generate training and test corpora.
    Dataset(DatasetArgs),
    /// Classify traces against a labelled corpus.
    Classify(ClassifyArgs),
    /// Run a classification sweep and write a CSV table.
    Experiment(ExperimentArgs),
}

/// Settings shared by every subcommand; each overrides the config file.
#[derive(Args, Default)]
struct ConfigArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    domain: Option<String>,
    #[arg(long)]
    n_train: Option<usize>,
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    /// da, ddelta, dg or dr.
    #[arg(long)]
    similarity: Option<Metric>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    p_observe: Option<f64>,
    #[arg(long)]
    p_noise: Option<f64>,
    #[arg(long)]
    p_failure: Option<f64>,
    #[arg(long)]
    m: Option<f64>,
    /// Comma-separated run seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Per-class goal probability, as `class=p`. Repeatable.
    #[arg(long = "goal-probability", value_name = "CLASS=P")]
    goal_probability: Vec<String>,
    /// Any other setting, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Planner time bound in seconds.
    #[arg(long)]
    time_bound: Option<f64>,
}

fn split_pair(s: &str) -> Result<(&str, &str)> {
    s.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| anyhow!("expected key=value, got `{s}`"))
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.domain {
            cfg.domain = v.clone();
        }
        if let Some(v) = self.n_train {
            cfg.n_train = v;
        }
        if let Some(v) = self.n_test {
            cfg.n_test = v;
        }
        if let Some(v) = self.horizon {
            cfg.horizon = v;
        }
        if let Some(v) = self.similarity {
            cfg.similarity = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.p_observe {
            cfg.p_observe = v;
        }
        if let Some(v) = self.p_noise {
            cfg.p_noise = v;
        }
        if let Some(v) = self.p_failure {
            cfg.p_failure = v;
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = &self.seeds {
            cfg.seeds = v.clone();
        }
        if let Some(v) = self.time_bound {
            cfg.planner.time_bound = Duration::try_from_secs_f64(v).context("time bound")?;
        }
        for g in &self.goal_probability {
            let (class, p) = split_pair(g)?;
            cfg.set(&format!("goal_probability.{class}"), p)?;
        }
        for s in &self.set {
            let (k, v) = split_pair(s)?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Behavior class to simulate; defaults to the domain's first class.
    #[arg(long)]
    class: Option<String>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where to write the planning trace.
    #[arg(long)]
    planning_out: Option<PathBuf>,
    /// Where to write the observation trace; stdout if neither output is set.
    #[arg(long)]
    observed_out: Option<PathBuf>,
}

#[derive(Args)]
struct DatasetArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Run seed; defaults to the first configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory receiving train.traces and test.traces.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Labelled training corpus.
    #[arg(long)]
    train: PathBuf,
    /// Traces to classify.
    #[arg(long)]
    traces: PathBuf,
    /// List the nearest training traces behind each decision.
    #[arg(long)]
    explain: bool,
    /// Also classify every prefix and report the convergence step.
    #[arg(long)]
    online: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Sweep a setting, as `key=v1,v2,...`. Repeat for a grid.
    #[arg(long = "sweep", value_name = "KEY=V1,V2")]
    sweep: Vec<String>,
    /// CSV output; a `.manifest.toml` file is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Dataset(a) => dataset(a),
        Command::Classify(a) => classify(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = a.cfg.load()?;
    let bundle = get_bundle(&cfg.domain)?;
    let profiles = cfg.profiles(&bundle)?;
    let profile = match &a.class {
        Some(c) => profiles
            .iter()
            .find(|p| p.label == *c)
            .ok_or_else(|| anyhow!("domain {} has no class `{c}`", cfg.domain))?,
        None => &profiles[0],
    };
    let prob = bundle.generate_problem(a.seed);
    let r = run_episode(&bundle.domain, &prob, profile, &cfg.sim_config(&bundle, a.seed))?;
    eprintln!(
        "{} steps, {} actions, ended by {}",
        r.planning_trace.len(),
        r.planning_trace.actions().count(),
        r.end_cause.name()
    );
    if let Some(p) = &a.planning_out {
        write_traces(p, &[r.planning_trace.clone()])?;
    }
    if let Some(p) = &a.observed_out {
        write_traces(p, &[r.observation_trace.clone()])?;
    }
    if a.planning_out.is_none() && a.observed_out.is_none() {
        let mut out = io::stdout().lock();
        writeln!(out, "; planning trace")?;
        write_traces_to(&mut out, &[r.planning_trace])?;
        writeln!(out, "; observation trace")?;
        write_traces_to(&mut out, &[r.observation_trace])?;
    }
    Ok(())
}

fn dataset(a: DatasetArgs) -> Result<()> {
    let cfg = a.cfg.load()?;
    let seed = a.seed.unwrap_or(cfg.seeds[0]);
    let ds = generate_dataset(&cfg, seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let labelled = |set: &LabeledTraceSet| -> Vec<Trace> {
        set.entries()
            .iter()
            .map(|(l, t)| Trace {
                label: Some(l.clone()),
                ..t.clone()
            })
            .collect()
    };
    write_traces(a.out_dir.join("train.traces"), &labelled(&ds.train))?;
    write_traces(a.out_dir.join("test.traces"), &labelled(&ds.test))?;
    write_traces(a.out_dir.join("planning.traces"), &ds.planning)?;
    eprintln!(
        "wrote {} training and {} test traces to {}",
        ds.train.len(),
        ds.test.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn classify(a: ClassifyArgs) -> Result<()> {
    let cfg = a.cfg.load()?;
    let train = LabeledTraceSet::from_traces(
        read_traces(&a.train).with_context(|| format!("reading {}", a.train.display()))?,
    )?;
    let queries = read_traces(&a.traces).with_context(|| format!("reading {}", a.traces.display()))?;
    let knn = Knn::new(&train, cfg.k, cfg.similarity, DistanceConfig { m: cfg.m })?;
    let mut out = io::stdout().lock();
    let (mut known, mut correct) = (0, 0);
    for (i, q) in queries.iter().enumerate() {
        let neighbors = knn.neighbors(q);
        let label = knn.classify(q);
        write!(out, "trace {i}: {label}")?;
        if let Some(truth) = &q.label {
            known += 1;
            correct += usize::from(*truth == label);
            write!(out, " (labelled {truth})")?;
        }
        if a.online {
            let o = knn.classify_online(q);
            write!(out, " converged at step {}", o.convergence_step)?;
        }
        writeln!(out)?;
        if a.explain {
            for n in neighbors {
                writeln!(out, "  neighbor {} [{}] at {:.6}", n.index, n.label, n.distance)?;
            }
        }
    }
    if known > 0 {
        writeln!(out, "accuracy {:.4} over {known} labelled traces", correct as f64 / known as f64)?;
    }
    Ok(())
}

fn parse_sweep(s: &str) -> Result<Sweep> {
    let (key, values) = split_pair(s)?;
    let values: Vec<SweepValue> = values
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<i64>()
                .map(SweepValue::Int)
                .or_else(|_| v.parse::<f64>().map(SweepValue::Float))
                .unwrap_or_else(|_| SweepValue::Text(v.to_owned()))
        })
        .collect();
    if values.is_empty() {
        bail!("sweep `{key}` has no values");
    }
    Ok(Sweep {
        key: key.to_owned(),
        values,
    })
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let mut cfg = a.cfg.load()?;
    for s in &a.sweep {
        cfg.sweep.push(parse_sweep(s)?);
    }
    let table = run_experiment(&cfg)?;
    match &a.out {
        Some(p) => {
            table.write(&cfg, p)?;
            eprintln!("wrote {}", p.display());
        }
        None => print!("{}", table.to_csv()),
    }
    Ok(())
}
