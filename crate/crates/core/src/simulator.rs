//! The plan, act, observe and generate-goals loop of a single acting agent.
//!
//! Each episode draws from four independent random streams derived from the
//! seed (goal generation, action failure, observation, exogenous events), so
//! changing the observation model never changes what the agent does.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{
    apply, ActionCall, Atom, Cond, DomainModel, EvalError, GroundAction, Grounder, ProblemModel,
    State, Sym, TypedObject,
};
use crate::planner::{plan_with, PlanError, PlannerConfig};
use crate::traces::{PlanningTrace, ObservationTrace, Trace};

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown goal generator `{0}`")]
    UnknownGenerator(String),
    #[error("goal generator produced an invalid problem: {0}")]
    InvalidGeneration(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A class of agent behavior: a label, the id of a registered goal
/// generator and its numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorProfile {
    pub label: String,
    pub generator: String,
    #[serde(default)]
    pub params: Params,
}

impl BehaviorProfile {
    pub fn new(label: &str, generator: &str, params: &[(&str, f64)]) -> Self {
        BehaviorProfile {
            label: label.into(),
            generator: generator.into(),
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn param(&self, name: &str, default: f64) -> f64 {
        self.params.get(name).copied().unwrap_or(default)
    }

    /// Label must be non-empty and every parameter named `*probability*`
    /// must lie in [0, 1].
    pub fn validate(&self) -> Result<(), SimError> {
        if self.label.is_empty() {
            return Err(SimError::InvalidConfig("profile label is empty".into()));
        }
        for (k, v) in &self.params {
            if k.contains("probability") && !(0.0..=1.0).contains(v) {
                return Err(SimError::InvalidConfig(format!(
                    "profile `{}`: {k} = {v} is outside [0, 1]",
                    self.label
                )));
            }
        }
        Ok(())
    }
}

/// What the observer can see and how reliably.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationModel {
    pub observable_actions: BTreeSet<String>,
    pub observable_predicates: BTreeSet<String>,
    /// Chance that a step is seen at all.
    pub p_observe: f64,
    /// Chance that a seen action is reported as a different observable one.
    pub p_noise: f64,
    /// Observed name of an action schema, for schemas the observer cannot
    /// tell apart.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl ObservationModel {
    /// Every action and every predicate/function of `dom` is observable.
    pub fn full(dom: &DomainModel) -> Self {
        ObservationModel {
            observable_actions: dom.actions.iter().map(|a| a.name.to_string()).collect(),
            observable_predicates: dom
                .predicates
                .iter()
                .chain(&dom.functions)
                .map(|p| p.name.to_string())
                .collect(),
            p_observe: 1.0,
            p_noise: 0.0,
            aliases: BTreeMap::new(),
        }
    }

    /// `full` without the named actions and predicates.
    pub fn hiding(dom: &DomainModel, actions: &[&str], predicates: &[&str]) -> Self {
        let mut m = Self::full(dom);
        for a in actions {
            m.observable_actions.remove(*a);
        }
        for p in predicates {
            m.observable_predicates.remove(*p);
        }
        m
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [("p_observe", self.p_observe), ("p_noise", self.p_noise)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig(format!("{name} = {p} is outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_observable_action(&self, name: &str) -> bool {
        self.observable_actions.contains(name)
    }

    /// The call as the observer reports it.
    pub fn observed_call(&self, a: &ActionCall) -> ActionCall {
        match self.aliases.get(&*a.name) {
            Some(alias) => Atom {
                name: Sym::from(alias.as_str()),
                args: a.args.clone(),
            },
            None => a.clone(),
        }
    }

    pub fn project(&self, s: &State) -> State {
        s.project(|n| self.observable_predicates.contains(n))
    }
}

/// A state edit that fires on its own with a fixed probability each step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ExogenousEvent {
    pub probability: f64,
    #[serde(default)]
    pub add: Vec<String>,
    #[serde(default)]
    pub del: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub p_failure: f64,
    pub planner: PlannerConfig,
    pub obs_model: ObservationModel,
    pub rng_seed: u64,
    #[serde(default)]
    pub exogenous: Vec<ExogenousEvent>,
}

impl SimConfig {
    pub fn new(obs_model: ObservationModel, rng_seed: u64) -> Self {
        SimConfig {
            horizon: 50,
            p_failure: 0.0,
            planner: PlannerConfig::default(),
            obs_model,
            rng_seed,
            exogenous: vec![],
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon == 0 {
            return Err(SimError::InvalidConfig("horizon must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p_failure) {
            return Err(SimError::InvalidConfig(format!(
                "p_failure = {} is outside [0, 1]",
                self.p_failure
            )));
        }
        for e in &self.exogenous {
            if !(0.0..=1.0).contains(&e.probability) {
                return Err(SimError::InvalidConfig(format!(
                    "exogenous event probability {} is outside [0, 1]",
                    e.probability
                )));
            }
        }
        self.obs_model.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCause {
    Horizon,
    PlannerTimeout,
    NoPlan,
}

impl EndCause {
    pub fn name(self) -> &'static str {
        match self {
            EndCause::Horizon => "horizon",
            EndCause::PlannerTimeout => "planner_timeout",
            EndCause::NoPlan => "no_plan",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub planning_trace: PlanningTrace,
    pub observation_trace: ObservationTrace,
    pub end_cause: EndCause,
    /// Number of planner calls.
    pub replans: usize,
}

/// The mutable problem a goal generator works on.
pub struct World<'a> {
    pub dom: &'a DomainModel,
    pub state: State,
    pub goals: Vec<Cond<Atom>>,
    pub objects: Vec<TypedObject>,
    pub step: usize,
    /// Scratch values a generator keeps between steps.
    pub memory: BTreeMap<String, f64>,
}

impl World<'_> {
    pub fn goals_met(&self) -> bool {
        self.state.satisfies_all(&self.goals).unwrap_or(false)
    }

    pub fn objects_of(&self, ty: &str) -> Vec<Sym> {
        self.objects
            .iter()
            .chain(&self.dom.constants)
            .filter(|o| self.dom.types.is_subtype(&o.ty, ty))
            .map(|o| o.name.clone())
            .collect()
    }

    /// Adds an object named `<prefix><n>` with the first unused `n`.
    pub fn fresh_object(&mut self, prefix: &str, ty: &str) -> Sym {
        let mut n = 1;
        loop {
            let name = format!("{prefix}{n}");
            if !self.objects.iter().any(|o| *o.name == *name) {
                let name = Sym::from(name.as_str());
                self.objects.push(TypedObject {
                    name: name.clone(),
                    ty: Sym::from(ty),
                });
                return name;
            }
            n += 1;
        }
    }
}

/// Produces new goals, state edits and objects for a behavior class.
pub trait GoalGenerator: Send + Sync {
    fn generate(&self, params: &Params, world: &mut World<'_>, rng: &mut dyn RngCore);
}

/// With probability `p_failure` the action fails and the state is kept.
pub fn failure_filter(
    s: &State,
    a: &GroundAction,
    p_failure: f64,
    rng: &mut dyn RngCore,
) -> Result<State, EvalError> {
    if rng.gen::<f64>() < p_failure {
        Ok(s.clone())
    } else {
        apply(s, a)
    }
}

/// The observer's view of one step.
///
/// A step that is not seen (probability `1 - p_observe`) shows up as a no-op
/// with the previously observed state. A seen step with a hidden action shows
/// up as a no-op with the current projected state. A seen observable action
/// is replaced by a different call from `candidates` with probability
/// `p_noise`.
pub fn observe_step(
    action: Option<&ActionCall>,
    state: &State,
    last_observed: &State,
    m: &ObservationModel,
    candidates: &[ActionCall],
    rng: &mut dyn RngCore,
) -> (Option<ActionCall>, State) {
    let seen = rng.gen::<f64>() < m.p_observe;
    let noisy = rng.gen::<f64>() < m.p_noise;
    let pick = rng.gen::<f64>();
    if !seen {
        return (None, last_observed.clone());
    }
    let observed = action
        .filter(|a| m.is_observable_action(&a.name))
        .map(|a| m.observed_call(a))
        .map(|a| {
            if !noisy {
                return a;
            }
            let others: Vec<&ActionCall> = candidates.iter().filter(|c| **c != a).collect();
            if others.is_empty() {
                a
            } else {
                others[((pick * others.len() as f64) as usize).min(others.len() - 1)].clone()
            }
        });
    (observed, m.project(state))
}

/// Runs `generator` for one step and checks what it produced.
pub fn goal_generation(
    generator: &dyn GoalGenerator,
    params: &Params,
    world: &mut World<'_>,
    rng: &mut dyn RngCore,
) -> Result<(), SimError> {
    generator.generate(params, world, rng);
    validate_world(world)
}

fn validate_world(w: &World<'_>) -> Result<(), SimError> {
    let known: BTreeSet<&str> = w
        .objects
        .iter()
        .chain(&w.dom.constants)
        .map(|o| &*o.name)
        .collect();
    let check = |a: &Atom, numeric: bool| -> Result<(), SimError> {
        let sig = if numeric {
            w.dom.function(&a.name)
        } else {
            w.dom.predicate(&a.name)
        };
        let sig = sig.ok_or_else(|| SimError::InvalidGeneration(format!("unknown name in {a}")))?;
        if sig.params.len() != a.args.len() {
            return Err(SimError::InvalidGeneration(format!("wrong arity in {a}")));
        }
        if let Some(c) = a.args.iter().find(|c| !known.contains(&***c)) {
            return Err(SimError::InvalidGeneration(format!("unknown object `{c}` in {a}")));
        }
        Ok(())
    };
    for a in &w.state.atoms {
        check(a, false)?;
    }
    for f in w.state.fluents.keys() {
        check(f, true)?;
    }
    for g in &w.goals {
        match g {
            Cond::Lit { atom, .. } => check(atom, false)?,
            Cond::Cmp(_, l, r) => {
                let mut fs = Vec::new();
                l.fluents(&mut fs);
                r.fluents(&mut fs);
                for f in fs {
                    check(f, true)?;
                }
            }
        }
    }
    Ok(())
}

fn stream(seed: u64, n: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(n);
    r
}

fn parse_event_atom(s: &str) -> Result<Atom, SimError> {
    let mut parts = s
        .trim()
        .trim_start_matches('(')
        .trim_end_matches(')')
        .split_whitespace();
    let name = parts
        .next()
        .ok_or_else(|| SimError::InvalidConfig(format!("empty exogenous atom `{s}`")))?;
    Ok(Atom {
        name: Sym::from(name.to_lowercase().as_str()),
        args: parts.map(|p| Sym::from(p.to_lowercase().as_str())).collect(),
    })
}

/// Runs one episode of `profile` acting in `prob`.
pub fn run_episode(
    dom: &DomainModel,
    prob: &ProblemModel,
    profile: &BehaviorProfile,
    cfg: &SimConfig,
) -> Result<EpisodeResult, SimError> {
    let generator = crate::domains::generator(&profile.generator)
        .ok_or_else(|| SimError::UnknownGenerator(profile.generator.clone()))?;
    run_episode_with(dom, prob, profile, generator, cfg)
}

/// As [`run_episode`] with an explicit generator.
pub fn run_episode_with(
    dom: &DomainModel,
    prob: &ProblemModel,
    profile: &BehaviorProfile,
    generator: &dyn GoalGenerator,
    cfg: &SimConfig,
) -> Result<EpisodeResult, SimError> {
    cfg.validate()?;
    profile.validate()?;
    let events: Vec<(f64, Vec<Atom>, Vec<Atom>)> = cfg
        .exogenous
        .iter()
        .map(|e| {
            Ok((
                e.probability,
                e.add.iter().map(|a| parse_event_atom(a)).collect::<Result<_, _>>()?,
                e.del.iter().map(|a| parse_event_atom(a)).collect::<Result<_, _>>()?,
            ))
        })
        .collect::<Result<_, SimError>>()?;

    let mut gen_rng = stream(cfg.rng_seed, 1);
    let mut fail_rng = stream(cfg.rng_seed, 2);
    let mut obs_rng = stream(cfg.rng_seed, 3);
    let mut exo_rng = stream(cfg.rng_seed, 4);
    let mut planner_cfg = cfg.planner.clone();

    let grounder = Grounder::new(dom);
    let mut world = World {
        dom,
        state: prob.init.clone(),
        goals: prob.goals.clone(),
        objects: prob.objects.clone(),
        step: 0,
        memory: BTreeMap::new(),
    };
    let mut actions = grounder.ground(&world.objects, &world.state);
    let mut candidates = observable_calls(&actions, &cfg.obs_model);

    let meta = |mut t: Trace| {
        t.label = Some(profile.label.clone());
        t.domain = Some(dom.name.to_string());
        t.seed = Some(cfg.rng_seed);
        t
    };
    let mut planning = meta(Trace::new(world.state.clone()));
    let mut observed = meta(Trace::new(cfg.obs_model.project(&world.state)));
    let mut last_observed = observed.init.clone();

    let mut plan: VecDeque<GroundAction> = VecDeque::new();
    let mut predicted: Option<State> = None;
    let mut replans = 0;
    let mut end_cause = EndCause::Horizon;

    for step in 0..cfg.horizon {
        world.step = step;
        let before_goals = world.goals.clone();
        let before_state = world.state.clone();
        let before_objects: BTreeSet<Sym> = world.objects.iter().map(|o| o.name.clone()).collect();

        goal_generation(generator, &profile.params, &mut world, &mut gen_rng)?;
        for (p, add, del) in &events {
            if exo_rng.gen::<f64>() < *p {
                for a in del {
                    world.state.atoms.remove(a);
                }
                for a in add {
                    world.state.atoms.insert(a.clone());
                }
            }
        }

        let mut replan = world.goals != before_goals || world.state != before_state;
        let after_objects: BTreeSet<Sym> = world.objects.iter().map(|o| o.name.clone()).collect();
        let statics_changed = world
            .state
            .atoms
            .symmetric_difference(&before_state.atoms)
            .any(|a| grounder.is_static(&a.name));
        if statics_changed || !before_objects.is_subset(&after_objects) {
            actions = grounder.ground(&world.objects, &world.state);
            candidates = observable_calls(&actions, &cfg.obs_model);
            replan = true;
        } else if after_objects.len() > before_objects.len() {
            let fresh: Vec<Sym> = after_objects.difference(&before_objects).cloned().collect();
            actions.extend(grounder.ground_new(&world.objects, &fresh, &world.state));
            candidates = observable_calls(&actions, &cfg.obs_model);
            replan = true;
        }

        if world.goals_met() {
            plan.clear();
        } else if plan.is_empty() || replan || predicted.as_ref() != Some(&world.state) {
            replans += 1;
            planner_cfg.rng_seed = cfg.rng_seed.wrapping_add(replans as u64);
            match plan_with(&actions, &world.state, &world.goals, &planner_cfg) {
                Ok(p) => plan = p.steps.into(),
                Err(PlanError::Timeout | PlanError::ExpansionLimit) => {
                    end_cause = EndCause::PlannerTimeout;
                    break;
                }
                Err(PlanError::NoPlanFound) => {
                    end_cause = EndCause::NoPlan;
                    break;
                }
                Err(PlanError::Eval(e)) => return Err(e.into()),
            }
        }

        let (call, next) = match plan.pop_front() {
            Some(a) => {
                predicted = Some(apply(&world.state, &a)?);
                let next = failure_filter(&world.state, &a, cfg.p_failure, &mut fail_rng)?;
                (Some(a.call()), next)
            }
            None => {
                predicted = None;
                (None, world.state.clone())
            }
        };

        let (obs_action, obs_state) = observe_step(
            call.as_ref(),
            &next,
            &last_observed,
            &cfg.obs_model,
            &candidates,
            &mut obs_rng,
        );
        planning.push(call, next.clone());
        observed.push(obs_action, obs_state.clone());
        last_observed = obs_state;
        world.state = next;
    }

    Ok(EpisodeResult {
        planning_trace: planning,
        observation_trace: observed,
        end_cause,
        replans,
    })
}

fn observable_calls(actions: &[GroundAction], m: &ObservationModel) -> Vec<ActionCall> {
    let set: BTreeSet<ActionCall> = actions
        .iter()
        .filter(|a| m.is_observable_action(&a.name))
        .map(|a| m.observed_call(&a.call()))
        .collect();
    set.into_iter().collect()
}
