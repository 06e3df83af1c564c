//! Planning and observation traces, their deltas, constant normalization and
//! the on-disk corpus format.

mod io;
mod normalize;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::hash::{Hash, Hasher};

use crate::pddl::{ActionCall, Atom, State};

pub use io::{parse_traces, read_traces, write_traces, write_traces_to, TraceIoError};
pub use normalize::{natural_cmp, normalize_constants, rename_constants, NormalizedTrace};

/// One step of a trace: the action taken (or `None` for a no-op) and the
/// resulting state.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Step {
    pub action: Option<ActionCall>,
    pub state: State,
}

/// A sequence of states linked by actions. The same shape serves as the
/// agent's full planning trace and the observer's partial view of it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub init: State,
    pub steps: Vec<Step>,
    pub label: Option<String>,
    pub domain: Option<String>,
    pub seed: Option<u64>,
}

pub type PlanningTrace = Trace;
pub type ObservationTrace = Trace;

impl Trace {
    pub fn new(init: State) -> Self {
        Trace {
            init,
            ..Trace::default()
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn push(&mut self, action: Option<ActionCall>, state: State) {
        self.steps.push(Step { action, state });
    }

    /// The first `n` steps, keeping the metadata.
    pub fn prefix(&self, n: usize) -> Trace {
        Trace {
            init: self.init.clone(),
            steps: self.steps[..n.min(self.steps.len())].to_vec(),
            label: self.label.clone(),
            domain: self.domain.clone(),
            seed: self.seed,
        }
    }

    /// Non-no-op actions in order.
    pub fn actions(&self) -> impl Iterator<Item = &ActionCall> {
        self.steps.iter().filter_map(|s| s.action.as_ref())
    }

    /// `init`, then every post-step state.
    pub fn states(&self) -> impl Iterator<Item = &State> {
        std::iter::once(&self.init).chain(self.steps.iter().map(|s| &s.state))
    }
}

/// A fluent value with total ordering and bitwise equality, so deltas can
/// live in ordered sets.
#[derive(Debug, Clone, Copy)]
pub struct Value(pub f64);

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0) == Ordering::Equal
    }
}

impl Eq for Value {}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}

/// A literal of a delta: an added atom or a fluent with its new value.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Literal {
    Atom(Atom),
    Fluent(Atom, Value),
}

impl Literal {
    pub fn term(&self) -> &Atom {
        match self {
            Literal::Atom(a) | Literal::Fluent(a, _) => a,
        }
    }
}

/// What became true between two consecutive states. Deleted atoms are not
/// recorded.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Delta {
    pub added_atoms: BTreeSet<Atom>,
    pub changed_fluents: BTreeMap<Atom, Value>,
}

impl Delta {
    pub fn between(prev: &State, next: &State) -> Delta {
        Delta {
            added_atoms: next.atoms.difference(&prev.atoms).cloned().collect(),
            changed_fluents: next
                .fluents
                .iter()
                .filter(|(k, v)| prev.fluents.get(*k).map_or(true, |p| Value(*p) != Value(**v)))
                .map(|(k, v)| (k.clone(), Value(*v)))
                .collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.added_atoms.is_empty() && self.changed_fluents.is_empty()
    }

    pub fn len(&self) -> usize {
        self.added_atoms.len() + self.changed_fluents.len()
    }

    pub fn literals(&self) -> impl Iterator<Item = Literal> + '_ {
        self.added_atoms
            .iter()
            .map(|a| Literal::Atom(a.clone()))
            .chain(self.changed_fluents.iter().map(|(k, v)| Literal::Fluent(k.clone(), *v)))
    }

    /// Predicate and function names occurring in the delta.
    pub fn names(&self) -> BTreeSet<&str> {
        self.added_atoms
            .iter()
            .chain(self.changed_fluents.keys())
            .map(|a| &*a.name)
            .collect()
    }
}

/// Δ(t): the set of deltas between consecutive states.
pub fn compute_deltas(t: &Trace) -> BTreeSet<Delta> {
    let mut out = BTreeSet::new();
    let mut prev = &t.init;
    for s in &t.steps {
        out.insert(Delta::between(prev, &s.state));
        prev = &s.state;
    }
    out
}
