//! Trace distances: action-name Jaccard (`da`), delta-name Jaccard
//! (`ddelta`), action-count squared Euclidean (`dg`) and the relational
//! distance (`dr`) over normalized ground actions and deltas.
//!
//! `dr` matches every element of the first trace to its closest element in
//! the second, so it is not symmetric.
//!
//! The argument distance between two same-name atoms is
//! `0.5 * mismatches / arity`, so identical atoms are at distance 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::pddl::{Atom, Sym};
use crate::traces::{compute_deltas, normalize_constants, Literal, NormalizedTrace, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DistanceConfig {
    /// Largest fluent difference expected; value gaps are divided by it.
    pub m: f64,
}

impl Default for DistanceConfig {
    fn default() -> Self {
        DistanceConfig { m: 1e6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Da,
    Ddelta,
    Dg,
    Dr,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Da, Metric::Ddelta, Metric::Dg, Metric::Dr];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Da => "da",
            Metric::Ddelta => "ddelta",
            Metric::Dg => "dg",
            Metric::Dr => "dr",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown metric `{s}` (expected da, ddelta, dg or dr)"))
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// 1 - |a ∩ b| / |a ∪ b|, and 0 for two empty sets.
fn jaccard_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    1.0 - a.intersection(b).count() as f64 / union as f64
}

/// Distance between two ground atoms or actions.
pub fn d_f(x1: &Atom, x2: &Atom) -> f64 {
    if x1.name != x2.name || x1.args.len() != x2.args.len() {
        return 1.0;
    }
    if x1.args.is_empty() {
        return 0.0;
    }
    let mismatches = x1.args.iter().zip(&x2.args).filter(|(a, b)| a != b).count();
    0.5 * mismatches as f64 / x1.args.len() as f64
}

/// Distance between two fluent assignments `f1(args1) = v1`, `f2(args2) = v2`.
pub fn d_n(l1: (&Atom, f64), l2: (&Atom, f64), cfg: &DistanceConfig) -> f64 {
    d_f(l1.0, l2.0) * (l1.1 - l2.1).abs() / cfg.m
}

/// Distance between two delta literals: `d_f` for atoms, `d_n` for fluents
/// of the same function, and 1 otherwise. Capped at 1.
pub fn d_literal(l1: &Literal, l2: &Literal, cfg: &DistanceConfig) -> f64 {
    match (l1, l2) {
        (Literal::Atom(a), Literal::Atom(b)) => d_f(a, b),
        (Literal::Fluent(a, v), Literal::Fluent(b, w))
            if a.name == b.name && a.args.len() == b.args.len() =>
        {
            d_n((a, v.0), (b, w.0), cfg).min(1.0)
        }
        _ => 1.0,
    }
}

/// (1/Z) Σ_{x ∈ xs} min_{y ∈ ys} d(x, y) with Z = max(|xs|, |ys|); 0 when
/// both are empty and 1 when exactly one is.
fn directed_match<T>(xs: &[T], ys: &[T], mut d: impl FnMut(&T, &T) -> f64) -> f64 {
    match (xs.is_empty(), ys.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return 1.0,
        _ => {}
    }
    let sum: f64 = xs
        .iter()
        .map(|x| ys.iter().map(|y| d(x, y)).fold(f64::INFINITY, f64::min))
        .sum();
    sum / xs.len().max(ys.len()) as f64
}

/// Distance between two deltas given as literal lists.
pub fn d_rdelta_pair(d1: &[Literal], d2: &[Literal], cfg: &DistanceConfig) -> f64 {
    directed_match(d1, d2, |a, b| d_literal(a, b, cfg))
}

/// Everything the distances need from one trace, computed once.
#[derive(Debug, Clone)]
pub struct PreparedTrace {
    action_names: BTreeSet<Sym>,
    action_counts: BTreeMap<Sym, usize>,
    delta_names: BTreeSet<BTreeSet<Sym>>,
    norm_actions: Vec<Atom>,
    norm_deltas: Vec<Vec<Literal>>,
}

impl PreparedTrace {
    pub fn new(t: &Trace) -> Self {
        let mut action_counts = BTreeMap::new();
        for a in t.actions() {
            *action_counts.entry(a.name.clone()).or_insert(0) += 1;
        }
        let delta_names = compute_deltas(t)
            .iter()
            .map(|d| {
                d.added_atoms
                    .iter()
                    .chain(d.changed_fluents.keys())
                    .map(|a| a.name.clone())
                    .collect()
            })
            .collect();
        let n = normalize_constants(t);
        Self::from_parts(action_counts, delta_names, &n)
    }

    fn from_parts(
        action_counts: BTreeMap<Sym, usize>,
        delta_names: BTreeSet<BTreeSet<Sym>>,
        n: &NormalizedTrace,
    ) -> Self {
        let norm_actions: BTreeSet<Atom> = n.actions().cloned().collect();
        PreparedTrace {
            action_names: action_counts.keys().cloned().collect(),
            action_counts,
            delta_names,
            norm_actions: norm_actions.into_iter().collect(),
            norm_deltas: compute_deltas(n)
                .iter()
                .map(|d| d.literals().collect())
                .collect(),
        }
    }

    pub fn distance(&self, other: &PreparedTrace, metric: Metric, cfg: &DistanceConfig) -> f64 {
        match metric {
            Metric::Da => jaccard_distance(&self.action_names, &other.action_names),
            Metric::Ddelta => jaccard_distance(&self.delta_names, &other.delta_names),
            Metric::Dg => self.dg(other),
            Metric::Dr => 0.5 * (self.dra(other) + self.drdelta(other, cfg)),
        }
    }

    fn dg(&self, other: &PreparedTrace) -> f64 {
        let names: BTreeSet<&Sym> = self.action_counts.keys().chain(other.action_counts.keys()).collect();
        names
            .into_iter()
            .map(|n| {
                let a = self.action_counts.get(n).copied().unwrap_or(0) as f64;
                let b = other.action_counts.get(n).copied().unwrap_or(0) as f64;
                (a - b) * (a - b)
            })
            .sum()
    }

    fn dra(&self, other: &PreparedTrace) -> f64 {
        directed_match(&self.norm_actions, &other.norm_actions, d_f)
    }

    fn drdelta(&self, other: &PreparedTrace, cfg: &DistanceConfig) -> f64 {
        directed_match(&self.norm_deltas, &other.norm_deltas, |a, b| d_rdelta_pair(a, b, cfg))
    }
}

pub fn d_a(t1: &Trace, t2: &Trace) -> f64 {
    let names = |t: &Trace| t.actions().map(|a| a.name.clone()).collect::<BTreeSet<_>>();
    jaccard_distance(&names(t1), &names(t2))
}

pub fn d_delta(t1: &Trace, t2: &Trace) -> f64 {
    PreparedTrace::new(t1).distance(&PreparedTrace::new(t2), Metric::Ddelta, &DistanceConfig::default())
}

pub fn d_g(t1: &Trace, t2: &Trace) -> f64 {
    PreparedTrace::new(t1).dg(&PreparedTrace::new(t2))
}

pub fn d_ra(n1: &NormalizedTrace, n2: &NormalizedTrace) -> f64 {
    let a = |n: &NormalizedTrace| n.actions().cloned().collect::<BTreeSet<_>>().into_iter().collect::<Vec<_>>();
    directed_match(&a(n1), &a(n2), d_f)
}

pub fn d_rdelta(n1: &NormalizedTrace, n2: &NormalizedTrace, cfg: &DistanceConfig) -> f64 {
    let d = |n: &NormalizedTrace| {
        compute_deltas(n)
            .iter()
            .map(|d| d.literals().collect::<Vec<_>>())
            .collect::<Vec<_>>()
    };
    directed_match(&d(n1), &d(n2), |a, b| d_rdelta_pair(a, b, cfg))
}

pub fn d_r(t1: &Trace, t2: &Trace, cfg: &DistanceConfig) -> f64 {
    let n1 = normalize_constants(t1);
    let n2 = normalize_constants(t2);
    0.5 * (d_ra(&n1, &n2) + d_rdelta(&n1, &n2, cfg))
}

pub fn distance(metric: Metric, t1: &Trace, t2: &Trace, cfg: &DistanceConfig) -> f64 {
    PreparedTrace::new(t1).distance(&PreparedTrace::new(t2), metric, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::State;
    use crate::traces::Value;

    fn act(name: &str, args: &[&str]) -> Atom {
        Atom::new(name, args)
    }

    fn trace_of(actions: &[Atom]) -> Trace {
        let mut t = Trace::new(State::new());
        for a in actions {
            t.push(Some(a.clone()), State::new());
        }
        t
    }

    #[test]
    fn df_worked_example() {
        let x = act("create-account", &["i1", "i2"]);
        let y = act("create-account", &["i3", "i2"]);
        assert_eq!(d_f(&x, &y), 0.25);
        assert_eq!(d_f(&x, &x), 0.0);
        assert_eq!(d_f(&x, &act("create-account", &["i4", "i5"])), 0.5);
        assert_eq!(d_f(&x, &act("close-account", &["i1", "i2"])), 1.0);
        assert_eq!(d_f(&act("p", &[]), &act("p", &[])), 0.0);
        assert_eq!(d_f(&act("p", &["i1"]), &act("p", &[])), 1.0);
    }

    #[test]
    fn dn_is_product_form() {
        let cfg = DistanceConfig::default();
        let b2 = act("balance", &["i2"]);
        let b3 = act("balance", &["i3"]);
        assert_eq!(d_n((&b2, 20.0), (&b3, 10.0), &cfg), 0.5 * 10.0 / 1e6);
        assert_eq!(d_n((&b2, 20.0), (&b2, 10.0), &cfg), 0.0);
    }

    #[test]
    fn delta_pair_worked_example() {
        let cfg = DistanceConfig::default();
        let d1 = vec![
            Literal::Atom(act("acc-owner", &["i1", "i2"])),
            Literal::Fluent(act("balance", &["i2"]), Value(20.0)),
        ];
        let d2 = vec![
            Literal::Atom(act("acc-owner", &["i1", "i3"])),
            Literal::Fluent(act("balance", &["i3"]), Value(10.0)),
        ];
        assert_eq!(d_rdelta_pair(&d1, &d2, &cfg), 0.5 * (0.25 + 0.5 * 10.0 / 1e6));
        let p = vec![Literal::Atom(act("p", &["i1"]))];
        let q = vec![Literal::Atom(act("q", &["i1"]))];
        assert_eq!(d_rdelta_pair(&p, &q, &cfg), 1.0);
    }

    #[test]
    fn da_and_dg_hand_values() {
        let t1 = trace_of(&[act("move", &["a"]), act("drop", &[])]);
        let t2 = trace_of(&[act("move", &["a"]), act("take", &[])]);
        assert!((d_a(&t1, &t2) - 2.0 / 3.0).abs() < 1e-12);
        let t3 = trace_of(&[act("move", &["a"]), act("move", &["b"]), act("move", &["c"]), act("drop", &[])]);
        let t4 = trace_of(&[act("move", &["a"]), act("drop", &[])]);
        assert_eq!(d_g(&t3, &t4), 4.0);
        assert_eq!(d_a(&Trace::default(), &Trace::default()), 0.0);
    }

    #[test]
    fn dra_hand_values() {
        let t1 = trace_of(&[act("move", &["i1", "i2"])]);
        let t2 = trace_of(&[act("take", &["i1"])]);
        let t3 = trace_of(&[act("move", &["i1", "i2"]), act("move", &["i1", "i3"])]);
        let n = normalize_constants;
        assert_eq!(d_ra(&n(&t1), &n(&t2)), 1.0);
        assert_eq!(d_ra(&n(&t1), &n(&t3)), 0.0);
    }

    #[test]
    fn ddelta_hand_value() {
        let at = |x: &str| act("at", &[x]);
        let mut s1 = State::new();
        s1.atoms.insert(at("a"));
        let mut s2 = s1.clone();
        s2.atoms.insert(at("b"));
        s2.atoms.insert(act("holding", &["k"]));
        let mut t1 = Trace::new(State::new());
        t1.push(None, s1.clone());
        t1.push(None, s2);
        let mut t2 = Trace::new(State::new());
        t2.push(None, s1);
        assert_eq!(d_delta(&t1, &t2), 0.5);
    }

    #[test]
    fn metric_names_parse() {
        for m in Metric::ALL {
            assert_eq!(m.name().parse::<Metric>(), Ok(m));
        }
        assert!("x".parse::<Metric>().is_err());
    }
}
