//! Generators and brute-force oracles shared by the property and acceptance
//! suites.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestError, TestRng, TestRunner};

use agentrace::distances::{DistanceConfig, Metric};
use agentrace::domains::{get_bundle, BUNDLE_NAMES};
use agentrace::pddl::{instantiate, Atom, Cond, DomainModel, GroundAction, ProblemModel, State, Sym};
use agentrace::traces::{normalize_constants, rename_constants, Step, Trace};

pub const CONSTS: [&str; 6] = ["c1", "c2", "c10", "acc", "b7", "z"];

pub fn arb_atom() -> impl Strategy<Value = Atom> {
    let n = CONSTS.len();
    prop_oneof![
        (0..n).prop_map(|i| Atom::new("p", &[CONSTS[i]])),
        (0..n, 0..n).prop_map(|(i, j)| Atom::new("q", &[CONSTS[i], CONSTS[j]])),
        Just(Atom::new("r", &[])),
    ]
}

pub fn arb_action() -> impl Strategy<Value = Atom> {
    let n = CONSTS.len();
    prop_oneof![
        (0..n).prop_map(|i| Atom::new("go", &[CONSTS[i]])),
        (0..n, 0..n).prop_map(|(i, j)| Atom::new("give", &[CONSTS[i], CONSTS[j]])),
        Just(Atom::new("wait", &[])),
    ]
}

fn arb_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(10.0), Just(20.0), -1e6..1e6f64]
}

pub fn arb_state() -> impl Strategy<Value = State> {
    let n = CONSTS.len();
    (
        proptest::collection::btree_set(arb_atom(), 0..4),
        proptest::collection::btree_map((0..n).prop_map(|i| Atom::new("f", &[CONSTS[i]])), arb_value(), 0..3),
    )
        .prop_map(|(atoms, fluents)| State { atoms, fluents })
}

/// Traces of at most `max_steps` steps over a small vocabulary, so that
/// constants, atoms and deltas repeat often.
pub fn arb_trace(max_steps: usize) -> impl Strategy<Value = Trace> {
    (
        arb_state(),
        proptest::collection::vec((proptest::option::of(arb_action()), arb_state()), 0..=max_steps),
    )
        .prop_map(|(init, steps)| Trace {
            init,
            steps: steps.into_iter().map(|(action, state)| Step { action, state }).collect(),
            ..Trace::default()
        })
}

/// Traces in which every constant is first mentioned by an action argument.
/// Normalization order is then fixed by the action sequence alone.
pub fn arb_tie_free_trace(max_steps: usize) -> impl Strategy<Value = Trace> {
    arb_trace(max_steps).prop_map(|mut t| {
        let mut seen: HashSet<Sym> = HashSet::new();
        let keep = |a: &Atom, seen: &HashSet<Sym>| a.args.iter().all(|x| seen.contains(x));
        t.init.atoms.retain(|a| keep(a, &seen));
        t.init.fluents.retain(|a, _| keep(a, &seen));
        for s in &mut t.steps {
            if let Some(a) = &s.action {
                seen.extend(a.args.iter().cloned());
            }
            s.state.atoms.retain(|a| keep(a, &seen));
            s.state.fluents.retain(|a, _| keep(a, &seen));
        }
        t
    })
}

/// A renaming of [`CONSTS`] onto fresh, shuffled names.
pub fn arb_renaming() -> impl Strategy<Value = BTreeMap<String, String>> {
    let fresh: Vec<String> = ["zeta", "a0", "m12", "m3", "obj", "y"].iter().map(|s| s.to_string()).collect();
    Just(fresh).prop_shuffle().prop_map(|names| {
        CONSTS.iter().map(|c| c.to_string()).zip(names).collect()
    })
}

pub fn rename(t: &Trace, map: &BTreeMap<String, String>) -> Trace {
    rename_constants(t, |c| Sym::from(map[&**c].as_str()))
}

// Brute-force distance oracle. Everything works on plain strings and is
// recomputed from the trace for every call.

type Tuple = (String, Vec<String>);

#[derive(Clone, PartialEq, PartialOrd)]
enum Lit {
    Atom(Tuple),
    Fluent(Tuple, f64),
}

fn tuple(a: &Atom) -> Tuple {
    (a.name.to_string(), a.args.iter().map(|x| x.to_string()).collect())
}

fn oracle_df(x: &Tuple, y: &Tuple) -> f64 {
    if x.0 != y.0 || x.1.len() != y.1.len() {
        return 1.0;
    }
    if x.1.is_empty() {
        return 0.0;
    }
    let mut mismatched = 0.0;
    for i in 0..x.1.len() {
        if x.1[i] != y.1[i] {
            mismatched += 1.0;
        }
    }
    0.5 * mismatched / x.1.len() as f64
}

fn oracle_dlit(x: &Lit, y: &Lit, m: f64) -> f64 {
    match (x, y) {
        (Lit::Atom(a), Lit::Atom(b)) => oracle_df(a, b),
        (Lit::Fluent(a, v), Lit::Fluent(b, w)) if a.0 == b.0 && a.1.len() == b.1.len() => {
            let d = oracle_df(a, b) * (v - w).abs() / m;
            if d > 1.0 {
                1.0
            } else {
                d
            }
        }
        _ => 1.0,
    }
}

fn oracle_directed<T>(xs: &[T], ys: &[T], d: &dyn Fn(&T, &T) -> f64) -> f64 {
    if xs.is_empty() && ys.is_empty() {
        return 0.0;
    }
    if xs.is_empty() || ys.is_empty() {
        return 1.0;
    }
    let mut total = 0.0;
    for x in xs {
        let mut best = f64::INFINITY;
        for y in ys {
            let v = d(x, y);
            if v < best {
                best = v;
            }
        }
        total += best;
    }
    total / xs.len().max(ys.len()) as f64
}

fn unique<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn oracle_deltas(t: &Trace) -> Vec<Vec<Lit>> {
    let mut states = vec![&t.init];
    states.extend(t.steps.iter().map(|s| &s.state));
    let mut out = Vec::new();
    for w in states.windows(2) {
        let (prev, next) = (w[0], w[1]);
        let mut lits = Vec::new();
        for a in &next.atoms {
            if !prev.atoms.contains(a) {
                lits.push(Lit::Atom(tuple(a)));
            }
        }
        for (k, v) in &next.fluents {
            let changed = match prev.fluents.get(k) {
                Some(p) => p.to_bits() != v.to_bits(),
                None => true,
            };
            if changed {
                lits.push(Lit::Fluent(tuple(k), *v));
            }
        }
        lits.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(lits);
    }
    unique(out)
}

fn oracle_actions(t: &Trace) -> Vec<Tuple> {
    unique(t.steps.iter().filter_map(|s| s.action.as_ref()).map(tuple).collect())
}

pub fn oracle_dr(t1: &Trace, t2: &Trace, m: f64) -> f64 {
    let n1 = normalize_constants(t1);
    let n2 = normalize_constants(t2);
    let dra = oracle_directed(&oracle_actions(&n1), &oracle_actions(&n2), &oracle_df);
    let drd = oracle_directed(&oracle_deltas(&n1), &oracle_deltas(&n2), &|a: &Vec<Lit>, b: &Vec<Lit>| {
        oracle_directed(a, b, &|x, y| oracle_dlit(x, y, m))
    });
    0.5 * (dra + drd)
}

fn oracle_jaccard<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let inter = a.iter().filter(|x| b.contains(x)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

fn action_names(t: &Trace) -> Vec<String> {
    unique(t.steps.iter().filter_map(|s| s.action.as_ref()).map(|a| a.name.to_string()).collect())
}

fn delta_names(t: &Trace) -> Vec<Vec<String>> {
    unique(
        oracle_deltas(t)
            .into_iter()
            .map(|d| {
                let mut names: Vec<String> = d
                    .iter()
                    .map(|l| match l {
                        Lit::Atom(a) | Lit::Fluent(a, _) => a.0.clone(),
                    })
                    .collect();
                names.sort();
                names.dedup();
                names
            })
            .collect(),
    )
}

pub fn oracle_distance(metric: Metric, t1: &Trace, t2: &Trace, cfg: &DistanceConfig) -> f64 {
    match metric {
        Metric::Da => oracle_jaccard(&action_names(t1), &action_names(t2)),
        Metric::Ddelta => oracle_jaccard(&delta_names(t1), &delta_names(t2)),
        Metric::Dg => {
            let count = |t: &Trace, n: &str| {
                t.steps.iter().filter(|s| s.action.as_ref().is_some_and(|a| &*a.name == n)).count() as f64
            };
            let mut names = action_names(t1);
            names.extend(action_names(t2));
            unique(names).iter().map(|n| (count(t1, n) - count(t2, n)).powi(2)).sum()
        }
        Metric::Dr => oracle_dr(t1, t2, cfg.m),
    }
}

// Planning helpers.

/// Every (domain, problem) pair the shipped bundles produce for `seed`.
pub fn bundle_problems(seed: u64) -> Vec<(DomainModel, ProblemModel)> {
    BUNDLE_NAMES
        .iter()
        .map(|name| {
            let b = get_bundle(name).unwrap();
            let p = b.generate_problem(seed);
            (b.domain, p)
        })
        .collect()
}

/// All type-consistent bindings, filtered afterwards by static facts and by
/// add/delete overlap.
pub fn brute_force_ground(dom: &DomainModel, objects: &[agentrace::pddl::TypedObject], state: &State) -> BTreeSet<Atom> {
    let statics: HashSet<Sym> = dom.static_predicates().into_iter().collect();
    let mut pool = dom.constants.clone();
    for o in objects {
        if !pool.iter().any(|c| c.name == o.name) {
            pool.push(o.clone());
        }
    }
    let mut out = BTreeSet::new();
    for schema in &dom.actions {
        let domains: Vec<Vec<Sym>> = schema
            .params
            .iter()
            .map(|p| pool.iter().filter(|o| dom.types.is_subtype(&o.ty, &p.ty)).map(|o| o.name.clone()).collect())
            .collect();
        let total: usize = domains.iter().map(Vec::len).product();
        for mut code in 0..total {
            let mut args = Vec::new();
            for d in &domains {
                args.push(d[code % d.len()].clone());
                code /= d.len();
            }
            let g: GroundAction = instantiate(schema, &args);
            let statics_hold = g.pre.iter().all(|c| match c {
                Cond::Lit { positive, atom } if statics.contains(&atom.name) => state.atoms.contains(atom) == *positive,
                _ => true,
            });
            if statics_hold && !g.add.iter().any(|a| g.del.contains(a)) {
                out.insert(g.call());
            }
        }
    }
    out
}

/// Runs a property with a fixed seed; used where failures must be
/// reproducible run to run.
pub fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let cfg = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(cfg, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| match e {
        TestError::Fail(why, input) => format!("{why} for {input:?}"),
        TestError::Abort(why) => why.to_string(),
    })
}

// Property checks shared by the proptest suite and the acceptance harness.

pub fn check_identity_and_range(t1: &Trace, t2: &Trace) -> Result<(), TestCaseError> {
    let cfg = DistanceConfig::default();
    for m in Metric::ALL {
        let d = agentrace::distances::distance(m, t1, t2, &cfg);
        prop_assert_eq!(agentrace::distances::distance(m, t1, t1, &cfg), 0.0, "{} self-distance", m);
        if m == Metric::Dg {
            prop_assert!(d >= 0.0, "{} = {}", m, d);
        } else {
            prop_assert!((0.0..=1.0).contains(&d), "{} = {}", m, d);
        }
    }
    Ok(())
}

pub fn check_symmetry(t1: &Trace, t2: &Trace) -> Result<(), TestCaseError> {
    let cfg = DistanceConfig::default();
    for m in [Metric::Da, Metric::Ddelta, Metric::Dg] {
        let ab = agentrace::distances::distance(m, t1, t2, &cfg);
        let ba = agentrace::distances::distance(m, t2, t1, &cfg);
        prop_assert_eq!(ab, ba, "{} is not symmetric", m);
    }
    Ok(())
}

pub fn check_renaming_invariance(
    t1: &Trace,
    t2: &Trace,
    r1: &BTreeMap<String, String>,
    r2: &BTreeMap<String, String>,
) -> Result<(), TestCaseError> {
    let cfg = DistanceConfig::default();
    let before = agentrace::distances::d_r(t1, t2, &cfg);
    let after = agentrace::distances::d_r(&rename(t1, r1), &rename(t2, r2), &cfg);
    prop_assert_eq!(before, after);
    Ok(())
}

pub fn check_oracle(t1: &Trace, t2: &Trace) -> Result<(), TestCaseError> {
    let cfg = DistanceConfig { m: 100.0 };
    for m in Metric::ALL {
        let got = agentrace::distances::distance(m, t1, t2, &cfg);
        let want = oracle_distance(m, t1, t2, &cfg);
        prop_assert!((got - want).abs() <= 1e-9, "{}: {} vs oracle {}", m, got, want);
    }
    Ok(())
}

/// Ground actions of a bundle problem and a state reached by a random walk.
pub fn walk(seed: u64, bundle: usize, steps: usize) -> (DomainModel, ProblemModel, Vec<GroundAction>, State) {
    use rand::{seq::SliceRandom, SeedableRng};
    let (dom, prob) = bundle_problems(seed).swap_remove(bundle % BUNDLE_NAMES.len());
    let actions = agentrace::pddl::ground(&dom, &prob);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut s = prob.init.clone();
    for _ in 0..steps {
        let ok: Vec<&GroundAction> = actions
            .iter()
            .filter(|a| agentrace::pddl::applicable(&s, a).unwrap_or(false))
            .collect();
        let Some(a) = ok.choose(&mut rng) else { break };
        s = agentrace::pddl::apply(&s, a).unwrap();
    }
    (dom, prob, actions, s)
}

pub fn check_gamma(seed: u64, bundle: usize, steps: usize, pick: usize) -> Result<(), TestCaseError> {
    let (_, _, actions, s) = walk(seed, bundle, steps);
    let a = &actions[pick % actions.len()];
    let next = agentrace::pddl::apply(&s, a).unwrap();
    if agentrace::pddl::applicable(&s, a).unwrap() {
        for d in &a.del {
            prop_assert!(!next.atoms.contains(d) || a.add.contains(d));
        }
        for x in &a.add {
            prop_assert!(next.atoms.contains(x));
        }
        for x in next.atoms.symmetric_difference(&s.atoms) {
            prop_assert!(a.add.contains(x) || a.del.contains(x), "{} changed by {}", x, a);
        }
    } else {
        prop_assert_eq!(next, s, "inapplicable {} changed the state", a);
    }
    Ok(())
}

pub fn check_plan_validates(seed: u64, bundle: usize, steps: usize) -> Result<(), TestCaseError> {
    let (dom, mut prob, _, target) = walk(seed, bundle, steps);
    let goals: Vec<Cond<Atom>> = target
        .atoms
        .difference(&prob.init.atoms)
        .take(3)
        .cloned()
        .map(Cond::pos)
        .collect();
    prob.goals = goals;
    let cfg = agentrace::planner::PlannerConfig::default();
    match agentrace::planner::plan(&dom, &prob, &cfg) {
        Ok(pi) => prop_assert!(agentrace::planner::validate_plan(&dom, &prob, &pi), "invalid plan for {:?}", prob.goals),
        Err(e) => prop_assert!(false, "no plan for reachable goals {:?}: {}", prob.goals, e),
    }
    Ok(())
}

pub fn check_normalization_idempotent(t: &Trace) -> Result<(), TestCaseError> {
    let once = normalize_constants(t).into_inner();
    let twice = normalize_constants(&once).into_inner();
    prop_assert_eq!(once, twice);
    Ok(())
}

pub fn check_trace_round_trip(traces: &[Trace]) -> Result<(), TestCaseError> {
    let mut buf = Vec::new();
    agentrace::traces::write_traces_to(&mut buf, traces).unwrap();
    let back = agentrace::traces::parse_traces(std::str::from_utf8(&buf).unwrap()).unwrap();
    prop_assert_eq!(back, traces.to_vec());
    Ok(())
}

/// Traces with labels, seeds and arbitrary finite fluent values.
pub fn arb_labelled_traces() -> impl Strategy<Value = Vec<Trace>> {
    proptest::collection::vec(
        (
            arb_trace(6),
            proptest::option::of("[a-z][a-z0-9-]{0,8}"),
            proptest::option::of(any::<u64>()),
            proptest::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 0..3),
        )
            .prop_map(|(mut t, label, seed, values)| {
                t.label = label;
                t.seed = seed;
                t.domain = Some("test".into());
                for (i, v) in values.into_iter().enumerate() {
                    t.init.fluents.insert(Atom::new("g", &[CONSTS[i]]), v);
                }
                t
            }),
        1..20,
    )
}
