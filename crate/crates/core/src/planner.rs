//! Satisficing forward state-space planner.
//!
//! Greedy best-first search over ground actions, guided by the number of
//! unsatisfied goal conditions (boolean literals and numeric comparisons
//! alike). Duplicate states are pruned on generation.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pddl::{
    apply, ground, AssignOp, Atom, CmpOp, Cond, DomainModel, EvalError, Expr, GroundAction,
    ProblemModel, State,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    /// Oldest node first among equal heuristic values.
    #[default]
    Fifo,
    Lifo,
    /// Seeded random order among equal heuristic values.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    #[serde(with = "secs")]
    pub time_bound: Duration,
    pub max_expansions: usize,
    pub tie_break: TieBreak,
    pub rng_seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            time_bound: Duration::from_secs(10),
            max_expansions: 200_000,
            tie_break: TieBreak::Fifo,
            rng_seed: 0,
        }
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no plan found within the time bound")]
    Timeout,
    #[error("search space exhausted without reaching the goals")]
    NoPlanFound,
    #[error("expansion limit reached")]
    ExpansionLimit,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Plan {
    pub steps: Vec<GroundAction>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

pub fn plan_cost(pi: &Plan) -> f64 {
    pi.steps.iter().map(|a| a.cost).sum()
}

/// Grounds the task and searches for a plan.
pub fn plan(dom: &DomainModel, prob: &ProblemModel, cfg: &PlannerConfig) -> Result<Plan, PlanError> {
    let actions = ground(dom, prob);
    plan_with(&actions, &prob.init, &prob.goals, cfg)
}

/// True iff every step instantiates a domain schema over the problem's
/// objects, is applicable in sequence from the initial state, and the goals
/// hold at the end.
pub fn validate_plan(dom: &DomainModel, prob: &ProblemModel, pi: &Plan) -> bool {
    let mut s = prob.init.clone();
    for step in &pi.steps {
        let Some(schema) = dom.action(&step.name) else {
            return false;
        };
        if schema.params.len() != step.args.len() {
            return false;
        }
        let typed = schema.params.iter().zip(&step.args).all(|(p, a)| {
            prob.object_type(a)
                .or_else(|| dom.constants.iter().find(|c| c.name == *a).map(|c| &c.ty))
                .is_some_and(|t| dom.types.is_subtype(t, &p.ty))
        });
        if !typed || crate::pddl::instantiate(schema, &step.args) != *step {
            return false;
        }
        match crate::pddl::applicable(&s, step) {
            Ok(true) => {}
            _ => return false,
        }
        match apply(&s, step) {
            Ok(next) => s = next,
            Err(_) => return false,
        }
    }
    s.satisfies_all(&prob.goals).unwrap_or(false)
}

enum CExpr {
    Num(f64),
    Fluent(usize),
    Bin(crate::pddl::BinOp, Box<CExpr>, Box<CExpr>),
}

struct CAction {
    pre_pos: Vec<usize>,
    pre_neg: Vec<usize>,
    cmps: Vec<(CmpOp, CExpr, CExpr)>,
    add: Vec<usize>,
    del: Vec<usize>,
    num: Vec<(AssignOp, usize, CExpr)>,
}

/// Ground task over dense atom/fluent indices.
struct Compiled<'a> {
    atoms: Vec<&'a Atom>,
    fluents: Vec<&'a Atom>,
    actions: Vec<CAction>,
    goal_pos: Vec<usize>,
    goal_neg: Vec<usize>,
    goal_cmps: Vec<(CmpOp, CExpr, CExpr)>,
}

#[derive(Default)]
struct Indexer<'a> {
    atoms: HashMap<&'a Atom, usize>,
    atom_list: Vec<&'a Atom>,
    fluents: HashMap<&'a Atom, usize>,
    fluent_list: Vec<&'a Atom>,
}

impl<'a> Indexer<'a> {
    fn atom(&mut self, a: &'a Atom) -> usize {
        let n = self.atom_list.len();
        *self.atoms.entry(a).or_insert_with(|| {
            self.atom_list.push(a);
            n
        })
    }

    fn fluent(&mut self, a: &'a Atom) -> usize {
        let n = self.fluent_list.len();
        *self.fluents.entry(a).or_insert_with(|| {
            self.fluent_list.push(a);
            n
        })
    }

    fn expr(&mut self, e: &'a Expr<Atom>) -> CExpr {
        match e {
            Expr::Num(n) => CExpr::Num(*n),
            Expr::Fluent(t) => CExpr::Fluent(self.fluent(t)),
            Expr::Bin(op, l, r) => CExpr::Bin(*op, Box::new(self.expr(l)), Box::new(self.expr(r))),
        }
    }

    fn conds(
        &mut self,
        conds: &'a [Cond<Atom>],
    ) -> (Vec<usize>, Vec<usize>, Vec<(CmpOp, CExpr, CExpr)>) {
        let (mut pos, mut neg, mut cmps) = (vec![], vec![], vec![]);
        for c in conds {
            match c {
                Cond::Lit {
                    positive: true,
                    atom,
                } => pos.push(self.atom(atom)),
                Cond::Lit {
                    positive: false,
                    atom,
                } => neg.push(self.atom(atom)),
                Cond::Cmp(op, l, r) => cmps.push((*op, self.expr(l), self.expr(r))),
            }
        }
        (pos, neg, cmps)
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
struct SearchState {
    bits: Vec<u64>,
    /// f64 bit patterns; NaN marks an unset fluent
    vals: Vec<u64>,
}

const UNSET: u64 = 0x7ff8_dead_beef_0001;

impl SearchState {
    fn has(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    fn set(&mut self, i: usize, on: bool) {
        if on {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    fn value(&self, i: usize, c: &Compiled) -> Result<f64, EvalError> {
        if self.vals[i] == UNSET {
            Err(EvalError::UnsetFluent(c.fluents[i].clone()))
        } else {
            Ok(f64::from_bits(self.vals[i]))
        }
    }

    fn eval(&self, e: &CExpr, c: &Compiled) -> Result<f64, EvalError> {
        match e {
            CExpr::Num(n) => Ok(*n),
            CExpr::Fluent(i) => self.value(*i, c),
            CExpr::Bin(op, l, r) => Ok(op.eval(self.eval(l, c)?, self.eval(r, c)?)),
        }
    }

    fn cmps_hold(&self, cmps: &[(CmpOp, CExpr, CExpr)], c: &Compiled) -> Result<bool, EvalError> {
        for (op, l, r) in cmps {
            if !op.holds(self.eval(l, c)?, self.eval(r, c)?) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn applicable(&self, a: &CAction, c: &Compiled) -> Result<bool, EvalError> {
        if !a.pre_pos.iter().all(|&i| self.has(i)) || a.pre_neg.iter().any(|&i| self.has(i)) {
            return Ok(false);
        }
        self.cmps_hold(&a.cmps, c)
    }

    fn successor(&self, a: &CAction, c: &Compiled) -> Result<SearchState, EvalError> {
        let mut next = self.clone();
        for &d in &a.del {
            next.set(d, false);
        }
        for &ad in &a.add {
            next.set(ad, true);
        }
        let mut updates = Vec::with_capacity(a.num.len());
        for (op, f, e) in &a.num {
            let rhs = self.eval(e, c)?;
            let v = match op {
                AssignOp::Assign => rhs,
                AssignOp::Increase => self.value(*f, c)? + rhs,
                AssignOp::Decrease => self.value(*f, c)? - rhs,
            };
            updates.push((*f, v));
        }
        for (f, v) in updates {
            next.vals[f] = v.to_bits();
        }
        Ok(next)
    }

    fn unsatisfied(&self, c: &Compiled) -> usize {
        let mut n = c.goal_pos.iter().filter(|&&i| !self.has(i)).count()
            + c.goal_neg.iter().filter(|&&i| self.has(i)).count();
        for (op, l, r) in &c.goal_cmps {
            let ok = matches!((self.eval(l, c), self.eval(r, c)), (Ok(a), Ok(b)) if op.holds(a, b));
            if !ok {
                n += 1;
            }
        }
        n
    }
}

/// Searches from `init` for a plan reaching `goals` using `actions`.
pub fn plan_with(
    actions: &[GroundAction],
    init: &State,
    goals: &[Cond<Atom>],
    cfg: &PlannerConfig,
) -> Result<Plan, PlanError> {
    if init.satisfies_all(goals).unwrap_or(false) {
        return Ok(Plan::default());
    }
    let started = Instant::now();

    let mut ix = Indexer::default();
    let mut compiled_actions = Vec::with_capacity(actions.len());
    for a in actions {
        let (pre_pos, pre_neg, cmps) = ix.conds(&a.pre);
        let add = a.add.iter().map(|x| ix.atom(x)).collect();
        let del = a.del.iter().map(|x| ix.atom(x)).collect();
        let num = a
            .num_effects
            .iter()
            .map(|e| (e.op, ix.fluent(&e.fluent), ix.expr(&e.expr)))
            .collect();
        compiled_actions.push(CAction {
            pre_pos,
            pre_neg,
            cmps,
            add,
            del,
            num,
        });
    }
    let (goal_pos, goal_neg, goal_cmps) = ix.conds(goals);
    for t in init.fluents.keys() {
        ix.fluent(t);
    }
    let c = Compiled {
        atoms: ix.atom_list,
        fluents: ix.fluent_list,
        actions: compiled_actions,
        goal_pos,
        goal_neg,
        goal_cmps,
    };

    let mut root = SearchState {
        bits: vec![0; c.atoms.len().div_ceil(64)],
        vals: c
            .fluents
            .iter()
            .map(|t| init.fluents.get(*t).map_or(UNSET, |v| v.to_bits()))
            .collect(),
    };
    for (i, a) in c.atoms.iter().enumerate() {
        if init.holds(a) {
            root.set(i, true);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    // (state, parent, action)
    let mut nodes: Vec<(SearchState, usize, usize)> = Vec::new();
    let mut seen: HashSet<SearchState> = HashSet::new();
    let mut open: BinaryHeap<Reverse<(usize, i64, usize)>> = BinaryHeap::new();
    let mut counter: i64 = 0;
    let mut tie = |rng: &mut ChaCha8Rng| -> i64 {
        counter += 1;
        match cfg.tie_break {
            TieBreak::Fifo => counter,
            TieBreak::Lifo => -counter,
            TieBreak::Random => rng.gen_range(0..i64::MAX),
        }
    };

    seen.insert(root.clone());
    let h0 = root.unsatisfied(&c);
    nodes.push((root, usize::MAX, usize::MAX));
    open.push(Reverse((h0, tie(&mut rng), 0)));

    let mut expansions = 0usize;
    while let Some(Reverse((h, _, id))) = open.pop() {
        if h == 0 {
            let mut steps = Vec::new();
            let mut cur = id;
            while nodes[cur].1 != usize::MAX {
                steps.push(actions[nodes[cur].2].clone());
                cur = nodes[cur].1;
            }
            steps.reverse();
            return Ok(Plan { steps });
        }
        expansions += 1;
        if expansions > cfg.max_expansions {
            return Err(PlanError::ExpansionLimit);
        }
        if expansions % 128 == 0 && started.elapsed() > cfg.time_bound {
            return Err(PlanError::Timeout);
        }
        for (ai, a) in c.actions.iter().enumerate() {
            if !nodes[id].0.applicable(a, &c)? {
                continue;
            }
            let next = nodes[id].0.successor(a, &c)?;
            if seen.contains(&next) {
                continue;
            }
            seen.insert(next.clone());
            let hn = next.unsatisfied(&c);
            let t = tie(&mut rng);
            nodes.push((next, id, ai));
            open.push(Reverse((hn, t, nodes.len() - 1)));
        }
    }
    Err(PlanError::NoPlanFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::{parse_domain, parse_problem, sym};

    const GRID: &str = "
    (define (domain grid)
      (:requirements :strips :typing)
      (:types cell)
      (:predicates (at ?c - cell) (adj ?a ?b - cell))
      (:action move :parameters (?a ?b - cell)
        :precondition (and (at ?a) (adj ?a ?b))
        :effect (and (at ?b) (not (at ?a)))))";

    fn grid_problem(n: usize, goal: &str, cut: Option<(usize, usize)>) -> String {
        let mut objs = Vec::new();
        let mut init = vec!["(at c1-1)".to_string()];
        for x in 1..=n {
            for y in 1..=n {
                objs.push(format!("c{x}-{y}"));
                for (dx, dy) in [(0i32, 1i32), (1, 0), (0, -1), (-1, 0)] {
                    let (nx, ny) = (x as i32 + dx, y as i32 + dy);
                    if nx < 1 || ny < 1 || nx > n as i32 || ny > n as i32 {
                        continue;
                    }
                    let isolated = |a: i32, b: i32| cut == Some((a as usize, b as usize));
                    if isolated(x as i32, y as i32) || isolated(nx, ny) {
                        continue;
                    }
                    init.push(format!("(adj c{x}-{y} c{nx}-{ny})"));
                }
            }
        }
        format!(
            "(define (problem p) (:domain grid) (:objects {} - cell) (:init {}) (:goal {goal}))",
            objs.join(" "),
            init.join(" ")
        )
    }

    /// Breadth-first oracle over explicit states.
    fn bfs_len(actions: &[GroundAction], init: &State, goals: &[Cond<Atom>]) -> Option<usize> {
        let mut frontier = vec![init.clone()];
        let mut seen = vec![init.clone()];
        for depth in 0..64 {
            if frontier.iter().any(|s| s.satisfies_all(goals).unwrap()) {
                return Some(depth);
            }
            let mut next = Vec::new();
            for s in &frontier {
                for a in actions {
                    if crate::pddl::applicable(s, a).unwrap() {
                        let t = apply(s, a).unwrap();
                        if !seen.contains(&t) {
                            seen.push(t.clone());
                            next.push(t);
                        }
                    }
                }
            }
            if next.is_empty() {
                return None;
            }
            frontier = next;
        }
        None
    }

    #[test]
    fn empty_goal_gives_empty_plan() {
        let d = parse_domain(GRID).unwrap();
        let p = parse_problem(&grid_problem(3, "(and)", None), &d).unwrap();
        let pi = plan(&d, &p, &PlannerConfig::default()).unwrap();
        assert!(pi.is_empty());
        assert_eq!(plan_cost(&pi), 0.0);
        assert!(validate_plan(&d, &p, &pi));
    }

    #[test]
    fn grid_route_is_valid_and_at_least_manhattan() {
        let d = parse_domain(GRID).unwrap();
        let p = parse_problem(&grid_problem(5, "(at c3-3)", None), &d).unwrap();
        let pi = plan(&d, &p, &PlannerConfig::default()).unwrap();
        assert!(validate_plan(&d, &p, &pi));
        let oracle = bfs_len(&ground(&d, &p), &p.init, &p.goals).unwrap();
        assert_eq!(oracle, 4);
        assert!(pi.len() >= oracle);
    }

    #[test]
    fn disconnected_cell_is_unreachable() {
        let d = parse_domain(GRID).unwrap();
        let p = parse_problem(&grid_problem(3, "(at c3-3)", Some((3, 3))), &d).unwrap();
        assert_eq!(bfs_len(&ground(&d, &p), &p.init, &p.goals), None);
        assert_eq!(plan(&d, &p, &PlannerConfig::default()), Err(PlanError::NoPlanFound));
    }

    #[test]
    fn deterministic_for_every_tie_break() {
        let d = parse_domain(GRID).unwrap();
        let p = parse_problem(&grid_problem(4, "(at c4-4)", None), &d).unwrap();
        for tb in [TieBreak::Fifo, TieBreak::Lifo, TieBreak::Random] {
            let cfg = PlannerConfig {
                tie_break: tb,
                rng_seed: 9,
                ..Default::default()
            };
            let a = plan(&d, &p, &cfg).unwrap();
            let b = plan(&d, &p, &cfg).unwrap();
            assert_eq!(a, b);
            assert!(validate_plan(&d, &p, &a));
        }
    }

    #[test]
    fn validation_rejects_inapplicable_middle_step() {
        let d = parse_domain(GRID).unwrap();
        let p = parse_problem(&grid_problem(3, "(at c1-3)", None), &d).unwrap();
        let mut pi = plan(&d, &p, &PlannerConfig::default()).unwrap();
        assert_eq!(pi.len(), 2);
        let bogus = crate::pddl::instantiate(d.action("move").unwrap(), &[sym("c3-3"), sym("c3-2")]);
        pi.steps.insert(1, bogus);
        assert!(!validate_plan(&d, &p, &pi));
    }

    #[test]
    fn costs_sum() {
        let d = parse_domain(GRID).unwrap();
        let mv = crate::pddl::instantiate(d.action("move").unwrap(), &[sym("a"), sym("b")]);
        let mut pi = Plan {
            steps: vec![mv.clone(), mv.clone(), mv.clone()],
        };
        assert_eq!(plan_cost(&pi), 3.0);
        for (s, c) in pi.steps.iter_mut().zip([2.0, 5.0, 1.0]) {
            s.cost = c;
        }
        assert_eq!(plan_cost(&pi), 8.0);
    }

    #[test]
    fn numeric_goal_is_reached() {
        let dom = "
        (define (domain bank)
          (:requirements :strips :fluents)
          (:functions (balance))
          (:action deposit :parameters () :precondition (and)
             :effect (and (increase (balance) 10))))";
        let d = parse_domain(dom).unwrap();
        let p = parse_problem(
            "(define (problem p) (:domain bank) (:init (= (balance) 20)) (:goal (>= (balance) 50)))",
            &d,
        )
        .unwrap();
        let pi = plan(&d, &p, &PlannerConfig::default()).unwrap();
        assert_eq!(pi.len(), 3);
        assert!(validate_plan(&d, &p, &pi));
    }
}
