//! Instantiation of action schemas over a set of typed objects.
//!
//! Static predicates (never added or deleted by any schema) are checked while
//! bindings are built, so bindings that could never fire are not emitted.
//! Bindings whose add and delete lists overlap are dropped as well.

use std::collections::{HashMap, HashSet};

use super::model::*;
use super::state::State;

/// Substitution of action parameters by constants.
fn substitute(atom: &LiftedAtom, binding: &HashMap<&str, Sym>) -> Atom {
    Atom {
        name: atom.name.clone(),
        args: atom
            .args
            .iter()
            .map(|t| match t {
                Term::Var(v) => binding[&**v].clone(),
                Term::Const(c) => c.clone(),
            })
            .collect(),
    }
}

pub fn instantiate(schema: &ActionSchema, args: &[Sym]) -> GroundAction {
    let binding: HashMap<&str, Sym> = schema
        .params
        .iter()
        .zip(args)
        .map(|(p, a)| (&*p.name, a.clone()))
        .collect();
    let mut sub = |a: &LiftedAtom| substitute(a, &binding);
    GroundAction {
        name: schema.name.clone(),
        args: args.to_vec(),
        pre: schema.pre.iter().map(|c| c.map(&mut sub)).collect(),
        add: schema.add.iter().map(&mut sub).collect(),
        del: schema.del.iter().map(&mut sub).collect(),
        num_effects: schema
            .num_effects
            .iter()
            .map(|e| NumEffect {
                op: e.op,
                fluent: sub(&e.fluent),
                expr: e.expr.map(&mut sub),
            })
            .collect(),
        cost: schema.cost,
    }
}

/// Grounds actions for a domain, a live object set and the current state
/// (the source of static facts).
pub struct Grounder<'d> {
    dom: &'d DomainModel,
    statics: HashSet<Sym>,
}

impl<'d> Grounder<'d> {
    pub fn new(dom: &'d DomainModel) -> Self {
        Grounder {
            dom,
            statics: dom.static_predicates().into_iter().collect(),
        }
    }

    pub fn is_static(&self, pred: &str) -> bool {
        self.statics.contains(pred)
    }

    /// All type-consistent instantiations that pass the static filter.
    pub fn ground(&self, objects: &[TypedObject], state: &State) -> Vec<GroundAction> {
        self.ground_filtered(objects, state, None)
    }

    /// Only bindings that mention at least one of `fresh`; with `objects`
    /// already containing them.
    pub fn ground_new(
        &self,
        objects: &[TypedObject],
        fresh: &[Sym],
        state: &State,
    ) -> Vec<GroundAction> {
        if fresh.is_empty() {
            return vec![];
        }
        let fresh: HashSet<Sym> = fresh.iter().cloned().collect();
        self.ground_filtered(objects, state, Some(&fresh))
    }

    fn ground_filtered(
        &self,
        objects: &[TypedObject],
        state: &State,
        fresh: Option<&HashSet<Sym>>,
    ) -> Vec<GroundAction> {
        let mut pool: Vec<&TypedObject> = self.dom.constants.iter().collect();
        pool.extend(objects.iter().filter(|o| !self.dom.constants.iter().any(|c| c.name == o.name)));
        let mut out = Vec::new();
        for schema in &self.dom.actions {
            let candidates: Vec<Vec<Sym>> = schema
                .params
                .iter()
                .map(|p| {
                    pool.iter()
                        .filter(|o| self.dom.types.is_subtype(&o.ty, &p.ty))
                        .map(|o| o.name.clone())
                        .collect()
                })
                .collect();
            // static literals, each checked as soon as its last variable is bound
            let mut checks: Vec<Vec<(bool, &LiftedAtom)>> = vec![Vec::new(); schema.params.len() + 1];
            for c in &schema.pre {
                if let Cond::Lit { positive, atom } = c {
                    if self.statics.contains(&atom.name) {
                        let last = atom
                            .args
                            .iter()
                            .filter_map(|t| match t {
                                Term::Var(v) => schema.params.iter().position(|p| p.name == *v),
                                Term::Const(_) => None,
                            })
                            .max()
                            .map_or(0, |i| i + 1);
                        checks[last].push((*positive, atom));
                    }
                }
            }
            let mut binding: HashMap<&str, Sym> = HashMap::new();
            let mut args: Vec<Sym> = Vec::new();
            self.extend(schema, &candidates, &checks, state, fresh, &mut binding, &mut args, &mut out);
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn extend<'s>(
        &self,
        schema: &'s ActionSchema,
        candidates: &[Vec<Sym>],
        checks: &[Vec<(bool, &LiftedAtom)>],
        state: &State,
        fresh: Option<&HashSet<Sym>>,
        binding: &mut HashMap<&'s str, Sym>,
        args: &mut Vec<Sym>,
        out: &mut Vec<GroundAction>,
    ) {
        let depth = args.len();
        for (positive, atom) in &checks[depth] {
            if state.holds(&substitute(atom, binding)) != *positive {
                return;
            }
        }
        if depth == schema.params.len() {
            if let Some(fresh) = fresh {
                if !args.iter().any(|a| fresh.contains(a)) {
                    return;
                }
            }
            let g = instantiate(schema, args);
            if g.add.iter().any(|a| g.del.contains(a)) {
                return;
            }
            out.push(g);
            return;
        }
        let pname = &*schema.params[depth].name;
        for c in &candidates[depth] {
            binding.insert(pname, c.clone());
            args.push(c.clone());
            self.extend(schema, candidates, checks, state, fresh, binding, args, out);
            args.pop();
        }
        binding.remove(pname);
    }
}

/// All ground actions of a problem.
pub fn ground(dom: &DomainModel, prob: &ProblemModel) -> Vec<GroundAction> {
    Grounder::new(dom).ground(&prob.objects, &prob.init)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::parse::{parse_domain, parse_problem};

    const DOM: &str = "
    (define (domain g)
      (:requirements :strips :typing)
      (:types loc)
      (:predicates (at ?l - loc) (road ?a ?b - loc) (lit))
      (:action move :parameters (?a ?b - loc)
        :precondition (and (at ?a)) :effect (and (at ?b) (not (at ?a))))
      (:action drive :parameters (?a ?b - loc)
        :precondition (and (at ?a) (road ?a ?b)) :effect (and (at ?b) (not (at ?a))))
      (:action flip :parameters () :precondition (and) :effect (and (lit))))";

    fn problem(n: usize) -> (DomainModel, ProblemModel) {
        let d = parse_domain(DOM).unwrap();
        let objs: Vec<String> = (0..n).map(|i| format!("l{i}")).collect();
        let text = format!(
            "(define (problem p) (:domain g) (:objects {} - loc) (:init (at l0) (road l0 l1)) (:goal (and)))",
            objs.join(" ")
        );
        let p = parse_problem(&text, &d).unwrap();
        (d, p)
    }

    #[test]
    fn counts_match_enumeration() {
        let (d, p) = problem(3);
        let g = ground(&d, &p);
        let moves = g.iter().filter(|a| &*a.name == "move").count();
        let drives = g.iter().filter(|a| &*a.name == "drive").count();
        let flips = g.iter().filter(|a| &*a.name == "flip").count();
        // 9 bindings minus the 3 with a == b (add/del overlap)
        assert_eq!(moves, 6);
        // only the single static road survives
        assert_eq!(drives, 1);
        assert_eq!(flips, 1);
    }

    #[test]
    fn incremental_grounding_adds_only_new_bindings() {
        let (d, mut p) = problem(3);
        let gr = Grounder::new(&d);
        let before = gr.ground(&p.objects, &p.init);
        p.objects.push(TypedObject {
            name: sym("l3"),
            ty: sym("loc"),
        });
        let added = gr.ground_new(&p.objects, &[sym("l3")], &p.init);
        let full = gr.ground(&p.objects, &p.init);
        assert!(added.iter().all(|a| a.args.iter().any(|x| &**x == "l3")));
        let mut combined: Vec<_> = before.iter().chain(&added).map(|a| a.call()).collect();
        let mut expected: Vec<_> = full.iter().map(|a| a.call()).collect();
        combined.sort();
        expected.sort();
        assert_eq!(combined, expected);
    }
}
