use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use super::model::{AssignOp, Atom, Cond, Expr, GroundAction};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("fluent {0} is read but has no value")]
    UnsetFluent(Atom),
}

/// Full valuation: true boolean atoms plus numeric fluent values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct State {
    pub atoms: BTreeSet<Atom>,
    pub fluents: BTreeMap<Atom, f64>,
}

impl State {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn holds(&self, atom: &Atom) -> bool {
        self.atoms.contains(atom)
    }

    pub fn value(&self, term: &Atom) -> Result<f64, EvalError> {
        self.fluents
            .get(term)
            .copied()
            .ok_or_else(|| EvalError::UnsetFluent(term.clone()))
    }

    pub fn eval(&self, expr: &Expr<Atom>) -> Result<f64, EvalError> {
        match expr {
            Expr::Num(n) => Ok(*n),
            Expr::Fluent(t) => self.value(t),
            Expr::Bin(op, l, r) => Ok(op.eval(self.eval(l)?, self.eval(r)?)),
        }
    }

    pub fn satisfies(&self, cond: &Cond<Atom>) -> Result<bool, EvalError> {
        match cond {
            Cond::Lit { positive, atom } => Ok(self.holds(atom) == *positive),
            Cond::Cmp(op, l, r) => Ok(op.holds(self.eval(l)?, self.eval(r)?)),
        }
    }

    pub fn satisfies_all(&self, conds: &[Cond<Atom>]) -> Result<bool, EvalError> {
        for c in conds {
            if !self.satisfies(c)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Number of conditions that do not hold; unset fluents count as unsatisfied.
    pub fn unsatisfied_count(&self, conds: &[Cond<Atom>]) -> usize {
        conds
            .iter()
            .filter(|c| !self.satisfies(c).unwrap_or(false))
            .count()
    }

    /// Restriction to the given predicate/function names.
    pub fn project(&self, keep: impl Fn(&str) -> bool) -> State {
        State {
            atoms: self
                .atoms
                .iter()
                .filter(|a| keep(&a.name))
                .cloned()
                .collect(),
            fluents: self
                .fluents
                .iter()
                .filter(|(t, _)| keep(&t.name))
                .map(|(t, v)| (t.clone(), *v))
                .collect(),
        }
    }

    /// Every constant mentioned by the state, in iteration order.
    pub fn constants(&self) -> impl Iterator<Item = &super::Sym> {
        self.atoms
            .iter()
            .flat_map(|a| a.args.iter())
            .chain(self.fluents.keys().flat_map(|t| t.args.iter()))
    }
}

/// True iff every boolean precondition and numeric comparison holds.
pub fn applicable(s: &State, a: &GroundAction) -> Result<bool, EvalError> {
    s.satisfies_all(&a.pre)
}

/// State transition. Inapplicable actions leave the state unchanged. Numeric
/// effects read their operands from `s`, not from partially updated values.
pub fn apply(s: &State, a: &GroundAction) -> Result<State, EvalError> {
    if !applicable(s, a)? {
        return Ok(s.clone());
    }
    apply_unchecked(s, a)
}

/// Effects without the applicability test.
pub fn apply_unchecked(s: &State, a: &GroundAction) -> Result<State, EvalError> {
    let mut next = s.clone();
    for d in &a.del {
        next.atoms.remove(d);
    }
    for ad in &a.add {
        next.atoms.insert(ad.clone());
    }
    let mut updates = Vec::with_capacity(a.num_effects.len());
    for e in &a.num_effects {
        let rhs = s.eval(&e.expr)?;
        let v = match e.op {
            AssignOp::Assign => rhs,
            AssignOp::Increase => s.value(&e.fluent)? + rhs,
            AssignOp::Decrease => s.value(&e.fluent)? - rhs,
        };
        updates.push((e.fluent.clone(), v));
    }
    // listed order: a later effect on the same fluent wins
    for (t, v) in updates {
        next.fluents.insert(t, v);
    }
    Ok(next)
}
