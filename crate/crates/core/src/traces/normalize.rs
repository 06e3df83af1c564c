//! Renaming of constants to `i1, i2, …` by order of first appearance.
//!
//! Scan order: the init state, then for each step the action arguments
//! followed by the step's state. Inside a state, atoms are visited smallest
//! first under a key in which constants that already have an index compare
//! by that index and new constants compare equal; remaining ties fall back to
//! the natural order of the constant names. Fluent terms follow the atoms
//! the same way. Because the key never looks at names that the renaming
//! changes, normalizing twice gives the same result as normalizing once.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::ops::Deref;

use super::Trace;
use crate::pddl::{sym, Atom, State, Sym};

/// A trace whose constants are `i1, i2, …` in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrace(Trace);

impl NormalizedTrace {
    pub fn into_inner(self) -> Trace {
        self.0
    }
}

impl Deref for NormalizedTrace {
    type Target = Trace;

    fn deref(&self) -> &Trace {
        &self.0
    }
}

/// Compares strings with embedded digit runs by numeric value, so `i9`
/// sorts before `i10`.
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut x, mut y) = (a.as_bytes(), b.as_bytes());
    loop {
        match (x.first(), y.first()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(c), Some(d)) if c.is_ascii_digit() && d.is_ascii_digit() => {
                let nx = x.iter().take_while(|c| c.is_ascii_digit()).count();
                let ny = y.iter().take_while(|c| c.is_ascii_digit()).count();
                let dx = trim_zeros(&x[..nx]);
                let dy = trim_zeros(&y[..ny]);
                let ord = dx.len().cmp(&dy.len()).then_with(|| dx.cmp(dy));
                if ord != Ordering::Equal {
                    return ord;
                }
                x = &x[nx..];
                y = &y[ny..];
            }
            (Some(c), Some(d)) => {
                if c != d {
                    return c.cmp(d);
                }
                x = &x[1..];
                y = &y[1..];
            }
        }
    }
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let n = d.iter().take_while(|&&c| c == b'0').count();
    &d[n.min(d.len().saturating_sub(1))..]
}

#[derive(Default)]
struct Indexer {
    index: HashMap<Sym, usize>,
}

impl Indexer {
    fn see(&mut self, c: &Sym) {
        let next = self.index.len() + 1;
        self.index.entry(c.clone()).or_insert(next);
    }

    fn cmp_atoms(&self, a: &Atom, b: &Atom) -> Ordering {
        let key = |c: &Sym| self.index.get(c).copied().unwrap_or(usize::MAX);
        a.name
            .cmp(&b.name)
            .then_with(|| a.args.len().cmp(&b.args.len()))
            .then_with(|| a.args.iter().map(key).cmp(b.args.iter().map(key)))
            .then_with(|| {
                a.args
                    .iter()
                    .zip(&b.args)
                    .map(|(x, y)| natural_cmp(x, y))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
    }

    fn scan_atoms<'a>(&mut self, atoms: impl Iterator<Item = &'a Atom>) {
        let mut pending: Vec<&Atom> = atoms
            .filter(|a| a.args.iter().any(|c| !self.index.contains_key(c)))
            .collect();
        while !pending.is_empty() {
            let (i, _) = pending
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| self.cmp_atoms(a, b))
                .expect("non-empty");
            let atom = pending.swap_remove(i);
            for c in &atom.args {
                self.see(c);
            }
            pending.retain(|a| a.args.iter().any(|c| !self.index.contains_key(c)));
        }
    }

    fn scan_state(&mut self, s: &State) {
        self.scan_atoms(s.atoms.iter());
        self.scan_atoms(s.fluents.keys());
    }
}

/// First-appearance index of every constant in `t`, starting at 1.
fn first_appearance(t: &Trace) -> HashMap<Sym, usize> {
    let mut ix = Indexer::default();
    ix.scan_state(&t.init);
    for step in &t.steps {
        if let Some(a) = &step.action {
            for c in &a.args {
                ix.see(c);
            }
        }
        ix.scan_state(&step.state);
    }
    ix.index
}

fn rename_atom(a: &Atom, f: &mut impl FnMut(&Sym) -> Sym) -> Atom {
    Atom {
        name: a.name.clone(),
        args: a.args.iter().map(|c| f(c)).collect(),
    }
}

fn rename_state(s: &State, f: &mut impl FnMut(&Sym) -> Sym) -> State {
    State {
        atoms: s.atoms.iter().map(|a| rename_atom(a, f)).collect(),
        fluents: s.fluents.iter().map(|(k, v)| (rename_atom(k, f), *v)).collect(),
    }
}

/// Applies `f` to every constant of the trace.
pub fn rename_constants(t: &Trace, mut f: impl FnMut(&Sym) -> Sym) -> Trace {
    let init = rename_state(&t.init, &mut f);
    let steps = t
        .steps
        .iter()
        .map(|s| super::Step {
            action: s.action.as_ref().map(|a| rename_atom(a, &mut f)),
            state: rename_state(&s.state, &mut f),
        })
        .collect();
    Trace {
        init,
        steps,
        label: t.label.clone(),
        domain: t.domain.clone(),
        seed: t.seed,
    }
}

pub fn normalize_constants(t: &Trace) -> NormalizedTrace {
    let index = first_appearance(t);
    let names: HashMap<Sym, Sym> = index
        .into_iter()
        .map(|(c, i)| (c, sym(&format!("i{i}"))))
        .collect();
    NormalizedTrace(rename_constants(t, |c| names[c].clone()))
}
