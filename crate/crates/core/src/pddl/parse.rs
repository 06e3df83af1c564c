//! PDDL subset reader: `:strips :typing :fluents :negative-preconditions
//! :action-costs`, plus `:equality`-free numeric expressions over `+ - *`.

use std::collections::{BTreeSet, HashMap, HashSet};

use thiserror::Error;

use super::model::*;
use super::sexpr::{read_all, Pos, SExpr, SyntaxError};
use super::state::State;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PddlError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: undeclared type `{name}`")]
    UndeclaredType { pos: Pos, name: String },
    #[error("{pos}: duplicate name `{name}`")]
    Duplicate { pos: Pos, name: String },
    #[error("{pos}: `{name}` expects {expected} argument(s), found {found}")]
    Arity {
        pos: Pos,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{pos}: unknown {kind} `{name}`")]
    Unknown {
        pos: Pos,
        kind: &'static str,
        name: String,
    },
    #[error("{pos}: `{name}` has type {found}, expected {expected}")]
    TypeMismatch {
        pos: Pos,
        name: String,
        expected: String,
        found: String,
    },
    #[error("{pos}: unsupported requirement `{name}`")]
    Unsupported { pos: Pos, name: String },
    #[error("problem targets domain `{found}` but `{expected}` was supplied")]
    DomainMismatch { expected: String, found: String },
}

impl From<SyntaxError> for PddlError {
    fn from(e: SyntaxError) -> Self {
        PddlError::Syntax {
            pos: e.pos,
            msg: e.msg,
        }
    }
}

type Result<T> = std::result::Result<T, PddlError>;

const SUPPORTED_REQUIREMENTS: &[&str] = &[
    ":strips",
    ":typing",
    ":fluents",
    ":numeric-fluents",
    ":negative-preconditions",
    ":action-costs",
];

fn syntax(pos: Pos, msg: impl Into<String>) -> PddlError {
    PddlError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn atom_of(e: &SExpr, what: &str) -> Result<String> {
    e.as_atom()
        .map(str::to_string)
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

fn list_of<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr]> {
    e.as_list()
        .ok_or_else(|| syntax(e.pos(), format!("expected {what}")))
}

/// `(define (<kind> NAME) sections...)` → (name, sections).
fn open_define<'a>(exprs: &'a [SExpr], kind: &str) -> Result<(String, &'a [SExpr])> {
    let top = match exprs {
        [] => return Err(syntax(Pos { line: 1, col: 1 }, "empty input")),
        [one] => one,
        [_, extra, ..] => return Err(syntax(extra.pos(), "trailing input after definition")),
    };
    let items = list_of(top, "(define ...)")?;
    if items.first().and_then(SExpr::as_atom) != Some("define") {
        return Err(syntax(top.pos(), "expected `define`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| syntax(top.pos(), format!("missing ({kind} NAME)")))?;
    let h = list_of(header, "header")?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(syntax(header.pos(), format!("expected ({kind} NAME)")));
    }
    Ok((atom_of(&h[1], "name")?, &items[2..]))
}

/// Splits `a b - t c - u d` into (name, type, pos) triples; untyped names get `object`.
fn typed_list(items: &[SExpr]) -> Result<Vec<(String, String, Pos)>> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let s = atom_of(&items[i], "name")?;
        if s == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), "missing type after `-`"))?;
            if ty.head() == Some("either") {
                return Err(PddlError::Unsupported {
                    pos: ty.pos(),
                    name: "either".into(),
                });
            }
            let ty = atom_of(ty, "type name")?;
            if pending.is_empty() {
                return Err(syntax(items[i].pos(), "type without names"));
            }
            for (n, p) in pending.drain(..) {
                out.push((n, ty.clone(), p));
            }
            i += 2;
        } else {
            pending.push((s, items[i].pos()));
            i += 1;
        }
    }
    for (n, p) in pending {
        out.push((n, ROOT_TYPE.to_string(), p));
    }
    Ok(out)
}

fn parse_number(s: &str) -> Option<f64> {
    if s.starts_with(|c: char| c.is_ascii_digit() || c == '-' || c == '.') && s != "-" {
        s.parse::<f64>().ok().filter(|v| v.is_finite())
    } else {
        None
    }
}

/// Resolves names during schema parsing: variables of the enclosing action
/// and known constants.
struct Scope<'a> {
    vars: HashMap<String, Sym>,
    consts: &'a HashMap<String, Sym>,
}

impl Scope<'_> {
    fn term(&self, e: &SExpr) -> Result<(Term, Sym)> {
        let s = atom_of(e, "term")?;
        if s.starts_with('?') {
            let ty = self.vars.get(&s).ok_or_else(|| PddlError::Unknown {
                pos: e.pos(),
                kind: "variable",
                name: s.clone(),
            })?;
            Ok((Term::Var(sym(&s)), ty.clone()))
        } else {
            let ty = self.consts.get(&s).ok_or_else(|| PddlError::Unknown {
                pos: e.pos(),
                kind: "constant",
                name: s.clone(),
            })?;
            Ok((Term::Const(sym(&s)), ty.clone()))
        }
    }
}

struct DomainBuilder {
    types: TypeHierarchy,
    consts: HashMap<String, Sym>,
    constants: Vec<TypedObject>,
    predicates: Vec<PredicateSchema>,
    functions: Vec<FunctionSchema>,
}

impl DomainBuilder {
    fn check_type(&self, ty: &str, pos: Pos) -> Result<Sym> {
        if self.types.is_declared(ty) {
            Ok(sym(ty))
        } else {
            Err(PddlError::UndeclaredType {
                pos,
                name: ty.to_string(),
            })
        }
    }

    fn signature(&self, e: &SExpr) -> Result<Signature> {
        let items = list_of(e, "signature")?;
        let name = atom_of(
            items.first().ok_or_else(|| syntax(e.pos(), "empty signature"))?,
            "name",
        )?;
        let mut params = Vec::new();
        for (n, t, p) in typed_list(&items[1..])? {
            if !n.starts_with('?') {
                return Err(syntax(p, format!("expected variable, found `{n}`")));
            }
            params.push(TypedParam {
                name: sym(&n),
                ty: self.check_type(&t, p)?,
            });
        }
        Ok(Signature {
            name: sym(&name),
            params,
        })
    }

    fn lookup<'s>(
        sigs: &'s [Signature],
        name: &str,
        pos: Pos,
        kind: &'static str,
    ) -> Result<&'s Signature> {
        sigs.iter()
            .find(|s| &*s.name == name)
            .ok_or_else(|| PddlError::Unknown {
                pos,
                kind,
                name: name.to_string(),
            })
    }

    fn lifted(
        &self,
        e: &SExpr,
        scope: &Scope,
        sigs: &[Signature],
        kind: &'static str,
    ) -> Result<LiftedAtom> {
        let items = list_of(e, kind)?;
        let name = atom_of(
            items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?,
            "name",
        )?;
        let sig = Self::lookup(sigs, &name, e.pos(), kind)?;
        if sig.params.len() != items.len() - 1 {
            return Err(PddlError::Arity {
                pos: e.pos(),
                name,
                expected: sig.params.len(),
                found: items.len() - 1,
            });
        }
        let mut args = Vec::new();
        for (arg, param) in items[1..].iter().zip(&sig.params) {
            let (t, ty) = scope.term(arg)?;
            // variables of a supertype may still bind to a conforming object
            if !self.types.is_subtype(&ty, &param.ty) && !self.types.is_subtype(&param.ty, &ty) {
                return Err(PddlError::TypeMismatch {
                    pos: arg.pos(),
                    name: t.to_string(),
                    expected: param.ty.to_string(),
                    found: ty.to_string(),
                });
            }
            args.push(t);
        }
        Ok(LiftedAtom {
            name: sym(&name),
            args,
        })
    }

    fn expr(&self, e: &SExpr, scope: &Scope) -> Result<Expr<LiftedAtom>> {
        match e {
            SExpr::Atom(s, p) => parse_number(s)
                .map(Expr::Num)
                .ok_or_else(|| syntax(*p, format!("expected number, found `{s}`"))),
            SExpr::List(items, p) => {
                let head = items
                    .first()
                    .and_then(SExpr::as_atom)
                    .ok_or_else(|| syntax(*p, "expected expression"))?;
                let op = match head {
                    "+" => Some(BinOp::Add),
                    "-" => Some(BinOp::Sub),
                    "*" => Some(BinOp::Mul),
                    _ => None,
                };
                match op {
                    Some(BinOp::Sub) if items.len() == 2 => Ok(Expr::Bin(
                        BinOp::Sub,
                        Box::new(Expr::Num(0.0)),
                        Box::new(self.expr(&items[1], scope)?),
                    )),
                    Some(op) => {
                        if items.len() < 3 || (op == BinOp::Sub && items.len() != 3) {
                            return Err(syntax(*p, format!("bad arity for `{head}`")));
                        }
                        let mut acc = self.expr(&items[1], scope)?;
                        for it in &items[2..] {
                            acc = Expr::Bin(op, Box::new(acc), Box::new(self.expr(it, scope)?));
                        }
                        Ok(acc)
                    }
                    None => Ok(Expr::Fluent(self.lifted(e, scope, &self.functions, "function")?)),
                }
            }
        }
    }

    fn condition(
        &self,
        e: &SExpr,
        scope: &Scope,
        out: &mut Vec<Cond<LiftedAtom>>,
    ) -> Result<()> {
        let items = list_of(e, "condition")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => {
                for c in &items[1..] {
                    self.condition(c, scope, out)?;
                }
                Ok(())
            }
            Some("not") => {
                if items.len() != 2 {
                    return Err(syntax(e.pos(), "`not` takes one atom"));
                }
                out.push(Cond::neg(self.lifted(&items[1], scope, &self.predicates, "predicate")?));
                Ok(())
            }
            Some(op @ ("<" | "<=" | "=" | ">=" | ">")) => {
                if items.len() != 3 {
                    return Err(syntax(e.pos(), format!("`{op}` takes two operands")));
                }
                let cmp = match op {
                    "<" => CmpOp::Lt,
                    "<=" => CmpOp::Le,
                    "=" => CmpOp::Eq,
                    ">=" => CmpOp::Ge,
                    _ => CmpOp::Gt,
                };
                out.push(Cond::Cmp(
                    cmp,
                    self.expr(&items[1], scope)?,
                    self.expr(&items[2], scope)?,
                ));
                Ok(())
            }
            Some(kw @ ("or" | "imply" | "exists" | "forall" | "when")) => Err(PddlError::Unsupported {
                pos: e.pos(),
                name: kw.to_string(),
            }),
            _ => {
                out.push(Cond::pos(self.lifted(e, scope, &self.predicates, "predicate")?));
                Ok(())
            }
        }
    }

    fn effect(&self, e: &SExpr, scope: &Scope, act: &mut ActionSchema) -> Result<()> {
        let items = list_of(e, "effect")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => {
                for c in &items[1..] {
                    self.effect(c, scope, act)?;
                }
                Ok(())
            }
            Some("not") => {
                if items.len() != 2 {
                    return Err(syntax(e.pos(), "`not` takes one atom"));
                }
                act.del
                    .push(self.lifted(&items[1], scope, &self.predicates, "predicate")?);
                Ok(())
            }
            Some(kw @ ("increase" | "decrease" | "assign")) => {
                if items.len() != 3 {
                    return Err(syntax(e.pos(), format!("`{kw}` takes two operands")));
                }
                if items[1].head() == Some("total-cost") {
                    let c = items[2]
                        .as_atom()
                        .and_then(parse_number)
                        .filter(|c| *c >= 0.0)
                        .ok_or_else(|| syntax(items[2].pos(), "action cost must be a nonnegative number"))?;
                    act.cost = c;
                    return Ok(());
                }
                let op = match kw {
                    "increase" => AssignOp::Increase,
                    "decrease" => AssignOp::Decrease,
                    _ => AssignOp::Assign,
                };
                act.num_effects.push(NumEffect {
                    op,
                    fluent: self.lifted(&items[1], scope, &self.functions, "function")?,
                    expr: self.expr(&items[2], scope)?,
                });
                Ok(())
            }
            Some(kw @ ("forall" | "when")) => Err(PddlError::Unsupported {
                pos: e.pos(),
                name: kw.to_string(),
            }),
            _ => {
                act.add
                    .push(self.lifted(e, scope, &self.predicates, "predicate")?);
                Ok(())
            }
        }
    }

    fn action(&self, items: &[SExpr], pos: Pos) -> Result<ActionSchema> {
        let name = atom_of(items.get(1).ok_or_else(|| syntax(pos, "missing action name"))?, "action name")?;
        let mut act = ActionSchema {
            name: sym(&name),
            params: vec![],
            pre: vec![],
            add: vec![],
            del: vec![],
            num_effects: vec![],
            cost: 1.0,
        };
        let mut scope = Scope {
            vars: HashMap::new(),
            consts: &self.consts,
        };
        let mut i = 2;
        let mut pre = None;
        let mut eff = None;
        while i < items.len() {
            let key = atom_of(&items[i], "action keyword")?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| syntax(items[i].pos(), format!("missing value for {key}")))?;
            match key.as_str() {
                ":parameters" => {
                    for (n, t, p) in typed_list(list_of(val, "parameter list")?)? {
                        if !n.starts_with('?') {
                            return Err(syntax(p, format!("expected variable, found `{n}`")));
                        }
                        if scope.vars.contains_key(&n) {
                            return Err(PddlError::Duplicate { pos: p, name: n });
                        }
                        let ty = self.check_type(&t, p)?;
                        scope.vars.insert(n.clone(), ty.clone());
                        act.params.push(TypedParam { name: sym(&n), ty });
                    }
                }
                ":precondition" => pre = Some(val),
                ":effect" => eff = Some(val),
                other => return Err(syntax(items[i].pos(), format!("unknown action keyword `{other}`"))),
            }
            i += 2;
        }
        if let Some(p) = pre {
            self.condition(p, &scope, &mut act.pre)?;
        }
        if let Some(e) = eff {
            self.effect(e, &scope, &mut act)?;
        }
        Ok(act)
    }
}

/// Parses and validates a domain definition.
pub fn parse_domain(text: &str) -> Result<DomainModel> {
    let exprs = read_all(text)?;
    let (name, sections) = open_define(&exprs, "domain")?;
    let mut b = DomainBuilder {
        types: TypeHierarchy::default(),
        consts: HashMap::new(),
        constants: vec![],
        predicates: vec![],
        functions: vec![],
    };
    let mut requirements = Vec::new();
    let mut action_exprs = Vec::new();
    let mut seen_sections = HashSet::new();

    // sections are order-independent apart from types preceding their users
    let key_of = |s: &SExpr| s.head().map(str::to_string);
    for pass in 0..3 {
        for s in sections {
            let items = list_of(s, "section")?;
            let key = key_of(s).ok_or_else(|| syntax(s.pos(), "expected section keyword"))?;
            let wanted = match pass {
                0 => matches!(key.as_str(), ":requirements" | ":types"),
                1 => matches!(key.as_str(), ":constants" | ":predicates" | ":functions"),
                _ => key == ":action",
            };
            if !wanted {
                continue;
            }
            if key != ":action" && !seen_sections.insert(key.clone()) {
                return Err(PddlError::Duplicate { pos: s.pos(), name: key });
            }
            match key.as_str() {
                ":requirements" => {
                    for r in &items[1..] {
                        let r_name = atom_of(r, "requirement")?;
                        if !SUPPORTED_REQUIREMENTS.contains(&r_name.as_str()) {
                            return Err(PddlError::Unsupported { pos: r.pos(), name: r_name });
                        }
                        requirements.push(sym(&r_name));
                    }
                }
                ":types" => {
                    let decl = typed_list(&items[1..])?;
                    let mut names = BTreeSet::new();
                    for (n, _, p) in &decl {
                        if n == ROOT_TYPE || !names.insert(n.clone()) {
                            return Err(PddlError::Duplicate { pos: *p, name: n.clone() });
                        }
                    }
                    for (n, t, p) in &decl {
                        if t != ROOT_TYPE && !names.contains(t) {
                            return Err(PddlError::UndeclaredType { pos: *p, name: t.clone() });
                        }
                        b.types.parents.push((sym(n), sym(t)));
                    }
                }
                ":constants" => {
                    for (n, t, p) in typed_list(&items[1..])? {
                        let ty = b.check_type(&t, p)?;
                        if b.consts.insert(n.clone(), ty.clone()).is_some() {
                            return Err(PddlError::Duplicate { pos: p, name: n });
                        }
                        b.constants.push(TypedObject { name: sym(&n), ty });
                    }
                }
                ":predicates" | ":functions" => {
                    let mut i = 1;
                    while i < items.len() {
                        let sig = b.signature(&items[i])?;
                        // optional `- number` after a function signature
                        if items.get(i + 1).and_then(SExpr::as_atom) == Some("-") {
                            i += 2;
                        }
                        let clash = b.predicates.iter().chain(&b.functions).any(|s| s.name == sig.name);
                        if clash {
                            return Err(PddlError::Duplicate {
                                pos: items[i.min(items.len() - 1)].pos(),
                                name: sig.name.to_string(),
                            });
                        }
                        if key == ":predicates" {
                            b.predicates.push(sig);
                        } else {
                            b.functions.push(sig);
                        }
                        i += 1;
                    }
                }
                ":action" => action_exprs.push(s),
                _ => unreachable!(),
            }
        }
    }
    for s in sections {
        let key = key_of(s).unwrap_or_default();
        if !matches!(
            key.as_str(),
            ":requirements" | ":types" | ":constants" | ":predicates" | ":functions" | ":action"
        ) {
            return Err(syntax(s.pos(), format!("unknown section `{key}`")));
        }
    }
    // `total-cost` is accounted as action cost, never as a state fluent
    b.functions.retain(|f| &*f.name != "total-cost");

    let mut actions: Vec<ActionSchema> = Vec::new();
    for s in action_exprs {
        let act = b.action(s.as_list().unwrap_or(&[]), s.pos())?;
        if actions.iter().any(|a| a.name == act.name) {
            return Err(PddlError::Duplicate { pos: s.pos(), name: act.name.to_string() });
        }
        actions.push(act);
    }

    Ok(DomainModel {
        name: sym(&name),
        requirements,
        types: b.types,
        constants: b.constants,
        predicates: b.predicates,
        functions: b.functions,
        actions,
    })
}

/// Parses a ground atom whose arguments must be declared objects (or domain
/// constants) of a conforming type.
fn ground_atom(
    e: &SExpr,
    dom: &DomainModel,
    objects: &HashMap<String, Sym>,
    sigs: &[Signature],
    kind: &'static str,
) -> Result<Atom> {
    let items = list_of(e, kind)?;
    let name = atom_of(items.first().ok_or_else(|| syntax(e.pos(), "empty atom"))?, "name")?;
    let sig = sigs
        .iter()
        .find(|s| *s.name == *name)
        .ok_or_else(|| PddlError::Unknown { pos: e.pos(), kind, name: name.clone() })?;
    if sig.params.len() != items.len() - 1 {
        return Err(PddlError::Arity {
            pos: e.pos(),
            name,
            expected: sig.params.len(),
            found: items.len() - 1,
        });
    }
    let mut args = Vec::new();
    for (a, p) in items[1..].iter().zip(&sig.params) {
        let n = atom_of(a, "object")?;
        let ty = objects.get(&n).ok_or_else(|| PddlError::Unknown {
            pos: a.pos(),
            kind: "object",
            name: n.clone(),
        })?;
        if !dom.types.is_subtype(ty, &p.ty) {
            return Err(PddlError::TypeMismatch {
                pos: a.pos(),
                name: n,
                expected: p.ty.to_string(),
                found: ty.to_string(),
            });
        }
        args.push(sym(&n));
    }
    Ok(Atom { name: sym(&name), args })
}

fn ground_expr(
    e: &SExpr,
    dom: &DomainModel,
    objects: &HashMap<String, Sym>,
) -> Result<Expr<Atom>> {
    match e {
        SExpr::Atom(s, p) => parse_number(s)
            .map(Expr::Num)
            .ok_or_else(|| syntax(*p, format!("expected number, found `{s}`"))),
        SExpr::List(items, p) => {
            let op = match e.head() {
                Some("+") => Some(BinOp::Add),
                Some("-") => Some(BinOp::Sub),
                Some("*") => Some(BinOp::Mul),
                _ => None,
            };
            match op {
                Some(op) => {
                    if items.len() != 3 {
                        return Err(syntax(*p, "arithmetic takes two operands"));
                    }
                    Ok(Expr::Bin(
                        op,
                        Box::new(ground_expr(&items[1], dom, objects)?),
                        Box::new(ground_expr(&items[2], dom, objects)?),
                    ))
                }
                None => Ok(Expr::Fluent(ground_atom(e, dom, objects, &dom.functions, "function")?)),
            }
        }
    }
}

/// Ground goal formula: conjunction of literals and numeric comparisons.
pub(crate) fn ground_goal(
    e: &SExpr,
    dom: &DomainModel,
    objects: &HashMap<String, Sym>,
    out: &mut Vec<Cond<Atom>>,
) -> Result<()> {
    let items = list_of(e, "goal")?;
    match e.head() {
        None if items.is_empty() => Ok(()),
        Some("and") => {
            for c in &items[1..] {
                ground_goal(c, dom, objects, out)?;
            }
            Ok(())
        }
        Some("not") => {
            if items.len() != 2 {
                return Err(syntax(e.pos(), "`not` takes one atom"));
            }
            out.push(Cond::neg(ground_atom(&items[1], dom, objects, &dom.predicates, "predicate")?));
            Ok(())
        }
        Some(op @ ("<" | "<=" | "=" | ">=" | ">")) => {
            if items.len() != 3 {
                return Err(syntax(e.pos(), "comparison takes two operands"));
            }
            let cmp = match op {
                "<" => CmpOp::Lt,
                "<=" => CmpOp::Le,
                "=" => CmpOp::Eq,
                ">=" => CmpOp::Ge,
                _ => CmpOp::Gt,
            };
            out.push(Cond::Cmp(
                cmp,
                ground_expr(&items[1], dom, objects)?,
                ground_expr(&items[2], dom, objects)?,
            ));
            Ok(())
        }
        _ => {
            out.push(Cond::pos(ground_atom(e, dom, objects, &dom.predicates, "predicate")?));
            Ok(())
        }
    }
}

/// Parses a problem against an already validated domain.
pub fn parse_problem(text: &str, dom: &DomainModel) -> Result<ProblemModel> {
    let exprs = read_all(text)?;
    let (name, sections) = open_define(&exprs, "problem")?;
    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut lookup: HashMap<String, Sym> = dom
        .constants
        .iter()
        .map(|c| (c.name.to_string(), c.ty.clone()))
        .collect();
    let mut init = State::new();
    let mut goals = Vec::new();

    // objects first so init/goal can reference them regardless of order
    let ordered = sections
        .iter()
        .filter(|s| matches!(s.head(), Some(":domain" | ":objects")))
        .chain(sections.iter().filter(|s| !matches!(s.head(), Some(":domain" | ":objects"))));
    for s in ordered {
        let items = list_of(s, "section")?;
        match s.head() {
            Some(":domain") => {
                let d = atom_of(items.get(1).ok_or_else(|| syntax(s.pos(), "missing domain name"))?, "domain name")?;
                if d != *dom.name {
                    return Err(PddlError::DomainMismatch {
                        expected: dom.name.to_string(),
                        found: d,
                    });
                }
                domain_name = Some(sym(&d));
            }
            Some(":objects") => {
                for (n, t, p) in typed_list(&items[1..])? {
                    if !dom.types.is_declared(&t) {
                        return Err(PddlError::UndeclaredType { pos: p, name: t });
                    }
                    if lookup.insert(n.clone(), sym(&t)).is_some() {
                        return Err(PddlError::Duplicate { pos: p, name: n });
                    }
                    objects.push(TypedObject { name: sym(&n), ty: sym(&t) });
                }
            }
            Some(":init") => {
                for it in &items[1..] {
                    if it.head() == Some("=") {
                        let parts = list_of(it, "fluent assignment")?;
                        if parts.len() != 3 {
                            return Err(syntax(it.pos(), "expected (= (f ...) value)"));
                        }
                        if parts[1].head() == Some("total-cost") {
                            continue;
                        }
                        let term = ground_atom(&parts[1], dom, &lookup, &dom.functions, "function")?;
                        let v = parts[2]
                            .as_atom()
                            .and_then(parse_number)
                            .ok_or_else(|| syntax(parts[2].pos(), "expected number"))?;
                        init.fluents.insert(term, v);
                    } else {
                        init.atoms
                            .insert(ground_atom(it, dom, &lookup, &dom.predicates, "predicate")?);
                    }
                }
            }
            Some(":goal") => {
                if let Some(g) = items.get(1) {
                    ground_goal(g, dom, &lookup, &mut goals)?;
                }
            }
            Some(other) => {
                return Err(syntax(s.pos(), format!("unknown section `{other}`")));
            }
            None => return Err(syntax(s.pos(), "expected section keyword")),
        }
    }
    let domain_name = domain_name.ok_or_else(|| syntax(Pos { line: 1, col: 1 }, "missing (:domain ...)"))?;
    Ok(ProblemModel {
        name: sym(&name),
        domain_name,
        objects,
        init,
        goals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINI: &str = "
    (define (domain mini)
      (:requirements :strips :typing :fluents)
      (:types place - object)
      (:predicates (at ?p - place) (link ?a ?b - place))
      (:functions (fuel))
      (:action go
        :parameters (?a ?b - place)
        :precondition (and (at ?a) (link ?a ?b) (>= (fuel) 1))
        :effect (and (at ?b) (not (at ?a)) (decrease (fuel) 1))))";

    #[test]
    fn parses_small_domain() {
        let d = parse_domain(MINI).unwrap();
        assert_eq!(&*d.name, "mini");
        assert_eq!(d.actions.len(), 1);
        assert_eq!(d.predicates.len(), 2);
        assert_eq!(d.functions.len(), 1);
        assert_eq!(d.actions[0].pre.len(), 3);
        assert_eq!(d.static_predicates(), vec![sym("link")]);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(parse_domain(""), Err(PddlError::Syntax { .. })));
        assert!(matches!(parse_domain("  ; only a comment\n"), Err(PddlError::Syntax { .. })));
    }

    #[test]
    fn semantic_errors_are_reported() {
        let undeclared = MINI.replace("(:types place - object)", "(:types spot)");
        assert!(matches!(parse_domain(&undeclared), Err(PddlError::UndeclaredType { .. })));

        let dup = MINI.replace("(link ?a ?b - place)", "(link ?a ?b - place) (at ?q - place)");
        assert!(matches!(parse_domain(&dup), Err(PddlError::Duplicate { .. })));

        let arity = MINI.replace("(link ?a ?b)", "(link ?a)");
        match parse_domain(&arity) {
            Err(PddlError::Arity { expected: 2, found: 1, pos, .. }) => assert!(pos.line > 1),
            other => panic!("unexpected {other:?}"),
        }

        let cond = MINI.replace(":strips", ":strips :conditional-effects");
        assert!(matches!(parse_domain(&cond), Err(PddlError::Unsupported { .. })));
    }

    #[test]
    fn problem_checks() {
        let d = parse_domain(MINI).unwrap();
        let ok = "(define (problem p) (:domain mini) (:objects a b - place)
                   (:init (at a) (link a b) (= (fuel) 3)) (:goal (and)))";
        let p = parse_problem(ok, &d).unwrap();
        assert!(p.goals.is_empty());
        assert_eq!(p.init.fluents[&Atom::new("fuel", &[])], 3.0);

        let wrong = ok.replace("(:domain mini)", "(:domain other)");
        assert!(matches!(parse_problem(&wrong, &d), Err(PddlError::DomainMismatch { .. })));

        let unknown = ok.replace("(:goal (and))", "(:goal (at c))");
        assert!(matches!(parse_problem(&unknown, &d), Err(PddlError::Unknown { kind: "object", .. })));

        let pred = ok.replace("(:goal (and))", "(:goal (near a))");
        assert!(matches!(parse_problem(&pred, &d), Err(PddlError::Unknown { kind: "predicate", .. })));
    }
}
