//! Lifted and ground representations of planning domains and problems.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Interned-ish name. Cheap to clone, ordered and hashed by content.
pub type Sym = Arc<str>;

pub fn sym(s: &str) -> Sym {
    Arc::from(s)
}

/// A ground atom or fluent term: a name applied to constants.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Atom {
    pub name: Sym,
    pub args: Vec<Sym>,
}

impl Atom {
    pub fn new(name: &str, args: &[&str]) -> Self {
        Atom {
            name: sym(name),
            args: args.iter().map(|a| sym(a)).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// Name and arguments of an executed ground action, as recorded in traces.
pub type ActionCall = Atom;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Term {
    Var(Sym),
    Const(Sym),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct LiftedAtom {
    pub name: Sym,
    pub args: Vec<Term>,
}

impl fmt::Display for LiftedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.name)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
        }
    }

    pub fn eval(self, l: f64, r: f64) -> f64 {
        match self {
            BinOp::Add => l + r,
            BinOp::Sub => l - r,
            BinOp::Mul => l * r,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }

    pub fn holds(self, l: f64, r: f64) -> bool {
        match self {
            CmpOp::Lt => l < r,
            CmpOp::Le => l <= r,
            CmpOp::Eq => l == r,
            CmpOp::Ge => l >= r,
            CmpOp::Gt => l > r,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum AssignOp {
    Increase,
    Decrease,
    Assign,
}

impl AssignOp {
    pub fn keyword(self) -> &'static str {
        match self {
            AssignOp::Increase => "increase",
            AssignOp::Decrease => "decrease",
            AssignOp::Assign => "assign",
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub enum Expr<A> {
    Num(f64),
    Fluent(A),
    Bin(BinOp, Box<Expr<A>>, Box<Expr<A>>),
}

impl<A> Expr<A> {
    pub fn fluents<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Expr::Num(_) => {}
            Expr::Fluent(a) => out.push(a),
            Expr::Bin(_, l, r) => {
                l.fluents(out);
                r.fluents(out);
            }
        }
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> Expr<B> {
        match self {
            Expr::Num(n) => Expr::Num(*n),
            Expr::Fluent(a) => Expr::Fluent(f(a)),
            Expr::Bin(op, l, r) => Expr::Bin(*op, Box::new(l.map(f)), Box::new(r.map(f))),
        }
    }
}

impl<A: fmt::Display> fmt::Display for Expr<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(n) => write!(f, "{n}"),
            Expr::Fluent(a) => write!(f, "{a}"),
            Expr::Bin(op, l, r) => write!(f, "({} {l} {r})", op.symbol()),
        }
    }
}

/// Precondition or goal: a (possibly negated) atom or a numeric comparison.
#[derive(Clone, PartialEq, Debug)]
pub enum Cond<A> {
    Lit { positive: bool, atom: A },
    Cmp(CmpOp, Expr<A>, Expr<A>),
}

impl<A> Cond<A> {
    pub fn pos(atom: A) -> Self {
        Cond::Lit {
            positive: true,
            atom,
        }
    }

    pub fn neg(atom: A) -> Self {
        Cond::Lit {
            positive: false,
            atom,
        }
    }

    pub fn map<B>(&self, f: &mut impl FnMut(&A) -> B) -> Cond<B> {
        match self {
            Cond::Lit { positive, atom } => Cond::Lit {
                positive: *positive,
                atom: f(atom),
            },
            Cond::Cmp(op, l, r) => Cond::Cmp(*op, l.map(f), r.map(f)),
        }
    }
}

impl<A: fmt::Display> fmt::Display for Cond<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cond::Lit {
                positive: true,
                atom,
            } => write!(f, "{atom}"),
            Cond::Lit {
                positive: false,
                atom,
            } => write!(f, "(not {atom})"),
            Cond::Cmp(op, l, r) => write!(f, "({} {l} {r})", op.symbol()),
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct NumEffect<A> {
    pub op: AssignOp,
    pub fluent: A,
    pub expr: Expr<A>,
}

impl<A: fmt::Display> fmt::Display for NumEffect<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.op.keyword(), self.fluent, self.expr)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypedParam {
    pub name: Sym,
    pub ty: Sym,
}

/// Name plus typed parameter list; used for predicates and functions alike.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Signature {
    pub name: Sym,
    pub params: Vec<TypedParam>,
}

pub type PredicateSchema = Signature;
pub type FunctionSchema = Signature;

#[derive(Clone, PartialEq, Debug)]
pub struct ActionSchema {
    pub name: Sym,
    pub params: Vec<TypedParam>,
    pub pre: Vec<Cond<LiftedAtom>>,
    pub add: Vec<LiftedAtom>,
    pub del: Vec<LiftedAtom>,
    pub num_effects: Vec<NumEffect<LiftedAtom>>,
    pub cost: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct GroundAction {
    pub name: Sym,
    pub args: Vec<Sym>,
    pub pre: Vec<Cond<Atom>>,
    pub add: Vec<Atom>,
    pub del: Vec<Atom>,
    pub num_effects: Vec<NumEffect<Atom>>,
    pub cost: f64,
}

impl GroundAction {
    pub fn call(&self) -> ActionCall {
        Atom {
            name: self.name.clone(),
            args: self.args.clone(),
        }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.call())
    }
}

pub const ROOT_TYPE: &str = "object";

/// Single-inheritance type tree rooted at `object`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct TypeHierarchy {
    /// Declaration order is kept for printing.
    pub parents: Vec<(Sym, Sym)>,
}

impl TypeHierarchy {
    pub fn is_declared(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.parents.iter().any(|(t, _)| &**t == ty)
    }

    pub fn parent(&self, ty: &str) -> Option<&Sym> {
        self.parents.iter().find(|(t, _)| &**t == ty).map(|(_, p)| p)
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        // bounded walk: a malformed cycle cannot loop forever
        for _ in 0..=self.parents.len() + 1 {
            if cur == ancestor {
                return true;
            }
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return ancestor == ROOT_TYPE,
            }
        }
        false
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TypedObject {
    pub name: Sym,
    pub ty: Sym,
}

#[derive(Clone, PartialEq, Debug)]
pub struct DomainModel {
    pub name: Sym,
    pub requirements: Vec<Sym>,
    pub types: TypeHierarchy,
    pub constants: Vec<TypedObject>,
    pub predicates: Vec<PredicateSchema>,
    pub functions: Vec<FunctionSchema>,
    pub actions: Vec<ActionSchema>,
}

impl DomainModel {
    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| &*p.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSchema> {
        self.functions.iter().find(|p| &*p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| &*a.name == name)
    }

    /// Predicates that no action adds or deletes.
    pub fn static_predicates(&self) -> Vec<Sym> {
        self.predicates
            .iter()
            .filter(|p| {
                !self.actions.iter().any(|a| {
                    a.add.iter().chain(&a.del).any(|at| at.name == p.name)
                })
            })
            .map(|p| p.name.clone())
            .collect()
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct ProblemModel {
    pub name: Sym,
    pub domain_name: Sym,
    pub objects: Vec<TypedObject>,
    pub init: crate::pddl::State,
    pub goals: Vec<Cond<Atom>>,
}

impl ProblemModel {
    pub fn object_type(&self, name: &str) -> Option<&Sym> {
        self.objects.iter().find(|o| &*o.name == name).map(|o| &o.ty)
    }

    /// Objects of `ty` (including subtypes) in declaration order.
    pub fn objects_of<'a>(
        &'a self,
        types: &'a TypeHierarchy,
        ty: &'a str,
    ) -> impl Iterator<Item = &'a Sym> + 'a {
        self.objects
            .iter()
            .filter(move |o| types.is_subtype(&o.ty, ty))
            .map(|o| &o.name)
    }
}

fn write_typed_list(f: &mut fmt::Formatter<'_>, items: &[(Sym, Sym)]) -> fmt::Result {
    // groups consecutive items sharing a type: `a b - t c - u`
    let mut i = 0;
    let mut first = true;
    while i < items.len() {
        let ty = &items[i].1;
        let mut j = i;
        while j < items.len() && items[j].1 == *ty {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            write!(f, "{}", items[j].0)?;
            j += 1;
        }
        write!(f, " - {ty}")?;
        i = j;
    }
    Ok(())
}

fn params_pairs(params: &[TypedParam]) -> Vec<(Sym, Sym)> {
    params
        .iter()
        .map(|p| (p.name.clone(), p.ty.clone()))
        .collect()
}

fn write_conjunction<T: fmt::Display>(f: &mut fmt::Formatter<'_>, items: &[T]) -> fmt::Result {
    write!(f, "(and")?;
    for it in items {
        write!(f, " {it}")?;
    }
    write!(f, ")")
}

impl fmt::Display for DomainModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            write!(f, "  (:requirements")?;
            for r in &self.requirements {
                write!(f, " {r}")?;
            }
            writeln!(f, ")")?;
        }
        if !self.types.parents.is_empty() {
            write!(f, "  (:types ")?;
            write_typed_list(f, &self.types.parents)?;
            writeln!(f, ")")?;
        }
        if !self.constants.is_empty() {
            write!(f, "  (:constants ")?;
            let pairs: Vec<_> = self
                .constants
                .iter()
                .map(|o| (o.name.clone(), o.ty.clone()))
                .collect();
            write_typed_list(f, &pairs)?;
            writeln!(f, ")")?;
        }
        for (kw, sigs) in [(":predicates", &self.predicates), (":functions", &self.functions)] {
            if sigs.is_empty() {
                continue;
            }
            write!(f, "  ({kw}")?;
            for s in sigs {
                write!(f, "\n    ({}", s.name)?;
                if !s.params.is_empty() {
                    write!(f, " ")?;
                    write_typed_list(f, &params_pairs(&s.params))?;
                }
                write!(f, ")")?;
            }
            writeln!(f, ")")?;
        }
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            write!(f, "    :parameters (")?;
            write_typed_list(f, &params_pairs(&a.params))?;
            writeln!(f, ")")?;
            write!(f, "    :precondition ")?;
            write_conjunction(f, &a.pre)?;
            write!(f, "\n    :effect (and")?;
            for at in &a.add {
                write!(f, " {at}")?;
            }
            for at in &a.del {
                write!(f, " (not {at})")?;
            }
            for e in &a.num_effects {
                write!(f, " {e}")?;
            }
            if a.cost != 1.0 {
                write!(f, " (increase (total-cost) {})", a.cost)?;
            }
            writeln!(f, "))")?;
        }
        writeln!(f, ")")
    }
}

impl fmt::Display for ProblemModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain_name)?;
        if !self.objects.is_empty() {
            write!(f, "  (:objects ")?;
            let pairs: Vec<_> = self
                .objects
                .iter()
                .map(|o| (o.name.clone(), o.ty.clone()))
                .collect();
            write_typed_list(f, &pairs)?;
            writeln!(f, ")")?;
        }
        write!(f, "  (:init")?;
        for a in &self.init.atoms {
            write!(f, "\n    {a}")?;
        }
        for (t, v) in &self.init.fluents {
            write!(f, "\n    (= {t} {v})")?;
        }
        writeln!(f, ")")?;
        write!(f, "  (:goal ")?;
        write_conjunction(f, &self.goals)?;
        writeln!(f, "))")
    }
}

/// Objects grouped by exact type, for generators that pick from a pool.
pub fn objects_by_type(objects: &[TypedObject]) -> BTreeMap<Sym, Vec<Sym>> {
    let mut out: BTreeMap<Sym, Vec<Sym>> = BTreeMap::new();
    for o in objects {
        out.entry(o.ty.clone()).or_default().push(o.name.clone());
    }
    out
}
