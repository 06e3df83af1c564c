//! Line-oriented trace corpus format. See `docs/trace-format.md` for the
//! grammar. Each record is one s-expression on its own line; steps carry the
//! difference to the previous state.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{Step, Trace};
use crate::pddl::sexpr::{read_all_with, SExpr};
use crate::pddl::{sym, Atom, State};

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
}

fn malformed(line: usize, msg: impl Into<String>) -> TraceIoError {
    TraceIoError::Malformed {
        line,
        msg: msg.into(),
    }
}

pub fn write_traces(path: impl AsRef<Path>, traces: &[Trace]) -> Result<(), TraceIoError> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    write_traces_to(&mut f, traces)?;
    f.flush()?;
    Ok(())
}

pub fn write_traces_to(w: &mut impl Write, traces: &[Trace]) -> io::Result<()> {
    for t in traces {
        w.write_all(format_trace(t).as_bytes())?;
    }
    Ok(())
}

fn format_trace(t: &Trace) -> String {
    let mut out = String::from("(trace");
    if let Some(d) = &t.domain {
        let _ = write!(out, " (domain {d})");
    }
    if let Some(c) = &t.label {
        let _ = write!(out, " (class {c})");
    }
    if let Some(s) = t.seed {
        let _ = write!(out, " (seed {s})");
    }
    let _ = writeln!(out, " (steps {}))", t.steps.len());

    out.push_str("(init (atoms");
    for a in &t.init.atoms {
        let _ = write!(out, " {a}");
    }
    out.push_str(") (fluents");
    for (k, v) in &t.init.fluents {
        let _ = write!(out, " (= {k} {v})");
    }
    out.push_str("))\n");

    let mut prev = &t.init;
    for (i, step) in t.steps.iter().enumerate() {
        let _ = write!(out, "(step {}", i + 1);
        match &step.action {
            Some(a) => {
                let _ = write!(out, " (action {a})");
            }
            None => out.push_str(" no-op"),
        }
        out.push_str(" (add");
        for a in step.state.atoms.difference(&prev.atoms) {
            let _ = write!(out, " {a}");
        }
        out.push_str(") (del");
        for a in prev.atoms.difference(&step.state.atoms) {
            let _ = write!(out, " {a}");
        }
        out.push(')');
        let set: Vec<_> = step
            .state
            .fluents
            .iter()
            .filter(|(k, v)| prev.fluents.get(*k).map_or(true, |p| p.to_bits() != v.to_bits()))
            .collect();
        if !set.is_empty() {
            out.push_str(" (set");
            for (k, v) in set {
                let _ = write!(out, " (= {k} {v})");
            }
            out.push(')');
        }
        let unset: Vec<_> = prev
            .fluents
            .keys()
            .filter(|k| !step.state.fluents.contains_key(*k))
            .collect();
        if !unset.is_empty() {
            out.push_str(" (unset");
            for k in unset {
                let _ = write!(out, " {k}");
            }
            out.push(')');
        }
        out.push_str(")\n");
        prev = &step.state;
    }
    out.push_str("(end)\n");
    out
}

pub fn read_traces(path: impl AsRef<Path>) -> Result<Vec<Trace>, TraceIoError> {
    parse_traces(&fs::read_to_string(path)?)
}

enum Expect {
    Header,
    Init,
    Step,
}

pub fn parse_traces(text: &str) -> Result<Vec<Trace>, TraceIoError> {
    let mut out = Vec::new();
    let mut cur: Option<(Trace, usize)> = None;
    let mut expect = Expect::Header;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.trim();
        if body.is_empty() || body.starts_with(';') {
            continue;
        }
        last_line = line;
        let exprs = read_all_with(body, false).map_err(|e| malformed(line, e.msg))?;
        let [rec] = exprs.as_slice() else {
            return Err(malformed(line, "expected exactly one record per line"));
        };
        let items = rec
            .as_list()
            .ok_or_else(|| malformed(line, "record must be a list"))?;
        let head = rec.head().unwrap_or("");
        match (&expect, head) {
            (Expect::Header, "trace") => {
                let (t, n) = parse_header(&items[1..], line)?;
                cur = Some((t, n));
                expect = Expect::Init;
            }
            (Expect::Init, "init") => {
                let (t, _) = cur.as_mut().expect("header read");
                t.init = parse_init(&items[1..], line)?;
                expect = Expect::Step;
            }
            (Expect::Step, "step") => {
                let (t, _) = cur.as_mut().expect("header read");
                let step = parse_step(&items[1..], t, line)?;
                t.steps.push(step);
            }
            (Expect::Step, "end") => {
                let (t, n) = cur.take().expect("header read");
                if t.steps.len() != n {
                    return Err(malformed(
                        line,
                        format!("header declares {n} steps, found {}", t.steps.len()),
                    ));
                }
                out.push(t);
                expect = Expect::Header;
            }
            (Expect::Header, h) => return Err(malformed(line, format!("expected `trace`, found `{h}`"))),
            (Expect::Init, h) => return Err(malformed(line, format!("expected `init`, found `{h}`"))),
            (Expect::Step, h) => {
                return Err(malformed(line, format!("expected `step` or `end`, found `{h}`")))
            }
        }
    }
    if cur.is_some() {
        return Err(malformed(last_line, "truncated trace: missing `(end)`"));
    }
    Ok(out)
}

fn field<'a>(items: &'a [SExpr], key: &str) -> Option<&'a [SExpr]> {
    items
        .iter()
        .find(|e| e.head() == Some(key))
        .and_then(|e| e.as_list())
        .map(|l| &l[1..])
}

fn single_atom<'a>(items: &'a [SExpr], key: &str, line: usize) -> Result<Option<&'a str>, TraceIoError> {
    match field(items, key) {
        None => Ok(None),
        Some([v]) => v
            .as_atom()
            .map(Some)
            .ok_or_else(|| malformed(line, format!("`{key}` takes a symbol"))),
        Some(_) => Err(malformed(line, format!("`{key}` takes exactly one value"))),
    }
}

fn parse_header(items: &[SExpr], line: usize) -> Result<(Trace, usize), TraceIoError> {
    let mut t = Trace::default();
    t.domain = single_atom(items, "domain", line)?.map(str::to_owned);
    t.label = single_atom(items, "class", line)?.map(str::to_owned);
    t.seed = single_atom(items, "seed", line)?
        .map(|s| s.parse().map_err(|_| malformed(line, format!("bad seed `{s}`"))))
        .transpose()?;
    let n = single_atom(items, "steps", line)?
        .ok_or_else(|| malformed(line, "header lacks `(steps n)`"))?;
    let n = n
        .parse()
        .map_err(|_| malformed(line, format!("bad step count `{n}`")))?;
    Ok((t, n))
}

fn parse_atom(e: &SExpr, line: usize) -> Result<Atom, TraceIoError> {
    let items = e
        .as_list()
        .ok_or_else(|| malformed(line, "expected an atom `(name args...)`"))?;
    let mut syms = items.iter().map(|x| {
        x.as_atom()
            .map(sym)
            .ok_or_else(|| malformed(line, "atom arguments must be symbols"))
    });
    let name = syms
        .next()
        .ok_or_else(|| malformed(line, "empty atom"))??;
    Ok(Atom {
        name,
        args: syms.collect::<Result<_, _>>()?,
    })
}

fn parse_assign(e: &SExpr, line: usize) -> Result<(Atom, f64), TraceIoError> {
    match e.as_list() {
        Some([eq, term, val]) if eq.as_atom() == Some("=") => {
            let v = val
                .as_atom()
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| malformed(line, "fluent value must be a number"))?;
            Ok((parse_atom(term, line)?, v))
        }
        _ => Err(malformed(line, "expected `(= (f args...) value)`")),
    }
}

fn parse_init(items: &[SExpr], line: usize) -> Result<State, TraceIoError> {
    let mut s = State::new();
    for a in field(items, "atoms").unwrap_or(&[]) {
        s.atoms.insert(parse_atom(a, line)?);
    }
    for f in field(items, "fluents").unwrap_or(&[]) {
        let (k, v) = parse_assign(f, line)?;
        s.fluents.insert(k, v);
    }
    Ok(s)
}

fn parse_step(items: &[SExpr], t: &Trace, line: usize) -> Result<Step, TraceIoError> {
    let expected = t.steps.len() + 1;
    match items.first().and_then(SExpr::as_atom) {
        Some(n) if n.parse::<usize>().ok() == Some(expected) => {}
        _ => return Err(malformed(line, format!("expected step index {expected}"))),
    }
    let action = match items.get(1) {
        Some(SExpr::Atom(s, _)) if s == "no-op" => None,
        Some(e) if e.head() == Some("action") => match e.as_list() {
            Some([_, a]) => Some(parse_atom(a, line)?),
            _ => return Err(malformed(line, "`action` takes one atom")),
        },
        _ => return Err(malformed(line, "expected `(action ...)` or `no-op`")),
    };
    let mut state = t.steps.last().map_or(&t.init, |s| &s.state).clone();
    for a in field(items, "del").unwrap_or(&[]) {
        state.atoms.remove(&parse_atom(a, line)?);
    }
    for a in field(items, "add").unwrap_or(&[]) {
        state.atoms.insert(parse_atom(a, line)?);
    }
    for k in field(items, "unset").unwrap_or(&[]) {
        state.fluents.remove(&parse_atom(k, line)?);
    }
    for f in field(items, "set").unwrap_or(&[]) {
        let (k, v) = parse_assign(f, line)?;
        state.fluents.insert(k, v);
    }
    Ok(Step { action, state })
}
