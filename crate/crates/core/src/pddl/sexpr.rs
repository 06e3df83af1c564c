//! Tokenizer and s-expression reader shared by the PDDL and trace parsers.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Pos),
    List(Vec<SExpr>, Pos),
}

impl SExpr {
    pub fn pos(&self) -> Pos {
        match self {
            SExpr::Atom(_, p) | SExpr::List(_, p) => *p,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// First element of a list when it is an atom, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(SExpr::as_atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub msg: String,
}

/// Reads every top-level expression in `text`. Symbols are lowercased; `;`
/// starts a comment running to the end of the line.
pub fn read_all(text: &str) -> Result<Vec<SExpr>, SyntaxError> {
    read_all_with(text, true)
}

/// Like [`read_all`], optionally keeping the case of symbols.
pub fn read_all_with(text: &str, lowercase: bool) -> Result<Vec<SExpr>, SyntaxError> {
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let mut chars = text.chars().peekable();

    while let Some(&c) = chars.peek() {
        let here = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
                continue;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
                continue;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
                continue;
            }
            '(' => {
                chars.next();
                col += 1;
                stack.push((Vec::new(), here));
            }
            ')' => {
                chars.next();
                col += 1;
                let (items, start) = stack.pop().ok_or(SyntaxError {
                    pos: here,
                    msg: "unbalanced `)`".into(),
                })?;
                let list = SExpr::List(items, start);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(list),
                    None => out.push(list),
                }
            }
            _ => {
                let mut sym = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    if lowercase {
                        sym.extend(c.to_lowercase());
                    } else {
                        sym.push(c);
                    }
                    chars.next();
                    col += 1;
                }
                let atom = SExpr::Atom(sym, here);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(atom),
                    None => out.push(atom),
                }
            }
        }
    }

    if let Some((_, start)) = stack.last() {
        return Err(SyntaxError {
            pos: *start,
            msg: "unterminated list".into(),
        });
    }
    Ok(out)
}
