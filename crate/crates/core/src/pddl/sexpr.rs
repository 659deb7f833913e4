//! Minimal s-expression reader for PDDL text.
//!
//! Identifiers are folded to lower case. `;` starts a comment that runs to
//! the end of the line.

use std::fmt;

use super::PddlError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
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

    /// Head keyword of a list, e.g. `:action` for `(:action move ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()
            .and_then(|l| l.first())
            .and_then(SExpr::as_atom)
    }

    fn describe(&self) -> String {
        match self {
            SExpr::Atom(s, _) => format!("`{s}`"),
            SExpr::List(..) => "a list".to_string(),
        }
    }

    pub(crate) fn expect_atom(&self, expected: &str) -> Result<&str, PddlError> {
        self.as_atom()
            .ok_or_else(|| syntax(self.pos(), expected, "a list"))
    }

    pub(crate) fn expect_list(&self, expected: &str) -> Result<&[SExpr], PddlError> {
        self.as_list()
            .ok_or_else(|| syntax(self.pos(), expected, &self.describe()))
    }
}

pub(crate) fn syntax(pos: Pos, expected: &str, found: &str) -> PddlError {
    PddlError::Syntax {
        line: pos.line,
        col: pos.col,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

pub(crate) fn unexpected(expr: &SExpr, expected: &str) -> PddlError {
    syntax(expr.pos(), expected, &expr.describe())
}

#[derive(Debug, PartialEq)]
enum Token {
    Open,
    Close,
    Word(String),
}

fn tokenize(text: &str) -> Vec<(Token, Pos)> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 0;
    let mut word = String::new();
    let mut word_pos = Pos { line, col };
    let mut in_comment = false;

    let flush = |word: &mut String, pos: Pos, out: &mut Vec<(Token, Pos)>| {
        if !word.is_empty() {
            out.push((Token::Word(word.to_ascii_lowercase()), pos));
            word.clear();
        }
    };

    for ch in text.chars() {
        col += 1;
        let here = Pos { line, col };
        if ch == '\n' {
            flush(&mut word, word_pos, &mut out);
            in_comment = false;
            line += 1;
            col = 0;
            continue;
        }
        if in_comment {
            continue;
        }
        match ch {
            ';' => {
                flush(&mut word, word_pos, &mut out);
                in_comment = true;
            }
            '(' => {
                flush(&mut word, word_pos, &mut out);
                out.push((Token::Open, here));
            }
            ')' => {
                flush(&mut word, word_pos, &mut out);
                out.push((Token::Close, here));
            }
            c if c.is_whitespace() => flush(&mut word, word_pos, &mut out),
            c => {
                if word.is_empty() {
                    word_pos = here;
                }
                word.push(c);
            }
        }
    }
    flush(&mut word, word_pos, &mut out);
    out
}

/// Parses every top-level expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<SExpr>, PddlError> {
    let tokens = tokenize(text);
    let mut stack: Vec<(Vec<SExpr>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut last = Pos { line: 1, col: 0 };

    for (tok, pos) in tokens {
        last = pos;
        match tok {
            Token::Open => stack.push((Vec::new(), pos)),
            Token::Close => {
                let (items, open) = stack
                    .pop()
                    .ok_or_else(|| syntax(pos, "`(` or end of input", "`)`"))?;
                let expr = SExpr::List(items, open);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(expr),
                    None => top.push(expr),
                }
            }
            Token::Word(w) => {
                let expr = SExpr::Atom(w, pos);
                match stack.last_mut() {
                    Some((parent, _)) => parent.push(expr),
                    None => top.push(expr),
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err(syntax(last, "`)`", "end of input"));
    }
    Ok(top)
}

/// Parses exactly one top-level expression.
pub fn parse_one(text: &str) -> Result<SExpr, PddlError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().unwrap()),
        0 => Err(syntax(
            Pos { line: 1, col: 1 },
            "`(define ...)`",
            "end of input",
        )),
        _ => Err(unexpected(&all[1], "end of input")),
    }
}
