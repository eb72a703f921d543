//! Minimal s-expression reader shared by the formula parser and the SMT model parser.

use thiserror::Error;

use crate::formula::Int;

/// Line/column position, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    /// Bare or `|`-quoted symbol.
    Sym(String, Pos),
    Int(Int, Pos),
    List(Vec<Sexpr>, Pos),
}

impl Sexpr {
    pub fn pos(&self) -> Pos {
        match self {
            Sexpr::Sym(_, p) | Sexpr::Int(_, p) | Sexpr::List(_, p) => *p,
        }
    }

    pub fn as_sym(&self) -> Option<&str> {
        match self {
            Sexpr::Sym(s, _) => Some(s),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{pos}: {msg}")]
pub struct SexprError {
    pub pos: Pos,
    pub msg: String,
}

fn err(pos: Pos, msg: impl Into<String>) -> SexprError {
    SexprError {
        pos,
        msg: msg.into(),
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            line: 1,
            col: 1,
        }
    }

    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn read(&mut self) -> Result<Option<Sexpr>, SexprError> {
        self.skip_trivia();
        let pos = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        match c {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.chars.peek() {
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexpr::List(items, pos)));
                        }
                        Some(_) => match self.read()? {
                            Some(item) => items.push(item),
                            None => return Err(err(self.pos(), "unclosed `(`")),
                        },
                        None => return Err(err(pos, "unclosed `(`")),
                    }
                }
            }
            ')' => Err(err(pos, "unexpected `)`")),
            '|' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('|') => return Ok(Some(Sexpr::Sym(s, pos))),
                        Some(c) => s.push(c),
                        None => return Err(err(pos, "unclosed `|` symbol")),
                    }
                }
            }
            _ => {
                let mut tok = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' || c == '|' {
                        break;
                    }
                    tok.push(c);
                    self.bump();
                }
                debug_assert!(!tok.is_empty());
                if tok_is_int(&tok) {
                    match tok.parse::<Int>() {
                        Ok(v) => Ok(Some(Sexpr::Int(v, pos))),
                        Err(_) => Err(err(pos, format!("integer literal `{tok}` out of range"))),
                    }
                } else {
                    Ok(Some(Sexpr::Sym(tok, pos)))
                }
            }
        }
    }
}

fn tok_is_int(tok: &str) -> bool {
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// Reads every top-level s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexpr>, SexprError> {
    let mut reader = Reader::new(text);
    let mut out = Vec::new();
    while let Some(e) = reader.read()? {
        out.push(e);
    }
    Ok(out)
}

/// Reads exactly one s-expression; trailing content is an error.
pub fn parse_one(text: &str) -> Result<Sexpr, SexprError> {
    let mut reader = Reader::new(text);
    let first = reader
        .read()?
        .ok_or_else(|| err(reader.pos(), "empty input"))?;
    reader.skip_trivia();
    if let Some(e) = reader.read()? {
        return Err(err(e.pos(), "trailing content after expression"));
    }
    Ok(first)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists() {
        let e = parse_one("(and (<= x 3) (or))").unwrap();
        match e {
            Sexpr::List(items, _) => {
                assert_eq!(items.len(), 3);
                assert_eq!(items[0].as_sym(), Some("and"));
            }
            _ => panic!("expected list"),
        }
    }

    #[test]
    fn reads_negative_integers_and_comments() {
        let es = parse_all("; header\n-42 x-y |z1'|").unwrap();
        assert_eq!(es.len(), 3);
        assert!(matches!(es[0], Sexpr::Int(-42, _)));
        assert_eq!(es[1].as_sym(), Some("x-y"));
        assert_eq!(es[2].as_sym(), Some("z1'"));
    }

    #[test]
    fn rejects_unbalanced_input() {
        assert!(parse_one("(and (or)").is_err());
        assert!(parse_one(")").is_err());
        assert!(parse_one("x y").is_err());
    }

    #[test]
    fn reports_positions() {
        let e = parse_one("\n  (= x 1)").unwrap();
        assert_eq!(e.pos(), Pos { line: 2, col: 3 });
    }
}
