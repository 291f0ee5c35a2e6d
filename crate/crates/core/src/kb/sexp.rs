//! A minimal s-expression reader: lists, atoms and double-quoted strings,
//! with `;` line comments. Every node remembers where it started.

use std::fmt;

use super::{ParseError, ParseErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String, Pos),
    Str(String, Pos),
    List(Vec<Sexp>, Pos),
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom(_, p) | Sexp::Str(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Sexp::Atom(..) => "atom",
            Sexp::Str(..) => "string",
            Sexp::List(..) => "list",
        }
    }
}

struct Reader<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Reader {
            chars: text.chars().peekable(),
            pos: Pos { line: 1, column: 1 },
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while let Some(c) = self.bump() {
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn error(&self, at: Pos, message: impl Into<String>) -> ParseError {
        ParseError::new(ParseErrorKind::Syntax, at, message)
    }

    fn read(&mut self) -> Result<Option<Sexp>, ParseError> {
        self.skip_trivia();
        let start = self.pos;
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
                        None => return Err(self.error(start, "unclosed `(`")),
                        Some(')') => {
                            self.bump();
                            return Ok(Some(Sexp::List(items, start)));
                        }
                        Some(_) => items.push(self.read()?.expect("input is not exhausted")),
                    }
                }
            }
            ')' => Err(self.error(start, "unexpected `)`")),
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        None => return Err(self.error(start, "unterminated string")),
                        Some('"') => return Ok(Some(Sexp::Str(s, start))),
                        Some('\\') => {
                            let at = self.pos;
                            match self.bump() {
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some(other) => return Err(self.error(at, format!("unknown escape `\\{other}`"))),
                                None => return Err(self.error(start, "unterminated string")),
                            }
                        }
                        Some(c) => s.push(c),
                    }
                }
            }
            _ => {
                let mut s = String::new();
                while let Some(&c) = self.chars.peek() {
                    if c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';') {
                        break;
                    }
                    s.push(c);
                    self.bump();
                }
                Ok(Some(Sexp::Atom(s, start)))
            }
        }
    }
}

/// Reads every top-level form in `text`.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut reader = Reader::new(text);
    let mut forms = Vec::new();
    while let Some(form) = reader.read()? {
        forms.push(form);
    }
    Ok(forms)
}

/// Quotes `s` so that [`read_all`] reads it back unchanged.
pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// True when `s` reads back as a single atom.
pub fn is_atom(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | ';'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_nested_lists_with_positions() {
        let forms = read_all("; header\n(a (b \"c d\")\n  e)").unwrap();
        assert_eq!(forms.len(), 1);
        let Sexp::List(items, pos) = &forms[0] else { panic!() };
        assert_eq!(*pos, Pos { line: 2, column: 1 });
        assert_eq!(items[0], Sexp::Atom("a".into(), Pos { line: 2, column: 2 }));
        assert_eq!(items[2].pos(), Pos { line: 3, column: 3 });
        let Sexp::List(inner, _) = &items[1] else { panic!() };
        assert_eq!(inner[1], Sexp::Str("c d".into(), Pos { line: 2, column: 7 }));
    }

    #[test]
    fn reports_unbalanced_input() {
        let e = read_all("(a (b)").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = read_all("(a))").unwrap_err();
        assert_eq!((e.line, e.column), (1, 4));
        let e = read_all("\n  \"open").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
    }

    #[test]
    fn quoting_round_trips() {
        for s in [
            "plain",
            "with \"quotes\"",
            "back\\slash",
            "Wie weit? – 200 km ≤ Θ",
            "two\nlines",
        ] {
            let forms = read_all(&quote(s)).unwrap();
            assert_eq!(forms, vec![Sexp::Str(s.to_string(), Pos { line: 1, column: 1 })]);
        }
    }
}
