//! Answer scripts: one directive per line, replayed against a session.
//!
//! ```text
//! # comments and blank lines are ignored
//! volunteer basin_setting passive_margin
//! answer dist less_equal_200 1.0
//! unknown
//! irrelevant
//! ```

use std::fmt;

use thiserror::Error;

use crate::engine::{Response, Session};
use crate::evidence::Belief;

#[derive(Debug, Clone, PartialEq)]
pub enum Directive {
    Answer {
        attribute: String,
        value: String,
        confidence: Belief,
    },
    Volunteer {
        attribute: String,
        value: String,
        confidence: Belief,
    },
    Unknown,
    Irrelevant,
}

impl fmt::Display for Directive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut triple = |word: &str, a: &str, v: &str, c: Belief| {
            if c == Belief::ONE {
                write!(f, "{word} {a} {v}")
            } else {
                write!(f, "{word} {a} {v} {}", c.value())
            }
        };
        match self {
            Directive::Answer {
                attribute,
                value,
                confidence,
            } => triple("answer", attribute, value, *confidence),
            Directive::Volunteer {
                attribute,
                value,
                confidence,
            } => triple("volunteer", attribute, value, *confidence),
            Directive::Unknown => f.write_str("unknown"),
            Directive::Irrelevant => f.write_str("irrelevant"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptLine {
    pub line: usize,
    pub directive: Directive,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptError {
    pub line: usize,
    pub message: String,
}

pub fn parse_script(text: &str) -> Result<Vec<ScriptLine>, ScriptError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ScriptError { line, message };
        let words: Vec<&str> = content.split_whitespace().collect();
        let directive = match words.as_slice() {
            ["unknown"] => Directive::Unknown,
            ["irrelevant"] => Directive::Irrelevant,
            [word @ ("answer" | "volunteer"), attribute, value, rest @ ..] => {
                let confidence = match rest {
                    [] => Belief::ONE,
                    [c] => c
                        .parse::<f64>()
                        .ok()
                        .and_then(|c| Belief::new(c).ok())
                        .ok_or_else(|| err(format!("confidence `{c}` is not a number in [0, 1]")))?,
                    _ => return Err(err(format!("too many words for `{word}`"))),
                };
                let (attribute, value) = (attribute.to_string(), value.to_string());
                if *word == "answer" {
                    Directive::Answer {
                        attribute,
                        value,
                        confidence,
                    }
                } else {
                    Directive::Volunteer {
                        attribute,
                        value,
                        confidence,
                    }
                }
            }
            [word @ ("answer" | "volunteer"), ..] => {
                return Err(err(format!("`{word}` needs an attribute and a value")))
            }
            [word, ..] => return Err(err(format!("unknown directive `{word}`"))),
            [] => unreachable!("blank lines are skipped"),
        };
        out.push(ScriptLine { line, directive });
    }
    Ok(out)
}

/// Applies one directive. `unknown` and `irrelevant` refer to the pending
/// question.
pub fn apply(session: &mut Session, step: &ScriptLine) -> Result<(), ScriptError> {
    let err = |message: String| ScriptError {
        line: step.line,
        message,
    };
    let pending = || {
        session
            .pending_question()
            .map(|q| q.attribute.clone())
            .ok_or_else(|| err("no question is pending".to_string()))
    };
    let result = match &step.directive {
        Directive::Answer {
            attribute,
            value,
            confidence,
        } => session.submit_answer(attribute, Response::Value(value.clone()), *confidence),
        Directive::Volunteer {
            attribute,
            value,
            confidence,
        } => session.volunteer(&[(attribute.clone(), value.clone(), *confidence)]),
        Directive::Unknown => {
            let a = pending()?;
            session.submit_answer(&a, Response::Unknown, Belief::ONE)
        }
        Directive::Irrelevant => {
            let a = pending()?;
            session.submit_answer(&a, Response::Irrelevant, Belief::ONE)
        }
    };
    result.map_err(|e| err(e.to_string()))
}

/// Replays a whole script, then lets the session run to its end.
pub fn run_script(session: &mut Session, script: &[ScriptLine]) -> Result<(), ScriptError> {
    for step in script {
        apply(session, step)?;
    }
    session.finish();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_directives() {
        let s = parse_script("# start\nvolunteer a x\n\nanswer b y 0.5  # why not\nunknown\nirrelevant\n").unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].line, 2);
        assert_eq!(s[1].line, 4);
        assert_eq!(
            s[1].directive,
            Directive::Answer {
                attribute: "b".into(),
                value: "y".into(),
                confidence: Belief::new(0.5).unwrap()
            }
        );
        assert_eq!(s[2].directive, Directive::Unknown);
        assert_eq!(s[1].directive.to_string(), "answer b y 0.5");
        assert_eq!(s[0].directive.to_string(), "volunteer a x");
    }

    #[test]
    fn reports_the_offending_line() {
        assert_eq!(parse_script("unknown\nask a b").unwrap_err().line, 2);
        assert_eq!(parse_script("\n\nanswer a b 1.5").unwrap_err().line, 3);
        assert_eq!(parse_script("answer a").unwrap_err().line, 1);
        assert_eq!(parse_script("answer a b 1 2").unwrap_err().line, 1);
    }
}
