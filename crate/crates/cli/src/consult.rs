//! Terminal consultations. Every answer-script directive is accepted at the
//! prompt, plus a few shorthands.

use std::io::{self, BufRead, Write};
use std::path::Path;

use evshell::engine::{Pending, Response, Session};
use evshell::evidence::Belief;
use evshell::report::frame_beliefs;
use evshell::script::{apply, parse_script};

use crate::commands::{prepare, print_report};
use crate::{Cli, Failure};

const HELP: &str = "\
  <value> [confidence]          answer the question (a value or its number)
  unknown                       skip the question
  irrelevant                    skip it and volunteer evidence instead
  answer <attr> <value> [c]     answer by name
  volunteer <attr> <value> [c]  offer evidence at any time
  show                          print current beliefs
  quit                          stop and print the report so far";

pub fn run(cli: &Cli, path: &Path) -> Result<u8, Failure> {
    let (compiled, policy) = prepare(cli, path)?;
    let mut session = Session::start(compiled, policy, &[]).map_err(|e| Failure::usage(e.to_string()))?;
    let stdin = io::stdin();
    let mut out = io::stdout();
    converse(&mut session, &mut stdin.lock(), &mut out).map_err(|e| Failure::environment(format!("terminal: {e}")))?;
    print_report(cli, &session)?;
    Ok(0)
}

/// Runs the dialogue until the session ends, the user quits, or input runs
/// out. At end of input the session is finished as a batch run would be.
pub fn converse<R: BufRead, W: Write>(session: &mut Session, input: &mut R, out: &mut W) -> io::Result<()> {
    let mut line_no = 0;
    let mut prompt = true;
    while !session.is_finished() {
        if prompt {
            match session.pending() {
                Some(Pending::Question(q)) => {
                    writeln!(out, "\n{}", q.query)?;
                    let options: Vec<String> = q
                        .values
                        .iter()
                        .enumerate()
                        .map(|(i, v)| format!("{}) {v}", i + 1))
                        .collect();
                    writeln!(out, "  {}", options.join("  "))?;
                }
                _ => writeln!(
                    out,
                    "\nVolunteer evidence as `<attribute> <value> [confidence]`, or press enter to go on."
                )?,
            }
        }
        prompt = true;
        write!(out, "> ")?;
        out.flush()?;

        let mut raw = String::new();
        if input.read_line(&mut raw)? == 0 {
            writeln!(out)?;
            session.finish();
            break;
        }
        line_no += 1;
        let line = raw.trim();
        if line.starts_with('#') {
            prompt = false;
            continue;
        }
        match line {
            "quit" | "exit" => {
                writeln!(out)?;
                break;
            }
            "help" => {
                writeln!(out, "{HELP}")?;
                continue;
            }
            "show" => {
                show(session, out)?;
                continue;
            }
            _ => {}
        }

        let first = line.split_whitespace().next().unwrap_or_default();
        let result = if matches!(first, "answer" | "volunteer" | "unknown" | "irrelevant") {
            parse_script(line).map_err(|e| e.message).and_then(|steps| {
                let mut step = steps.into_iter().next().expect("one directive per line");
                step.line = line_no;
                apply(session, &step).map_err(|e| e.message)
            })
        } else {
            shorthand(session, line)
        };
        if let Err(why) = result {
            writeln!(out, "  ! {why}")?;
        }
    }
    Ok(())
}

fn confidence(word: Option<&str>) -> Result<Belief, String> {
    match word {
        None => Ok(Belief::ONE),
        Some(w) => w
            .parse::<f64>()
            .ok()
            .and_then(|c| Belief::new(c).ok())
            .ok_or_else(|| format!("confidence `{w}` is not a number in [0, 1]")),
    }
}

fn shorthand(session: &mut Session, line: &str) -> Result<(), String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    match session.pending().cloned() {
        Some(Pending::Question(q)) => {
            let [value, rest @ ..] = words.as_slice() else {
                return Err("type a value, `unknown`, `irrelevant` or `help`".into());
            };
            if rest.len() > 1 {
                return Err("expected a value and an optional confidence".into());
            }
            let value = match value.parse::<usize>() {
                Ok(i) if (1..=q.values.len()).contains(&i) => q.values[i - 1].clone(),
                _ => value.to_string(),
            };
            let c = confidence(rest.first().copied())?;
            session
                .submit_answer(&q.attribute, Response::Value(value), c)
                .map_err(|e| e.to_string())
        }
        _ => {
            let evidence = match words.as_slice() {
                [] => vec![],
                [a, v] => vec![(a.to_string(), v.to_string(), Belief::ONE)],
                [a, v, c] => vec![(a.to_string(), v.to_string(), confidence(Some(c))?)],
                _ => return Err("expected `<attribute> <value> [confidence]`".into()),
            };
            session.volunteer(&evidence).map_err(|e| e.to_string())
        }
    }
}

fn show<W: Write>(session: &Session, out: &mut W) -> io::Result<()> {
    for m in session.masses() {
        let f = frame_beliefs(m);
        writeln!(out, "  {}  (ignorance {:.3})", f.frame, f.ignorance)?;
        for h in &f.hypotheses {
            writeln!(out, "    {:<24} Bel {}  Pl {}", h.value, h.belief, h.plausibility)?;
        }
    }
    Ok(())
}
