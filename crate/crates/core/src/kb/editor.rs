//! Interactive rule editor.
//!
//! Prompts for the premises, the conclusions, a 1-10 ranking per conclusion
//! and a 1-10 relevance, then appends the rule in ranked form. Bad input is
//! reported and asked for again; only end of input stops the dialogue.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use thiserror::Error;

use super::model::*;
use crate::evidence::{mass_from_rankings, Frame};

#[derive(Debug, Error)]
pub enum EditorError {
    #[error("input ended before the rule was complete")]
    Aborted,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Loose key for matching typed names: case, spaces and underscores ignored,
/// so `work force`, `workforce` and `work_force` all match.
fn key(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .flat_map(char::to_lowercase)
        .collect()
}

fn find_attr<'a>(kb: &'a KnowledgeBase, typed: &str) -> Option<&'a AttributeDecl> {
    let k = key(typed);
    kb.attributes.iter().find(|a| key(&a.name) == k)
}

fn find_value<'a>(decl: &'a AttributeDecl, typed: &str) -> Option<&'a str> {
    let k = key(typed);
    decl.values.iter().find(|v| key(v) == k).map(String::as_str)
}

struct Dialogue<'a, R, W> {
    input: &'a mut R,
    out: &'a mut W,
}

impl<R: BufRead, W: Write> Dialogue<'_, R, W> {
    fn line(&mut self) -> Result<String, EditorError> {
        let mut buf = String::new();
        if self.input.read_line(&mut buf)? == 0 {
            return Err(EditorError::Aborted);
        }
        Ok(buf.trim().to_string())
    }

    fn say(&mut self, text: &str) -> Result<(), EditorError> {
        writeln!(self.out, "{text}")?;
        self.out.flush()?;
        Ok(())
    }

    fn complain(&mut self, text: &str) -> Result<(), EditorError> {
        self.say(&format!("  ! {text}"))
    }

    /// Reads lines until a blank one, keeping those `parse` accepts.
    fn entries<T>(&mut self, mut parse: impl FnMut(&str, &[T]) -> Result<T, String>) -> Result<Vec<T>, EditorError> {
        let mut items = Vec::new();
        loop {
            let line = self.line()?;
            if line.is_empty() {
                if items.is_empty() {
                    self.complain("at least one entry is needed")?;
                    continue;
                }
                return Ok(items);
            }
            match parse(&line, &items) {
                Ok(item) => items.push(item),
                Err(why) => self.complain(&format!("{why}; enter that line again"))?,
            }
        }
    }

    fn scale(&mut self, prompt: &str) -> Result<u8, EditorError> {
        loop {
            self.say(prompt)?;
            let line = self.line()?;
            match line.parse::<u8>() {
                Ok(v) if (1..=10).contains(&v) => return Ok(v),
                _ => self.complain(&format!("`{line}` is not a whole number from 1 to 10"))?,
            }
        }
    }
}

fn strip_not(line: &str) -> (bool, &str) {
    let t = line.trim_start();
    match t.split_once(char::is_whitespace) {
        Some((w, rest)) if w.eq_ignore_ascii_case("not") => (true, rest.trim_start()),
        _ => (false, t),
    }
}

fn parse_premise(kb: &KnowledgeBase, line: &str) -> Result<EvidencePattern, String> {
    let (negated, body) = strip_not(line);
    let parts: Vec<&str> = body.split(',').map(str::trim).collect();
    let [attr, value] = parts[..] else {
        return Err("write `attribute, value`".into());
    };
    let decl = find_attr(kb, attr).ok_or_else(|| format!("unknown attribute `{attr}`"))?;
    let v = find_value(decl, value).ok_or_else(|| format!("`{value}` is not a value of `{}`", decl.name))?;
    Ok(EvidencePattern {
        attribute: decl.name.clone(),
        value: v.to_string(),
        negated,
    })
}

fn parse_conclusion(kb: &KnowledgeBase, line: &str, earlier: &[Conclusion]) -> Result<Conclusion, String> {
    let (negated, body) = strip_not(line);
    let mut parts = body.split(',').map(str::trim);
    let attr = parts.next().unwrap_or_default();
    let decl = find_attr(kb, attr).ok_or_else(|| format!("unknown attribute `{attr}`"))?;
    if !decl.is_verifiable() {
        return Err(format!("`{}` is askable; conclusions must be verifiable", decl.name));
    }
    if let Some(first) = earlier.first() {
        if first.attribute != decl.name {
            return Err(format!(
                "this rule already concludes `{}`; one rule concludes one attribute",
                first.attribute
            ));
        }
    }
    let mut named = Vec::new();
    for typed in parts {
        let v = find_value(decl, typed).ok_or_else(|| format!("`{typed}` is not a value of `{}`", decl.name))?;
        named.push(v);
    }
    if named.is_empty() {
        return Err("name at least one value after the attribute".into());
    }
    let values: Vec<String> = decl
        .values
        .iter()
        .filter(|v| named.contains(&v.as_str()) != negated)
        .cloned()
        .collect();
    if values.is_empty() || values.len() == decl.values.len() && negated {
        return Err("that negation leaves nothing to conclude".into());
    }
    Ok(Conclusion {
        attribute: decl.name.clone(),
        values,
    })
}

fn parse_rankings(line: &str, count: usize) -> Result<Vec<u8>, String> {
    let ranks: Vec<u8> = line
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u8>().ok().filter(|r| (1..=10).contains(r)))
        .collect::<Option<_>>()
        .ok_or_else(|| "rankings are whole numbers from 1 to 10".to_string())?;
    if ranks.len() != count {
        return Err(format!("expected {count} ranking(s), got {}", ranks.len()));
    }
    Ok(ranks)
}

/// Runs one editor dialogue and returns `kb` with the new rule appended.
pub fn editor_session<R: BufRead, W: Write>(
    input: &mut R,
    out: &mut W,
    kb: &KnowledgeBase,
) -> Result<KnowledgeBase, EditorError> {
    let mut d = Dialogue { input, out };

    d.say("Enter the attributes and values of the LHS pattern:")?;
    d.say("(separate attributes and values by a comma; one attribute-value pair per line)")?;
    let lhs = d.entries(|line, _: &[EvidencePattern]| parse_premise(kb, line))?;

    d.say("Enter the attributes and values of the RHS conclusions")?;
    d.say("(one conclusion per line; an attribute followed by a set of values separated by commas)")?;
    let conclusions = d.entries(|line, earlier: &[Conclusion]| parse_conclusion(kb, line, earlier))?;

    let ranks = loop {
        d.say("Enter the relative ranking for the conclusion on a scale 1-10.")?;
        let line = d.line()?;
        match parse_rankings(&line, conclusions.len()) {
            Ok(r) => break r,
            Err(why) => d.complain(&why)?,
        }
    };
    let relevance =
        d.scale("On a scale of 1-10 what is the relevance of this evidence in the overall reasoning process?")?;

    let mut next = kb.clone();
    let partition = match kb.partitions.as_slice() {
        [] => {
            next.partitions.push("main".to_string());
            "main".to_string()
        }
        [only] => only.clone(),
        many => loop {
            d.say(&format!("Partition for this rule ({}) [{}]:", many.join(", "), many[0]))?;
            let line = d.line()?;
            if line.is_empty() {
                break many[0].clone();
            }
            if let Some(p) = many.iter().find(|p| key(p) == key(&line)) {
                break p.clone();
            }
            d.complain(&format!("no partition named `{line}`"))?;
        },
    };
    let default_id = (1..)
        .map(|n| format!("rule-{n}"))
        .find(|id| kb.rule(id).is_none())
        .expect("unbounded");
    let id = loop {
        d.say(&format!("Rule name [{default_id}]:"))?;
        let line = d.line()?;
        let id = if line.is_empty() { default_id.clone() } else { line };
        if !super::sexp::is_atom(&id) {
            d.complain("a rule name cannot contain spaces, quotes, parentheses or `;`")?;
        } else if kb.rule(&id).is_some() {
            d.complain(&format!("rule `{id}` already exists"))?;
        } else {
            break id;
        }
    };

    let rule = Rule {
        id,
        partition,
        lhs,
        body: RuleBody::Ranked {
            relevance,
            conclusions: conclusions.into_iter().zip(ranks).collect(),
        },
    };
    if let Some(summary) = summarize(kb, &rule) {
        d.say(&summary)?;
    }
    next.rules.push(rule);
    Ok(next)
}

/// The rule with its normalized masses, in the bracketed display form.
fn summarize(kb: &KnowledgeBase, rule: &Rule) -> Option<String> {
    let RuleBody::Ranked { relevance, conclusions } = &rule.body else {
        return None;
    };
    let decl = kb.attribute(rule.concluded_attribute())?;
    let frame = Arc::new(Frame::new(decl.name.clone(), decl.values.clone()).ok()?);
    let rankings: Vec<_> = conclusions
        .iter()
        .map(|(c, r)| Some((frame.subset(&c.values).ok()?, *r)))
        .collect::<Option<_>>()?;
    let m = mass_from_rankings(Arc::clone(&frame), &rankings, *relevance).ok()?;

    let lhs: Vec<String> = rule.lhs.iter().map(|p| format!("{p}")).collect();
    let mut s = format!("[[{}] BF] →\n", lhs.join(" "));
    for (subset, _) in &rankings {
        let members: Vec<String> = frame
            .names(*subset)
            .iter()
            .map(|v| format!("<{}> <{v}>", decl.name))
            .collect();
        s.push_str(&format!("    [[{}] {}]\n", members.join(" "), m.mass(*subset)));
    }
    s.push_str(&format!("    m(Θ) = {}", m.ignorance()));
    Some(s)
}
