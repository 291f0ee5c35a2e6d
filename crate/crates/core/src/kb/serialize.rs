use std::fmt::Write;

use super::model::*;
use super::sexp::quote;

/// Writes `kb` in the text format read by [`super::parse_kb`].
///
/// Verifiable attributes that no rule uses as a premise are written as
/// `frame` declarations, the rest as `attribute` declarations. Ranked rules
/// keep their rankings.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    let mut out = String::new();
    for a in &kb.attributes {
        let values = a.values.join(" ");
        match &a.kind {
            AttributeKind::Verifiable if !kb.is_premise(&a.name) => {
                let _ = writeln!(out, "(frame {} ({values}))", a.name);
            }
            AttributeKind::Verifiable => {
                let _ = writeln!(out, "(attribute {} verifiable ({values}))", a.name);
            }
            AttributeKind::Askable { query } => {
                let _ = writeln!(out, "(attribute {} askable {} ({values}))", a.name, quote(query));
            }
        }
    }
    for p in &kb.partitions {
        let _ = writeln!(out, "(partition {p})");
    }
    if let Some(entry) = &kb.entry_partition {
        let _ = writeln!(out, "(entry-partition {entry})");
    }
    if !kb.initial_questions.is_empty() {
        let _ = writeln!(out, "(initial-questions {})", kb.initial_questions.join(" "));
    }
    if kb.exit_threshold != DEFAULT_EXIT_THRESHOLD {
        let _ = writeln!(out, "(exit-threshold {})", kb.exit_threshold);
    }
    for r in &kb.rules {
        out.push_str(&rule_text(r));
        out.push('\n');
    }
    out
}

fn pattern_text(p: &EvidencePattern) -> String {
    if p.negated {
        format!("(not ({} {}))", p.attribute, p.value)
    } else {
        format!("({} {})", p.attribute, p.value)
    }
}

fn conclusion_text(c: &Conclusion) -> String {
    format!("({} {})", c.attribute, c.values.join(" "))
}

/// One rule as a single line.
pub(crate) fn rule_text(r: &Rule) -> String {
    let lhs: Vec<String> = r.lhs.iter().map(pattern_text).collect();
    let mut s = format!("(rule {} :partition {} :lhs ({})", r.id, r.partition, lhs.join(" "));
    match &r.body {
        RuleBody::Mass { conclusions } => {
            let rhs: Vec<String> = conclusions
                .iter()
                .map(|(c, m)| format!("({} {m})", conclusion_text(c)))
                .collect();
            let _ = write!(s, " :rhs-mass ({}))", rhs.join(" "));
        }
        RuleBody::Ranked { relevance, conclusions } => {
            let rhs: Vec<String> = conclusions
                .iter()
                .map(|(c, rank)| format!("({} {rank})", conclusion_text(c)))
                .collect();
            let _ = write!(s, " :relevance {relevance} :rhs-rank ({}))", rhs.join(" "));
        }
    }
    s
}
