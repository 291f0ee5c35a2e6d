use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use super::model::*;
use crate::evidence::MAX_FRAME_SIZE;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub code: &'static str,
    /// The attribute, rule or partition the diagnostic is about.
    pub subject: String,
    pub message: String,
}

impl Diagnostic {
    fn error(code: &'static str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Error,
            code,
            subject: subject.into(),
            message: message.into(),
        }
    }

    fn warning(code: &'static str, subject: impl Into<String>, message: impl Into<String>) -> Self {
        Diagnostic {
            severity: Severity::Warning,
            ..Diagnostic::error(code, subject, message)
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let level = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{level}[{}] {}: {}", self.code, self.subject, self.message)
    }
}

/// Checks a parsed knowledge base for structural problems.
pub fn validate_kb(kb: &KnowledgeBase) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    for a in &kb.attributes {
        if a.values.len() > MAX_FRAME_SIZE {
            out.push(Diagnostic::error(
                "frame-too-large",
                &a.name,
                format!("{} values; at most {MAX_FRAME_SIZE} are supported", a.values.len()),
            ));
        }
        match a.kind {
            AttributeKind::Verifiable => {
                if kb.rules_concluding(&a.name).next().is_none() {
                    out.push(Diagnostic::error(
                        "unconcluded-verifiable",
                        &a.name,
                        "verifiable attribute is not concluded by any rule",
                    ));
                }
            }
            AttributeKind::Askable { .. } => {
                if !kb.is_premise(&a.name) {
                    out.push(Diagnostic::warning(
                        "unused-askable",
                        &a.name,
                        "askable attribute is never used as a premise",
                    ));
                }
            }
        }
    }

    for q in &kb.initial_questions {
        if !kb.attribute(q).is_some_and(AttributeDecl::is_askable) {
            out.push(Diagnostic::error(
                "initial-question-not-askable",
                q,
                "initial questions must name askable attributes",
            ));
        }
    }
    if !(kb.exit_threshold > 0.0 && kb.exit_threshold <= 1.0) {
        out.push(Diagnostic::error(
            "exit-threshold",
            kb.exit_threshold.to_string(),
            "exit threshold must lie in (0, 1]",
        ));
    }

    let part_index = |p: &str| kb.partition_index(p).unwrap_or(usize::MAX);

    // premises concluded only in a later partition
    for r in &kb.rules {
        let own = part_index(&r.partition);
        for p in &r.lhs {
            if !kb.attribute(&p.attribute).is_some_and(AttributeDecl::is_verifiable) {
                continue;
            }
            let sources: Vec<usize> = kb
                .rules_concluding(&p.attribute)
                .map(|c| part_index(&c.partition))
                .collect();
            if !sources.is_empty() && sources.iter().all(|&s| s > own) {
                out.push(Diagnostic::error(
                    "forward-reference",
                    &r.id,
                    format!(
                        "premise `{}` is only concluded in a later partition than `{}`",
                        p.attribute, r.partition
                    ),
                ));
            }
        }
    }

    for (partition, cycle) in verification_cycles(kb) {
        out.push(Diagnostic::error(
            "cyclic-verification",
            partition,
            format!("attributes verify each other: {}", cycle.join(" -> ")),
        ));
    }

    let reachable = reachable_rules(kb);
    for r in &kb.rules {
        if !reachable.contains(r.id.as_str()) {
            out.push(Diagnostic::warning(
                "unreachable-rule",
                &r.id,
                "some premise can never be established",
            ));
        }
    }

    out.sort_by_key(|d| std::cmp::Reverse(d.severity));
    out
}

/// Rules whose premises can all be established: askable premises always can,
/// verifiable ones when a reachable rule in the same or an earlier partition
/// concludes them.
fn reachable_rules(kb: &KnowledgeBase) -> BTreeSet<&str> {
    let part_index = |p: &str| kb.partition_index(p).unwrap_or(usize::MAX);
    let mut reachable: BTreeSet<&str> = BTreeSet::new();
    // attribute -> earliest partition index where a reachable rule concludes it
    let mut derived: BTreeMap<&str, usize> = BTreeMap::new();
    loop {
        let mut changed = false;
        for r in &kb.rules {
            if reachable.contains(r.id.as_str()) {
                continue;
            }
            let own = part_index(&r.partition);
            let ok = r.lhs.iter().all(|p| match kb.attribute(&p.attribute) {
                Some(a) if a.is_askable() => true,
                Some(_) => derived.get(p.attribute.as_str()).is_some_and(|&i| i <= own),
                None => false,
            });
            if ok {
                reachable.insert(&r.id);
                let slot = derived.entry(r.concluded_attribute()).or_insert(own);
                *slot = (*slot).min(own);
                changed = true;
            }
        }
        if !changed {
            return reachable;
        }
    }
}

/// Cycles in the "premise of a rule concluding" relation among verifiable
/// attributes, per partition.
pub(crate) fn verification_cycles(kb: &KnowledgeBase) -> Vec<(String, Vec<String>)> {
    let mut found = Vec::new();
    for partition in &kb.partitions {
        if let Some(cycle) = partition_cycle(kb, partition) {
            found.push((partition.clone(), cycle));
        }
    }
    found
}

pub(crate) fn partition_cycle(kb: &KnowledgeBase, partition: &str) -> Option<Vec<String>> {
    // edge: premise attribute -> concluded attribute
    let mut edges: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in kb.rules_in(partition) {
        for p in &r.lhs {
            if kb.attribute(&p.attribute).is_some_and(AttributeDecl::is_verifiable) {
                edges
                    .entry(p.attribute.as_str())
                    .or_default()
                    .insert(r.concluded_attribute());
            }
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Open,
        Done,
    }
    fn visit<'a>(
        node: &'a str,
        edges: &BTreeMap<&'a str, BTreeSet<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(node) {
            Some(Mark::Done) => return None,
            Some(Mark::Open) => {
                let start = path.iter().position(|n| *n == node).unwrap_or(0);
                let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                cycle.push(node.to_string());
                return Some(cycle);
            }
            None => {}
        }
        marks.insert(node, Mark::Open);
        path.push(node);
        for next in edges.get(node).into_iter().flatten() {
            if let Some(c) = visit(next, edges, marks, path) {
                return Some(c);
            }
        }
        path.pop();
        marks.insert(node, Mark::Done);
        None
    }

    let mut marks = BTreeMap::new();
    let starts: Vec<&str> = edges.keys().copied().collect();
    for start in starts {
        let mut path = Vec::new();
        if let Some(c) = visit(start, &edges, &mut marks, &mut path) {
            return Some(c);
        }
    }
    None
}
