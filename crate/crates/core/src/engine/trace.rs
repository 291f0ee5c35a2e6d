use std::fmt;

use serde::Serialize;

use super::EvidenceSource;
use crate::evidence::{Belief, MassFunction};

/// One entry of a session's append-only log.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    Started {
        partition: String,
    },
    Asked {
        attribute: String,
        query: String,
    },
    VolunteerPrompt,
    Established {
        attribute: String,
        value: String,
        belief: Belief,
        source: EvidenceSource,
    },
    Unknown {
        attribute: String,
    },
    Irrelevant {
        attribute: String,
    },
    Dismissed {
        attribute: String,
        reason: String,
    },
    Fired {
        rule: String,
        frame: String,
        lhs_belief: Belief,
        before: MassFunction,
        after: MassFunction,
    },
    Conflict {
        rule: String,
        frame: String,
        conflict: f64,
    },
    Deduced {
        fired: Vec<String>,
    },
    Leading {
        frame: String,
        value: Option<String>,
        belief: Belief,
    },
    ExitSatisfied {
        frame: String,
        value: String,
        belief: Belief,
    },
    Descend {
        attribute: String,
        target: Option<String>,
        rule: String,
    },
    Propagated {
        attribute: String,
        value: String,
        belief: Belief,
        sub_threshold: bool,
    },
    Exhausted {
        frame: String,
    },
    PartitionAdvanced {
        from: String,
        to: Option<String>,
    },
    Finished {
        status: String,
    },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use TraceEvent::*;
        match self {
            Started { partition } => write!(f, "start in partition {partition}"),
            Asked { attribute, query } => write!(f, "ask {attribute}: {query}"),
            VolunteerPrompt => write!(f, "waiting for volunteered evidence"),
            Established {
                attribute,
                value,
                belief,
                source,
            } => {
                write!(f, "establish {attribute} = {value} at {belief} ({source})")
            }
            Unknown { attribute } => write!(f, "{attribute}: unknown"),
            Irrelevant { attribute } => write!(f, "{attribute}: irrelevant"),
            Dismissed { attribute, reason } => write!(f, "dismiss {attribute} ({reason})"),
            Fired {
                rule,
                frame,
                lhs_belief,
                after,
                ..
            } => {
                let masses: Vec<String> = after
                    .labelled()
                    .into_iter()
                    .map(|(names, m)| {
                        let label = if names.len() == after.frame().len() {
                            "Θ".to_string()
                        } else {
                            format!("{{{}}}", names.join(","))
                        };
                        format!("{label} {m:.3}")
                    })
                    .collect();
                write!(f, "fire {rule} at {lhs_belief}: {frame} = {}", masses.join(", "))
            }
            Conflict { rule, frame, conflict } => {
                write!(f, "skip {rule}: total conflict in {frame} ({conflict:.3})")
            }
            Deduced { fired } if fired.is_empty() => write!(f, "deduce: nothing to fire"),
            Deduced { fired } => write!(f, "deduce: {}", fired.join(", ")),
            Leading {
                frame,
                value: Some(v),
                belief,
            } => write!(f, "leading {frame} = {v} ({belief})"),
            Leading { frame, value: None, .. } => write!(f, "leading {frame}: none"),
            ExitSatisfied { frame, value, belief } => write!(f, "exit {frame} = {value} ({belief})"),
            Descend {
                attribute,
                target,
                rule,
            } => match target {
                Some(t) => write!(f, "descend into {attribute} for {t} (via {rule})"),
                None => write!(f, "descend into {attribute} (via {rule})"),
            },
            Propagated {
                attribute,
                value,
                belief,
                sub_threshold,
            } => {
                write!(f, "propagate {attribute} = {value} at {belief}")?;
                if *sub_threshold {
                    write!(f, " below threshold")?;
                }
                Ok(())
            }
            Exhausted { frame } => write!(f, "no more questions for {frame}"),
            PartitionAdvanced { from, to: Some(to) } => write!(f, "partition {from} -> {to}"),
            PartitionAdvanced { from, to: None } => write!(f, "partition {from} done"),
            Finished { status } => write!(f, "finished: {status}"),
        }
    }
}
