//! Messages of the JSON session protocol. Each serializes to one line.

use serde::{Deserialize, Serialize};

use evshell::engine::{Pending, Session, TraceEvent};
use evshell::evidence::{Belief, MassFunction};
use evshell::report::{frame_beliefs, report, ConclusionRow, FrameBeliefs};

pub const PROTOCOL_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionMessage {
    Question {
        attribute: String,
        query: String,
        values: Vec<String>,
        accepts_confidence: bool,
    },
    /// The session waits for volunteered evidence.
    Volunteer {},
    Answer {
        attribute: String,
        response: String,
        value: Option<String>,
        confidence: Belief,
    },
    Beliefs {
        frames: Vec<FrameBeliefs>,
    },
    Fired {
        rule: String,
        frame: String,
        lhs_belief: Belief,
        mass: MassFunction,
    },
    Descend {
        attribute: String,
        target: Option<String>,
        rule: String,
    },
    Propagate {
        attribute: String,
        value: String,
        belief: Belief,
        sub_threshold: bool,
    },
    Done {
        status: String,
        conclusions: Vec<ConclusionRow>,
    },
    Error {
        message: String,
    },
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// One line of newline-delimited JSON.
pub fn line<T: Serialize>(body: &T) -> String {
    let mut s = serde_json::to_string(&Envelope {
        schema: PROTOCOL_SCHEMA,
        body,
    })
    .expect("protocol messages serialize");
    s.push('\n');
    s
}

pub fn lines(messages: &[SessionMessage]) -> String {
    messages.iter().map(line).collect()
}

/// What the session wants next.
pub fn next(session: &Session) -> SessionMessage {
    match session.pending() {
        Some(Pending::Question(q)) => SessionMessage::Question {
            attribute: q.attribute.clone(),
            query: q.query.clone(),
            values: q.values.clone(),
            accepts_confidence: q.accepts_confidence,
        },
        Some(Pending::Volunteer) => SessionMessage::Volunteer {},
        None => SessionMessage::Done {
            status: session.status().to_string(),
            conclusions: report(session).conclusions,
        },
    }
}

pub fn beliefs(session: &Session) -> SessionMessage {
    SessionMessage::Beliefs {
        frames: session.masses().iter().map(frame_beliefs).collect(),
    }
}

/// Protocol messages for trace entries appended since `from`.
pub fn progress(session: &Session, from: usize) -> Vec<SessionMessage> {
    session.trace()[from..]
        .iter()
        .filter_map(|e| match e {
            TraceEvent::Fired {
                rule,
                frame,
                lhs_belief,
                after,
                ..
            } => Some(SessionMessage::Fired {
                rule: rule.clone(),
                frame: frame.clone(),
                lhs_belief: *lhs_belief,
                mass: after.clone(),
            }),
            TraceEvent::Descend {
                attribute,
                target,
                rule,
            } => Some(SessionMessage::Descend {
                attribute: attribute.clone(),
                target: target.clone(),
                rule: rule.clone(),
            }),
            TraceEvent::Propagated {
                attribute,
                value,
                belief,
                sub_threshold,
            } => Some(SessionMessage::Propagate {
                attribute: attribute.clone(),
                value: value.clone(),
                belief: *belief,
                sub_threshold: *sub_threshold,
            }),
            _ => None,
        })
        .collect()
}

/// Body of `POST /sessions/{id}/answer`.
#[derive(Debug, Clone, Deserialize)]
pub struct AnswerRequest {
    pub attribute: String,
    /// A permitted value. Omit it when `response` is given.
    #[serde(default)]
    pub value: Option<String>,
    /// `unknown` or `irrelevant` instead of a value.
    #[serde(default)]
    pub response: Option<String>,
    #[serde(default)]
    pub confidence: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct EvidenceItem {
    pub attribute: String,
    pub value: String,
    #[serde(default)]
    pub confidence: Option<f64>,
}

/// Body of `POST /sessions` (optional) and `POST /sessions/{id}/volunteer`.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct VolunteerRequest {
    #[serde(default)]
    pub evidence: Vec<EvidenceItem>,
}

pub fn belief(confidence: Option<f64>) -> Result<Belief, String> {
    let c = confidence.unwrap_or(1.0);
    Belief::new(c).map_err(|_| format!("confidence {c} is outside [0, 1]"))
}
