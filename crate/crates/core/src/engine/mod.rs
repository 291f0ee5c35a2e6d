//! The consultation control loop.
//!
//! A [`Session`] alternates between asking the user (ASKQ), forward chaining
//! over established evidence (DEDUCE), picking the leading hypothesis
//! (GETMAXH), choosing the next query from the rule network (CHOOSEQ) and
//! testing for a definite conclusion (EXITCHK). Verifiable intermediate
//! conclusions are held back in their own hypothesis space until it exits,
//! and partitions are worked through one after another.

mod session;
mod trace;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use session::{Choice, Focus, Pending, Session, SessionStatus};
pub use trace::TraceEvent;

use crate::evidence::{belief_of, plausibility_of, Belief, EvidenceError, Frame, HypSubset, MassFunction};
use crate::kb::{validate_kb, Diagnostic, KnowledgeBase};
use crate::network::{compile_network, frame_of, rule_mass_function, NetworkError, RuleNetwork};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("knowledge base has {} error(s); first: {}", .0.len(), .0.first().map(|d| d.to_string()).unwrap_or_default())]
    InvalidKb(Vec<Diagnostic>),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error("exit threshold {0} is outside (0, 1]")]
    Threshold(f64),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("`{value}` is not a value of `{attribute}`")]
    UnknownValue { attribute: String, value: String },
    #[error("`{0}` is not a frame of this knowledge base")]
    UnknownFrame(String),
    #[error("no question is pending")]
    NoPendingQuestion,
    #[error("the pending question is about `{expected}`, not `{got}`")]
    QuestionMismatch { expected: String, got: String },
    #[error("the focus stack is empty")]
    EmptyFocusStack,
    #[error("the consultation has finished")]
    Finished,
}

/// A question put to the user.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Question {
    pub attribute: String,
    pub query: String,
    pub values: Vec<String>,
    /// Answers may carry a confidence in [0, 1].
    pub accepts_confidence: bool,
}

/// A reply to a [`Question`].
#[derive(Debug, Clone, PartialEq)]
pub enum Response {
    Value(String),
    Unknown,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EvidenceSource {
    UserAnswer,
    Volunteered,
    PropagatedSubspace,
    /// Concluded in an earlier partition.
    CarriedForward,
}

impl fmt::Display for EvidenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvidenceSource::UserAnswer => "answered",
            EvidenceSource::Volunteered => "volunteered",
            EvidenceSource::PropagatedSubspace => "propagated",
            EvidenceSource::CarriedForward => "carried forward",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstablishedEvidence {
    pub attribute: String,
    pub value: String,
    pub belief: Belief,
    pub source: EvidenceSource,
}

pub type ExitHook = Arc<dyn Fn(&str, &MassFunction) -> bool + Send + Sync>;

/// Decides when a frame has reached a definite conclusion.
#[derive(Clone)]
pub struct ExitPolicy {
    threshold: f64,
    hook: Option<ExitHook>,
}

impl ExitPolicy {
    pub fn new(threshold: f64) -> Result<Self, EngineError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(EngineError::Threshold(threshold));
        }
        Ok(ExitPolicy { threshold, hook: None })
    }

    pub fn for_kb(kb: &KnowledgeBase) -> Result<Self, EngineError> {
        ExitPolicy::new(kb.exit_threshold)
    }

    /// Replaces the threshold test with a designer-supplied predicate.
    pub fn with_hook(mut self, hook: ExitHook) -> Self {
        self.hook = Some(hook);
        self
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn is_satisfied(&self, m: &MassFunction) -> bool {
        match &self.hook {
            Some(hook) => hook(m.frame().attribute(), m),
            None => leading_hypothesis(m).is_some_and(|l| l.belief.value() >= self.threshold),
        }
    }
}

impl fmt::Debug for ExitPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExitPolicy")
            .field("threshold", &self.threshold)
            .field("hook", &self.hook.is_some())
            .finish()
    }
}

/// The best singleton hypothesis of a frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Leading {
    pub value: String,
    pub belief: Belief,
    pub plausibility: Belief,
}

/// Singleton with the highest belief; ties go to higher plausibility, then
/// declaration order. `None` for a vacuous mass.
pub fn leading_hypothesis(m: &MassFunction) -> Option<Leading> {
    if m.is_vacuous() {
        return None;
    }
    let frame = m.frame();
    let mut best: Option<(usize, f64, f64)> = None;
    for i in 0..frame.len() {
        let s = HypSubset::singleton(i);
        let bel = belief_of(m, s).expect("singleton lies in its own frame").value();
        let pl = plausibility_of(m, s).expect("singleton lies in its own frame").value();
        let better = match best {
            None => true,
            Some((_, b, p)) => bel > b || (bel == b && pl > p),
        };
        if better {
            best = Some((i, bel, pl));
        }
    }
    best.map(|(i, bel, pl)| Leading {
        value: frame.values()[i].clone(),
        belief: Belief::clamped(bel),
        plausibility: Belief::clamped(pl),
    })
}

/// A validated knowledge base with its frames, rule masses and one rule
/// network per partition. Immutable and shared between sessions.
#[derive(Debug)]
pub struct CompiledKb {
    kb: KnowledgeBase,
    frames: Vec<Arc<Frame>>,
    rule_masses: HashMap<String, MassFunction>,
    networks: Vec<RuleNetwork>,
}

impl CompiledKb {
    pub fn new(kb: KnowledgeBase) -> Result<Self, EngineError> {
        let errors: Vec<Diagnostic> = validate_kb(&kb).into_iter().filter(Diagnostic::is_error).collect();
        if !errors.is_empty() {
            return Err(EngineError::InvalidKb(errors));
        }
        let mut frames = Vec::new();
        for decl in kb.attributes.iter().filter(|a| a.is_verifiable()) {
            frames.push(Arc::new(frame_of(decl)?));
        }
        let mut rule_masses = HashMap::new();
        for rule in &kb.rules {
            let frame = frames
                .iter()
                .find(|f| f.attribute() == rule.concluded_attribute())
                .ok_or_else(|| EngineError::UnknownFrame(rule.concluded_attribute().to_string()))?;
            let m = rule_mass_function(Arc::clone(frame), rule).map_err(|source| NetworkError::RuleMass {
                rule: rule.id.clone(),
                source,
            })?;
            rule_masses.insert(rule.id.clone(), m);
        }
        let networks = kb
            .partitions
            .iter()
            .map(|p| compile_network(&kb, p))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompiledKb {
            kb,
            frames,
            rule_masses,
            networks,
        })
    }

    pub fn kb(&self) -> &KnowledgeBase {
        &self.kb
    }

    pub fn frames(&self) -> &[Arc<Frame>] {
        &self.frames
    }

    pub fn frame(&self, attribute: &str) -> Option<&Arc<Frame>> {
        self.frames.iter().find(|f| f.attribute() == attribute)
    }

    /// The mass a rule contributes at full premise belief.
    pub fn rule_mass(&self, rule: &str) -> Option<&MassFunction> {
        self.rule_masses.get(rule)
    }

    pub fn networks(&self) -> &[RuleNetwork] {
        &self.networks
    }

    pub fn network(&self, partition: usize) -> Option<&RuleNetwork> {
        self.networks.get(partition)
    }
}
