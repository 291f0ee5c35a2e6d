use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::{
    leading_hypothesis, CompiledKb, EngineError, EstablishedEvidence, EvidenceSource, ExitPolicy, Leading, Question,
    Response, TraceEvent,
};
use crate::evidence::{attenuate, combine, make_vacuous, Belief, EvidenceError, MassFunction};
use crate::kb::{lhs_belief, AttributeDecl, EvidencePattern};
use crate::network::{PatternState, RuleNetwork, Via};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    AwaitingInput,
    Concluded,
    Exhausted,
}

impl fmt::Display for SessionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionStatus::AwaitingInput => "awaiting-input",
            SessionStatus::Concluded => "concluded",
            SessionStatus::Exhausted => "exhausted",
        })
    }
}

/// What the session is waiting for.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Pending {
    Question(Question),
    /// An open prompt for evidence the user wants to offer.
    Volunteer,
}

/// A hypothesis space descended into to establish a verifiable premise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Focus {
    pub attribute: String,
    /// The value the parent rule needs, if the premise is not negated.
    pub target: Option<String>,
    pub rule: String,
}

/// The next step CHOOSEQ proposes for the active frame.
#[derive(Debug, Clone, PartialEq)]
pub enum Choice {
    Ask(Question),
    Descend(Focus),
    Exhausted,
}

/// One consultation. Operations must be serialized by the caller; sessions
/// share nothing mutable.
#[derive(Debug, Clone)]
pub struct Session {
    compiled: Arc<CompiledKb>,
    policy: ExitPolicy,
    partition: usize,
    goal: usize,
    masses: Vec<MassFunction>,
    evidence: Vec<EstablishedEvidence>,
    dismissed: BTreeSet<String>,
    fired: Vec<String>,
    skipped: BTreeSet<String>,
    focus: Vec<Focus>,
    initial: VecDeque<String>,
    pending: Option<Pending>,
    status: SessionStatus,
    trace: Vec<TraceEvent>,
}

type Volunteered = (String, String, Belief);

impl Session {
    /// Opens a consultation. Initial evidence, if any, is established and
    /// deduced from before the first question; otherwise the first configured
    /// initial question is asked, or the user is invited to volunteer.
    pub fn start(
        compiled: Arc<CompiledKb>,
        policy: ExitPolicy,
        initial_evidence: &[Volunteered],
    ) -> Result<Session, EngineError> {
        let kb = compiled.kb();
        let masses = compiled.frames().iter().map(|f| make_vacuous(Arc::clone(f))).collect();
        let mut s = Session {
            policy,
            partition: kb.entry_index(),
            goal: 0,
            masses,
            evidence: Vec::new(),
            dismissed: BTreeSet::new(),
            fired: Vec::new(),
            skipped: BTreeSet::new(),
            focus: Vec::new(),
            initial: kb.initial_questions.iter().cloned().collect(),
            pending: None,
            status: SessionStatus::AwaitingInput,
            trace: Vec::new(),
            compiled,
        };
        for (a, v, _) in initial_evidence {
            s.check_value(a, v)?;
        }
        let Some(partition) = s.compiled.kb().partitions.get(s.partition).cloned() else {
            s.finish_with(SessionStatus::Exhausted);
            return Ok(s);
        };
        s.trace.push(TraceEvent::Started { partition });
        if !initial_evidence.is_empty() {
            for (a, v, b) in initial_evidence {
                s.establish(a, v, *b, EvidenceSource::Volunteered);
            }
            s.drive();
        } else if !s.initial.is_empty() {
            s.drive();
        } else {
            s.pending = Some(Pending::Volunteer);
            s.trace.push(TraceEvent::VolunteerPrompt);
        }
        Ok(s)
    }

    pub fn compiled(&self) -> &Arc<CompiledKb> {
        &self.compiled
    }

    pub fn policy(&self) -> &ExitPolicy {
        &self.policy
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn is_finished(&self) -> bool {
        self.status != SessionStatus::AwaitingInput
    }

    pub fn pending(&self) -> Option<&Pending> {
        self.pending.as_ref()
    }

    pub fn pending_question(&self) -> Option<&Question> {
        match &self.pending {
            Some(Pending::Question(q)) => Some(q),
            _ => None,
        }
    }

    pub fn partition(&self) -> &str {
        self.compiled
            .kb()
            .partitions
            .get(self.partition)
            .map(String::as_str)
            .unwrap_or_default()
    }

    /// Current mass of every verifiable attribute, in declaration order.
    pub fn masses(&self) -> &[MassFunction] {
        &self.masses
    }

    pub fn mass(&self, frame: &str) -> Option<&MassFunction> {
        self.masses.iter().find(|m| m.frame().attribute() == frame)
    }

    pub fn evidence(&self) -> &[EstablishedEvidence] {
        &self.evidence
    }

    pub fn fired(&self) -> &[String] {
        &self.fired
    }

    pub fn focus(&self) -> &[Focus] {
        &self.focus
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    fn network(&self) -> Option<&RuleNetwork> {
        self.compiled.network(self.partition)
    }

    fn goal_attribute(&self) -> Option<String> {
        self.network()?.goal_attributes().get(self.goal).map(|s| s.to_string())
    }

    /// The frame CHOOSEQ works on: the innermost descent, else the current
    /// partition goal.
    pub fn active_frame(&self) -> Option<String> {
        match self.focus.last() {
            Some(f) => Some(f.attribute.clone()),
            None => self.goal_attribute(),
        }
    }

    /// Leading hypotheses of the goals of the current (or, once finished,
    /// the last) partition, with whether each passes EXITCHK.
    pub fn conclusions(&self) -> Vec<(String, Option<Leading>, bool)> {
        let Some(net) = self.network() else {
            return Vec::new();
        };
        net.goal_attributes()
            .into_iter()
            .filter_map(|g| {
                let m = self.mass(g)?;
                Some((g.to_string(), leading_hypothesis(m), self.policy.is_satisfied(m)))
            })
            .collect()
    }

    fn decl(&self, attribute: &str) -> Result<&AttributeDecl, EngineError> {
        self.compiled
            .kb()
            .attribute(attribute)
            .ok_or_else(|| EngineError::UnknownAttribute(attribute.to_string()))
    }

    fn check_value(&self, attribute: &str, value: &str) -> Result<(), EngineError> {
        if self.decl(attribute)?.has_value(value) {
            Ok(())
        } else {
            Err(EngineError::UnknownValue {
                attribute: attribute.to_string(),
                value: value.to_string(),
            })
        }
    }

    fn ensure_running(&self) -> Result<(), EngineError> {
        if self.is_finished() {
            Err(EngineError::Finished)
        } else {
            Ok(())
        }
    }

    fn is_settled(&self, attribute: &str) -> bool {
        self.dismissed.contains(attribute) || self.evidence.iter().any(|e| e.attribute == attribute)
    }

    /// Whether `p` holds, cannot hold, or is still undecided, with the belief
    /// it holds with when it does.
    pub fn pattern_state(&self, p: &EvidencePattern) -> (PatternState, Belief) {
        let mut own = None;
        let mut other: Option<Belief> = None;
        for e in self.evidence.iter().filter(|e| e.attribute == p.attribute) {
            if e.value == p.value {
                own = Some(e.belief);
            } else {
                other = Some(match other {
                    Some(b) if b.value() >= e.belief.value() => b,
                    _ => e.belief,
                });
            }
        }
        let dismissed = self.dismissed.contains(&p.attribute);
        match (p.negated, own, other) {
            (false, Some(b), _) => (PatternState::Satisfied, b),
            (false, None, Some(_)) => (PatternState::Blocked, Belief::ZERO),
            (true, Some(_), _) => (PatternState::Blocked, Belief::ZERO),
            (true, None, Some(b)) => (PatternState::Satisfied, b),
            _ if dismissed => (PatternState::Blocked, Belief::ZERO),
            _ => (PatternState::Open, Belief::ZERO),
        }
    }

    /// Records evidence, replacing any earlier belief in the same pair.
    fn establish(&mut self, attribute: &str, value: &str, belief: Belief, source: EvidenceSource) {
        let e = EstablishedEvidence {
            attribute: attribute.to_string(),
            value: value.to_string(),
            belief,
            source,
        };
        match self
            .evidence
            .iter_mut()
            .find(|x| x.attribute == attribute && x.value == value)
        {
            Some(slot) => *slot = e,
            None => self.evidence.push(e),
        }
        self.dismissed.remove(attribute);
        if let Some(i) = self.focus.iter().position(|f| f.attribute == attribute) {
            self.focus.truncate(i);
        }
        self.trace.push(TraceEvent::Established {
            attribute: attribute.to_string(),
            value: value.to_string(),
            belief,
            source,
        });
    }

    fn dismiss(&mut self, attribute: &str, reason: &str) {
        self.dismissed.insert(attribute.to_string());
        self.trace.push(TraceEvent::Dismissed {
            attribute: attribute.to_string(),
            reason: reason.to_string(),
        });
    }

    /// DEDUCE: fires every unfired rule of the current partition whose
    /// premises all hold. Verifiable conclusions stay in their own frame;
    /// they become evidence only through [`Self::propagate_subspace`].
    pub fn deduce(&mut self) -> Result<(), EngineError> {
        self.ensure_running()?;
        let fired = self.fire_ready();
        self.trace.push(TraceEvent::Deduced { fired });
        Ok(())
    }

    fn fire_ready(&mut self) -> Vec<String> {
        // Firing changes masses only, never evidence, so one pass reaches
        // the fixpoint.
        let Some(net) = self.compiled.network(self.partition) else {
            return Vec::new();
        };
        let compiled = Arc::clone(&self.compiled);
        let mut fired = Vec::new();
        for rule in net.rules() {
            if self.fired.contains(&rule.id) || self.skipped.contains(&rule.id) {
                continue;
            }
            let states: Vec<(PatternState, Belief)> = rule.lhs.iter().map(|p| self.pattern_state(p)).collect();
            if states.iter().any(|(s, _)| *s != PatternState::Satisfied) {
                continue;
            }
            let beliefs: Vec<Belief> = states.iter().map(|(_, b)| *b).collect();
            let b = lhs_belief(&beliefs).expect("rules have at least one premise");
            let frame = rule.concluded_attribute();
            let contribution = attenuate(compiled.rule_mass(&rule.id).expect("every rule is compiled"), b);
            let slot = self
                .masses
                .iter()
                .position(|m| m.frame().attribute() == frame)
                .expect("every concluded attribute has a frame");
            match combine(&self.masses[slot], &contribution) {
                Ok(after) => {
                    let before = std::mem::replace(&mut self.masses[slot], after.clone());
                    self.fired.push(rule.id.clone());
                    fired.push(rule.id.clone());
                    self.trace.push(TraceEvent::Fired {
                        rule: rule.id.clone(),
                        frame: frame.to_string(),
                        lhs_belief: b,
                        before,
                        after,
                    });
                }
                Err(EvidenceError::TotalConflict { conflict }) => {
                    self.skipped.insert(rule.id.clone());
                    self.trace.push(TraceEvent::Conflict {
                        rule: rule.id.clone(),
                        frame: frame.to_string(),
                        conflict,
                    });
                }
                Err(e) => unreachable!("rule and frame masses share a frame: {e}"),
            }
        }
        fired
    }

    /// GETMAXH for one frame.
    pub fn getmaxh(&self, frame: &str) -> Result<Option<Leading>, EngineError> {
        let m = self
            .mass(frame)
            .ok_or_else(|| EngineError::UnknownFrame(frame.to_string()))?;
        Ok(leading_hypothesis(m))
    }

    /// EXITCHK for one frame.
    pub fn exitchk(&self, frame: &str) -> Result<bool, EngineError> {
        let m = self
            .mass(frame)
            .ok_or_else(|| EngineError::UnknownFrame(frame.to_string()))?;
        Ok(self.policy.is_satisfied(m))
    }

    fn question(&self, attribute: &str) -> Question {
        let decl = self
            .compiled
            .kb()
            .attribute(attribute)
            .expect("candidates are declared");
        Question {
            attribute: attribute.to_string(),
            query: decl.query().unwrap_or(attribute).to_string(),
            values: decl.values.clone(),
            accepts_confidence: true,
        }
    }

    /// CHOOSEQ: the first open candidate supporting the leading hypothesis
    /// of the active frame. When that hypothesis has nothing left to ask,
    /// the other hypotheses are tried in declaration order.
    pub fn choose(&self) -> Choice {
        let (Some(net), Some(frame)) = (self.network(), self.active_frame()) else {
            return Choice::Exhausted;
        };
        let Some(m) = self.mass(&frame) else {
            return Choice::Exhausted;
        };
        let lead = leading_hypothesis(m).map(|l| l.value).or_else(|| {
            self.focus
                .last()
                .filter(|f| f.attribute == frame)
                .and_then(|f| f.target.clone())
        });
        let mut values: Vec<&String> = Vec::new();
        if let Some(v) = &lead {
            values.push(v);
        }
        let rest: Vec<&String> = m
            .frame()
            .values()
            .iter()
            .filter(|v| Some(*v) != lead.as_ref())
            .collect();
        let rest_candidates = {
            let mut all = Vec::new();
            for v in &rest {
                all.extend(net.candidates_for(&frame, v, |p| self.pattern_state(p).0));
            }
            // without a leading hypothesis the heaviest link goes first
            if lead.is_none() {
                all.sort_by(|a, b| b.weight.total_cmp(&a.weight));
            }
            all
        };
        let candidates = values
            .iter()
            .flat_map(|v| net.candidates_for(&frame, v, |p| self.pattern_state(p).0))
            .chain(rest_candidates);
        for c in candidates {
            match c.via {
                Via::LevelNode { attribute } => {
                    if self.focus.iter().any(|f| f.attribute == attribute) {
                        continue;
                    }
                    return Choice::Descend(Focus {
                        attribute,
                        target: (!c.pattern.negated).then(|| c.pattern.value.clone()),
                        rule: c.rule,
                    });
                }
                Via::Direct | Via::AndNode { .. } => return Choice::Ask(self.question(&c.pattern.attribute)),
            }
        }
        Choice::Exhausted
    }

    /// Leaves the innermost hypothesis space, establishing its best
    /// hypothesis in the parent at its current belief, then deduces.
    /// A space that never received evidence is dismissed instead.
    pub fn propagate_subspace(&mut self) -> Result<(), EngineError> {
        self.ensure_running()?;
        let top = self.focus.pop().ok_or(EngineError::EmptyFocusStack)?;
        let frame = top.attribute;
        match self.getmaxh(&frame)? {
            Some(lead) => {
                let sub_threshold = !self.exitchk(&frame)?;
                self.trace.push(TraceEvent::Propagated {
                    attribute: frame.clone(),
                    value: lead.value.clone(),
                    belief: lead.belief,
                    sub_threshold,
                });
                self.establish(&frame, &lead.value, lead.belief, EvidenceSource::PropagatedSubspace);
            }
            None => self.dismiss(&frame, "no evidence in its hypothesis space"),
        }
        self.fire_ready();
        Ok(())
    }

    /// Moves to the next partition, carrying forward every attribute the
    /// current one concluded. After the last partition the session ends.
    pub fn advance_partition(&mut self) -> Result<(), EngineError> {
        self.ensure_running()?;
        let last = self.partition + 1 >= self.compiled.kb().partitions.len();
        let (spaces, goals): (Vec<String>, Vec<String>) = match self.network() {
            Some(net) => (
                net.spaces.iter().map(|s| s.attribute.clone()).collect(),
                net.goal_attributes().into_iter().map(str::to_string).collect(),
            ),
            None => Default::default(),
        };
        for attribute in spaces.iter().filter(|_| !last) {
            if self.is_settled(attribute) {
                continue;
            }
            match self.getmaxh(attribute)? {
                Some(lead) => self.establish(attribute, &lead.value, lead.belief, EvidenceSource::CarriedForward),
                None if goals.contains(attribute) => self.dismiss(attribute, "nothing concluded"),
                None => {}
            }
        }
        self.focus.clear();
        self.goal = 0;
        let from = self.partition().to_string();
        if !last {
            self.partition += 1;
            self.trace.push(TraceEvent::PartitionAdvanced {
                from,
                to: Some(self.partition().to_string()),
            });
        } else {
            self.trace.push(TraceEvent::PartitionAdvanced { from, to: None });
            let concluded = self.conclusions().iter().any(|(_, lead, _)| lead.is_some());
            self.finish_with(if concluded {
                SessionStatus::Concluded
            } else {
                SessionStatus::Exhausted
            });
        }
        Ok(())
    }

    fn finish_with(&mut self, status: SessionStatus) {
        self.status = status;
        self.pending = None;
        self.focus.clear();
        self.trace.push(TraceEvent::Finished {
            status: status.to_string(),
        });
    }

    /// Runs the control loop until input is needed or the session ends.
    fn drive(&mut self) {
        while !self.is_finished() {
            self.fire_ready();

            if let Some(top) = self.focus.last().map(|f| f.attribute.clone()) {
                if self.exit_reached(&top) {
                    self.propagate_subspace().expect("focus stack is not empty");
                    continue;
                }
            } else {
                match self.goal_attribute() {
                    None => {
                        self.advance_partition().expect("session is running");
                        continue;
                    }
                    Some(goal) => {
                        if self.exit_reached(&goal) {
                            self.goal += 1;
                            continue;
                        }
                    }
                }
            }

            while let Some(q) = self.initial.front().cloned() {
                if self.is_settled(&q) {
                    self.initial.pop_front();
                    continue;
                }
                self.ask(self.question(&q));
                return;
            }

            let frame = self.active_frame().expect("a frame is active");
            let lead = self.getmaxh(&frame).expect("active frame exists");
            self.trace.push(TraceEvent::Leading {
                frame: frame.clone(),
                value: lead.as_ref().map(|l| l.value.clone()),
                belief: lead.map(|l| l.belief).unwrap_or(Belief::ZERO),
            });
            match self.choose() {
                Choice::Ask(q) => {
                    self.ask(q);
                    return;
                }
                Choice::Descend(f) => {
                    self.trace.push(TraceEvent::Descend {
                        attribute: f.attribute.clone(),
                        target: f.target.clone(),
                        rule: f.rule.clone(),
                    });
                    self.focus.push(f);
                }
                Choice::Exhausted => {
                    self.trace.push(TraceEvent::Exhausted { frame });
                    if self.focus.is_empty() {
                        self.goal += 1;
                    } else {
                        self.propagate_subspace().expect("focus stack is not empty");
                    }
                }
            }
        }
    }

    fn exit_reached(&mut self, frame: &str) -> bool {
        if !self.exitchk(frame).expect("active frame exists") {
            return false;
        }
        let lead = self.getmaxh(frame).expect("active frame exists");
        if let Some(lead) = lead {
            self.trace.push(TraceEvent::ExitSatisfied {
                frame: frame.to_string(),
                value: lead.value,
                belief: lead.belief,
            });
        }
        true
    }

    fn ask(&mut self, q: Question) {
        self.trace.push(TraceEvent::Asked {
            attribute: q.attribute.clone(),
            query: q.query.clone(),
        });
        self.pending = Some(Pending::Question(q));
        self.status = SessionStatus::AwaitingInput;
    }

    /// Answers the pending question. `Unknown` drops the question;
    /// `Irrelevant` drops it and opens the volunteer prompt.
    pub fn submit_answer(
        &mut self,
        attribute: &str,
        response: Response,
        confidence: Belief,
    ) -> Result<(), EngineError> {
        self.ensure_running()?;
        let Some(q) = self.pending_question() else {
            return Err(EngineError::NoPendingQuestion);
        };
        if q.attribute != attribute {
            return Err(EngineError::QuestionMismatch {
                expected: q.attribute.clone(),
                got: attribute.to_string(),
            });
        }
        match response {
            Response::Value(v) => {
                self.check_value(attribute, &v)?;
                self.pending = None;
                self.establish(attribute, &v, confidence, EvidenceSource::UserAnswer);
                self.drive();
            }
            Response::Unknown => {
                self.trace.push(TraceEvent::Unknown {
                    attribute: attribute.to_string(),
                });
                self.pending = None;
                self.dismiss(attribute, "answered unknown");
                self.drive();
            }
            Response::Irrelevant => {
                self.trace.push(TraceEvent::Irrelevant {
                    attribute: attribute.to_string(),
                });
                self.dismiss(attribute, "judged irrelevant");
                self.pending = Some(Pending::Volunteer);
                self.trace.push(TraceEvent::VolunteerPrompt);
            }
        }
        Ok(())
    }

    /// Answers the pending question with a value held with certainty.
    pub fn answer(&mut self, attribute: &str, value: &str) -> Result<(), EngineError> {
        self.submit_answer(attribute, Response::Value(value.to_string()), Belief::ONE)
    }

    /// Establishes evidence the user offers on their own initiative, then
    /// resumes questioning from the (possibly new) focus. An empty list just
    /// declines the volunteer prompt.
    pub fn volunteer(&mut self, evidence: &[Volunteered]) -> Result<(), EngineError> {
        self.ensure_running()?;
        for (a, v, _) in evidence {
            self.check_value(a, v)?;
        }
        self.pending = None;
        for (a, v, b) in evidence {
            self.establish(a, v, *b, EvidenceSource::Volunteered);
        }
        self.drive();
        Ok(())
    }

    /// Re-plans after primitives such as [`Self::deduce`] were called
    /// directly.
    pub fn resume(&mut self) -> Result<(), EngineError> {
        self.ensure_running()?;
        self.pending = None;
        self.drive();
        Ok(())
    }

    /// Ends the consultation: every further question is answered unknown
    /// and every volunteer prompt is declined.
    pub fn finish(&mut self) {
        while !self.is_finished() {
            let result = match self.pending.clone() {
                Some(Pending::Question(q)) => self.submit_answer(&q.attribute, Response::Unknown, Belief::ONE),
                _ => self.volunteer(&[]),
            };
            result.expect("running session accepts unknown and empty volunteers");
        }
    }
}
