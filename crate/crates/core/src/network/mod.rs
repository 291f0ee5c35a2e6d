//! Off-line compilation of a partition's rules into a rule network.
//!
//! Premises and conclusions are nodes; rules are weighted links. A rule with
//! one premise links its evidence node straight to each conclusion; a
//! conjunctive premise goes through an AND node. Every evidence node over a
//! verifiable attribute hangs off that attribute's single level node, which
//! is fed by the hypothesis space concluding the attribute. Links point in
//! the direction belief flows, so the network is a DAG whose sinks are the
//! partition's final conclusions.

mod emit;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

pub use emit::{emit_graph, GraphFormat};

use crate::evidence::{mass_from_rankings, EvidenceError, Frame, MassFunction};
use crate::kb::{AttributeDecl, EvidencePattern, KnowledgeBase, Rule, RuleBody};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown partition `{0}`")]
    UnknownPartition(String),
    #[error("partition `{partition}` has a verification cycle: {}", path.join(" -> "))]
    Cycle { partition: String, path: Vec<String> },
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("`{0}` is askable and has no hypothesis space")]
    NotVerifiable(String),
    #[error("no rule in partition `{partition}` concludes `{attribute}`")]
    NoSpace { partition: String, attribute: String },
    #[error("rule `{rule}`: {source}")]
    RuleMass {
        rule: String,
        #[source]
        source: EvidenceError,
    },
}

/// Stable, human-readable node identifier derived from kind, attribute and
/// value (or rule id for AND nodes).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct NodeId(String);

impl NodeId {
    fn hypothesis(attribute: &str, values: &[String]) -> Self {
        NodeId(format!("hyp:{attribute}={{{}}}", values.join(",")))
    }

    fn evidence(p: &EvidencePattern) -> Self {
        let op = if p.negated { "!=" } else { "=" };
        NodeId(format!("ev:{}{op}{}", p.attribute, p.value))
    }

    fn and(rule: &str) -> Self {
        NodeId(format!("and:{rule}"))
    }

    fn level(attribute: &str) -> Self {
        NodeId(format!("lvl:{attribute}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NodeKind {
    Hypothesis {
        attribute: String,
        values: Vec<String>,
    },
    Evidence {
        pattern: EvidencePattern,
        /// Present exactly for askable evidence.
        query: Option<String>,
    },
    And {
        rule: String,
    },
    Level {
        attribute: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkNode {
    pub id: NodeId,
    #[serde(flatten)]
    pub kind: NodeKind,
    /// Rules this node takes part in, in declaration order.
    pub rules: Vec<String>,
}

impl NetworkNode {
    pub fn label(&self) -> String {
        match &self.kind {
            NodeKind::Hypothesis { attribute, values } => format!("{attribute} ∈ {{{}}}", values.join(", ")),
            NodeKind::Evidence { pattern, .. } if pattern.negated => {
                format!("{} ≠ {}", pattern.attribute, pattern.value)
            }
            NodeKind::Evidence { pattern, .. } => format!("{} = {}", pattern.attribute, pattern.value),
            NodeKind::And { rule } => format!("AND {rule}"),
            NodeKind::Level { attribute } => format!("level {attribute}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    /// Evidence or AND node to a hypothesis; carries the rule's mass.
    Conclusion,
    /// Evidence node into an AND node.
    Member,
    /// Hypothesis into a level node, or level node into evidence.
    Level,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeightedLink {
    pub from: NodeId,
    pub to: NodeId,
    pub weight: f64,
    pub kind: LinkKind,
    pub rule: Option<String>,
}

/// The rules concluding one attribute within a partition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisSpace {
    pub attribute: String,
    pub hypotheses: Vec<NodeId>,
    pub rules: Vec<String>,
}

/// How a candidate piece of evidence reaches the target hypothesis.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "via", rename_all = "kebab-case")]
pub enum Via {
    Direct,
    AndNode {
        rule: String,
    },
    /// Verifiable evidence: established by descending into this attribute's
    /// hypothesis space.
    LevelNode {
        attribute: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub node: NodeId,
    pub pattern: EvidencePattern,
    pub weight: f64,
    pub rule: String,
    #[serde(flatten)]
    pub via: Via,
}

/// Where a premise stands in a consultation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternState {
    /// Not yet known; worth pursuing.
    Open,
    /// Established.
    Satisfied,
    /// Known not to hold, or given up on.
    Blocked,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RuleNetwork {
    pub partition: String,
    pub nodes: Vec<NetworkNode>,
    pub links: Vec<WeightedLink>,
    pub spaces: Vec<HypothesisSpace>,
    /// Final conclusions: hypotheses whose attribute no rule here uses as a premise.
    pub top: Vec<NodeId>,
    #[serde(skip)]
    rules: Vec<Rule>,
    #[serde(skip)]
    index: HashMap<NodeId, usize>,
    #[serde(skip)]
    askable: HashMap<String, bool>,
}

/// The frame of discernment of a verifiable attribute.
pub fn frame_of(decl: &AttributeDecl) -> Result<Frame, EvidenceError> {
    Frame::new(decl.name.clone(), decl.values.clone())
}

/// The mass function a rule contributes when its premise holds with certainty.
pub fn rule_mass_function(frame: Arc<Frame>, rule: &Rule) -> Result<MassFunction, EvidenceError> {
    match &rule.body {
        RuleBody::Mass { conclusions } => {
            let masses = conclusions
                .iter()
                .map(|(c, m)| Ok((frame.subset(&c.values)?, *m)))
                .collect::<Result<Vec<_>, EvidenceError>>()?;
            MassFunction::with_ignorance(frame, masses)
        }
        RuleBody::Ranked { relevance, conclusions } => {
            let rankings = conclusions
                .iter()
                .map(|(c, r)| Ok((frame.subset(&c.values)?, *r)))
                .collect::<Result<Vec<_>, EvidenceError>>()?;
            mass_from_rankings(frame, &rankings, *relevance)
        }
    }
}

struct Builder {
    nodes: Vec<NetworkNode>,
    index: HashMap<NodeId, usize>,
    links: Vec<WeightedLink>,
}

impl Builder {
    fn node(&mut self, id: NodeId, kind: impl FnOnce() -> NodeKind, rule: Option<&str>) -> NodeId {
        let i = *self.index.entry(id.clone()).or_insert_with(|| {
            self.nodes.push(NetworkNode {
                id: id.clone(),
                kind: kind(),
                rules: Vec::new(),
            });
            self.nodes.len() - 1
        });
        if let Some(r) = rule {
            let rules = &mut self.nodes[i].rules;
            if !rules.iter().any(|x| x == r) {
                rules.push(r.to_string());
            }
        }
        id
    }

    fn link(&mut self, from: &NodeId, to: &NodeId, weight: f64, kind: LinkKind, rule: Option<&str>) {
        let exists = self
            .links
            .iter()
            .any(|l| &l.from == from && &l.to == to && l.rule.as_deref() == rule);
        if !exists {
            self.links.push(WeightedLink {
                from: from.clone(),
                to: to.clone(),
                weight,
                kind,
                rule: rule.map(str::to_string),
            });
        }
    }
}

/// Compiles one partition of `kb` into its rule network.
pub fn compile_network(kb: &KnowledgeBase, partition: &str) -> Result<RuleNetwork, NetworkError> {
    if kb.partition_index(partition).is_none() {
        return Err(NetworkError::UnknownPartition(partition.to_string()));
    }
    if let Some(path) = crate::kb::partition_cycle(kb, partition) {
        return Err(NetworkError::Cycle {
            partition: partition.to_string(),
            path,
        });
    }

    let mut b = Builder {
        nodes: Vec::new(),
        index: HashMap::new(),
        links: Vec::new(),
    };
    let mut spaces: BTreeMap<String, HypothesisSpace> = BTreeMap::new();
    let mut space_order: Vec<String> = Vec::new();
    let rules: Vec<Rule> = kb.rules_in(partition).cloned().collect();

    for rule in &rules {
        let attribute = rule.concluded_attribute().to_string();
        let decl = kb
            .attribute(&attribute)
            .ok_or_else(|| NetworkError::UnknownAttribute(attribute.clone()))?;
        let mass_err = |source| NetworkError::RuleMass {
            rule: rule.id.clone(),
            source,
        };
        let frame = Arc::new(frame_of(decl).map_err(mass_err)?);
        let mass = rule_mass_function(Arc::clone(&frame), rule).map_err(mass_err)?;

        let premises: Vec<NodeId> = rule
            .lhs
            .iter()
            .map(|p| {
                let query = kb.attribute(&p.attribute).and_then(|a| a.query()).map(str::to_string);
                b.node(
                    NodeId::evidence(p),
                    || NodeKind::Evidence {
                        pattern: p.clone(),
                        query,
                    },
                    Some(&rule.id),
                )
            })
            .collect();
        let source = if let [single] = premises.as_slice() {
            single.clone()
        } else {
            let and = b.node(
                NodeId::and(&rule.id),
                || NodeKind::And { rule: rule.id.clone() },
                Some(&rule.id),
            );
            for p in &premises {
                b.link(p, &and, 1.0, LinkKind::Member, Some(&rule.id));
            }
            and
        };

        let space = spaces.entry(attribute.clone()).or_insert_with(|| {
            space_order.push(attribute.clone());
            HypothesisSpace {
                attribute: attribute.clone(),
                hypotheses: Vec::new(),
                rules: Vec::new(),
            }
        });
        space.rules.push(rule.id.clone());
        for c in rule.conclusions() {
            let subset = frame.subset(&c.values).map_err(mass_err)?;
            let hyp = b.node(
                NodeId::hypothesis(&attribute, &c.values),
                || NodeKind::Hypothesis {
                    attribute: attribute.clone(),
                    values: c.values.clone(),
                },
                Some(&rule.id),
            );
            if !space.hypotheses.contains(&hyp) {
                space.hypotheses.push(hyp.clone());
            }
            let weight = mass.mass(subset);
            if weight > 0.0 {
                b.link(&source, &hyp, weight, LinkKind::Conclusion, Some(&rule.id));
            }
        }
    }

    // level nodes: space(a) -> level(a) -> every evidence node over a
    let evidence: Vec<(NodeId, String)> = b
        .nodes
        .iter()
        .filter_map(|n| match &n.kind {
            NodeKind::Evidence { pattern, query: None } => Some((n.id.clone(), pattern.attribute.clone())),
            _ => None,
        })
        .collect();
    for (ev, attribute) in evidence {
        let level = b.node(
            NodeId::level(&attribute),
            || NodeKind::Level {
                attribute: attribute.clone(),
            },
            None,
        );
        b.link(&level, &ev, 1.0, LinkKind::Level, None);
        if let Some(space) = spaces.get(&attribute) {
            for hyp in &space.hypotheses {
                b.link(hyp, &level, 1.0, LinkKind::Level, None);
            }
        }
    }

    let top = b
        .nodes
        .iter()
        .filter(|n| match &n.kind {
            NodeKind::Hypothesis { attribute, .. } => {
                !rules.iter().any(|r| r.lhs.iter().any(|p| &p.attribute == attribute))
            }
            _ => false,
        })
        .map(|n| n.id.clone())
        .collect();
    let askable = kb.attributes.iter().map(|a| (a.name.clone(), a.is_askable())).collect();

    Ok(RuleNetwork {
        partition: partition.to_string(),
        nodes: b.nodes,
        links: b.links,
        spaces: space_order
            .iter()
            .map(|a| spaces.remove(a).expect("space recorded"))
            .collect(),
        top,
        rules,
        index: b.index,
        askable,
    })
}

impl RuleNetwork {
    pub fn node(&self, id: &NodeId) -> Option<&NetworkNode> {
        self.index.get(id).map(|&i| &self.nodes[i])
    }

    pub fn node_by_str(&self, id: &str) -> Option<&NetworkNode> {
        self.node(&NodeId(id.to_string()))
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn links_from<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a WeightedLink> + 'a {
        self.links.iter().filter(move |l| &l.from == id)
    }

    pub fn links_to<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a WeightedLink> + 'a {
        self.links.iter().filter(move |l| &l.to == id)
    }

    pub fn space(&self, attribute: &str) -> Option<&HypothesisSpace> {
        self.spaces.iter().find(|s| s.attribute == attribute)
    }

    /// The attributes this partition concludes but never uses as premises,
    /// in order of first appearance.
    pub fn goal_attributes(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for id in &self.top {
            if let Some(NodeKind::Hypothesis { attribute, .. }) = self.node(id).map(|n| &n.kind) {
                if !out.contains(&attribute.as_str()) {
                    out.push(attribute);
                }
            }
        }
        out
    }

    /// The hypothesis space concluding `attribute`.
    pub fn subspace_of(&self, attribute: &str) -> Result<&HypothesisSpace, NetworkError> {
        match self.askable.get(attribute) {
            None => Err(NetworkError::UnknownAttribute(attribute.to_string())),
            Some(true) => Err(NetworkError::NotVerifiable(attribute.to_string())),
            Some(false) => self.space(attribute).ok_or_else(|| NetworkError::NoSpace {
                partition: self.partition.clone(),
                attribute: attribute.to_string(),
            }),
        }
    }

    /// Evidence worth pursuing to support `attribute = value`.
    ///
    /// Rules concluding a subset that contains the target are taken in order
    /// of their heaviest such link, then declaration order. A rule with a
    /// blocked premise can no longer fire and is passed over. Within a
    /// conjunction askable premises come before verifiable ones, which are
    /// reached through their level node. Each evidence node is listed once.
    pub fn candidates_for(
        &self,
        attribute: &str,
        value: &str,
        state: impl Fn(&EvidencePattern) -> PatternState,
    ) -> Vec<Candidate> {
        let mut ranked: Vec<(usize, &Rule, f64)> = Vec::new();
        for (order, rule) in self.rules.iter().enumerate() {
            if rule.concluded_attribute() != attribute {
                continue;
            }
            let weight = self
                .links
                .iter()
                .filter(|l| l.kind == LinkKind::Conclusion && l.rule.as_deref() == Some(&rule.id))
                .filter(|l| match self.node(&l.to).map(|n| &n.kind) {
                    Some(NodeKind::Hypothesis { values, .. }) => values.iter().any(|v| v == value),
                    _ => false,
                })
                .map(|l| l.weight)
                .fold(0.0, f64::max);
            if weight > 0.0 {
                ranked.push((order, rule, weight));
            }
        }
        ranked.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));

        let mut out: Vec<Candidate> = Vec::new();
        for (_, rule, weight) in ranked {
            let states: Vec<PatternState> = rule.lhs.iter().map(&state).collect();
            if states.contains(&PatternState::Blocked) {
                continue;
            }
            let conjunctive = rule.lhs.len() > 1;
            let mut members: Vec<&EvidencePattern> = rule
                .lhs
                .iter()
                .zip(&states)
                .filter(|(_, s)| **s == PatternState::Open)
                .map(|(p, _)| p)
                .collect();
            members.sort_by_key(|p| !self.askable.get(&p.attribute).copied().unwrap_or(false));
            for p in members {
                let node = NodeId::evidence(p);
                if out.iter().any(|c| c.node == node) {
                    continue;
                }
                let via = if self.askable.get(&p.attribute).copied().unwrap_or(false) {
                    if conjunctive {
                        Via::AndNode { rule: rule.id.clone() }
                    } else {
                        Via::Direct
                    }
                } else if self.space(&p.attribute).is_some() {
                    Via::LevelNode {
                        attribute: p.attribute.clone(),
                    }
                } else {
                    // concluded in another partition; nothing to pursue here
                    continue;
                };
                out.push(Candidate {
                    node,
                    pattern: p.clone(),
                    weight,
                    rule: rule.id.clone(),
                    via,
                });
            }
        }
        out
    }

    /// [`Self::candidates_for`] with nothing yet known.
    pub fn candidates_for_all(&self, attribute: &str, value: &str) -> Vec<Candidate> {
        self.candidates_for(attribute, value, |_| PatternState::Open)
    }
}
