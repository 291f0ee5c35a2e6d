use serde::Serialize;

/// Exit threshold used when a knowledge base does not set one.
pub const DEFAULT_EXIT_THRESHOLD: f64 = 0.95;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    /// Obtained by asking the user.
    Askable { query: String },
    /// Obtained from rule firings; defines a frame of discernment.
    Verifiable,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttributeDecl {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
    pub values: Vec<String>,
}

impl AttributeDecl {
    pub fn is_askable(&self) -> bool {
        matches!(self.kind, AttributeKind::Askable { .. })
    }

    pub fn is_verifiable(&self) -> bool {
        matches!(self.kind, AttributeKind::Verifiable)
    }

    pub fn query(&self) -> Option<&str> {
        match &self.kind {
            AttributeKind::Askable { query } => Some(query),
            AttributeKind::Verifiable => None,
        }
    }

    pub fn has_value(&self, value: &str) -> bool {
        self.values.iter().any(|v| v == value)
    }
}

/// One attribute-value premise, possibly negated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EvidencePattern {
    pub attribute: String,
    pub value: String,
    pub negated: bool,
}

impl EvidencePattern {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        EvidencePattern {
            attribute: attribute.into(),
            value: value.into(),
            negated: false,
        }
    }

    pub fn negated(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        EvidencePattern {
            negated: true,
            ..EvidencePattern::new(attribute, value)
        }
    }
}

impl std::fmt::Display for EvidencePattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.negated {
            write!(f, "<{}> not <{}>", self.attribute, self.value)
        } else {
            write!(f, "<{}> <{}>", self.attribute, self.value)
        }
    }
}

/// A disjunctive conclusion: a nonempty subset of one attribute's values,
/// kept in declaration order. Negated conclusions are complemented on load.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Conclusion {
    pub attribute: String,
    pub values: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum RuleBody {
    /// Expert rankings on a 1-10 scale plus a 1-10 relevance; normalized to
    /// masses when the knowledge base is compiled.
    Ranked {
        relevance: u8,
        conclusions: Vec<(Conclusion, u8)>,
    },
    /// Explicit masses; whatever they leave over goes to Θ.
    Mass { conclusions: Vec<(Conclusion, f64)> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rule {
    pub id: String,
    pub partition: String,
    pub lhs: Vec<EvidencePattern>,
    pub body: RuleBody,
}

impl Rule {
    pub fn conclusions(&self) -> Vec<&Conclusion> {
        match &self.body {
            RuleBody::Ranked { conclusions, .. } => conclusions.iter().map(|(c, _)| c).collect(),
            RuleBody::Mass { conclusions } => conclusions.iter().map(|(c, _)| c).collect(),
        }
    }

    /// The single attribute this rule concludes.
    pub fn concluded_attribute(&self) -> &str {
        let first = match &self.body {
            RuleBody::Ranked { conclusions, .. } => conclusions.first().map(|(c, _)| c),
            RuleBody::Mass { conclusions } => conclusions.first().map(|(c, _)| c),
        };
        first.map(|c| c.attribute.as_str()).unwrap_or_default()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KnowledgeBase {
    pub attributes: Vec<AttributeDecl>,
    pub partitions: Vec<String>,
    pub rules: Vec<Rule>,
    pub entry_partition: Option<String>,
    pub initial_questions: Vec<String>,
    pub exit_threshold: f64,
}

impl Default for KnowledgeBase {
    fn default() -> Self {
        KnowledgeBase {
            attributes: Vec::new(),
            partitions: Vec::new(),
            rules: Vec::new(),
            entry_partition: None,
            initial_questions: Vec::new(),
            exit_threshold: DEFAULT_EXIT_THRESHOLD,
        }
    }
}

impl KnowledgeBase {
    pub fn attribute(&self, name: &str) -> Option<&AttributeDecl> {
        self.attributes.iter().find(|a| a.name == name)
    }

    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn partition_index(&self, name: &str) -> Option<usize> {
        self.partitions.iter().position(|p| p == name)
    }

    /// Index of the partition a consultation starts in.
    pub fn entry_index(&self) -> usize {
        self.entry_partition
            .as_deref()
            .and_then(|p| self.partition_index(p))
            .unwrap_or(0)
    }

    pub fn rules_in<'a>(&'a self, partition: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.partition == partition)
    }

    pub fn rules_concluding<'a>(&'a self, attribute: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.concluded_attribute() == attribute)
    }

    /// True when some rule uses `attribute` as a premise.
    pub fn is_premise(&self, attribute: &str) -> bool {
        self.rules
            .iter()
            .any(|r| r.lhs.iter().any(|p| p.attribute == attribute))
    }
}
