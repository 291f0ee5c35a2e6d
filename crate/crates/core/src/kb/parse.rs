use std::collections::HashMap;

use super::model::*;
use super::sexp::{read_all, Pos, Sexp};
use super::{ParseError, ParseErrorKind};

type Result<T> = std::result::Result<T, ParseError>;

fn err<T>(kind: ParseErrorKind, at: Pos, message: impl Into<String>) -> Result<T> {
    Err(ParseError::new(kind, at, message))
}

fn syntax<T>(at: Pos, message: impl Into<String>) -> Result<T> {
    err(ParseErrorKind::Syntax, at, message)
}

fn atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str> {
    match s {
        Sexp::Atom(a, _) => Ok(a),
        other => syntax(other.pos(), format!("expected {what}, found a {}", other.describe())),
    }
}

fn list<'a>(s: &'a Sexp, what: &str) -> Result<&'a [Sexp]> {
    match s {
        Sexp::List(items, _) => Ok(items),
        other => syntax(other.pos(), format!("expected {what}, found a {}", other.describe())),
    }
}

fn atoms(s: &Sexp, what: &str) -> Result<Vec<String>> {
    list(s, what)?
        .iter()
        .map(|x| atom(x, "a name").map(str::to_string))
        .collect()
}

fn arity(items: &[Sexp], at: Pos, form: &str, expected: usize) -> Result<()> {
    if items.len() == expected {
        Ok(())
    } else {
        syntax(
            at,
            format!("`{form}` takes {} argument(s), found {}", expected - 1, items.len() - 1),
        )
    }
}

/// Parses a knowledge base in the s-expression text format.
///
/// Declarations may appear in any order; rules are resolved against them
/// once every form has been read. Negated conclusions are replaced by their
/// complement within the concluded attribute's values.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase> {
    let forms = read_all(text)?;
    let mut kb = KnowledgeBase::default();
    let mut decl_pos: HashMap<String, Pos> = HashMap::new();
    let mut rule_forms = Vec::new();
    let mut entry: Option<(String, Pos)> = None;
    let mut questions: Option<(Vec<(String, Pos)>, Pos)> = None;

    for form in &forms {
        let at = form.pos();
        let items = list(form, "a top-level form")?;
        let Some(head) = items.first() else {
            return syntax(at, "empty form");
        };
        match atom(head, "a form keyword")? {
            "frame" => {
                arity(items, at, "frame", 3)?;
                let name = atom(&items[1], "an attribute name")?;
                let values = parse_values(&items[2])?;
                declare(&mut kb, &mut decl_pos, at, name, AttributeKind::Verifiable, values)?;
            }
            "attribute" => {
                if items.len() < 4 {
                    return syntax(at, "`attribute` needs a name, a kind and values");
                }
                let name = atom(&items[1], "an attribute name")?;
                let kind = match atom(&items[2], "`askable` or `verifiable`")? {
                    "askable" => {
                        arity(items, at, "attribute … askable", 5)?;
                        let Sexp::Str(query, qpos) = &items[3] else {
                            return syntax(items[3].pos(), "askable attributes need a quoted query");
                        };
                        if query.trim().is_empty() {
                            return syntax(*qpos, "query text is empty");
                        }
                        AttributeKind::Askable { query: query.clone() }
                    }
                    "verifiable" => {
                        arity(items, at, "attribute … verifiable", 4)?;
                        AttributeKind::Verifiable
                    }
                    other => {
                        return syntax(
                            items[2].pos(),
                            format!("unknown attribute kind `{other}`; use askable or verifiable"),
                        )
                    }
                };
                let values = parse_values(items.last().expect("length checked"))?;
                declare(&mut kb, &mut decl_pos, at, name, kind, values)?;
            }
            "partition" => {
                arity(items, at, "partition", 2)?;
                let name = atom(&items[1], "a partition name")?;
                if kb.partitions.iter().any(|p| p == name) {
                    return err(
                        ParseErrorKind::DuplicateDeclaration,
                        at,
                        format!("partition `{name}` declared twice"),
                    );
                }
                kb.partitions.push(name.to_string());
            }
            "entry-partition" => {
                arity(items, at, "entry-partition", 2)?;
                entry = Some((atom(&items[1], "a partition name")?.to_string(), items[1].pos()));
            }
            "initial-questions" => {
                let names = items[1..]
                    .iter()
                    .map(|s| Ok((atom(s, "an attribute name")?.to_string(), s.pos())))
                    .collect::<Result<Vec<_>>>()?;
                questions = Some((names, at));
            }
            "exit-threshold" => {
                arity(items, at, "exit-threshold", 2)?;
                let raw = atom(&items[1], "a number")?;
                let t: f64 = raw
                    .parse()
                    .or_else(|_| syntax(items[1].pos(), format!("`{raw}` is not a number")))?;
                if !(t > 0.0 && t <= 1.0) {
                    return syntax(items[1].pos(), format!("exit threshold {t} is outside (0, 1]"));
                }
                kb.exit_threshold = t;
            }
            "rule" => rule_forms.push(form),
            other => return syntax(head.pos(), format!("unknown form `{other}`")),
        }
    }

    if let Some((name, at)) = entry {
        if kb.partition_index(&name).is_none() {
            return err(
                ParseErrorKind::UndeclaredPartition,
                at,
                format!("entry partition `{name}` is not declared"),
            );
        }
        kb.entry_partition = Some(name);
    }
    if let Some((names, _)) = questions {
        for (name, at) in names {
            if kb.attribute(&name).is_none() {
                return err(
                    ParseErrorKind::UnknownAttribute,
                    at,
                    format!("initial question `{name}` is not a declared attribute"),
                );
            }
            kb.initial_questions.push(name);
        }
    }

    let mut rule_pos: HashMap<String, Pos> = HashMap::new();
    for form in rule_forms {
        let rule = parse_rule(&kb, form)?;
        if let Some(first) = rule_pos.get(&rule.id) {
            return err(
                ParseErrorKind::DuplicateRule,
                form.pos(),
                format!(
                    "duplicate rule id `{}` at {} (first defined at {})",
                    rule.id,
                    form.pos(),
                    first
                ),
            );
        }
        rule_pos.insert(rule.id.clone(), form.pos());
        kb.rules.push(rule);
    }
    Ok(kb)
}

fn parse_values(s: &Sexp) -> Result<Vec<String>> {
    let values = atoms(s, "a list of values")?;
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return err(
                ParseErrorKind::DuplicateDeclaration,
                s.pos(),
                format!("value `{v}` listed twice"),
            );
        }
    }
    if values.is_empty() {
        return syntax(s.pos(), "an attribute needs at least one value");
    }
    Ok(values)
}

fn declare(
    kb: &mut KnowledgeBase,
    seen: &mut HashMap<String, Pos>,
    at: Pos,
    name: &str,
    kind: AttributeKind,
    values: Vec<String>,
) -> Result<()> {
    if let Some(first) = seen.get(name) {
        return err(
            ParseErrorKind::DuplicateDeclaration,
            at,
            format!("attribute `{name}` declared twice (first at {first})"),
        );
    }
    seen.insert(name.to_string(), at);
    kb.attributes.push(AttributeDecl {
        name: name.to_string(),
        kind,
        values,
    });
    Ok(())
}

fn parse_rule(kb: &KnowledgeBase, form: &Sexp) -> Result<Rule> {
    let at = form.pos();
    let items = list(form, "a rule")?;
    if items.len() < 2 {
        return syntax(at, "`rule` needs an id");
    }
    let id = atom(&items[1], "a rule id")?.to_string();

    let mut args: HashMap<&str, &Sexp> = HashMap::new();
    let mut rest = items[2..].iter();
    while let Some(key) = rest.next() {
        let k = atom(key, "a `:keyword`")?;
        if !matches!(k, ":partition" | ":lhs" | ":relevance" | ":rhs-mass" | ":rhs-rank") {
            return syntax(key.pos(), format!("unknown rule keyword `{k}`"));
        }
        let Some(value) = rest.next() else {
            return syntax(key.pos(), format!("`{k}` has no value"));
        };
        if args.insert(k, value).is_some() {
            return syntax(key.pos(), format!("`{k}` given twice"));
        }
    }

    let Some(part) = args.get(":partition") else {
        return syntax(at, format!("rule `{id}` has no :partition"));
    };
    let partition = atom(part, "a partition name")?.to_string();
    if kb.partition_index(&partition).is_none() {
        return err(
            ParseErrorKind::UndeclaredPartition,
            part.pos(),
            format!("rule `{id}` names undeclared partition `{partition}`"),
        );
    }

    let Some(lhs_form) = args.get(":lhs") else {
        return syntax(at, format!("rule `{id}` has no :lhs"));
    };
    let lhs = list(lhs_form, "a list of premises")?
        .iter()
        .map(|p| parse_pattern(kb, p))
        .collect::<Result<Vec<_>>>()?;
    if lhs.is_empty() {
        return err(
            ParseErrorKind::InvalidRule,
            lhs_form.pos(),
            format!("rule `{id}` has no premises"),
        );
    }

    let body = match (args.get(":rhs-mass"), args.get(":rhs-rank")) {
        (Some(_), Some(_)) => return syntax(at, format!("rule `{id}` gives both :rhs-mass and :rhs-rank")),
        (None, None) => return syntax(at, format!("rule `{id}` has no :rhs-mass or :rhs-rank")),
        (Some(rhs), None) => {
            if let Some(r) = args.get(":relevance") {
                return syntax(r.pos(), "`:relevance` only applies to :rhs-rank rules");
            }
            let mut conclusions = Vec::new();
            let mut total = 0.0;
            for (conc, weight) in parse_rhs(kb, rhs)? {
                let raw = atom(weight, "a mass")?;
                let mass: f64 = raw
                    .parse()
                    .or_else(|_| syntax(weight.pos(), format!("`{raw}` is not a number")))?;
                if !(mass > 0.0 && mass <= 1.0) {
                    return err(
                        ParseErrorKind::InvalidRule,
                        weight.pos(),
                        format!("mass {mass} is outside (0, 1]"),
                    );
                }
                total += mass;
                conclusions.push((conc, mass));
            }
            if total > 1.0 + crate::evidence::MASS_TOLERANCE {
                return err(
                    ParseErrorKind::InvalidRule,
                    rhs.pos(),
                    format!("rule `{id}` assigns total mass {total} > 1"),
                );
            }
            RuleBody::Mass { conclusions }
        }
        (None, Some(rhs)) => {
            let Some(rel) = args.get(":relevance") else {
                return syntax(at, format!("ranked rule `{id}` needs :relevance"));
            };
            let relevance = parse_scale(rel, "relevance")?;
            let mut conclusions = Vec::new();
            for (conc, weight) in parse_rhs(kb, rhs)? {
                conclusions.push((conc, parse_scale(weight, "ranking")?));
            }
            RuleBody::Ranked { relevance, conclusions }
        }
    };

    let rule = Rule {
        id,
        partition,
        lhs,
        body,
    };
    let attribute = rule.concluded_attribute();
    if let Some(other) = rule.conclusions().iter().find(|c| c.attribute != attribute) {
        return err(
            ParseErrorKind::MixedConclusion,
            at,
            format!(
                "rule `{}` concludes both `{}` and `{}`; a rule may conclude only one attribute",
                rule.id, attribute, other.attribute
            ),
        );
    }
    Ok(rule)
}

fn parse_scale(s: &Sexp, what: &str) -> Result<u8> {
    let raw = atom(s, what)?;
    match raw.parse::<u8>() {
        Ok(v) if (1..=10).contains(&v) => Ok(v),
        _ => err(
            ParseErrorKind::InvalidRule,
            s.pos(),
            format!("{what} `{raw}` must be an integer from 1 to 10"),
        ),
    }
}

fn lookup<'a>(kb: &'a KnowledgeBase, s: &Sexp, name: &str) -> Result<&'a AttributeDecl> {
    kb.attribute(name).map_or_else(
        || {
            err(
                ParseErrorKind::UnknownAttribute,
                s.pos(),
                format!("unknown attribute `{name}`"),
            )
        },
        Ok,
    )
}

fn check_value(decl: &AttributeDecl, s: &Sexp, value: &str) -> Result<()> {
    if decl.has_value(value) {
        Ok(())
    } else {
        err(
            ParseErrorKind::UnknownValue,
            s.pos(),
            format!("`{value}` is not a value of `{}`", decl.name),
        )
    }
}

/// `(attr value)` or `(not (attr value))`.
fn parse_pattern(kb: &KnowledgeBase, s: &Sexp) -> Result<EvidencePattern> {
    let items = list(s, "a premise `(attribute value)`")?;
    if let [Sexp::Atom(head, _), inner] = items {
        if head == "not" {
            let mut p = parse_pattern(kb, inner)?;
            if p.negated {
                return syntax(s.pos(), "double negation");
            }
            p.negated = true;
            return Ok(p);
        }
    }
    let [attr, value] = items else {
        return syntax(s.pos(), "a premise is `(attribute value)`");
    };
    let name = atom(attr, "an attribute name")?;
    let decl = lookup(kb, attr, name)?;
    let v = atom(value, "a value")?;
    check_value(decl, value, v)?;
    Ok(EvidencePattern::new(name, v))
}

/// Each RHS entry is `(conclusion weight)`; weights are interpreted by the caller.
fn parse_rhs<'a>(kb: &KnowledgeBase, s: &'a Sexp) -> Result<Vec<(Conclusion, &'a Sexp)>> {
    let entries = list(s, "a list of conclusions")?;
    if entries.is_empty() {
        return err(
            ParseErrorKind::InvalidRule,
            s.pos(),
            "a rule needs at least one conclusion",
        );
    }
    entries
        .iter()
        .map(|e| {
            let items = list(e, "`(conclusion weight)`")?;
            let [conc, weight] = items else {
                return syntax(e.pos(), "a conclusion entry is `((attribute value…) weight)`");
            };
            Ok((parse_conclusion(kb, conc)?, weight))
        })
        .collect()
}

/// `(attr v1 v2 …)` or `(not (attr v1 …))`.
fn parse_conclusion(kb: &KnowledgeBase, s: &Sexp) -> Result<Conclusion> {
    let items = list(s, "a conclusion `(attribute value…)`")?;
    let negated = matches!(items, [Sexp::Atom(h, _), Sexp::List(..)] if h == "not");
    let items = if negated {
        list(&items[1], "a conclusion")?
    } else {
        items
    };
    let Some((attr, values)) = items.split_first() else {
        return syntax(s.pos(), "empty conclusion");
    };
    let name = atom(attr, "an attribute name")?;
    let decl = lookup(kb, attr, name)?;
    if !decl.is_verifiable() {
        return err(
            ParseErrorKind::InvalidRule,
            attr.pos(),
            format!("`{name}` is askable; rules may only conclude verifiable attributes"),
        );
    }
    if values.is_empty() {
        return err(
            ParseErrorKind::InvalidRule,
            s.pos(),
            "a conclusion needs at least one value",
        );
    }
    let mut named = Vec::new();
    for v in values {
        let value = atom(v, "a value")?;
        check_value(decl, v, value)?;
        named.push(value);
    }
    let selected: Vec<String> = decl
        .values
        .iter()
        .filter(|v| named.contains(&v.as_str()) != negated)
        .cloned()
        .collect();
    if negated && selected.is_empty() {
        return err(
            ParseErrorKind::InvalidRule,
            s.pos(),
            format!("negating every value of `{name}` leaves nothing to conclude"),
        );
    }
    if negated && selected.len() == decl.values.len() {
        return err(
            ParseErrorKind::InvalidRule,
            s.pos(),
            "cannot negate an empty conclusion",
        );
    }
    Ok(Conclusion {
        attribute: name.to_string(),
        values: selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"
        (frame site_of_play (craton shelf margin))
        (attribute dist askable "How far is the play from the margin (miles)?" (less_equal_200 greater_200))
        (partition level1)
    "#;

    fn kb(rules: &str) -> std::result::Result<KnowledgeBase, ParseError> {
        parse_kb(&format!("{HEADER}\n{rules}"))
    }

    #[test]
    fn parses_mass_rule() {
        let kb = kb("(rule rule03 :partition level1 :lhs ((dist less_equal_200)) :rhs-mass (((site_of_play shelf margin) 0.8)))").unwrap();
        let r = &kb.rules[0];
        assert_eq!(r.id, "rule03");
        assert_eq!(r.lhs, vec![EvidencePattern::new("dist", "less_equal_200")]);
        assert_eq!(
            r.body,
            RuleBody::Mass {
                conclusions: vec![(
                    Conclusion {
                        attribute: "site_of_play".into(),
                        values: vec!["shelf".into(), "margin".into()],
                    },
                    0.8
                )]
            }
        );
    }

    #[test]
    fn empty_rule_list() {
        let kb = kb("").unwrap();
        assert!(kb.rules.is_empty());
        assert_eq!(kb.attributes.len(), 2);
        assert_eq!(kb.exit_threshold, DEFAULT_EXIT_THRESHOLD);
    }

    #[test]
    fn negated_conclusion_is_complemented() {
        let text = r#"
            (attribute raw_material_cause verifiable (bin_level_fluctuations inconsistency_raw_materials post_scale_contamination))
            (attribute process askable "Which process?" (continuous_flow_fiberglass batch))
            (attribute viscosity askable "Molten glass viscosity?" (nominal high low))
            (partition p)
            (rule r1 :partition p :lhs ((process continuous_flow_fiberglass) (not (viscosity nominal)))
                     :rhs-mass (((not (raw_material_cause bin_level_fluctuations)) 0.7)))
        "#;
        let kb = parse_kb(text).unwrap();
        let r = &kb.rules[0];
        assert_eq!(r.lhs[1], EvidencePattern::negated("viscosity", "nominal"));
        assert_eq!(
            r.conclusions()[0].values,
            vec!["inconsistency_raw_materials", "post_scale_contamination"]
        );
    }

    #[test]
    fn error_kinds_and_positions() {
        let e =
            kb("(rule r :partition level1 :lhs ((dist nowhere)) :rhs-mass (((site_of_play shelf) 0.5)))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownValue);

        let e = kb("(rule r :partition level1 :lhs ((depth x)) :rhs-mass (((site_of_play shelf) 0.5)))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UnknownAttribute);

        let e = parse_kb(
            "(frame a (x y)) (frame b (u v)) (attribute q askable \"?\" (yes no)) (partition p)\n\
             (rule r :partition p :lhs ((q yes)) :rhs-mass (((a x) 0.5) ((b u) 0.2)))",
        )
        .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MixedConclusion);

        let e = kb(
            "(rule r :partition level1 :lhs ((dist less_equal_200)) :rhs-mass (((site_of_play shelf) 0.5)))\n\
             (rule r :partition level1 :lhs ((dist greater_200)) :rhs-mass (((site_of_play craton) 0.5)))",
        )
        .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::DuplicateRule);
        assert!(e.message.contains("first defined at 6:1"), "{}", e.message);
        assert_eq!(e.line, 7);

        let e = kb("(rule r :partition nowhere :lhs ((dist greater_200)) :rhs-mass (((site_of_play craton) 0.5)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::UndeclaredPartition);

        let e = kb("(rule r :partition level1 :lhs ((dist greater_200)) :rhs-mass (((site_of_play craton) 0.5))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
        assert_eq!((e.line, e.column), (6, 1));
    }

    #[test]
    fn rejects_bad_weights() {
        let e = kb("(rule r :partition level1 :lhs ((dist greater_200)) :rhs-mass (((site_of_play craton) 0.7) ((site_of_play shelf) 0.5)))").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
        let e = kb(
            "(rule r :partition level1 :lhs ((dist greater_200)) :relevance 8 :rhs-rank (((site_of_play craton) 0)))",
        )
        .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
        let e = kb("(rule r :partition level1 :lhs ((dist greater_200)) :rhs-rank (((site_of_play craton) 3)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Syntax);
    }

    #[test]
    fn rules_cannot_conclude_askable_attributes() {
        let e = kb("(rule r :partition level1 :lhs ((dist greater_200)) :rhs-mass (((dist less_equal_200) 0.5)))")
            .unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::InvalidRule);
    }

    #[test]
    fn config_forms() {
        let kb = kb("(entry-partition level1) (initial-questions dist) (exit-threshold 0.9)").unwrap();
        assert_eq!(kb.entry_partition.as_deref(), Some("level1"));
        assert_eq!(kb.initial_questions, vec!["dist"]);
        assert_eq!(kb.exit_threshold, 0.9);
        assert!(super::parse_kb(&format!("{HEADER} (exit-threshold 0)")).is_err());
    }
}
