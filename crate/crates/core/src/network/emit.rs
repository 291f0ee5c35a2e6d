use std::fmt::Write;

use serde::Serialize;

use super::{LinkKind, NodeKind, RuleNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Dot,
    Json,
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the network as Graphviz DOT or as a JSON node/link document.
///
/// Output depends only on the network, so emitting the same network twice
/// gives identical bytes.
pub fn emit_graph(net: &RuleNetwork, format: GraphFormat) -> String {
    match format {
        GraphFormat::Dot => dot(net),
        GraphFormat::Json => json(net),
    }
}

fn dot(net: &RuleNetwork) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", dot_escape(&net.partition));
    let _ = writeln!(s, "  rankdir=BT;");
    for n in &net.nodes {
        let shape = match n.kind {
            NodeKind::Hypothesis { .. } if net.top.contains(&n.id) => "doubleoctagon",
            NodeKind::Hypothesis { .. } => "ellipse",
            NodeKind::Evidence { query: Some(_), .. } => "box",
            NodeKind::Evidence { query: None, .. } => "box, style=dashed",
            NodeKind::And { .. } => "diamond",
            NodeKind::Level { .. } => "hexagon",
        };
        let _ = writeln!(
            s,
            "  \"{}\" [shape={shape}, label=\"{}\"];",
            dot_escape(n.id.as_str()),
            dot_escape(&n.label())
        );
    }
    for l in &net.links {
        let label = match (&l.kind, &l.rule) {
            (LinkKind::Conclusion, Some(r)) => format!(" [label=\"{} {}\"]", l.weight, dot_escape(r)),
            (LinkKind::Level, _) => " [style=dotted]".to_string(),
            _ => String::new(),
        };
        let _ = writeln!(
            s,
            "  \"{}\" -> \"{}\"{label};",
            dot_escape(l.from.as_str()),
            dot_escape(l.to.as_str())
        );
    }
    s.push_str("}\n");
    s
}

fn json(net: &RuleNetwork) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        schema: u32,
        #[serde(flatten)]
        net: &'a RuleNetwork,
    }
    let mut s = serde_json::to_string_pretty(&Doc { schema: 1, net }).expect("network serializes");
    s.push('\n');
    s
}
