//! Consultation reports: per-frame masses, a Bel/Pl table, established
//! evidence, fired rules and the trace, as text or versioned JSON.

use std::fmt::Write as _;

use serde::Serialize;

use crate::engine::{EstablishedEvidence, Session, SessionStatus, TraceEvent};
use crate::evidence::{belief_of, plausibility_of, Belief, HypSubset, MassFunction};

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema: u32,
    pub status: SessionStatus,
    pub partition: String,
    pub threshold: f64,
    pub conclusions: Vec<ConclusionRow>,
    pub frames: Vec<FrameBeliefs>,
    pub evidence: Vec<EstablishedEvidence>,
    pub fired: Vec<String>,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConclusionRow {
    pub frame: String,
    pub value: Option<String>,
    pub belief: Belief,
    pub definite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameBeliefs {
    pub frame: String,
    /// Focal elements, heaviest first, with Θ last.
    pub masses: Vec<MassRow>,
    pub hypotheses: Vec<HypothesisRow>,
    pub ignorance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassRow {
    pub subset: Vec<String>,
    pub theta: bool,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisRow {
    pub value: String,
    pub belief: Belief,
    pub plausibility: Belief,
}

pub fn frame_beliefs(m: &MassFunction) -> FrameBeliefs {
    let frame = m.frame();
    let theta = frame.theta();
    let mut masses: Vec<MassRow> = m
        .focal()
        .map(|(s, mass)| MassRow {
            subset: frame.names(s).into_iter().map(str::to_string).collect(),
            theta: s == theta,
            mass,
        })
        .collect();
    masses.sort_by(|a, b| a.theta.cmp(&b.theta).then(b.mass.total_cmp(&a.mass)));
    let hypotheses = frame
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let s = HypSubset::singleton(i);
            HypothesisRow {
                value: v.clone(),
                belief: belief_of(m, s).expect("singleton lies in its frame"),
                plausibility: plausibility_of(m, s).expect("singleton lies in its frame"),
            }
        })
        .collect();
    FrameBeliefs {
        frame: frame.attribute().to_string(),
        masses,
        hypotheses,
        ignorance: m.ignorance(),
    }
}

pub fn report(s: &Session) -> Report {
    Report {
        schema: REPORT_SCHEMA,
        status: s.status(),
        partition: s.partition().to_string(),
        threshold: s.policy().threshold(),
        conclusions: s
            .conclusions()
            .into_iter()
            .map(|(frame, lead, definite)| ConclusionRow {
                frame,
                belief: lead.as_ref().map(|l| l.belief).unwrap_or(Belief::ZERO),
                value: lead.map(|l| l.value),
                definite,
            })
            .collect(),
        frames: s.masses().iter().map(frame_beliefs).collect(),
        evidence: s.evidence().to_vec(),
        fired: s.fired().to_vec(),
        trace: s.trace().to_vec(),
    }
}

fn subset_label(row: &MassRow) -> String {
    if row.theta {
        "Θ".to_string()
    } else {
        format!("{{{}}}", row.subset.join(","))
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "status: {}", self.status);
        let _ = writeln!(w, "partition: {}", self.partition);
        let _ = writeln!(w, "exit threshold: {:.3}", self.threshold);

        let _ = writeln!(w, "\nconclusion");
        if self.conclusions.is_empty() {
            let _ = writeln!(w, "  none");
        }
        for c in &self.conclusions {
            match &c.value {
                Some(v) => {
                    let kind = if c.definite { "definite" } else { "below threshold" };
                    let _ = writeln!(w, "  {} = {}  Bel {}  ({kind})", c.frame, v, c.belief);
                }
                None => {
                    let _ = writeln!(w, "  {}: no evidence", c.frame);
                }
            }
        }

        for f in &self.frames {
            let _ = writeln!(w, "\nframe {}", f.frame);
            let labels: Vec<String> = f.masses.iter().map(subset_label).collect();
            let width = labels.iter().map(|l| l.chars().count()).max().unwrap_or(0);
            for (label, row) in labels.iter().zip(&f.masses) {
                let pad = width - label.chars().count();
                let _ = writeln!(w, "  m({label}){:pad$}  {:.3}", "", row.mass);
            }
            let width = f.hypotheses.iter().map(|h| h.value.len()).max().unwrap_or(0).max(10);
            let _ = writeln!(w, "  {:width$}  Bel    Pl", "hypothesis");
            for h in &f.hypotheses {
                let _ = writeln!(w, "  {:width$}  {}  {}", h.value, h.belief, h.plausibility);
            }
        }

        let _ = writeln!(w, "\nevidence");
        if self.evidence.is_empty() {
            let _ = writeln!(w, "  none");
        }
        for e in &self.evidence {
            let _ = writeln!(w, "  {} = {}  {}  {}", e.attribute, e.value, e.belief, e.source);
        }

        let fired = if self.fired.is_empty() {
            "none".to_string()
        } else {
            self.fired.join(", ")
        };
        let _ = writeln!(w, "\nfired: {fired}");

        let _ = writeln!(w, "\ntrace");
        let width = self.trace.len().to_string().len();
        for (i, e) in self.trace.iter().enumerate() {
            let _ = writeln!(w, "  {:>width$}  {e}", i + 1);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::demo;
    use crate::engine::{CompiledKb, ExitPolicy};

    fn xx_after_table() -> Session {
        let kb = demo::xx();
        let policy = ExitPolicy::for_kb(&kb).unwrap();
        let evidence = [("basin_setting".to_string(), "passive_margin".to_string(), Belief::ONE)];
        let mut s = Session::start(Arc::new(CompiledKb::new(kb).unwrap()), policy, &evidence).unwrap();
        s.answer("dist", "less_equal_200").unwrap();
        s
    }

    #[test]
    fn text_report_lists_the_updated_masses() {
        let text = report(&xx_after_table()).to_text();
        let lines: Vec<&str> = text.lines().collect();
        let start = lines.iter().position(|l| *l == "frame site_of_play").unwrap();
        assert_eq!(
            &lines[start + 1..start + 6],
            [
                "  m({shelf,margin})  0.576",
                "  m({margin})        0.272",
                "  m({shelf})         0.109",
                "  m({craton})        0.022",
                "  m(Θ)               0.022",
            ]
        );
        assert!(text.contains("  margin      0.272  0.870"));
        assert!(text.contains("fired: setting01, rule03"));
    }

    #[test]
    fn fresh_report_is_vacuous() {
        let kb = demo::xx();
        let s = Session::start(
            Arc::new(CompiledKb::new(kb.clone()).unwrap()),
            ExitPolicy::for_kb(&kb).unwrap(),
            &[],
        )
        .unwrap();
        let r = report(&s);
        assert!(r.frames.iter().all(|f| f.ignorance == 1.0 && f.masses.len() == 1));
        assert!(r.fired.is_empty());
        assert!(r.to_text().contains("  m(Θ)  1.000"));
    }

    #[test]
    fn json_report_is_versioned_and_stable() {
        let a = report(&xx_after_table()).to_json();
        let b = report(&xx_after_table()).to_json();
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["status"], "awaiting-input");
        let site = &v["frames"][0];
        assert_eq!(site["frame"], "site_of_play");
        assert_eq!(site["masses"][0]["subset"], serde_json::json!(["shelf", "margin"]));
        assert!((site["masses"][0]["mass"].as_f64().unwrap() - 0.576).abs() < 0.001);
        assert_eq!(v["trace"][0]["event"], "started");
    }
}
