//! Oracles and generators shared by the integration tests. The oracles work
//! on plain sets of value indices and never call into the library's
//! arithmetic.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use evshell::engine::{CompiledKb, ExitPolicy, Session};
use evshell::evidence::{Frame, HypSubset, MassFunction};
use evshell::kb::KnowledgeBase;
use evshell::report::report;
use evshell::script::{parse_script, run_script};
use proptest::prelude::*;

pub type SetMass = BTreeMap<BTreeSet<usize>, f64>;

pub fn frame(n: usize) -> Arc<Frame> {
    Arc::new(Frame::new("f", (0..n).map(|i| format!("v{i}"))).unwrap())
}

pub fn set_of(bits: u16) -> BTreeSet<usize> {
    (0..16).filter(|i| bits & (1 << i) != 0).collect()
}

pub fn bits_of(set: &BTreeSet<usize>) -> u16 {
    set.iter().fold(0, |acc, i| acc | (1 << i))
}

pub fn to_sets(m: &MassFunction) -> SetMass {
    m.focal().map(|(s, v)| (set_of(s.bits()), v)).collect()
}

pub fn build(frame: &Arc<Frame>, focal: &[(u16, f64)]) -> MassFunction {
    MassFunction::new(
        Arc::clone(frame),
        focal.iter().map(|&(b, m)| (HypSubset::from_bits(b), m)),
    )
    .unwrap()
}

/// Dempster's rule by explicit set intersection; `None` on total conflict.
pub fn oracle_combine(a: &SetMass, b: &SetMass) -> Option<SetMass> {
    let mut joint = SetMass::new();
    let mut conflict = 0.0;
    for (x, mx) in a {
        for (y, my) in b {
            let z: BTreeSet<usize> = x.intersection(y).copied().collect();
            if z.is_empty() {
                conflict += mx * my;
            } else {
                *joint.entry(z).or_insert(0.0) += mx * my;
            }
        }
    }
    if 1.0 - conflict <= 1e-12 {
        return None;
    }
    joint.values_mut().for_each(|m| *m /= 1.0 - conflict);
    Some(joint)
}

pub fn oracle_bel(m: &SetMass, a: &BTreeSet<usize>) -> f64 {
    m.iter().filter(|(s, _)| s.is_subset(a)).map(|(_, v)| v).sum()
}

pub fn oracle_pl(m: &SetMass, a: &BTreeSet<usize>) -> f64 {
    m.iter().filter(|(s, _)| !s.is_disjoint(a)).map(|(_, v)| v).sum()
}

pub fn close(a: &SetMass, b: &SetMass, tol: f64) -> bool {
    let keys: BTreeSet<&BTreeSet<usize>> = a.keys().chain(b.keys()).collect();
    keys.into_iter().all(|k| {
        let x = a.get(k).copied().unwrap_or(0.0);
        let y = b.get(k).copied().unwrap_or(0.0);
        (x - y).abs() <= tol
    })
}

/// Focal elements with positive masses summing to 1 on a frame of `n` values.
pub fn arb_focal(n: usize) -> impl Strategy<Value = Vec<(u16, f64)>> {
    let top = (1u32 << n) as u16;
    prop::collection::vec((1..top, 1u32..1000), 1..6).prop_map(|raw| {
        let mut merged: BTreeMap<u16, f64> = BTreeMap::new();
        for (bits, w) in raw {
            *merged.entry(bits).or_insert(0.0) += w as f64;
        }
        let total: f64 = merged.values().sum();
        merged.into_iter().map(|(b, w)| (b, w / total)).collect()
    })
}

/// A frame size and that many mass functions over it.
pub fn arb_masses(max_n: usize, count: usize) -> impl Strategy<Value = (usize, Vec<Vec<(u16, f64)>>)> {
    (1..=max_n).prop_flat_map(move |n| (Just(n), prop::collection::vec(arb_focal(n), count)))
}

pub fn run_batch(kb: KnowledgeBase, script: &str) -> Session {
    let policy = ExitPolicy::for_kb(&kb).unwrap();
    let mut s = Session::start(Arc::new(CompiledKb::new(kb).unwrap()), policy, &[]).unwrap();
    run_script(&mut s, &parse_script(script).unwrap()).unwrap();
    s
}

pub fn batch_reports(kb: KnowledgeBase, script: &str) -> (String, String) {
    let r = report(&run_batch(kb, script));
    (r.to_text(), r.to_json())
}
