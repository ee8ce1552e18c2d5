//! Reference classifier that restates the definitions by literal
//! enumeration over the raw edge lists. No adjacency index, no caching.
//! Meant for small graphs in tests.

use std::collections::BTreeSet;

use crate::graph::{ActivatedSet, ArgumentationGraph, ReplyClassification};
use crate::id::ArgId;

pub fn oracle_classify(
    graph: &ArgumentationGraph,
    activated: &ActivatedSet,
    new: &ActivatedSet,
) -> ReplyClassification {
    let attacks: Vec<(&str, &str)> = graph
        .attacks()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    let supports: Vec<(&str, &str)> = graph
        .supports()
        .map(|(a, b)| (a.as_str(), b.as_str()))
        .collect();
    let in_s = |x: &str| activated.iter().any(|m| m.as_str() == x);
    let in_n = |x: &str| new.iter().any(|m| m.as_str() == x);

    let mut cons = BTreeSet::new();
    let mut pcons = BTreeSet::new();
    for reply in graph.replies() {
        let r = reply.id.as_str();
        let n_supports = supports.iter().any(|&(a, t)| t == r && in_n(a));
        if !n_supports {
            continue;
        }
        // Acceptable: every attacker anywhere in the graph is attacked by S.
        let mut acceptable = true;
        for &(b, t) in &attacks {
            if t != r {
                continue;
            }
            let mut defended = false;
            for &(c, t2) in &attacks {
                if t2 == b && in_s(c) {
                    defended = true;
                }
            }
            if !defended {
                acceptable = false;
            }
        }
        let s_attacks = attacks.iter().any(|&(b, t)| t == r && in_s(b));
        if s_attacks {
            continue;
        }
        if acceptable {
            cons.insert(ArgId::from(r));
        } else {
            pcons.insert(ArgId::from(r));
        }
    }
    ReplyClassification { cons, pcons }
}

/// Literal conflict-freeness check over the edge list.
pub fn oracle_conflict_free(graph: &ArgumentationGraph, set: &ActivatedSet) -> bool {
    let in_s = |x: &ArgId| set.iter().any(|m| m == x);
    !graph.attacks().any(|(a, b)| in_s(a) && in_s(b))
}
