//! Corpus-level checks shared by the property suite and the acceptance run.
//! Each returns how many cases were examined and the violations found.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use argudialog_core::engine::{ConflictPolicy, DialogueEngine, DialogueEvent, EngineConfig};
use argudialog_core::graph::{ActivatedSet, ArgumentationGraph};
use argudialog_core::id::ArgId;
use argudialog_core::kb::KbDocument;
use argudialog_core::matcher::{MatcherConfig, compute_matches};
use argudialog_core::oracle::{oracle_classify, oracle_conflict_free};
use rand::Rng;
use rand::seq::IndexedRandom;

use super::{
    MEDIUM, SMALL, random_conflict_free, random_graph, random_kb, random_s_n, random_subset,
    random_utterance, rng, status_ids,
};

#[derive(Debug, Default)]
pub struct Tally {
    pub cases: usize,
    pub violations: usize,
    /// The first few violations, for diagnostics.
    pub samples: Vec<String>,
    /// Counts of notable events seen while checking.
    pub observed: BTreeMap<&'static str, usize>,
}

impl Tally {
    fn fail(&mut self, msg: String) {
        self.violations += 1;
        if self.samples.len() < 10 {
            self.samples.push(msg);
        }
    }

    fn saw(&mut self, what: &'static str) {
        *self.observed.entry(what).or_default() += 1;
    }

    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// Supersets of `base` drawn from `pool`, enumerated exhaustively.
fn supersets(base: &ActivatedSet, pool: &[ArgId]) -> impl Iterator<Item = ActivatedSet> {
    let extra: Vec<ArgId> = pool
        .iter()
        .filter(|a| !base.contains(a.as_str()))
        .cloned()
        .collect();
    let base = base.clone();
    (0u32..(1 << extra.len())).map(move |mask| {
        let mut s = base.clone();
        for (i, a) in extra.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(a.clone());
            }
        }
        s
    })
}

/// Consistent replies stay acceptable and unattacked in every conflict-free
/// superset.
pub fn monotonicity(seed: u64, graphs: usize, samples_per_graph: usize) -> Tally {
    let mut rng = rng(seed);
    let mut tally = Tally::default();
    for g in 0..graphs {
        let graph = random_graph(&mut rng, &SMALL);
        let pool = status_ids(&graph);
        for _ in 0..samples_per_graph {
            let s = random_conflict_free(&mut rng, &graph);
            let members: Vec<ArgId> = s.iter().cloned().collect();
            let n = random_subset(&mut rng, &members, 0.7);
            let cons = graph.classify_replies(&s, &n).unwrap().cons;
            if cons.is_empty() {
                continue;
            }
            for sup in supersets(&s, &pool) {
                if !oracle_conflict_free(&graph, &sup) {
                    continue;
                }
                tally.cases += 1;
                for r in &cons {
                    let acceptable = graph.is_acceptable(&sup, r.as_str()).unwrap();
                    let attacked = graph.set_attacks(&sup, r.as_str()).unwrap();
                    if !acceptable || attacked {
                        tally.fail(format!("graph #{g}: {r} lost under {:?}", sup.to_sorted()));
                    }
                }
            }
        }
    }
    tally
}

pub fn oracle_equivalence(seed: u64, instances: usize) -> Tally {
    let mut rng = rng(seed);
    let mut tally = Tally::default();
    for i in 0..instances {
        let graph = random_graph(&mut rng, &MEDIUM);
        let (s, n) = random_s_n(&mut rng, &graph);
        tally.cases += 1;
        let fast = graph.classify_replies(&s, &n).unwrap();
        let slow = oracle_classify(&graph, &s, &n);
        if fast != slow {
            tally.fail(format!("instance #{i}: {fast:?} vs oracle {slow:?}"));
        }
    }
    tally
}

/// cons and pcons are disjoint, and replies attacked by S are in neither.
pub fn disjointness(seed: u64, instances: usize) -> Tally {
    let mut rng = rng(seed);
    let mut tally = Tally::default();
    for i in 0..instances {
        let graph = random_graph(&mut rng, &MEDIUM);
        let (s, n) = random_s_n(&mut rng, &graph);
        tally.cases += 1;
        let c = graph.classify_replies(&s, &n).unwrap();
        if let Some(r) = c.cons.intersection(&c.pcons).next() {
            tally.fail(format!("instance #{i}: {r} in both sets"));
        }
        for r in graph.replies() {
            let id = r.id.as_str();
            if graph.set_supports(&n, id).unwrap()
                && graph.set_attacks(&s, id).unwrap()
                && (c.cons.contains(&r.id) || c.pcons.contains(&r.id))
            {
                tally.fail(format!("instance #{i}: attacked reply {id} was classified"));
            }
        }
    }
    tally
}

/// Raising the threshold never adds matches.
pub fn threshold_monotonicity(seed: u64, pairs: usize) -> Tally {
    let mut rng = rng(seed);
    let mut tally = Tally::default();
    for i in 0..pairs {
        let file = random_kb(&mut rng, &MEDIUM);
        let utterance = random_utterance(&mut rng, &file);
        let kb = KbDocument::from_file(file).unwrap();
        let mut thresholds: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..=1.0)).collect();
        thresholds.sort_by(f64::total_cmp);
        let matched = |t: f64| -> BTreeSet<ArgId> {
            let config = MatcherConfig {
                threshold: t,
                ..MatcherConfig::default()
            };
            compute_matches(&utterance, &kb.graph, &config)
                .unwrap()
                .into_iter()
                .map(|m| m.status_id)
                .collect()
        };
        let sets: Vec<BTreeSet<ArgId>> = thresholds.iter().map(|t| matched(*t)).collect();
        for w in 0..sets.len() - 1 {
            tally.cases += 1;
            if !sets[w + 1].is_subset(&sets[w]) {
                tally.fail(format!(
                    "pair #{i}: `{utterance}` at {} gave {:?}, at {} gave {:?}",
                    thresholds[w],
                    sets[w],
                    thresholds[w + 1],
                    sets[w + 1]
                ));
            }
        }
    }
    tally
}

fn oracle_consistent(graph: &ArgumentationGraph, s: &ActivatedSet, reply: &ArgId) -> bool {
    oracle_classify(graph, s, s).cons.contains(reply)
}

/// Random scripted dialogues: every reply given is consistent with S at the
/// time it is given, S stays conflict-free, and no prompt is asked twice.
pub fn engine_safety(seed: u64, dialogues: usize) -> Tally {
    let mut rng = rng(seed);
    let mut tally = Tally::default();
    let policies = [ConflictPolicy::KeepFirst, ConflictPolicy::KeepLatest];
    for d in 0..dialogues {
        let file = random_kb(&mut rng, &SMALL);
        let policy = *policies.choose(&mut rng).unwrap();
        let config = EngineConfig {
            conflict_policy: policy,
            ..EngineConfig::default()
        };
        let engine = Arc::new(DialogueEngine::from_kb_file(file.clone(), config).unwrap());
        let graph = engine.graph();
        let mut session = engine.start_session();
        let mut prompted = BTreeSet::new();
        let turns = rng.random_range(3..=12);
        for t in 0..turns {
            let utterance = random_utterance(&mut rng, &file);
            let Ok(events) = session.handle_utterance(&utterance) else {
                break;
            };
            tally.cases += 1;
            let s = &session.state().activated;
            for event in &events {
                match event {
                    DialogueEvent::ReplyGiven { reply_id, .. } => {
                        tally.saw("replies");
                        if !oracle_consistent(graph, s, reply_id) {
                            tally.fail(format!(
                                "dialogue #{d} turn {t}: {reply_id} not consistent with {:?}",
                                s.to_sorted()
                            ));
                        }
                    }
                    DialogueEvent::Prompt { status_id, .. } => {
                        tally.saw("prompts");
                        if !prompted.insert(status_id.clone()) {
                            tally.fail(format!("dialogue #{d} turn {t}: {status_id} asked twice"));
                        }
                    }
                    other => tally.saw(other.kind().as_str()),
                }
            }
            if !oracle_conflict_free(graph, s) {
                tally.fail(format!(
                    "dialogue #{d} turn {t}: S {:?} has a conflict",
                    s.to_sorted()
                ));
            }
        }
    }
    tally
}
