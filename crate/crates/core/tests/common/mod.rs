#![allow(dead_code)]

pub mod checks;

use argudialog_core::graph::{ActivatedSet, ArgumentationGraph, ReplyArgument, StatusArgument};
use argudialog_core::id::ArgId;
use argudialog_core::kb::{KbFile, KbMetadata};
use rand::Rng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct GraphShape {
    pub max_statuses: usize,
    pub max_replies: usize,
    pub density: (f64, f64),
}

pub const SMALL: GraphShape = GraphShape {
    max_statuses: 10,
    max_replies: 4,
    density: (0.05, 0.4),
};

pub const MEDIUM: GraphShape = GraphShape {
    max_statuses: 16,
    max_replies: 8,
    density: (0.05, 0.4),
};

fn status(id: String, annotations: Vec<String>) -> StatusArgument {
    StatusArgument {
        fact_text: annotations.first().cloned().unwrap_or_default(),
        id: id.into(),
        annotations,
        prompt: None,
    }
}

pub type Edge = (ArgId, ArgId);

/// Edge lists for a random graph. Status-status attacks are often made
/// mutual, mirroring positive/negative fact pairs.
pub fn random_edges(
    rng: &mut ChaCha8Rng,
    statuses: &[String],
    replies: &[String],
    density: f64,
) -> (Vec<Edge>, Vec<Edge>) {
    let mut attacks = Vec::new();
    let mut supports = Vec::new();
    for (i, a) in statuses.iter().enumerate() {
        for b in &statuses[i + 1..] {
            if rng.random_bool(density) {
                match rng.random_range(0..3) {
                    0 => attacks.push((a.as_str().into(), b.as_str().into())),
                    1 => attacks.push((b.as_str().into(), a.as_str().into())),
                    _ => {
                        attacks.push((a.as_str().into(), b.as_str().into()));
                        attacks.push((b.as_str().into(), a.as_str().into()));
                    }
                }
            }
        }
        for r in replies {
            if rng.random_bool(density) {
                attacks.push((a.as_str().into(), r.as_str().into()));
            } else if rng.random_bool(density) {
                supports.push((a.as_str().into(), r.as_str().into()));
            }
        }
    }
    (attacks, supports)
}

pub fn random_graph(rng: &mut ChaCha8Rng, shape: &GraphShape) -> ArgumentationGraph {
    let n = rng.random_range(1..=shape.max_statuses);
    let m = rng.random_range(1..=shape.max_replies);
    let density = rng.random_range(shape.density.0..=shape.density.1);
    let statuses: Vec<String> = (1..=n).map(|i| format!("N{i}")).collect();
    let replies: Vec<String> = (1..=m).map(|i| format!("R{i}")).collect();
    let (attacks, supports) = random_edges(rng, &statuses, &replies, density);
    ArgumentationGraph::new(
        statuses.iter().map(|s| status(s.clone(), vec![s.clone()])),
        replies.iter().map(|r| ReplyArgument {
            id: r.as_str().into(),
            reply_text: format!("reply {r}"),
        }),
        attacks,
        supports,
    )
    .expect("generated graph is valid")
}

pub fn status_ids(graph: &ArgumentationGraph) -> Vec<ArgId> {
    graph.statuses().map(|s| s.id.clone()).collect()
}

pub fn reply_ids(graph: &ArgumentationGraph) -> Vec<ArgId> {
    graph.replies().map(|r| r.id.clone()).collect()
}

pub fn random_subset(rng: &mut ChaCha8Rng, ids: &[ArgId], p: f64) -> ActivatedSet {
    ids.iter().filter(|_| rng.random_bool(p)).cloned().collect()
}

/// Random S and N with N ⊆ S.
pub fn random_s_n(
    rng: &mut ChaCha8Rng,
    graph: &ArgumentationGraph,
) -> (ActivatedSet, ActivatedSet) {
    let ids = status_ids(graph);
    let p = rng.random_range(0.1..0.8);
    let s = random_subset(rng, &ids, p);
    let members: Vec<ArgId> = s.iter().cloned().collect();
    let n = random_subset(rng, &members, 0.6);
    (s, n)
}

/// Greedy conflict-free subset over a shuffled status order.
pub fn random_conflict_free(rng: &mut ChaCha8Rng, graph: &ArgumentationGraph) -> ActivatedSet {
    let mut ids = status_ids(graph);
    ids.shuffle(rng);
    let take = rng.random_range(0..=ids.len());
    let mut out = ActivatedSet::new();
    for id in ids.into_iter().take(take) {
        if out
            .iter()
            .all(|m| !graph.in_conflict(m.as_str(), id.as_str()))
        {
            out.insert(id);
        }
    }
    out
}

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "ze", "pa", "qu", "fi", "do", "ge", "hu", "be",
];

pub fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(2..=4);
    (0..len).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

/// A valid KB over a random graph. Each status gets 1-3 annotations made of
/// words from a shared vocabulary, so utterances can partially match many
/// nodes.
pub fn random_kb(rng: &mut ChaCha8Rng, shape: &GraphShape) -> KbFile {
    let n = rng.random_range(1..=shape.max_statuses);
    let m = rng.random_range(1..=shape.max_replies);
    let density = rng.random_range(shape.density.0..=shape.density.1);
    let vocab: Vec<String> = (0..(n * 3).max(6)).map(|_| random_word(rng)).collect();
    let statuses: Vec<String> = (1..=n).map(|i| format!("N{i}")).collect();
    let replies: Vec<String> = (1..=m).map(|i| format!("R{i}")).collect();
    let (attacks, supports) = random_edges(rng, &statuses, &replies, density);
    KbFile {
        version: "1".into(),
        metadata: KbMetadata::default(),
        statuses: statuses
            .iter()
            .map(|id| {
                let k = rng.random_range(1..=3);
                let annotations = (0..k)
                    .map(|_| {
                        let words = rng.random_range(2..=5);
                        (0..words)
                            .map(|_| vocab.choose(rng).unwrap().as_str())
                            .collect::<Vec<_>>()
                            .join(" ")
                    })
                    .collect();
                status(id.clone(), annotations)
            })
            .collect(),
        replies: replies
            .iter()
            .map(|r| ReplyArgument {
                id: r.as_str().into(),
                reply_text: format!("reply {r}"),
            })
            .collect(),
        attacks,
        supports,
        intents: None,
    }
}

/// Random utterance: an annotation, a mix of two, noise, or an explanation
/// request.
pub fn random_utterance(rng: &mut ChaCha8Rng, kb: &KbFile) -> String {
    let pick = |rng: &mut ChaCha8Rng| {
        let s = kb.statuses.choose(rng).unwrap();
        s.annotations.choose(rng).unwrap().clone()
    };
    match rng.random_range(0..10) {
        0..=5 => pick(rng),
        6 => format!("{} and {}", pick(rng), pick(rng)),
        7 => (0..3)
            .map(|_| random_word(rng))
            .collect::<Vec<_>>()
            .join(" "),
        8 => "why?".into(),
        _ => {
            let a = pick(rng);
            let mut words: Vec<&str> = a.split(' ').collect();
            words.truncate(words.len().div_ceil(2));
            words.join(" ")
        }
    }
}
