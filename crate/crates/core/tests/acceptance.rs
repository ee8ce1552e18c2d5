//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use argudialog_core::engine::{DialogueEngine, DialogueEvent, EngineConfig, EventKind};
use argudialog_core::graph::{NotGiven, WithheldReason};
use argudialog_core::id::ArgId;
use argudialog_core::kb::builtin_case_study_kb;
use argudialog_core::matcher::{
    Feature, MatcherConfig, SentenceVector, bray_curtis_sim, compute_matches,
};

use common::checks::{self, Tally};

const SEED: u64 = 0x5eed_2024;

const MORGAN: &str = "Hi, I am Morgan and I suffer from latex allergy, can I get vaccinated?";
const NO_ASTHMA: &str = "I do not suffer from bronchial asthma";
const ASTHMA: &str = "I suffer from bronchial asthma";
const NO_ANAPHYLAXIS: &str = "I have never had any anaphylaxis";

const HAPPY_PATH_BUDGET: Duration = Duration::from_secs(1);
const PROPOSITION_BUDGET: Duration = Duration::from_secs(60);
const NUMERIC_TOLERANCE: f64 = 1e-9;

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn engine() -> Arc<DialogueEngine> {
    Arc::new(DialogueEngine::new(builtin_case_study_kb(), EngineConfig::default()).unwrap())
}

fn ids(list: &[&str]) -> Vec<ArgId> {
    list.iter().map(|s| ArgId::from(*s)).collect()
}

fn summary(events: &[DialogueEvent]) -> Vec<(EventKind, String)> {
    events
        .iter()
        .map(|e| {
            let id = match e {
                DialogueEvent::ReplyGiven { reply_id, .. } => reply_id.to_string(),
                DialogueEvent::Prompt { status_id, .. } => status_id.to_string(),
                _ => String::new(),
            };
            (e.kind(), id)
        })
        .collect()
}

fn happy_path() -> Outcome {
    let start = Instant::now();
    let mut session = engine().start_session();
    let mut events = Vec::new();
    for u in [MORGAN, NO_ASTHMA, NO_ANAPHYLAXIS] {
        events.extend(session.handle_utterance(u).unwrap());
    }
    let elapsed = start.elapsed();
    let expected = vec![
        (EventKind::Prompt, "N7".to_owned()),
        (EventKind::Prompt, "N16".to_owned()),
        (EventKind::ReplyGiven, "R2".to_owned()),
    ];
    let got = summary(&events);
    let s: Vec<ArgId> = session.state().activated.iter().cloned().collect();
    let pass = got == expected && s == ids(&["N11", "N7", "N16"]) && elapsed < HAPPY_PATH_BUDGET;
    Outcome {
        name: "case-study happy path",
        pass,
        detail: format!(
            "events={got:?} S={s:?} elapsed={elapsed:?} (budget {HAPPY_PATH_BUDGET:?})"
        ),
    }
}

fn divergent_path() -> Outcome {
    let mut session = engine().start_session();
    let mut events = Vec::new();
    for u in [MORGAN, ASTHMA, NO_ANAPHYLAXIS] {
        events.extend(session.handle_utterance(u).unwrap());
    }
    let got = summary(&events);
    let s = session.state().activated.to_sorted();
    let explained = session.handle_utterance("why?").unwrap();
    let explanation_ok = match &explained[..] {
        [DialogueEvent::Explanation(p)] => {
            p.explanation.supp == ids(&["N8"]).into_iter().collect()
                && p.explanation.not_given
                    == vec![NotGiven {
                        reply_id: "R2".into(),
                        attackers_in_s: ids(&["N8"]).into_iter().collect(),
                        reason: WithheldReason::AttackedByS,
                    }]
        }
        _ => false,
    };
    let pass = got.last() == Some(&(EventKind::ReplyGiven, "R3".to_owned()))
        && s == ids(&["N8", "N11", "N16"]).into_iter().collect()
        && explanation_ok;
    Outcome {
        name: "case-study divergent path",
        pass,
        detail: format!("events={got:?} S={s:?} explanation_ok={explanation_ok}"),
    }
}

fn from_tally(name: &'static str, tally: &Tally, extra: String) -> Outcome {
    let mut detail = format!(
        "cases={} violations={}{extra}",
        tally.cases, tally.violations
    );
    for (what, n) in &tally.observed {
        detail.push_str(&format!(" {what}={n}"));
    }
    if let Some(first) = tally.samples.first() {
        detail.push_str(&format!(" first: {first}"));
    }
    Outcome {
        name,
        pass: tally.ok(),
        detail,
    }
}

fn proposition_one() -> Outcome {
    const GRAPHS: usize = 500;
    let start = Instant::now();
    let tally = checks::monotonicity(SEED, GRAPHS, 4);
    let elapsed = start.elapsed();
    let mut out = from_tally(
        "consistency monotonicity",
        &tally,
        format!(" graphs={GRAPHS} elapsed={elapsed:?} (budget {PROPOSITION_BUDGET:?})"),
    );
    out.pass &= elapsed < PROPOSITION_BUDGET && tally.cases > 0;
    out
}

fn oracle_equivalence() -> Outcome {
    let tally = checks::oracle_equivalence(SEED, 1000);
    let mut out = from_tally("oracle equivalence", &tally, String::new());
    out.pass &= tally.cases >= 1000;
    out
}

fn disjointness() -> Outcome {
    let tally = checks::disjointness(SEED, 1000);
    let mut out = from_tally("disjointness and exclusion", &tally, String::new());
    out.pass &= tally.cases >= 1000;
    out
}

fn dense(values: &[f64]) -> SentenceVector {
    SentenceVector::from_weights(
        values
            .iter()
            .enumerate()
            .map(|(i, v)| (Feature::Dim(i), *v)),
    )
}

fn matcher_numerics() -> Outcome {
    let u = dense(&[2.0, 1.0, 0.0]);
    let identity = bray_curtis_sim(&u, &u);
    let disjoint = bray_curtis_sim(&dense(&[1.0, 0.0]), &dense(&[0.0, 1.0]));
    let partial = bray_curtis_sim(&u, &dense(&[1.0, 1.0, 1.0]));
    let numerics_ok = (identity - 1.0).abs() <= NUMERIC_TOLERANCE
        && disjoint.abs() <= NUMERIC_TOLERANCE
        && (partial - 2.0 / 3.0).abs() <= NUMERIC_TOLERANCE;
    let tally = checks::threshold_monotonicity(SEED, 200);
    let mut out = from_tally(
        "matcher numerics and threshold monotonicity",
        &tally,
        format!(" identity={identity} disjoint={disjoint} partial={partial:.10}"),
    );
    out.pass &= numerics_ok;
    out
}

fn negation() -> Outcome {
    let kb = builtin_case_study_kb();
    let config = MatcherConfig::default();
    let matched = |u: &str| -> Vec<String> {
        compute_matches(u, &kb.graph, &config)
            .unwrap()
            .into_iter()
            .map(|m| m.status_id.to_string())
            .collect()
    };
    let neg = matched(NO_ASTHMA);
    let pos = matched(ASTHMA);
    let pass = neg.iter().any(|s| s == "N7")
        && !neg.iter().any(|s| s == "N8")
        && pos.iter().any(|s| s == "N8")
        && !pos.iter().any(|s| s == "N7");
    Outcome {
        name: "negation discrimination",
        pass,
        detail: format!("negative={neg:?} positive={pos:?}"),
    }
}

fn engine_safety() -> Outcome {
    let tally = checks::engine_safety(SEED, 1000);
    from_tally("engine safety", &tally, " dialogues=1000".into())
}

fn main() -> ExitCode {
    let outcomes = [
        happy_path(),
        divergent_path(),
        proposition_one(),
        oracle_equivalence(),
        disjointness(),
        matcher_numerics(),
        negation(),
        engine_safety(),
    ];
    let mut failed = 0;
    for o in &outcomes {
        let mark = if o.pass { "PASS" } else { "FAIL" };
        println!("{mark}  {}  [{}]", o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        outcomes.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
