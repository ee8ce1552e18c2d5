use argudialog_core::engine::DialogueEvent;
use argudialog_core::graph::ArgumentationGraph;
use argudialog_core::id::ArgId;

fn facts(graph: &ArgumentationGraph, ids: &[ArgId]) -> String {
    ids.iter()
        .map(|id| match graph.status(id.as_str()) {
            Some(s) => format!("\"{}\"", s.fact_text),
            None => id.to_string(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// One terminal line per event, prefixed by its kind.
pub fn render_event(graph: &ArgumentationGraph, event: &DialogueEvent) -> String {
    match event {
        DialogueEvent::ReplyGiven { text, .. } => format!("[REPLY] {text}"),
        DialogueEvent::Prompt { text, .. } => format!("[PROMPT] {text}"),
        DialogueEvent::Explanation(p) => format!("[EXPLAIN] {}", p.text),
        DialogueEvent::Terminated => "[TERMINATED] Goodbye.".to_owned(),
        DialogueEvent::NoMatch { message } => format!("[NO_MATCH] {message}"),
        DialogueEvent::NoReplyPossible { message } => format!("[NO_REPLY] {message}"),
        DialogueEvent::ConflictDropped {
            dropped,
            conflicts_with,
        } => format!(
            "[CONFLICT] dropped {} (contradicts {})",
            facts(graph, dropped),
            facts(graph, conflicts_with)
        ),
    }
}
