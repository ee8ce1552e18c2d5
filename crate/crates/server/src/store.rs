//! Session storage with idle expiry.

use std::collections::HashMap;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use argudialog_core::engine::{DialogueEvent, Session};
use rand::RngCore;
use serde::Serialize;
use tokio::sync::Mutex;

pub const DEFAULT_IDLE_TTL: Duration = Duration::from_secs(30 * 60);

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "direction", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TranscriptEntry {
    User { text: String },
    System { event: DialogueEvent },
}

#[derive(Debug)]
pub struct SessionRecord {
    pub session_id: String,
    pub session: Session,
    pub created_at: SystemTime,
    pub transcript: Vec<TranscriptEntry>,
    pub message_count: usize,
}

impl SessionRecord {
    pub fn new(session_id: String, session: Session) -> Self {
        Self {
            session_id,
            session,
            created_at: SystemTime::now(),
            transcript: Vec::new(),
            message_count: 0,
        }
    }
}

pub type SharedRecord = Arc<Mutex<SessionRecord>>;

/// Where sessions live. Lookups refresh the idle timer; expired sessions are
/// never returned.
pub trait SessionStore: Send + Sync {
    fn insert(&self, record: SessionRecord) -> SharedRecord;
    fn get(&self, session_id: &str) -> Option<SharedRecord>;
    /// Wall-clock time of the last lookup or insert.
    fn last_active(&self, session_id: &str) -> Option<SystemTime>;
    /// Drops expired sessions and returns how many were removed.
    fn evict_expired(&self) -> usize;
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

struct Entry {
    record: SharedRecord,
    touched: Instant,
    touched_wall: SystemTime,
}

pub struct InMemorySessionStore {
    entries: StdMutex<HashMap<String, Entry>>,
    idle_ttl: Duration,
}

impl InMemorySessionStore {
    pub fn new(idle_ttl: Duration) -> Self {
        Self {
            entries: StdMutex::new(HashMap::new()),
            idle_ttl,
        }
    }

    pub fn idle_ttl(&self) -> Duration {
        self.idle_ttl
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, HashMap<String, Entry>> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl Default for InMemorySessionStore {
    fn default() -> Self {
        Self::new(DEFAULT_IDLE_TTL)
    }
}

impl SessionStore for InMemorySessionStore {
    fn insert(&self, record: SessionRecord) -> SharedRecord {
        let id = record.session_id.clone();
        let shared = Arc::new(Mutex::new(record));
        self.lock().insert(
            id,
            Entry {
                record: Arc::clone(&shared),
                touched: Instant::now(),
                touched_wall: SystemTime::now(),
            },
        );
        shared
    }

    fn get(&self, session_id: &str) -> Option<SharedRecord> {
        let mut entries = self.lock();
        let entry = entries.get_mut(session_id)?;
        if entry.touched.elapsed() > self.idle_ttl {
            entries.remove(session_id);
            return None;
        }
        entry.touched = Instant::now();
        entry.touched_wall = SystemTime::now();
        Some(Arc::clone(&entry.record))
    }

    fn last_active(&self, session_id: &str) -> Option<SystemTime> {
        self.lock().get(session_id).map(|e| e.touched_wall)
    }

    fn evict_expired(&self) -> usize {
        let mut entries = self.lock();
        let before = entries.len();
        entries.retain(|_, e| e.touched.elapsed() <= self.idle_ttl);
        before - entries.len()
    }

    fn len(&self) -> usize {
        self.lock().len()
    }
}

/// 256 random bits, hex encoded.
pub fn new_session_id() -> String {
    let mut bytes = [0u8; 32];
    rand::rng().fill_bytes(&mut bytes);
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_millis(t: SystemTime) -> u64 {
    t.duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use argudialog_core::engine::{DialogueEngine, EngineConfig};
    use argudialog_core::kb::builtin_case_study_kb;

    fn record(id: &str) -> SessionRecord {
        let engine = Arc::new(
            DialogueEngine::new(builtin_case_study_kb(), EngineConfig::default()).unwrap(),
        );
        SessionRecord::new(id.into(), engine.start_session())
    }

    #[test]
    fn ids_are_long_and_distinct() {
        let a = new_session_id();
        assert_eq!(a.len(), 64);
        assert!(a.chars().all(|c| c.is_ascii_hexdigit()));
        assert_ne!(a, new_session_id());
    }

    #[test]
    fn expired_sessions_are_unreachable() {
        let store = InMemorySessionStore::new(Duration::from_millis(20));
        store.insert(record("a"));
        assert!(store.get("a").is_some());
        std::thread::sleep(Duration::from_millis(40));
        assert!(store.get("a").is_none());
        assert!(store.is_empty());
    }

    #[test]
    fn eviction_sweeps_idle_sessions() {
        let store = InMemorySessionStore::new(Duration::from_millis(20));
        store.insert(record("a"));
        store.insert(record("b"));
        std::thread::sleep(Duration::from_millis(40));
        store.insert(record("c"));
        assert_eq!(store.evict_expired(), 2);
        assert_eq!(store.len(), 1);
        assert!(store.get("c").is_some());
    }

    #[test]
    fn lookups_refresh_the_idle_timer() {
        let store = InMemorySessionStore::new(Duration::from_millis(60));
        store.insert(record("a"));
        for _ in 0..4 {
            std::thread::sleep(Duration::from_millis(25));
            assert!(store.get("a").is_some());
        }
    }
}
