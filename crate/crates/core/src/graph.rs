//! Argumentation graphs over status and reply arguments.
//!
//! A graph holds status arguments (facts a user can state), reply arguments
//! (answers the system can give), an attack relation from statuses to any
//! node, and a support relation from statuses to replies. Every query here is
//! a pure function of the graph and the activated sets passed in.

use std::collections::{BTreeMap, BTreeSet};

use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::id::ArgId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown argument id `{0}`")]
    UnknownId(ArgId),
    #[error("`{0}` is not a reply argument")]
    NotAReply(ArgId),
    #[error("duplicate argument id `{0}`")]
    DuplicateId(ArgId),
    #[error("edge ({0}, {1}) references an unknown argument")]
    DanglingEdge(ArgId, ArgId),
    #[error("attack ({0}, {1}) must originate from a status argument")]
    AttackFromReply(ArgId, ArgId),
    #[error("support ({0}, {1}) must go from a status argument to a reply argument")]
    InvalidSupport(ArgId, ArgId),
    #[error("self-attack on `{0}`")]
    SelfAttack(ArgId),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatusArgument {
    pub id: ArgId,
    pub fact_text: String,
    pub annotations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplyArgument {
    pub id: ArgId,
    pub reply_text: String,
}

/// A set of activated status ids that remembers activation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActivatedSet(IndexSet<ArgId>);

impl ActivatedSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns `true` if the id was not already present.
    pub fn insert(&mut self, id: ArgId) -> bool {
        self.0.insert(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn remove(&mut self, id: &str) -> bool {
        self.0.shift_remove(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ArgId> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset(&self, other: &ActivatedSet) -> bool {
        self.0.iter().all(|id| other.contains(id.as_str()))
    }

    pub fn extend_from(&mut self, other: &ActivatedSet) {
        self.0.extend(other.0.iter().cloned());
    }

    pub fn union(&self, other: &ActivatedSet) -> ActivatedSet {
        let mut out = self.clone();
        out.extend_from(other);
        out
    }

    pub fn to_sorted(&self) -> BTreeSet<ArgId> {
        self.0.iter().cloned().collect()
    }
}

impl<T: Into<ArgId>> FromIterator<T> for ActivatedSet {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        Self(iter.into_iter().map(Into::into).collect())
    }
}

impl<'a> IntoIterator for &'a ActivatedSet {
    type Item = &'a ArgId;
    type IntoIter = indexmap::set::Iter<'a, ArgId>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Consistent (`cons`) and potentially consistent (`pcons`) replies.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplyClassification {
    pub cons: BTreeSet<ArgId>,
    pub pcons: BTreeSet<ArgId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WithheldReason {
    /// Some activated fact attacks the reply.
    AttackedByS,
    /// No activated fact attacks it, but not every attacker is countered.
    NotDefended,
    /// Consistent as well, another reply was preferred.
    NotSelected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotGiven {
    pub reply_id: ArgId,
    pub attackers_in_s: BTreeSet<ArgId>,
    pub reason: WithheldReason,
}

/// Why a reply was given (`supp`) and why others were withheld (`not_given`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub reply_id: ArgId,
    pub supp: BTreeSet<ArgId>,
    pub not_given: Vec<NotGiven>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Status,
    Reply,
}

/// Immutable argumentation graph. Attack and support edges are indexed in
/// both directions at construction.
#[derive(Debug, Clone)]
pub struct ArgumentationGraph {
    statuses: IndexMap<ArgId, StatusArgument>,
    replies: IndexMap<ArgId, ReplyArgument>,
    attacks: IndexSet<(ArgId, ArgId)>,
    supports: IndexSet<(ArgId, ArgId)>,
    attackers: BTreeMap<ArgId, BTreeSet<ArgId>>,
    supporters: BTreeMap<ArgId, BTreeSet<ArgId>>,
}

impl PartialEq for ArgumentationGraph {
    fn eq(&self, other: &Self) -> bool {
        self.statuses == other.statuses
            && self.replies == other.replies
            && self.attacks == other.attacks
            && self.supports == other.supports
    }
}

impl Eq for ArgumentationGraph {}

impl ArgumentationGraph {
    /// Builds a graph, rejecting duplicate ids, dangling edges, attacks out
    /// of replies, supports that are not status-to-reply, and self-attacks.
    /// Duplicate edges collapse.
    pub fn new(
        statuses: impl IntoIterator<Item = StatusArgument>,
        replies: impl IntoIterator<Item = ReplyArgument>,
        attacks: impl IntoIterator<Item = (ArgId, ArgId)>,
        supports: impl IntoIterator<Item = (ArgId, ArgId)>,
    ) -> Result<Self> {
        let mut status_map = IndexMap::new();
        for s in statuses {
            if status_map.contains_key(&s.id) {
                return Err(GraphError::DuplicateId(s.id));
            }
            status_map.insert(s.id.clone(), s);
        }
        let mut reply_map = IndexMap::new();
        for r in replies {
            if status_map.contains_key(&r.id) || reply_map.contains_key(&r.id) {
                return Err(GraphError::DuplicateId(r.id));
            }
            reply_map.insert(r.id.clone(), r);
        }

        let known = |id: &ArgId| status_map.contains_key(id) || reply_map.contains_key(id);

        let mut attack_set = IndexSet::new();
        let mut attackers: BTreeMap<ArgId, BTreeSet<ArgId>> = BTreeMap::new();
        for (src, dst) in attacks {
            if !known(&src) || !known(&dst) {
                return Err(GraphError::DanglingEdge(src, dst));
            }
            if !status_map.contains_key(&src) {
                return Err(GraphError::AttackFromReply(src, dst));
            }
            if src == dst {
                return Err(GraphError::SelfAttack(src));
            }
            attackers
                .entry(dst.clone())
                .or_default()
                .insert(src.clone());
            attack_set.insert((src, dst));
        }

        let mut support_set = IndexSet::new();
        let mut supporters: BTreeMap<ArgId, BTreeSet<ArgId>> = BTreeMap::new();
        for (src, dst) in supports {
            if !known(&src) || !known(&dst) {
                return Err(GraphError::DanglingEdge(src, dst));
            }
            if !status_map.contains_key(&src) || !reply_map.contains_key(&dst) {
                return Err(GraphError::InvalidSupport(src, dst));
            }
            supporters
                .entry(dst.clone())
                .or_default()
                .insert(src.clone());
            support_set.insert((src, dst));
        }

        Ok(Self {
            statuses: status_map,
            replies: reply_map,
            attacks: attack_set,
            supports: support_set,
            attackers,
            supporters,
        })
    }

    pub fn empty() -> Self {
        Self::new([], [], [], []).expect("empty graph is valid")
    }

    pub fn statuses(&self) -> impl Iterator<Item = &StatusArgument> {
        self.statuses.values()
    }

    pub fn replies(&self) -> impl Iterator<Item = &ReplyArgument> {
        self.replies.values()
    }

    pub fn attacks(&self) -> impl Iterator<Item = &(ArgId, ArgId)> {
        self.attacks.iter()
    }

    pub fn supports(&self) -> impl Iterator<Item = &(ArgId, ArgId)> {
        self.supports.iter()
    }

    pub fn status_count(&self) -> usize {
        self.statuses.len()
    }

    pub fn reply_count(&self) -> usize {
        self.replies.len()
    }

    pub fn status(&self, id: &str) -> Option<&StatusArgument> {
        self.statuses.get(id)
    }

    pub fn reply(&self, id: &str) -> Option<&ReplyArgument> {
        self.replies.get(id)
    }

    pub fn kind_of(&self, id: &str) -> Option<NodeKind> {
        if self.statuses.contains_key(id) {
            Some(NodeKind::Status)
        } else if self.replies.contains_key(id) {
            Some(NodeKind::Reply)
        } else {
            None
        }
    }

    /// Looks up a status id, returning the graph's own copy.
    pub fn status_id(&self, id: &str) -> Result<&ArgId> {
        self.statuses
            .get_key_value(id)
            .map(|(k, _)| k)
            .ok_or_else(|| GraphError::UnknownId(id.into()))
    }

    /// Looks up a reply id, returning the graph's own copy.
    pub fn reply_id(&self, id: &str) -> Result<&ArgId> {
        match self.replies.get_key_value(id) {
            Some((k, _)) => Ok(k),
            None if self.statuses.contains_key(id) => Err(GraphError::NotAReply(id.into())),
            None => Err(GraphError::UnknownId(id.into())),
        }
    }

    fn check_node(&self, id: &str) -> Result<()> {
        match self.kind_of(id) {
            Some(_) => Ok(()),
            None => Err(GraphError::UnknownId(id.into())),
        }
    }

    fn check_set(&self, set: &ActivatedSet) -> Result<()> {
        match set
            .iter()
            .find(|id| !self.statuses.contains_key(id.as_str()))
        {
            Some(bad) => Err(GraphError::UnknownId(bad.clone())),
            None => Ok(()),
        }
    }

    /// Graph-wide attackers of a node, in natural id order.
    pub fn attackers_of(&self, target: &str) -> impl Iterator<Item = &ArgId> {
        self.attackers
            .get(&ArgId::from(target))
            .into_iter()
            .flatten()
    }

    /// Graph-wide supporters of a reply, in natural id order.
    pub fn supporters_of(&self, reply: &str) -> impl Iterator<Item = &ArgId> {
        self.supporters
            .get(&ArgId::from(reply))
            .into_iter()
            .flatten()
    }

    pub fn attacks_edge(&self, src: &str, dst: &str) -> bool {
        self.attackers
            .get(&ArgId::from(dst))
            .is_some_and(|srcs| srcs.contains(&ArgId::from(src)))
    }

    pub fn supports_edge(&self, src: &str, dst: &str) -> bool {
        self.supporters
            .get(&ArgId::from(dst))
            .is_some_and(|srcs| srcs.contains(&ArgId::from(src)))
    }

    /// Either direction of attack between two nodes.
    pub fn in_conflict(&self, a: &str, b: &str) -> bool {
        self.attacks_edge(a, b) || self.attacks_edge(b, a)
    }

    pub fn mutually_attack(&self, a: &str, b: &str) -> bool {
        self.attacks_edge(a, b) && self.attacks_edge(b, a)
    }

    /// Members of `set` that attack `target`.
    pub fn attackers_in(&self, set: &ActivatedSet, target: &str) -> Result<BTreeSet<ArgId>> {
        self.check_set(set)?;
        self.check_node(target)?;
        Ok(self
            .attackers_of(target)
            .filter(|b| set.contains(b.as_str()))
            .cloned()
            .collect())
    }

    /// Whether some member of `set` attacks `target`.
    pub fn set_attacks(&self, set: &ActivatedSet, target: &str) -> Result<bool> {
        self.check_set(set)?;
        self.check_node(target)?;
        Ok(self.attackers_of(target).any(|b| set.contains(b.as_str())))
    }

    /// Whether some member of `set` supports `reply`.
    pub fn set_supports(&self, set: &ActivatedSet, reply: &str) -> Result<bool> {
        self.check_set(set)?;
        self.reply_id(reply)?;
        Ok(self.supporters_of(reply).any(|a| set.contains(a.as_str())))
    }

    pub fn is_conflict_free(&self, set: &ActivatedSet) -> Result<bool> {
        self.check_set(set)?;
        Ok(!set.iter().any(|b| {
            self.attackers_of(b.as_str())
                .any(|a| set.contains(a.as_str()))
        }))
    }

    /// `set` counter-attacks every graph-wide attacker of `target`.
    pub fn is_acceptable(&self, set: &ActivatedSet, target: &str) -> Result<bool> {
        self.check_set(set)?;
        self.check_node(target)?;
        Ok(self.acceptable_unchecked(set, target))
    }

    fn countered(&self, set: &ActivatedSet, attacker: &str) -> bool {
        self.attackers_of(attacker)
            .any(|c| set.contains(c.as_str()))
    }

    fn acceptable_unchecked(&self, set: &ActivatedSet, target: &str) -> bool {
        self.attackers_of(target)
            .all(|b| self.countered(set, b.as_str()))
    }

    /// Splits the replies supported by `new` into consistent and
    /// potentially consistent ones w.r.t. `activated`. Replies supported by
    /// `new` but attacked by `activated` land in neither set.
    pub fn classify_replies(
        &self,
        activated: &ActivatedSet,
        new: &ActivatedSet,
    ) -> Result<ReplyClassification> {
        self.check_set(activated)?;
        self.check_set(new)?;
        if !new.is_subset(activated) {
            return Err(GraphError::PreconditionViolation(
                "N must be a subset of S".into(),
            ));
        }
        let mut out = ReplyClassification::default();
        for reply in self.replies.keys() {
            let supported = self
                .supporters_of(reply.as_str())
                .any(|a| new.contains(a.as_str()));
            if !supported {
                continue;
            }
            // An attacked reply can only look acceptable when `activated`
            // is not conflict-free; it is excluded either way.
            if self
                .attackers_of(reply.as_str())
                .any(|b| activated.contains(b.as_str()))
            {
                continue;
            }
            if self.acceptable_unchecked(activated, reply.as_str()) {
                out.cons.insert(reply.clone());
            } else {
                out.pcons.insert(reply.clone());
            }
        }
        Ok(out)
    }

    /// Status arguments outside `activated` that attack an attacker of
    /// `target` which `activated` does not yet counter. Ordered by
    /// (attacker, defender), first occurrence wins.
    pub fn defence_candidates(&self, activated: &ActivatedSet, target: &str) -> Result<Vec<ArgId>> {
        self.check_set(activated)?;
        self.check_node(target)?;
        let mut out: IndexSet<ArgId> = IndexSet::new();
        for attacker in self.attackers_of(target) {
            if self.countered(activated, attacker.as_str()) {
                continue;
            }
            for defender in self.attackers_of(attacker.as_str()) {
                if !activated.contains(defender.as_str()) {
                    out.insert(defender.clone());
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Supporters of `reply` in `activated`, plus one withheld record per
    /// other reply supported by `activated`.
    pub fn explain(&self, activated: &ActivatedSet, reply: &str) -> Result<Explanation> {
        self.check_set(activated)?;
        let reply_id = self.reply_id(reply)?.clone();
        let supp = self
            .supporters_of(reply)
            .filter(|a| activated.contains(a.as_str()))
            .cloned()
            .collect();
        let mut not_given = Vec::new();
        for other in self.replies.keys() {
            if *other == reply_id
                || !self
                    .supporters_of(other.as_str())
                    .any(|a| activated.contains(a.as_str()))
            {
                continue;
            }
            let attackers_in_s: BTreeSet<ArgId> = self
                .attackers_of(other.as_str())
                .filter(|b| activated.contains(b.as_str()))
                .cloned()
                .collect();
            let reason = if !attackers_in_s.is_empty() {
                WithheldReason::AttackedByS
            } else if self.acceptable_unchecked(activated, other.as_str()) {
                WithheldReason::NotSelected
            } else {
                WithheldReason::NotDefended
            };
            not_given.push(NotGiven {
                reply_id: other.clone(),
                attackers_in_s,
                reason,
            });
        }
        not_given.sort_by(|a, b| a.reply_id.cmp(&b.reply_id));
        Ok(Explanation {
            reply_id,
            supp,
            not_given,
        })
    }
}
