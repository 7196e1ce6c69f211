//! The possibilistic world model.
//!
//! Entities are nodes; every pair of entities inside a connected component
//! carries a non-empty [`RelationSet`] of candidate relations, exactly one of
//! which is true. Edge sets only ever shrink: an assertion intersects one
//! edge and the worklist propagation restores path consistency over every
//! 3-clique it touches. Joining two components seeds the new cross edges with
//! the full set and lets propagation narrow them.
//!
//! Every successful mutation is appended to an assertion log that is
//! sufficient to rebuild the model; failed mutations leave the model exactly
//! as it was.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{check_axioms, CompositionTable, RelationAtom, RelationSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MentionId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gender {
    #[default]
    Unknown,
    Male,
    Female,
    ProbablyMale,
    ProbablyFemale,
}

impl Gender {
    pub fn is_definite(self) -> bool {
        matches!(self, Gender::Male | Gender::Female)
    }

    pub fn opposite(self) -> Gender {
        match self {
            Gender::Male => Gender::Female,
            Gender::Female => Gender::Male,
            Gender::ProbablyMale => Gender::ProbablyFemale,
            Gender::ProbablyFemale => Gender::ProbablyMale,
            Gender::Unknown => Gender::Unknown,
        }
    }

    /// Male or female, definite or probable.
    pub fn leaning(self) -> Option<Gender> {
        match self {
            Gender::Male | Gender::ProbablyMale => Some(Gender::Male),
            Gender::Female | Gender::ProbablyFemale => Some(Gender::Female),
            Gender::Unknown => None,
        }
    }

    /// Strength rank: definite beats probable beats unknown.
    fn rank(self) -> u8 {
        match self {
            Gender::Unknown => 0,
            Gender::ProbablyMale | Gender::ProbablyFemale => 1,
            Gender::Male | Gender::Female => 2,
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Unknown => "unknown",
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::ProbablyMale => "probably-male",
            Gender::ProbablyFemale => "probably-female",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub id: MentionId,
    pub utterance: u32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub names: BTreeSet<String>,
    pub gender: Gender,
    pub is_narrator: bool,
    pub mentions: Vec<Mention>,
}

impl Entity {
    pub fn has_name(&self, name: &str) -> bool {
        self.names.iter().any(|n| n.eq_ignore_ascii_case(name))
    }

    pub fn display_name(&self) -> String {
        if self.is_narrator {
            return "you".to_string();
        }
        match self.names.iter().next() {
            Some(n) => n.clone(),
            None => self.id.to_string(),
        }
    }
}

/// One replayable record of the assertion log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LogEntry {
    Entity {
        id: EntityId,
        narrator: bool,
    },
    Mention {
        entity: EntityId,
        mention: Mention,
    },
    Name {
        entity: EntityId,
        name: String,
        mention: Option<MentionId>,
    },
    Assert {
        a: EntityId,
        a_mention: Option<MentionId>,
        b: EntityId,
        b_mention: Option<MentionId>,
        relations: RelationSet,
    },
    Gender {
        entity: EntityId,
        gender: Gender,
        mention: Option<MentionId>,
    },
    Merge {
        keep: EntityId,
        drop: EntityId,
    },
    /// Marker left after a split; the preceding log was rewritten so that
    /// `moved` mentions belong to `successor`.
    Split {
        entity: EntityId,
        successor: EntityId,
        moved: Vec<MentionId>,
    },
}

impl LogEntry {
    fn entities(&self) -> Vec<EntityId> {
        match self {
            LogEntry::Entity { id, .. } => vec![*id],
            LogEntry::Mention { entity, .. }
            | LogEntry::Name { entity, .. }
            | LogEntry::Gender { entity, .. } => vec![*entity],
            LogEntry::Assert { a, b, .. } => vec![*a, *b],
            LogEntry::Merge { keep, drop } => vec![*keep, *drop],
            LogEntry::Split {
                entity, successor, ..
            } => vec![*entity, *successor],
        }
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogEntry::Entity { id, narrator } => {
                write!(f, "new entity {id}{}", if *narrator { " (narrator)" } else { "" })
            }
            LogEntry::Mention { entity, mention } => {
                write!(f, "mention \"{}\" of {entity}", mention.text)
            }
            LogEntry::Name { entity, name, .. } => write!(f, "{entity} is named {name}"),
            LogEntry::Assert {
                a, b, relations, ..
            } => write!(f, "{a} is {relations} of {b}"),
            LogEntry::Gender { entity, gender, .. } => write!(f, "{entity} is {gender}"),
            LogEntry::Merge { keep, drop } => write!(f, "{drop} merged into {keep}"),
            LogEntry::Split {
                entity, successor, ..
            } => write!(f, "{entity} split off {successor}"),
        }
    }
}

/// Why a mutation was refused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Contradiction {
    /// The pair whose edge set emptied, if any.
    pub pair: Option<(EntityId, EntityId)>,
    /// The edge set of `pair` before the refused mutation.
    pub before: Option<RelationSet>,
    /// Entity with clashing definite genders, if that was the cause.
    pub gender_clash: Option<EntityId>,
    pub trigger: LogEntry,
    /// Log indices of earlier entries touching the entities involved.
    pub support: Vec<usize>,
}

impl fmt::Display for Contradiction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "contradiction while applying `{}`", self.trigger)?;
        if let Some((a, b)) = self.pair {
            write!(f, ": no relation left between {a} and {b}")?;
            if let Some(before) = self.before {
                write!(f, " (was {before})")?;
            }
        }
        if let Some(e) = self.gender_clash {
            write!(f, ": conflicting genders for {e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WorldError {
    #[error("unknown entity {0}")]
    UnknownEntity(EntityId),
    #[error("an entity cannot be related to itself through an assertion")]
    SameEntity,
    #[error("empty relation constraint")]
    EmptyConstraint,
    #[error("the model already has a narrator")]
    SecondNarrator,
    #[error("composition table fails the axiom check:\n{0}")]
    InvalidTable(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("{0}")]
    Contradiction(Box<Contradiction>),
}

impl WorldError {
    pub fn contradiction(&self) -> Option<&Contradiction> {
        match self {
            WorldError::Contradiction(c) => Some(c),
            _ => None,
        }
    }
}

/// Result of [`WorldModel::possible_relations`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Possible {
    Relations(RelationSet),
    /// The two entities live in different components.
    Disjoint,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PropagationOutcome {
    pub changed_edges: BTreeSet<(EntityId, EntityId)>,
    pub gender_changes: Vec<(EntityId, Gender)>,
    pub clique_updates: usize,
}

/// Which two edges of a clique changed in [`WorldModel::update_clique`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CliqueChange {
    pub ik: bool,
    pub jk: bool,
}

/// Which of the two dependent edges is revised first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOrder {
    IkFirst,
    JkFirst,
}

/// Pop discipline of the propagation worklist.
#[derive(Debug, Clone)]
pub enum WorklistOrder {
    Fifo,
    Lifo,
    Random(Box<ChaCha8Rng>),
}

impl WorklistOrder {
    pub fn random(seed: u64) -> WorklistOrder {
        WorklistOrder::Random(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    fn pop<T>(&mut self, q: &mut VecDeque<T>) -> Option<T> {
        match self {
            WorklistOrder::Fifo => q.pop_front(),
            WorklistOrder::Lifo => q.pop_back(),
            WorklistOrder::Random(rng) => {
                if q.is_empty() {
                    None
                } else {
                    let i = rng.gen_range(0..q.len());
                    q.remove(i)
                }
            }
        }
    }
}

/// Internal failure during propagation, turned into a [`Contradiction`] once
/// the trigger is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Conflict {
    EmptyEdge {
        pair: (EntityId, EntityId),
        before: RelationSet,
    },
    Gender(EntityId),
}

#[inline]
fn key(a: EntityId, b: EntityId) -> (EntityId, EntityId) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone)]
pub struct WorldModel {
    table: Arc<CompositionTable>,
    entities: BTreeMap<EntityId, Entity>,
    /// Canonical `(low, high)` pair to the set read as "low is R of high".
    edges: BTreeMap<(EntityId, EntityId), RelationSet>,
    /// Component label per entity: the smallest member id.
    component: BTreeMap<EntityId, EntityId>,
    log: Vec<LogEntry>,
    next_entity: u32,
    next_mention: u32,
    version: u64,
}

impl PartialEq for WorldModel {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.edges == other.edges
            && self.component == other.component
            && self.log == other.log
            && self.next_entity == other.next_entity
            && self.next_mention == other.next_mention
            && self.version == other.version
    }
}

impl WorldModel {
    pub fn new(table: Arc<CompositionTable>) -> Result<WorldModel, WorldError> {
        let report = check_axioms(&table);
        if !report.is_valid() {
            return Err(WorldError::InvalidTable(report.to_string()));
        }
        Ok(Self::new_unchecked(table))
    }

    /// Skip the axiom check. Used by tests that deliberately break the table.
    pub fn new_unchecked(table: Arc<CompositionTable>) -> WorldModel {
        WorldModel {
            table,
            entities: BTreeMap::new(),
            edges: BTreeMap::new(),
            component: BTreeMap::new(),
            log: Vec::new(),
            next_entity: 0,
            next_mention: 0,
            version: 0,
        }
    }

    pub fn table(&self) -> &Arc<CompositionTable> {
        &self.table
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn set_version(&mut self, version: u64) {
        self.version = version;
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn entity(&self, id: EntityId) -> Option<&Entity> {
        self.entities.get(&id)
    }

    pub fn entity_ids(&self) -> Vec<EntityId> {
        self.entities.keys().copied().collect()
    }

    pub fn narrator(&self) -> Option<EntityId> {
        self.entities
            .values()
            .find(|e| e.is_narrator)
            .map(|e| e.id)
    }

    /// All stored edges as `(low, high, set)`.
    pub fn edges(&self) -> impl Iterator<Item = (EntityId, EntityId, RelationSet)> + '_ {
        self.edges.iter().map(|(&(a, b), &s)| (a, b, s))
    }

    pub fn component_of(&self, e: EntityId) -> Option<EntityId> {
        self.component.get(&e).copied()
    }

    pub fn component_members(&self, e: EntityId) -> Vec<EntityId> {
        match self.component.get(&e) {
            Some(&label) => self
                .component
                .iter()
                .filter(|(_, &l)| l == label)
                .map(|(&id, _)| id)
                .collect(),
            None => Vec::new(),
        }
    }

    /// Component labels with their members, in label order.
    pub fn components(&self) -> BTreeMap<EntityId, Vec<EntityId>> {
        let mut out: BTreeMap<EntityId, Vec<EntityId>> = BTreeMap::new();
        for (&id, &label) in &self.component {
            out.entry(label).or_default().push(id);
        }
        out
    }

    pub fn same_component(&self, a: EntityId, b: EntityId) -> bool {
        match (self.component.get(&a), self.component.get(&b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    /// Edge set read as "a is R of b"; `None` when not connected.
    pub fn edge(&self, a: EntityId, b: EntityId) -> Option<RelationSet> {
        if a == b {
            return self
                .entities
                .contains_key(&a)
                .then(|| RelationSet::single(RelationAtom::Same));
        }
        let s = self.edges.get(&key(a, b))?;
        Some(if a < b { *s } else { s.inverse() })
    }

    fn edge_raw(&self, a: EntityId, b: EntityId) -> RelationSet {
        self.edge(a, b).expect("edge inside a component")
    }

    fn put_edge(&mut self, a: EntityId, b: EntityId, s: RelationSet) {
        let v = if a < b { s } else { s.inverse() };
        self.edges.insert(key(a, b), v);
    }

    /// Total cardinality over all stored edge sets.
    pub fn total_cardinality(&self) -> usize {
        self.edges.values().map(|s| s.len()).sum()
    }

    pub fn possible_relations(&self, a: EntityId, b: EntityId) -> Result<Possible, WorldError> {
        for e in [a, b] {
            if !self.entities.contains_key(&e) {
                return Err(WorldError::UnknownEntity(e));
            }
        }
        Ok(match self.edge(a, b) {
            Some(s) => Possible::Relations(s),
            None => Possible::Disjoint,
        })
    }

    fn require(&self, e: EntityId) -> Result<&Entity, WorldError> {
        self.entities.get(&e).ok_or(WorldError::UnknownEntity(e))
    }

    fn support_for(&self, entities: &[EntityId]) -> Vec<usize> {
        self.log
            .iter()
            .enumerate()
            .filter(|(_, entry)| {
                !matches!(entry, LogEntry::Entity { .. } | LogEntry::Mention { .. })
                    && entry.entities().iter().any(|e| entities.contains(e))
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn contradiction(&self, conflict: Conflict, trigger: LogEntry) -> WorldError {
        let (pair, before, clash) = match conflict {
            Conflict::EmptyEdge { pair, before } => (Some(pair), Some(before), None),
            Conflict::Gender(e) => (None, None, Some(e)),
        };
        let mut involved = trigger.entities();
        if let Some((a, b)) = pair {
            involved.extend([a, b]);
        }
        involved.extend(clash);
        WorldError::Contradiction(Box::new(Contradiction {
            pair,
            before,
            gender_clash: clash,
            support: self.support_for(&involved),
            trigger,
        }))
    }

    /// Apply `entry` transactionally: on failure the model is restored.
    fn commit(&mut self, entry: LogEntry) -> Result<PropagationOutcome, WorldError> {
        let backup = self.clone();
        match self.apply(&entry, &mut WorklistOrder::Fifo) {
            Ok(outcome) => {
                self.log.push(entry);
                self.version += 1;
                Ok(outcome)
            }
            Err(e) => {
                *self = backup;
                Err(e)
            }
        }
    }

    fn apply(
        &mut self,
        entry: &LogEntry,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, WorldError> {
        match entry {
            LogEntry::Entity { id, narrator } => {
                if *narrator && self.narrator().is_some() {
                    return Err(WorldError::SecondNarrator);
                }
                if self.entities.contains_key(id) {
                    return Err(WorldError::Precondition(format!("{id} already exists")));
                }
                self.entities.insert(
                    *id,
                    Entity {
                        id: *id,
                        names: BTreeSet::new(),
                        gender: Gender::Unknown,
                        is_narrator: *narrator,
                        mentions: Vec::new(),
                    },
                );
                self.component.insert(*id, *id);
                self.next_entity = self.next_entity.max(id.0 + 1);
                Ok(PropagationOutcome::default())
            }
            LogEntry::Mention { entity, mention } => {
                self.require(*entity)?;
                self.next_mention = self.next_mention.max(mention.id.0 + 1);
                self.entities
                    .get_mut(entity)
                    .expect("checked")
                    .mentions
                    .push(mention.clone());
                Ok(PropagationOutcome::default())
            }
            LogEntry::Name { entity, name, .. } => {
                self.require(*entity)?;
                self.entities
                    .get_mut(entity)
                    .expect("checked")
                    .names
                    .insert(name.clone());
                Ok(PropagationOutcome::default())
            }
            LogEntry::Assert {
                a, b, relations, ..
            } => self
                .apply_assert(*a, *relations, *b, order)
                .map_err(|c| self.contradiction(c, entry.clone())),
            LogEntry::Gender { entity, gender, .. } => {
                self.require(*entity)?;
                self.apply_gender(*entity, *gender, order)
                    .map_err(|c| self.contradiction(c, entry.clone()))
            }
            LogEntry::Merge { keep, drop } => {
                self.require(*keep)?;
                self.require(*drop)?;
                if keep == drop {
                    return Err(WorldError::SameEntity);
                }
                self.apply_merge(*keep, *drop, order)
                    .map_err(|c| self.contradiction(c, entry.clone()))
            }
            LogEntry::Split { successor, .. } => {
                self.next_entity = self.next_entity.max(successor.0 + 1);
                Ok(PropagationOutcome::default())
            }
        }
    }

    pub fn add_entity(
        &mut self,
        name: Option<&str>,
        gender: Option<Gender>,
        narrator: bool,
    ) -> Result<EntityId, WorldError> {
        if narrator && self.narrator().is_some() {
            return Err(WorldError::SecondNarrator);
        }
        let backup = self.clone();
        let id = EntityId(self.next_entity);
        let result = (|| {
            self.commit(LogEntry::Entity { id, narrator })?;
            if let Some(n) = name {
                self.add_name(id, n, None)?;
            }
            if let Some(g) = gender {
                self.set_gender_with(id, g, None)?;
            }
            Ok(id)
        })();
        if result.is_err() {
            *self = backup;
        }
        result
    }

    pub fn add_name(
        &mut self,
        e: EntityId,
        name: &str,
        mention: Option<MentionId>,
    ) -> Result<(), WorldError> {
        self.require(e)?;
        self.commit(LogEntry::Name {
            entity: e,
            name: name.to_string(),
            mention,
        })
        .map(|_| ())
    }

    pub fn add_mention(
        &mut self,
        e: EntityId,
        utterance: u32,
        text: &str,
    ) -> Result<MentionId, WorldError> {
        self.require(e)?;
        let id = MentionId(self.next_mention);
        self.commit(LogEntry::Mention {
            entity: e,
            mention: Mention {
                id,
                utterance,
                text: text.to_string(),
            },
        })?;
        Ok(id)
    }

    pub fn assert_relation(
        &mut self,
        a: EntityId,
        constraint: RelationSet,
        b: EntityId,
    ) -> Result<PropagationOutcome, WorldError> {
        self.assert_relation_with(a, None, constraint, b, None)
    }

    /// Constrain "a is R of b" to `constraint`, recording which mentions the
    /// endpoints were grounded from.
    pub fn assert_relation_with(
        &mut self,
        a: EntityId,
        a_mention: Option<MentionId>,
        constraint: RelationSet,
        b: EntityId,
        b_mention: Option<MentionId>,
    ) -> Result<PropagationOutcome, WorldError> {
        self.require(a)?;
        self.require(b)?;
        if a == b {
            return Err(WorldError::SameEntity);
        }
        if constraint.is_empty() {
            return Err(WorldError::EmptyConstraint);
        }
        self.commit(LogEntry::Assert {
            a,
            a_mention,
            b,
            b_mention,
            relations: constraint,
        })
    }

    fn apply_assert(
        &mut self,
        a: EntityId,
        constraint: RelationSet,
        b: EntityId,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, Conflict> {
        if self.same_component(a, b) {
            let before = self.edge_raw(a, b);
            let after = before.intersection(constraint);
            if after.is_empty() {
                return Err(Conflict::EmptyEdge {
                    pair: (a, b),
                    before,
                });
            }
            if after == before {
                return Ok(PropagationOutcome::default());
            }
            self.put_edge(a, b, after);
            let mut outcome = self.propagate_in_order(vec![key(a, b)], vec![], order)?;
            outcome.changed_edges.insert(key(a, b));
            Ok(outcome)
        } else {
            self.join_in_order(a, b, constraint, order)
        }
    }

    /// Join the components of `a` and `b`, seeding `a → b` with `seed` and
    /// every other cross pair with the full set, then propagate.
    pub fn join_components(
        &mut self,
        a: EntityId,
        b: EntityId,
        seed: RelationSet,
    ) -> Result<PropagationOutcome, WorldError> {
        if self.same_component(a, b) {
            return Err(WorldError::Precondition(format!(
                "{a} and {b} are already connected"
            )));
        }
        self.assert_relation(a, seed, b)
    }

    fn join_in_order(
        &mut self,
        a: EntityId,
        b: EntityId,
        seed: RelationSet,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, Conflict> {
        let left = self.component_members(a);
        let right = self.component_members(b);
        let mut dirty = Vec::with_capacity(left.len() * right.len());
        for &x in &left {
            for &y in &right {
                let s = if (x, y) == (a, b) {
                    seed
                } else {
                    RelationSet::FULL
                };
                self.put_edge(x, y, s);
                dirty.push(key(x, y));
            }
        }
        let label = left[0].min(right[0]);
        for id in left.iter().chain(&right) {
            self.component.insert(*id, label);
        }
        // Gender rules must see every new pair, so the genders of both sides
        // are re-examined too.
        let genders: Vec<EntityId> = left
            .iter()
            .chain(&right)
            .copied()
            .filter(|e| self.entities[e].gender.is_definite())
            .collect();
        let mut outcome = self.propagate_in_order(dirty.clone(), genders, order)?;
        outcome.changed_edges.extend(dirty);
        Ok(outcome)
    }

    pub fn set_gender(&mut self, e: EntityId, g: Gender) -> Result<PropagationOutcome, WorldError> {
        self.set_gender_with(e, g, None)
    }

    pub fn set_gender_with(
        &mut self,
        e: EntityId,
        g: Gender,
        mention: Option<MentionId>,
    ) -> Result<PropagationOutcome, WorldError> {
        self.require(e)?;
        self.commit(LogEntry::Gender {
            entity: e,
            gender: g,
            mention,
        })
    }

    fn apply_gender(
        &mut self,
        e: EntityId,
        g: Gender,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, Conflict> {
        let current = self.entities[&e].gender;
        match (current.is_definite(), g.is_definite()) {
            (true, true) if current != g => return Err(Conflict::Gender(e)),
            (true, _) => return Ok(PropagationOutcome::default()),
            (false, false) => {
                if g.rank() > current.rank() {
                    self.entities.get_mut(&e).expect("exists").gender = g;
                }
                return Ok(PropagationOutcome::default());
            }
            (false, true) => {}
        }
        self.entities.get_mut(&e).expect("exists").gender = g;
        let mut outcome = self.propagate_in_order(vec![], vec![e], order)?;
        outcome.gender_changes.insert(0, (e, g));
        Ok(outcome)
    }

    /// Revise `(i,k)` and `(j,k)` after `(i,j)` shrank: each is intersected
    /// once with the composition through the other two edges.
    pub fn update_clique(
        &mut self,
        i: EntityId,
        j: EntityId,
        k: EntityId,
    ) -> Result<CliqueChange, Conflict> {
        self.update_clique_ordered(i, j, k, UpdateOrder::IkFirst)
    }

    pub fn update_clique_ordered(
        &mut self,
        i: EntityId,
        j: EntityId,
        k: EntityId,
        order: UpdateOrder,
    ) -> Result<CliqueChange, Conflict> {
        debug_assert!(i != j && j != k && i != k);
        let mut change = CliqueChange::default();
        let revise_ik = |w: &mut WorldModel| -> Result<bool, Conflict> {
            let old = w.edge_raw(i, k);
            let new = old.intersection(w.table.compose_sets(w.edge_raw(i, j), w.edge_raw(j, k)));
            w.replace(i, k, old, new)
        };
        let revise_jk = |w: &mut WorldModel| -> Result<bool, Conflict> {
            let old = w.edge_raw(j, k);
            let new = old.intersection(w.table.compose_sets(w.edge_raw(j, i), w.edge_raw(i, k)));
            w.replace(j, k, old, new)
        };
        match order {
            UpdateOrder::IkFirst => {
                change.ik = revise_ik(self)?;
                change.jk = revise_jk(self)?;
            }
            UpdateOrder::JkFirst => {
                change.jk = revise_jk(self)?;
                change.ik = revise_ik(self)?;
            }
        }
        Ok(change)
    }

    fn replace(
        &mut self,
        a: EntityId,
        b: EntityId,
        old: RelationSet,
        new: RelationSet,
    ) -> Result<bool, Conflict> {
        if new.is_empty() {
            return Err(Conflict::EmptyEdge {
                pair: (a, b),
                before: old,
            });
        }
        if new == old {
            return Ok(false);
        }
        self.put_edge(a, b, new);
        Ok(true)
    }

    /// Gender rules for one pair. Returns whether the edge shrank and which
    /// entity (if any) had its gender fixed.
    fn gender_rules(
        &mut self,
        a: EntityId,
        b: EntityId,
    ) -> Result<(bool, Option<EntityId>), Conflict> {
        let ga = self.entities[&a].gender;
        let gb = self.entities[&b].gender;
        let old = self.edge_raw(a, b);
        let mut new = old;
        if ga.is_definite() && gb.is_definite() {
            if ga == gb {
                new.remove(RelationAtom::Spouse);
            } else {
                new.remove(RelationAtom::Same);
            }
        }
        let shrank = self.replace(a, b, old, new)?;
        let mut fixed = None;
        if new == RelationSet::single(RelationAtom::Spouse) {
            let (known, other, g) = match (ga.is_definite(), gb.is_definite()) {
                (true, false) => (a, b, ga),
                (false, true) => (b, a, gb),
                _ => return Ok((shrank, None)),
            };
            let _ = known;
            self.entities.get_mut(&other).expect("exists").gender = g.opposite();
            fixed = Some(other);
        }
        Ok((shrank, fixed))
    }

    /// Worklist fixpoint from the given dirty edges and gender changes.
    pub fn propagate(
        &mut self,
        dirty: Vec<(EntityId, EntityId)>,
    ) -> Result<PropagationOutcome, Conflict> {
        self.propagate_in_order(dirty, vec![], &mut WorklistOrder::Fifo)
    }

    pub fn propagate_in_order(
        &mut self,
        dirty: Vec<(EntityId, EntityId)>,
        dirty_genders: Vec<EntityId>,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, Conflict> {
        let mut outcome = PropagationOutcome::default();
        let mut queue: VecDeque<(EntityId, EntityId)> = VecDeque::new();
        let mut queued: BTreeSet<(EntityId, EntityId)> = BTreeSet::new();
        for d in dirty {
            if queued.insert(d) {
                queue.push_back(d);
            }
        }
        let mut genders: VecDeque<EntityId> = dirty_genders.into();

        loop {
            if let Some(e) = genders.pop_front() {
                for k in self.component_members(e) {
                    if k == e {
                        continue;
                    }
                    let (shrank, fixed) = self.gender_rules(e, k)?;
                    if shrank {
                        outcome.changed_edges.insert(key(e, k));
                        if queued.insert(key(e, k)) {
                            queue.push_back(key(e, k));
                        }
                    }
                    if let Some(f) = fixed {
                        outcome.gender_changes.push((f, self.entities[&f].gender));
                        genders.push_back(f);
                    }
                }
                continue;
            }
            let Some((i, j)) = order.pop(&mut queue) else {
                break;
            };
            queued.remove(&(i, j));
            let (shrank, fixed) = self.gender_rules(i, j)?;
            if shrank {
                outcome.changed_edges.insert((i, j));
            }
            if let Some(f) = fixed {
                outcome.gender_changes.push((f, self.entities[&f].gender));
                genders.push_back(f);
            }
            for k in self.component_members(i) {
                if k == i || k == j {
                    continue;
                }
                let change = self.update_clique(i, j, k)?;
                outcome.clique_updates += 1;
                for (hit, pair) in [(change.ik, key(i, k)), (change.jk, key(j, k))] {
                    if hit {
                        outcome.changed_edges.insert(pair);
                        if queued.insert(pair) {
                            queue.push_back(pair);
                        }
                    }
                }
            }
        }
        Ok(outcome)
    }

    /// Merge `b` into `a`. Requires `Self` to remain possible between them.
    pub fn merge_entities(&mut self, a: EntityId, b: EntityId) -> Result<EntityId, WorldError> {
        self.require(a)?;
        self.require(b)?;
        if a == b {
            return Err(WorldError::SameEntity);
        }
        self.commit(LogEntry::Merge { keep: a, drop: b })?;
        Ok(a)
    }

    fn apply_merge(
        &mut self,
        keep: EntityId,
        drop: EntityId,
        order: &mut WorklistOrder,
    ) -> Result<PropagationOutcome, Conflict> {
        let gk = self.entities[&keep].gender;
        let gd = self.entities[&drop].gender;
        if gk.is_definite() && gd.is_definite() && gk != gd {
            return Err(Conflict::Gender(keep));
        }
        let mut outcome = self.apply_assert(keep, RelationAtom::Same.into(), drop, order)?;

        let dropped = self.entities.remove(&drop).expect("exists");
        let mut dirty = Vec::new();
        for k in self.component_members(keep) {
            if k == keep || k == drop {
                continue;
            }
            let old = self.edge_raw(keep, k);
            let new = old.intersection(self.edge_raw(drop, k));
            if self.replace(keep, k, old, new)? {
                dirty.push(key(keep, k));
            }
        }
        self.edges.retain(|&(x, y), _| x != drop && y != drop);
        self.component.remove(&drop);
        let label = self.component[&keep];
        if label == drop {
            let members = self
                .component
                .iter()
                .filter(|(_, &l)| l == drop)
                .map(|(&id, _)| id)
                .collect::<Vec<_>>();
            let new_label = members.iter().copied().min().unwrap_or(keep);
            for m in members {
                self.component.insert(m, new_label);
            }
        }

        let survivor = self.entities.get_mut(&keep).expect("exists");
        survivor.names.extend(dropped.names);
        survivor.mentions.extend(dropped.mentions);
        survivor.is_narrator |= dropped.is_narrator;
        let mut regender = Vec::new();
        if gd.rank() > gk.rank() {
            survivor.gender = gd;
            if gd.is_definite() {
                regender.push(keep);
            }
        }
        let more = self.propagate_in_order(dirty, regender, order)?;
        outcome.changed_edges.extend(more.changed_edges);
        outcome.gender_changes.extend(more.gender_changes);
        outcome.clique_updates += more.clique_updates;
        Ok(outcome)
    }

    /// Split `e` in two. Mentions listed in `moved` (and every logged fact
    /// grounded through them) go to a new successor entity; the model is
    /// rebuilt by replaying the rewritten log.
    pub fn split_entity(
        &mut self,
        e: EntityId,
        moved: &BTreeSet<MentionId>,
    ) -> Result<(EntityId, EntityId), WorldError> {
        let entity = self.require(e)?;
        if entity.mentions.len() < 2 {
            return Err(WorldError::Precondition(format!(
                "{e} has fewer than two mentions"
            )));
        }
        let own: BTreeSet<MentionId> = entity.mentions.iter().map(|m| m.id).collect();
        if moved.is_empty() || !moved.is_subset(&own) || moved.len() == own.len() {
            return Err(WorldError::Precondition(
                "the mention partition must be non-trivial".to_string(),
            ));
        }

        // Entities merged into `e` are dissolved back into the two parts.
        let mut group: BTreeSet<EntityId> = [e].into();
        loop {
            let before = group.len();
            for entry in &self.log {
                if let LogEntry::Merge { keep, drop } = entry {
                    if group.contains(keep) {
                        group.insert(*drop);
                    }
                }
            }
            if group.len() == before {
                break;
            }
        }

        let successor = EntityId(self.next_entity);
        let route = |id: EntityId, mention: Option<MentionId>| -> EntityId {
            if !group.contains(&id) {
                id
            } else if mention.is_some_and(|m| moved.contains(&m)) {
                successor
            } else {
                e
            }
        };

        let mut log = Vec::with_capacity(self.log.len() + 2);
        for entry in &self.log {
            let rewritten = match entry.clone() {
                LogEntry::Entity { id, narrator } if id == e => {
                    log.push(LogEntry::Entity { id, narrator });
                    Some(LogEntry::Entity {
                        id: successor,
                        narrator: false,
                    })
                }
                LogEntry::Entity { id, .. } if group.contains(&id) => None,
                LogEntry::Merge { keep, drop } if group.contains(&keep) => {
                    let _ = drop;
                    None
                }
                LogEntry::Mention { entity, mention } => Some(LogEntry::Mention {
                    entity: route(entity, Some(mention.id)),
                    mention,
                }),
                LogEntry::Name {
                    entity,
                    name,
                    mention,
                } => Some(LogEntry::Name {
                    entity: route(entity, mention),
                    name,
                    mention,
                }),
                LogEntry::Gender {
                    entity,
                    gender,
                    mention,
                } => Some(LogEntry::Gender {
                    entity: route(entity, mention),
                    gender,
                    mention,
                }),
                LogEntry::Assert {
                    a,
                    a_mention,
                    b,
                    b_mention,
                    relations,
                } => {
                    let (a2, b2) = (route(a, a_mention), route(b, b_mention));
                    (a2 != b2).then_some(LogEntry::Assert {
                        a: a2,
                        a_mention,
                        b: b2,
                        b_mention,
                        relations,
                    })
                }
                other => Some(other),
            };
            log.extend(rewritten);
        }
        log.push(LogEntry::Split {
            entity: e,
            successor,
            moved: moved.iter().copied().collect(),
        });

        let mut rebuilt = WorldModel::replay(self.table.clone(), &log)?;
        rebuilt.version = self.version + 1;
        *self = rebuilt;
        Ok((e, successor))
    }

    /// Rebuild a model from scratch by applying every entry in order.
    pub fn replay(table: Arc<CompositionTable>, log: &[LogEntry]) -> Result<WorldModel, WorldError> {
        let mut w = WorldModel::new_unchecked(table);
        for entry in log {
            w.apply(entry, &mut WorklistOrder::Fifo)?;
            w.log.push(entry.clone());
            w.version += 1;
        }
        Ok(w)
    }

    /// Every 3-clique in every component satisfies `R_ij ⊆ M(R_ik, R_kj)`
    /// for all orderings.
    pub fn is_stable(&self) -> bool {
        for members in self.components().values() {
            for (x, &a) in members.iter().enumerate() {
                for (y, &b) in members.iter().enumerate().skip(x + 1) {
                    for &c in members.iter().skip(y + 1) {
                        for (i, j, k) in [(a, b, c), (a, c, b), (b, c, a), (b, a, c), (c, a, b), (c, b, a)] {
                            let rij = self.edge_raw(i, j);
                            let via = self.table.compose_sets(self.edge_raw(i, k), self.edge_raw(k, j));
                            if !rij.is_subset(via) {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }

    /// Create `n` fresh entities in a single component with the given edge
    /// sets (missing pairs get the full set), bypassing propagation. For
    /// exercising the clique primitives on hand-built states.
    pub fn with_raw_component(
        table: Arc<CompositionTable>,
        n: usize,
        edges: &[(usize, usize, RelationSet)],
    ) -> (WorldModel, Vec<EntityId>) {
        let mut w = WorldModel::new_unchecked(table);
        let ids: Vec<EntityId> = (0..n)
            .map(|_| {
                let id = EntityId(w.next_entity);
                w.apply(&LogEntry::Entity { id, narrator: false }, &mut WorklistOrder::Fifo)
                    .expect("fresh entity");
                id
            })
            .collect();
        for a in 0..n {
            for b in a + 1..n {
                w.put_edge(ids[a], ids[b], RelationSet::FULL);
            }
        }
        for &(a, b, s) in edges {
            w.put_edge(ids[a], ids[b], s);
        }
        for id in &ids {
            w.component.insert(*id, ids[0]);
        }
        (w, ids)
    }

    /// Overwrite an edge without propagating.
    pub fn set_edge_raw(&mut self, a: EntityId, b: EntityId, s: RelationSet) {
        self.put_edge(a, b, s);
    }
}
