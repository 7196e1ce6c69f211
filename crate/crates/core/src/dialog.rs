//! Question selection, phrasing, answer interpretation and paraphrase
//! learning.
//!
//! Questions target the edge whose resolution is expected to shrink the
//! model the most. Answers are read first with the fixed bare-answer forms,
//! then through paraphrases learned earlier in the same question context.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{RelationAtom, RelationSet};
use crate::extraction::{
    parse_utterance, AnswerToken, Clarification, ExtractedFact, FactKind, GroundOp, Lexicons,
    RelationLexicon,
};
use crate::world::{EntityId, Gender, MentionId, WorldError, WorldModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuestionKind {
    ChooseRelation {
        a: EntityId,
        b: EntityId,
        candidates: Vec<RelationAtom>,
    },
    YesNoSelf {
        a: EntityId,
        b: EntityId,
    },
    YesNoRelation {
        a: EntityId,
        b: EntityId,
        atom: RelationAtom,
    },
    AskGender {
        entity: EntityId,
    },
    AskName {
        entity: EntityId,
    },
    /// Split `entity`, moving `moved` to a new entity, then retry `refused`.
    ConfirmSplit {
        entity: EntityId,
        moved: Vec<MentionId>,
        kept_text: String,
        moved_text: String,
        refused: Vec<GroundOp>,
    },
    /// A mention matched several entities; retry `facts` once chosen.
    ChooseEntity {
        clarification: Clarification,
        facts: Vec<ExtractedFact>,
        forced: BTreeMap<String, EntityId>,
        utterance: u32,
    },
}

impl QuestionKind {
    pub fn name(&self) -> &'static str {
        match self {
            QuestionKind::ChooseRelation { .. } => "choose-relation",
            QuestionKind::YesNoSelf { .. } => "yes-no-self",
            QuestionKind::YesNoRelation { .. } => "yes-no-relation",
            QuestionKind::AskGender { .. } => "ask-gender",
            QuestionKind::AskName { .. } => "ask-name",
            QuestionKind::ConfirmSplit { .. } => "confirm-split",
            QuestionKind::ChooseEntity { .. } => "choose-entity",
        }
    }

    /// Generic context shared by all questions answered the same way.
    pub fn family(&self) -> &'static str {
        match self {
            QuestionKind::YesNoSelf { .. }
            | QuestionKind::YesNoRelation { .. }
            | QuestionKind::ConfirmSplit { .. } => "yes-no",
            QuestionKind::ChooseRelation { .. } | QuestionKind::ChooseEntity { .. } => "choose",
            QuestionKind::AskGender { .. } => "ask-gender",
            QuestionKind::AskName { .. } => "ask-name",
        }
    }

    pub fn is_repair(&self) -> bool {
        matches!(
            self,
            QuestionKind::ConfirmSplit { .. } | QuestionKind::ChooseEntity { .. }
        )
    }

    fn is_yes_no(&self) -> bool {
        self.family() == "yes-no"
    }

    /// Entities the question talks about; all must exist when asked.
    pub fn entities(&self) -> Vec<EntityId> {
        match self {
            QuestionKind::ChooseRelation { a, b, .. }
            | QuestionKind::YesNoSelf { a, b }
            | QuestionKind::YesNoRelation { a, b, .. } => vec![*a, *b],
            QuestionKind::AskGender { entity }
            | QuestionKind::AskName { entity }
            | QuestionKind::ConfirmSplit { entity, .. } => vec![*entity],
            QuestionKind::ChooseEntity { clarification, .. } => clarification.candidates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u64,
    pub kind: QuestionKind,
    pub text: String,
    /// Numbered choices for multiple-choice kinds.
    pub options: Vec<String>,
    /// Specific context: the rendered text with names replaced by slots.
    pub template: String,
    pub family: String,
    /// Names substituted for `{X}`, `{Y}`, ... in `template`.
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnswerValue {
    Yes,
    No,
    Relation(RelationAtom),
    Name(String),
    Gender(Gender),
    Choice(usize),
    Unknown,
}

impl fmt::Display for AnswerValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnswerValue::Yes => f.write_str("yes"),
            AnswerValue::No => f.write_str("no"),
            AnswerValue::Relation(r) => write!(f, "relation:{r}"),
            AnswerValue::Name(n) => write!(f, "name:{n}"),
            AnswerValue::Gender(g) => write!(f, "gender:{g}"),
            AnswerValue::Choice(i) => write!(f, "choice:{i}"),
            AnswerValue::Unknown => f.write_str("unknown"),
        }
    }
}

#[derive(Debug, Error)]
#[error("unrecognised answer token `{0}`")]
pub struct AnswerParseError(String);

impl FromStr for AnswerValue {
    type Err = AnswerParseError;

    fn from_str(s: &str) -> Result<AnswerValue, AnswerParseError> {
        let err = || AnswerParseError(s.to_string());
        Ok(match s.split_once(':') {
            None => match s {
                "yes" => AnswerValue::Yes,
                "no" => AnswerValue::No,
                "unknown" => AnswerValue::Unknown,
                _ => return Err(err()),
            },
            Some(("relation", r)) => AnswerValue::Relation(r.parse().map_err(|_| err())?),
            Some(("name", n)) => AnswerValue::Name(n.to_string()),
            Some(("gender", "male")) => AnswerValue::Gender(Gender::Male),
            Some(("gender", "female")) => AnswerValue::Gender(Gender::Female),
            Some(("choice", i)) => AnswerValue::Choice(i.parse().map_err(|_| err())?),
            _ => return Err(err()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Direct,
    Paraphrase,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub value: AnswerValue,
    pub provenance: Provenance,
}

impl Answer {
    fn direct(value: AnswerValue) -> Answer {
        Answer {
            value,
            provenance: Provenance::Direct,
        }
    }

    pub fn is_known(&self) -> bool {
        self.value != AnswerValue::Unknown
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseEntry {
    pub template: String,
    pub pattern: String,
    pub answer: AnswerValue,
}

/// Learned answer paraphrases, shared by every session of a deployment.
/// Backed by an append-only file of tab-separated
/// `template, pattern, answer` lines; later lines win.
#[derive(Debug, Default)]
pub struct ParaphraseStore {
    path: Option<PathBuf>,
    entries: RwLock<BTreeMap<(String, String), AnswerValue>>,
    file: Mutex<()>,
}

impl ParaphraseStore {
    pub fn in_memory() -> ParaphraseStore {
        ParaphraseStore::default()
    }

    /// Load `path` if it exists; learned entries are appended to it.
    pub fn open(path: &Path) -> std::io::Result<ParaphraseStore> {
        let store = ParaphraseStore {
            path: Some(path.to_path_buf()),
            ..ParaphraseStore::default()
        };
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            let mut map = store.entries.write().expect("fresh lock");
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let mut fields = line.split('\t');
                let (Some(t), Some(p), Some(a)) = (fields.next(), fields.next(), fields.next())
                else {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("malformed paraphrase line: {line}"),
                    ));
                };
                let answer = a.parse().map_err(|e: AnswerParseError| {
                    std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string())
                })?;
                map.insert((t.to_string(), p.to_string()), answer);
            }
        }
        Ok(store)
    }

    pub fn lookup(&self, template: &str, pattern: &str) -> Option<AnswerValue> {
        self.entries
            .read()
            .expect("paraphrase lock poisoned")
            .get(&(template.to_string(), pattern.to_string()))
            .cloned()
    }

    pub fn insert(&self, entry: &ParaphraseEntry) -> std::io::Result<()> {
        let clean = |s: &str| s.replace(['\t', '\n', '\r'], " ");
        let (t, p) = (clean(&entry.template), clean(&entry.pattern));
        if let Some(path) = &self.path {
            let _guard = self.file.lock().expect("paraphrase file lock poisoned");
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            f.write_all(format!("{t}\t{p}\t{}\n", entry.answer).as_bytes())?;
        }
        self.entries
            .write()
            .expect("paraphrase lock poisoned")
            .insert((t, p), entry.answer.clone());
        Ok(())
    }

    pub fn entries(&self) -> Vec<ParaphraseEntry> {
        self.entries
            .read()
            .expect("paraphrase lock poisoned")
            .iter()
            .map(|((t, p), a)| ParaphraseEntry {
                template: t.clone(),
                pattern: p.clone(),
                answer: a.clone(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("paraphrase lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const SLOT_NAMES: [&str; 4] = ["X", "Y", "Z", "W"];

pub fn normalize(text: &str) -> String {
    text.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn replace_word(haystack: &str, word: &str, with: &str) -> String {
    if word.is_empty() {
        return haystack.to_string();
    }
    let lower = haystack.to_lowercase();
    let needle = word.to_lowercase();
    let mut out = String::new();
    let mut last = 0;
    let mut from = 0;
    while let Some(pos) = lower[from..].find(&needle) {
        let start = from + pos;
        let end = start + needle.len();
        let before_ok = lower[..start]
            .chars()
            .next_back()
            .is_none_or(|c| !c.is_alphanumeric());
        let after_ok = lower[end..].chars().next().is_none_or(|c| !c.is_alphanumeric());
        if before_ok && after_ok {
            out.push_str(&haystack[last..start]);
            out.push_str(with);
            last = end;
        }
        from = end;
    }
    out.push_str(&haystack[last..]);
    out
}

/// Replace each slot filler by its `{X}`-style variable.
pub fn abstract_slots(text: &str, slots: &[String]) -> String {
    let mut out = text.to_string();
    for (name, var) in slots.iter().zip(SLOT_NAMES) {
        out = replace_word(&out, name, &format!("{{{var}}}"));
    }
    out
}

/// Inverse of [`abstract_slots`].
pub fn fill_slots(pattern: &str, slots: &[String]) -> String {
    let mut out = pattern.to_string();
    for (name, var) in slots.iter().zip(SLOT_NAMES) {
        out = out.replace(&format!("{{{var}}}"), &name.to_lowercase());
    }
    out
}

/// Phrases entities relative to the narrator.
pub struct Describer<'a> {
    pub world: &'a WorldModel,
    pub lex: &'a RelationLexicon,
}

impl Describer<'_> {
    fn relation_to_narrator(&self, e: EntityId) -> Option<String> {
        let narrator = self.world.narrator()?;
        let atom = self.world.edge(e, narrator)?.as_single()?;
        if matches!(atom, RelationAtom::Same | RelationAtom::OutOfGraph) {
            return None;
        }
        let gender = self.world.entity(e)?.gender;
        Some(format!("your {}", self.lex.word_for(atom, Some(gender))))
    }

    /// Subject form: "you", a name, "your daughter", or a mention quote.
    pub fn name(&self, e: EntityId) -> String {
        let Some(entity) = self.world.entity(e) else {
            return "someone".to_string();
        };
        if entity.is_narrator {
            return "you".to_string();
        }
        if let Some(n) = entity.names.iter().next() {
            return n.clone();
        }
        if let Some(r) = self.relation_to_narrator(e) {
            return r;
        }
        match entity.mentions.first() {
            Some(m) => format!("the person you called \"{}\"", m.text),
            None => format!("person {}", e.0),
        }
    }

    pub fn possessive(&self, e: EntityId) -> String {
        match self.name(e).as_str() {
            "you" => "your".to_string(),
            n if n.ends_with('s') => format!("{n}'"),
            n => format!("{n}'s"),
        }
    }

    /// Name plus relation to the narrator when both are known.
    pub fn long(&self, e: EntityId) -> String {
        let name = self.name(e);
        match self.relation_to_narrator(e) {
            Some(r) if r != name => format!("{name} ({r})"),
            _ => name,
        }
    }

    /// Like [`Describer::long`], but an unnamed entity is described by how
    /// the user first referred to it.
    pub fn mentioned(&self, e: EntityId) -> String {
        match self.world.entity(e) {
            Some(x) if x.names.is_empty() && !x.is_narrator => match x.mentions.first() {
                Some(m) => format!("the person you called \"{}\"", m.text),
                None => self.long(e),
            },
            _ => self.long(e),
        }
    }

    fn is_you(&self, e: EntityId) -> bool {
        self.world.entity(e).is_some_and(|x| x.is_narrator)
    }

    fn be(&self, e: EntityId) -> &'static str {
        if self.is_you(e) {
            "Are"
        } else {
            "Is"
        }
    }

    /// "your father", "Sam's mother or aunt".
    pub fn relation_phrase(&self, a: EntityId, set: RelationSet, b: EntityId) -> String {
        let gender = self.world.entity(a).map(|x| x.gender);
        let words: Vec<String> = set
            .iter()
            .map(|r| match r {
                RelationAtom::Same => format!("the same person as {}", self.name(b)),
                RelationAtom::OutOfGraph => format!("not a close relative of {}", self.name(b)),
                r => format!("{} {}", self.possessive(b), self.lex.word_for(r, gender)),
            })
            .collect();
        words.join(" or ")
    }

    fn named_slots(&self, entities: &[EntityId]) -> Vec<String> {
        let mut slots: Vec<String> = Vec::new();
        for &e in entities {
            if let Some(entity) = self.world.entity(e) {
                if entity.is_narrator {
                    continue;
                }
                if let Some(n) = entity.names.iter().next() {
                    if !slots.contains(n) {
                        slots.push(n.clone());
                    }
                }
            }
        }
        slots
    }

    fn option_word(&self, a: EntityId, r: RelationAtom, b: EntityId) -> String {
        match r {
            RelationAtom::Same => "the same person".to_string(),
            RelationAtom::OutOfGraph => "none of these".to_string(),
            r => {
                let gender = self.world.entity(a).map(|x| x.gender);
                let _ = b;
                self.lex.word_for(r, gender)
            }
        }
    }

    pub fn render(&self, id: u64, kind: QuestionKind) -> Question {
        let mut options = Vec::new();
        let text = match &kind {
            QuestionKind::YesNoSelf { a, b } => {
                // Put a named entity first so the question reads naturally.
                let (x, y) = if self.world.entity(*a).is_some_and(|e| e.names.is_empty())
                    && self.world.entity(*b).is_some_and(|e| !e.names.is_empty())
                {
                    (*b, *a)
                } else {
                    (*a, *b)
                };
                format!(
                    "{} {} the same person as {}?",
                    self.be(x),
                    self.name(x),
                    self.name(y)
                )
            }
            QuestionKind::YesNoRelation { a, b, atom } => format!(
                "{} {} {}?",
                self.be(*a),
                self.name(*a),
                self.relation_phrase(*a, (*atom).into(), *b)
            ),
            QuestionKind::ChooseRelation { a, b, candidates } => {
                options = candidates
                    .iter()
                    .map(|r| self.option_word(*a, *r, *b))
                    .collect();
                let listed: Vec<String> = options
                    .iter()
                    .enumerate()
                    .map(|(i, o)| format!("({}) {o}", i + 1))
                    .collect();
                format!(
                    "What is {} to {}? {}",
                    self.name(*a),
                    self.name(*b),
                    listed.join(", ")
                )
            }
            QuestionKind::AskGender { entity } => format!(
                "{} {} male or female?",
                self.be(*entity),
                self.name(*entity)
            ),
            QuestionKind::AskName { entity } => {
                format!("What is {} name?", self.possessive(*entity))
            }
            QuestionKind::ConfirmSplit {
                kept_text,
                moved_text,
                ..
            } => format!(
                "Is {kept_text} a different person from the one you called \"{moved_text}\"?"
            ),
            QuestionKind::ChooseEntity { clarification, .. } => {
                options = clarification
                    .candidates
                    .iter()
                    .map(|e| self.long(*e))
                    .collect();
                let listed: Vec<String> = options
                    .iter()
                    .enumerate()
                    .map(|(i, o)| format!("({}) {o}", i + 1))
                    .collect();
                format!(
                    "Which \"{}\" do you mean? {}",
                    clarification.text,
                    listed.join(", ")
                )
            }
        };
        let slots = self.named_slots(&kind.entities());
        let template = format!("{}: {}", kind.name(), abstract_slots(&text, &slots));
        Question {
            id,
            family: kind.family().to_string(),
            kind,
            text,
            options,
            template,
            slots,
        }
    }
}

/// Expected total edge-set cardinality after the user resolves `(a, b)`,
/// averaging uniformly over the atoms still possible. An answer that would
/// be refused counts as zero. Works on clones; `w` is untouched.
pub fn score_edge(w: &WorldModel, a: EntityId, b: EntityId) -> Result<f64, WorldError> {
    let set = w
        .edge(a, b)
        .ok_or_else(|| WorldError::Precondition(format!("{a} and {b} are not connected")))?;
    if set.len() < 2 {
        return Err(WorldError::Precondition(format!(
            "edge {a}-{b} is already resolved"
        )));
    }
    let mut total = 0usize;
    for atom in set.iter() {
        let mut trial = w.clone();
        if trial.assert_relation(a, atom.into(), b).is_ok() {
            total += trial.total_cardinality();
        }
    }
    Ok(total as f64 / set.len() as f64)
}

/// Hop counts from the narrator over edges already resolved to a single
/// named relation.
pub fn narrator_distances(w: &WorldModel) -> BTreeMap<EntityId, u32> {
    let mut dist = BTreeMap::new();
    let Some(n) = w.narrator() else {
        return dist;
    };
    dist.insert(n, 0);
    let mut queue = VecDeque::from([n]);
    while let Some(x) = queue.pop_front() {
        let d = dist[&x];
        for y in w.component_members(x) {
            if dist.contains_key(&y) {
                continue;
            }
            let named = w
                .edge(x, y)
                .and_then(RelationSet::as_single)
                .is_some_and(|r| !matches!(r, RelationAtom::OutOfGraph | RelationAtom::Same));
            if named {
                dist.insert(y, d + 1);
                queue.push_back(y);
            }
        }
    }
    dist
}

/// The most useful question to ask next, if any.
///
/// Pending repairs come first, then genders that would let the gender rules
/// settle a spouse-or-same edge, then the multi-atom edge with the lowest
/// expected remaining cardinality (ties: closer to the narrator, fewer
/// atoms, lowest pair). Names are asked last and only when `ask_names`.
pub fn next_question(
    w: &WorldModel,
    repairs: &[QuestionKind],
    ask_names: bool,
) -> Option<QuestionKind> {
    if let Some(r) = repairs.first() {
        return Some(r.clone());
    }
    let dist = narrator_distances(w);
    let far = |e: EntityId| dist.get(&e).copied().unwrap_or(u32::MAX);

    let spouse_or_same = RelationSet::of(&[RelationAtom::Spouse, RelationAtom::Same]);
    let mut gender_blocked: Vec<(u32, EntityId)> = Vec::new();
    for (a, b, s) in w.edges() {
        if s.contains(RelationAtom::Spouse) && s.is_subset(spouse_or_same) {
            for e in [a, b] {
                if !w.entity(e).is_some_and(|x| x.gender.is_definite()) {
                    gender_blocked.push((far(e), e));
                }
            }
        }
    }
    if let Some(&(_, entity)) = gender_blocked.iter().min() {
        return Some(QuestionKind::AskGender { entity });
    }

    let mut best: Option<(f64, u32, usize, (EntityId, EntityId))> = None;
    for (a, b, s) in w.edges() {
        if s.len() < 2 {
            continue;
        }
        let score = score_edge(w, a, b).expect("multi-atom edge");
        let key = (score, far(a).min(far(b)), s.len(), (a, b));
        let better = match &best {
            None => true,
            Some(cur) => {
                key.0 < cur.0 || (key.0 == cur.0 && (key.1, key.2, key.3) < (cur.1, cur.2, cur.3))
            }
        };
        if better {
            best = Some(key);
        }
    }
    if let Some((_, _, _, (a, b))) = best {
        let s = w.edge(a, b).expect("edge exists");
        return Some(if s.contains(RelationAtom::Same) {
            QuestionKind::YesNoSelf { a, b }
        } else if s.len() == 2 {
            // Ask about the atom whose confirmation narrows the model most.
            let atom = s
                .iter()
                .min_by_key(|r| {
                    let mut trial = w.clone();
                    match trial.assert_relation(a, (*r).into(), b) {
                        Ok(_) => trial.total_cardinality(),
                        Err(_) => usize::MAX,
                    }
                })
                .expect("two atoms");
            QuestionKind::YesNoRelation { a, b, atom }
        } else {
            QuestionKind::ChooseRelation {
                a,
                b,
                candidates: s.atoms(),
            }
        });
    }

    if ask_names {
        let unnamed = w
            .entities()
            .filter(|e| !e.is_narrator && e.names.is_empty())
            .map(|e| (far(e.id), e.id))
            .min();
        if let Some((_, entity)) = unnamed {
            return Some(QuestionKind::AskName { entity });
        }
    }
    None
}

fn gender_answer(text: &str) -> Option<Gender> {
    let words: Vec<String> = normalize(text)
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect();
    let male = ["male", "man", "boy", "he", "him", "his", "m"];
    let female = ["female", "woman", "girl", "she", "her", "hers", "f"];
    let m = words.iter().any(|w| male.contains(&w.as_str()));
    let f = words.iter().any(|w| female.contains(&w.as_str()));
    match (m, f) {
        (true, false) => Some(Gender::Male),
        (false, true) => Some(Gender::Female),
        _ => None,
    }
}

fn choice_answer(text: &str, options: usize) -> Option<usize> {
    let t = text.trim().trim_matches(|c: char| !c.is_alphanumeric());
    let t = t.strip_prefix("option ").unwrap_or(t);
    let n: usize = t.parse().ok()?;
    (1..=options).contains(&n).then_some(n)
}

fn name_answer(text: &str, lex: &Lexicons) -> Option<String> {
    let trimmed = text.trim().trim_matches(|c: char| !c.is_alphanumeric());
    let lower = trimmed.to_lowercase();
    let prefixes = [
        "his name is ",
        "her name is ",
        "their name is ",
        "the name is ",
        "he is named ",
        "she is named ",
        "he is called ",
        "she is called ",
        "it is ",
        "it's ",
    ];
    let skip = prefixes
        .iter()
        .find(|p| lower.starts_with(*p))
        .map_or(0, |p| p.len());
    let original = trimmed.get(skip..).unwrap_or(trimmed);
    match parse_utterance(original, lex).as_slice() {
        [ExtractedFact {
            kind: FactKind::Answer {
                answer: AnswerToken::Name { name },
            },
            ..
        }] => Some(name.clone()),
        _ => None,
    }
}

/// Whether `value` answers `q` at all.
fn fits(q: &Question, value: &AnswerValue) -> bool {
    match (&q.kind, value) {
        (k, AnswerValue::Yes | AnswerValue::No) => k.is_yes_no(),
        (QuestionKind::ChooseRelation { candidates, .. }, AnswerValue::Relation(r)) => {
            candidates.contains(r)
        }
        (QuestionKind::YesNoRelation { atom, .. }, AnswerValue::Relation(r)) => atom == r,
        (QuestionKind::ChooseRelation { .. } | QuestionKind::ChooseEntity { .. }, AnswerValue::Choice(i)) => {
            (1..=q.options.len()).contains(i)
        }
        (QuestionKind::AskGender { .. }, AnswerValue::Gender(g)) => g.is_definite(),
        (QuestionKind::AskName { .. }, AnswerValue::Name(_)) => true,
        _ => false,
    }
}

fn direct_answer(q: &Question, text: &str, lex: &Lexicons) -> AnswerValue {
    let token = match parse_utterance(text, lex).as_slice() {
        [ExtractedFact {
            kind: FactKind::Answer { answer },
            ..
        }] => Some(answer.clone()),
        _ => None,
    };
    let split = matches!(q.kind, QuestionKind::ConfirmSplit { .. });
    let value = match (&q.kind, token) {
        (_, Some(AnswerToken::Yes)) => AnswerValue::Yes,
        (_, Some(AnswerToken::No)) => AnswerValue::No,
        (_, Some(AnswerToken::Same)) if split => AnswerValue::No,
        (_, Some(AnswerToken::Different)) if split => AnswerValue::Yes,
        (QuestionKind::YesNoSelf { .. }, Some(AnswerToken::Same)) => AnswerValue::Yes,
        (QuestionKind::YesNoSelf { .. }, Some(AnswerToken::Different)) => AnswerValue::No,
        (QuestionKind::ChooseRelation { candidates, .. }, Some(AnswerToken::Same))
            if candidates.contains(&RelationAtom::Same) =>
        {
            AnswerValue::Relation(RelationAtom::Same)
        }
        (_, Some(AnswerToken::Relation { atom, .. })) => AnswerValue::Relation(atom),
        (QuestionKind::AskName { .. }, _) => match name_answer(text, lex) {
            Some(n) => AnswerValue::Name(n),
            None => AnswerValue::Unknown,
        },
        (QuestionKind::AskGender { .. }, _) => match gender_answer(text) {
            Some(g) => AnswerValue::Gender(g),
            None => AnswerValue::Unknown,
        },
        (QuestionKind::ChooseRelation { .. } | QuestionKind::ChooseEntity { .. }, _) => {
            match choice_answer(text, q.options.len()) {
                Some(i) => AnswerValue::Choice(i),
                None => AnswerValue::Unknown,
            }
        }
        _ => AnswerValue::Unknown,
    };
    if fits(q, &value) {
        value
    } else {
        AnswerValue::Unknown
    }
}

/// Read `text` as an answer to `q`: fixed forms first, then paraphrases
/// learned under this question's template or its family.
pub fn interpret_answer(
    q: &Question,
    text: &str,
    lex: &Lexicons,
    store: &ParaphraseStore,
) -> Answer {
    let value = direct_answer(q, text, lex);
    if value != AnswerValue::Unknown {
        return Answer::direct(value);
    }
    let pattern = abstract_slots(&normalize(text), &q.slots);
    for context in [&q.template, &q.family] {
        if let Some(value) = store.lookup(context, &pattern) {
            if fits(q, &value) {
                return Answer {
                    value,
                    provenance: Provenance::Paraphrase,
                };
            }
        }
    }
    Answer::direct(AnswerValue::Unknown)
}

/// Remember that `failed_text` meant `followup` in the context of `q`.
/// Patterns that mention one of the question's names are tied to its exact
/// template; others to the question family.
pub fn learn_paraphrase(
    q: &Question,
    failed_text: &str,
    followup: &Answer,
    store: &ParaphraseStore,
) -> std::io::Result<Option<ParaphraseEntry>> {
    if !followup.is_known() || followup.provenance != Provenance::Direct {
        return Ok(None);
    }
    let pattern = abstract_slots(&normalize(failed_text), &q.slots);
    if pattern.is_empty() {
        return Ok(None);
    }
    let has_slot = SLOT_NAMES
        .iter()
        .take(q.slots.len())
        .any(|v| pattern.contains(&format!("{{{v}}}")));
    let entry = ParaphraseEntry {
        template: if has_slot {
            q.template.clone()
        } else {
            q.family.clone()
        },
        pattern,
        answer: followup.value.clone(),
    };
    store.insert(&entry)?;
    Ok(Some(entry))
}
