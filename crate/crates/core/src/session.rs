//! One conversation: a world model, the question in flight, queued repair
//! questions and the transcript.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{CompositionTable, RelationAtom, RelationSet};
use crate::dialog::{
    interpret_answer, learn_paraphrase, next_question, Answer, AnswerValue, Describer,
    ParaphraseStore, Question, QuestionKind,
};
use crate::extraction::{parse_utterance, ExtractedFact, FactKind, GroundOp, Lexicons};
use crate::world::{Contradiction, EntityId, Gender, LogEntry, MentionId, WorldError, WorldModel};

pub const NOT_UNDERSTOOD: &str = "Sorry, I did not understand that.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionConfig {
    /// Ask for names of unnamed relatives once nothing else is open.
    pub ask_names: bool,
}

#[allow(clippy::derivable_impls)]
impl Default for SessionConfig {
    fn default() -> SessionConfig {
        SessionConfig { ask_names: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TurnReply {
    pub replies: Vec<String>,
    pub question: Option<Question>,
}

/// Serialized form of a session. The world is stored as its log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SessionState {
    pub id: String,
    pub log: Vec<LogEntry>,
    pub version: u64,
    pub pending: Option<Question>,
    pub failed_text: Option<String>,
    pub repairs: VecDeque<QuestionKind>,
    pub transcript: Vec<TranscriptLine>,
    pub utterances: u32,
    pub next_question_id: u64,
    pub config: SessionConfig,
    /// Unix seconds.
    #[serde(default)]
    pub created: u64,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub id: String,
    world: WorldModel,
    pending: Option<Question>,
    failed_text: Option<String>,
    repairs: VecDeque<QuestionKind>,
    transcript: Vec<TranscriptLine>,
    utterances: u32,
    next_question_id: u64,
    pub config: SessionConfig,
    /// Unix seconds at creation.
    pub created: u64,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        table: Arc<CompositionTable>,
        config: SessionConfig,
    ) -> Result<Session, WorldError> {
        let mut world = WorldModel::new(table)?;
        world.add_entity(None, None, true)?;
        Ok(Session {
            id: id.into(),
            world,
            pending: None,
            failed_text: None,
            repairs: VecDeque::new(),
            transcript: Vec::new(),
            utterances: 0,
            next_question_id: 1,
            config,
            created: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
        })
    }

    pub fn world(&self) -> &WorldModel {
        &self.world
    }

    pub fn pending(&self) -> Option<&Question> {
        self.pending.as_ref()
    }

    pub fn transcript(&self) -> &[TranscriptLine] {
        &self.transcript
    }

    fn describer<'a>(&'a self, lex: &'a Lexicons) -> Describer<'a> {
        Describer {
            world: &self.world,
            lex: &lex.relations,
        }
    }

    /// Handle one user utterance.
    pub fn say(&mut self, text: &str, lex: &Lexicons, store: &ParaphraseStore) -> TurnReply {
        self.transcript.push(TranscriptLine {
            speaker: Speaker::User,
            text: text.to_string(),
        });
        let mut replies = Vec::new();
        let facts = parse_utterance(text, lex);
        let has_statement = facts.iter().any(ExtractedFact::is_statement);

        let mut handled = false;
        if let Some(q) = self.pending.clone() {
            let answer = interpret_answer(&q, text, lex, store);
            if answer.is_known() {
                if let Some(failed) = self.failed_text.take() {
                    // A store that cannot be written only loses the lesson.
                    let _ = learn_paraphrase(&q, &failed, &answer, store);
                }
                self.pending = None;
                if q.kind.is_repair() {
                    self.repairs.pop_front();
                }
                self.apply_answer(&q, &answer, lex, &mut replies);
                handled = true;
            } else if !has_statement {
                self.failed_text = Some(text.to_string());
                replies.push(NOT_UNDERSTOOD.to_string());
                handled = true;
            } else {
                self.failed_text = None;
                self.pending = None;
            }
        }

        if !handled {
            if has_statement {
                self.utterances += 1;
                let u = self.utterances;
                self.process_facts(facts, BTreeMap::new(), u, lex, &mut replies);
            } else if facts
                .iter()
                .any(|f| matches!(f.kind, FactKind::Answer { .. }))
            {
                replies.push("There is no open question right now.".to_string());
            } else {
                replies.push(NOT_UNDERSTOOD.to_string());
            }
        }

        let question = self.ask(lex);
        for r in &replies {
            self.transcript.push(TranscriptLine {
                speaker: Speaker::System,
                text: r.clone(),
            });
        }
        if let Some(q) = &question {
            self.transcript.push(TranscriptLine {
                speaker: Speaker::System,
                text: q.text.clone(),
            });
        }
        TurnReply { replies, question }
    }

    /// Pick the next question; an unanswered one is repeated unchanged.
    pub fn ask(&mut self, lex: &Lexicons) -> Option<Question> {
        self.repairs.retain(|r| {
            r.entities()
                .iter()
                .all(|e| self.world.entity(*e).is_some())
        });
        let kind = next_question(&self.world, self.repairs.make_contiguous(), self.config.ask_names)?;
        if let Some(p) = &self.pending {
            if p.kind == kind {
                let id = p.id;
                let q = self.describer(lex).render(id, kind);
                self.pending = Some(q.clone());
                return Some(q);
            }
        }
        let q = self.describer(lex).render(self.next_question_id, kind);
        self.next_question_id += 1;
        self.failed_text = None;
        self.pending = Some(q.clone());
        Some(q)
    }

    fn process_facts(
        &mut self,
        facts: Vec<ExtractedFact>,
        forced: BTreeMap<String, EntityId>,
        utterance: u32,
        lex: &Lexicons,
        replies: &mut Vec<String>,
    ) {
        let mut clauses: BTreeMap<usize, Vec<ExtractedFact>> = BTreeMap::new();
        for f in facts {
            clauses.entry(f.clause).or_default().push(f);
        }
        let clause_ids: Vec<usize> = clauses.keys().copied().collect();
        for (n, c) in clause_ids.iter().enumerate() {
            let clause = &clauses[c];
            if clause.iter().all(|f| f.kind == FactKind::Unparseable) {
                replies.push(format!(
                    "Sorry, I did not understand \"{}\".",
                    clause[0].span.trim()
                ));
                continue;
            }
            let statements: Vec<ExtractedFact> =
                clause.iter().filter(|f| f.is_statement()).cloned().collect();
            if statements.is_empty() {
                continue;
            }
            let before = self.world.clone();
            let reply_count = replies.len();
            match crate::extraction::resolve_mentions(
                &statements,
                &mut self.world,
                lex,
                utterance,
                &forced,
            ) {
                Ok(Ok(ops)) => {
                    if let Err(refusal) = self.apply_ops(ops, true, lex, replies) {
                        // The whole clause is refused, including any new
                        // entities and mentions it introduced.
                        let version = self.world.version();
                        self.world = before;
                        self.world.set_version(version + 1);
                        replies.truncate(reply_count);
                        replies.push(refusal);
                    }
                }
                Ok(Err(clarification)) => {
                    let rest: Vec<ExtractedFact> = clause_ids[n..]
                        .iter()
                        .flat_map(|c| clauses[c].iter().cloned())
                        .collect();
                    self.repairs.push_back(QuestionKind::ChooseEntity {
                        clarification,
                        facts: rest,
                        forced,
                        utterance,
                    });
                    return;
                }
                Err(e) => replies.push(format!("Sorry, I could not use that: {e}.")),
            }
        }
    }

    fn apply_op(&mut self, op: &GroundOp) -> Result<(), WorldError> {
        match op {
            GroundOp::Assert {
                a,
                a_mention,
                relations,
                b,
                b_mention,
            } => self
                .world
                .assert_relation_with(*a, *a_mention, *relations, *b, *b_mention)
                .map(|_| ()),
            GroundOp::Gender {
                entity,
                gender,
                mention,
            } => self
                .world
                .set_gender_with(*entity, *gender, *mention)
                .map(|_| ()),
            GroundOp::Name {
                entity,
                name,
                mention,
            } => self.world.add_name(*entity, name, *mention),
            GroundOp::CensusGender {
                entity,
                gender,
                mention,
            } => {
                // Census evidence only fills in what is not already known.
                let current = self.world.entity(*entity).map(|e| e.gender);
                match current {
                    Some(g) if g.is_definite() => Ok(()),
                    _ => self
                        .world
                        .set_gender_with(*entity, *gender, *mention)
                        .map(|_| ()),
                }
            }
        }
    }

    fn apply_ops(
        &mut self,
        ops: Vec<GroundOp>,
        allow_split: bool,
        lex: &Lexicons,
        replies: &mut Vec<String>,
    ) -> Result<(), String> {
        let mut ops = ops;
        for i in 0..ops.len() {
            let op = &ops[i].clone();
            match self.apply_op(op) {
                Ok(()) => {
                    for (keep, drop) in self.auto_merge(lex, replies) {
                        for later in &mut ops[i + 1..] {
                            later.remap(drop, keep);
                        }
                    }
                }
                Err(_) if matches!(op, GroundOp::CensusGender { .. }) => {}
                Err(WorldError::Contradiction(c)) => {
                    if allow_split {
                        if let Some(split) = self.split_candidate(op, &ops[i..], lex) {
                            self.repairs.push_back(split);
                            return Ok(());
                        }
                    }
                    return Err(self.explain_refusal(op, &ops, &c, lex));
                }
                Err(WorldError::SameEntity) => return Err(self.explain_self_relation(op, lex)),
                Err(e) => return Err(format!("Sorry, I could not use that: {e}.")),
            }
        }
        Ok(())
    }

    /// A refused update made through a mention of an entity that has other
    /// mentions suggests the mentions belong to two different people.
    fn split_candidate(
        &self,
        op: &GroundOp,
        refused: &[GroundOp],
        lex: &Lexicons,
    ) -> Option<QuestionKind> {
        let (entity, mention) = op
            .references()
            .into_iter()
            .filter_map(|(e, m)| Some((e, m?)))
            .filter(|(e, _)| self.world.entity(*e).is_some_and(|x| x.mentions.len() >= 2))
            .max_by_key(|(_, m)| *m)?;
        let moved_text = self
            .world
            .entity(entity)?
            .mentions
            .iter()
            .find(|m| m.id == mention)?
            .text
            .clone();
        // Only offer a split that would let the refused updates through.
        let mut trial = self.clone();
        let moved = vec![mention];
        let (_, successor) = trial
            .world
            .split_entity(entity, &moved.iter().copied().collect())
            .ok()?;
        let retry: Vec<GroundOp> = refused
            .iter()
            .cloned()
            .map(|mut op| {
                op.reattribute(entity, &moved, successor);
                op
            })
            .collect();
        trial.apply_ops(retry, false, lex, &mut Vec::new()).ok()?;
        Some(QuestionKind::ConfirmSplit {
            entity,
            moved,
            kept_text: self.describer(lex).long(entity),
            moved_text,
            refused: refused.to_vec(),
        })
    }

    /// Merge every pair whose edge has narrowed to Self. Returns the
    /// `(kept, dropped)` pairs.
    fn auto_merge(&mut self, lex: &Lexicons, replies: &mut Vec<String>) -> Vec<(EntityId, EntityId)> {
        let mut merged = Vec::new();
        loop {
            let Some((a, b, _)) = self
                .world
                .edges()
                .find(|(_, _, s)| *s == RelationSet::single(RelationAtom::Same))
            else {
                return merged;
            };
            let (na, nb) = {
                let d = self.describer(lex);
                (d.mentioned(a), d.mentioned(b))
            };
            let (keep, drop) = (a.min(b), a.max(b));
            match self.world.merge_entities(keep, drop) {
                Ok(_) => {
                    merged.push((keep, drop));
                    replies.push(format!("I realised that {na} and {nb} are the same person."));
                }
                Err(e) => {
                    replies.push(format!("Sorry, I could not combine {na} and {nb}: {e}."));
                    return merged;
                }
            }
        }
    }


    /// How the user referred to `e` in `mention`, turned to face them.
    fn subject(&self, e: EntityId, mention: Option<MentionId>, lex: &Lexicons) -> String {
        let d = self.describer(lex);
        let entity = match self.world.entity(e) {
            Some(x) if x.names.is_empty() && !x.is_narrator => x,
            _ => return d.name(e),
        };
        let text = mention
            .and_then(|m| entity.mentions.iter().find(|x| x.id == m))
            .or(entity.mentions.first());
        match text {
            Some(m) => m
                .text
                .split(' ')
                .map(|w| if w.eq_ignore_ascii_case("my") { "your" } else { w })
                .collect::<Vec<_>>()
                .join(" "),
            None => d.name(e),
        }
    }

    fn claim(
        &self,
        a: EntityId,
        a_mention: Option<MentionId>,
        relations: RelationSet,
        b: EntityId,
        gender: Option<Gender>,
        lex: &Lexicons,
    ) -> String {
        let d = self.describer(lex);
        let gender = gender.or_else(|| self.world.entity(a).map(|x| x.gender));
        let words: Vec<String> = relations
            .iter()
            .map(|r| match r {
                RelationAtom::Same => format!("the same person as {}", d.name(b)),
                RelationAtom::OutOfGraph => format!("not a close relative of {}", d.name(b)),
                r => format!("{} {}", d.possessive(b), lex.relations.word_for(r, gender)),
            })
            .collect();
        format!("{} is {}", self.subject(a, a_mention, lex), words.join(" or "))
    }

    fn describe_entry(&self, entry: &LogEntry, lex: &Lexicons) -> Option<String> {
        let d = self.describer(lex);
        match entry {
            LogEntry::Assert {
                a,
                a_mention,
                b,
                relations,
                ..
            } => Some(self.claim(*a, *a_mention, *relations, *b, None, lex)),
            LogEntry::Gender { entity, gender, .. } if gender.is_definite() => {
                Some(format!("{} is {gender}", d.name(*entity)))
            }
            _ => None,
        }
    }

    fn explain_refusal(
        &self,
        op: &GroundOp,
        ops: &[GroundOp],
        c: &Contradiction,
        lex: &Lexicons,
    ) -> String {
        let claim = match op {
            GroundOp::Assert {
                a,
                a_mention,
                relations,
                b,
                ..
            } => {
                // The clause may say more about the holder's gender than the
                // model has absorbed yet.
                let hint = ops.iter().find_map(|o| match o {
                    GroundOp::Gender { entity, gender, .. } if entity == a => Some(*gender),
                    _ => None,
                });
                self.claim(*a, *a_mention, *relations, *b, hint, lex)
            }
            GroundOp::Gender {
                entity,
                gender,
                mention,
            } => format!("{} is {gender}", self.subject(*entity, *mention, lex)),
            GroundOp::Name { entity, name, .. } => {
                format!("{} is named {name}", self.describer(lex).name(*entity))
            }
            GroundOp::CensusGender { .. } => "that".to_string(),
        };
        let mut because: Vec<String> = Vec::new();
        for line in c
            .support
            .iter()
            .filter_map(|&i| self.world.log().get(i))
            .filter_map(|e| self.describe_entry(e, lex))
        {
            if !because.contains(&line) && line != claim {
                because.push(line);
            }
        }
        let keep = because.len().saturating_sub(4);
        let because = &because[keep..];
        if because.is_empty() {
            format!("That can't be right: {claim} contradicts what I already know.")
        } else {
            format!(
                "That can't be right: {claim} contradicts what you told me: {}.",
                because.join("; ")
            )
        }
    }

    fn explain_self_relation(&self, op: &GroundOp, lex: &Lexicons) -> String {
        let d = self.describer(lex);
        match op {
            GroundOp::Assert { a, .. } => {
                format!("That can't be right: {} would be related to themselves.", d.name(*a))
            }
            _ => NOT_UNDERSTOOD.to_string(),
        }
    }

    fn assert_answer(
        &mut self,
        a: EntityId,
        set: RelationSet,
        b: EntityId,
        lex: &Lexicons,
        replies: &mut Vec<String>,
    ) {
        let op = GroundOp::Assert {
            a,
            a_mention: None,
            relations: set,
            b,
            b_mention: None,
        };
        self.apply_or_report(vec![op], lex, replies);
    }

    fn apply_or_report(&mut self, ops: Vec<GroundOp>, lex: &Lexicons, replies: &mut Vec<String>) {
        if let Err(refusal) = self.apply_ops(ops, false, lex, replies) {
            replies.push(refusal);
        }
    }

    fn apply_answer(
        &mut self,
        q: &Question,
        answer: &Answer,
        lex: &Lexicons,
        replies: &mut Vec<String>,
    ) {
        let value = &answer.value;
        match (&q.kind, value) {
            (QuestionKind::YesNoSelf { a, b }, AnswerValue::Yes) => {
                self.assert_answer(*a, RelationAtom::Same.into(), *b, lex, replies)
            }
            (QuestionKind::YesNoSelf { a, b }, AnswerValue::No) => {
                let rest = self
                    .world
                    .edge(*a, *b)
                    .unwrap_or(RelationSet::FULL)
                    .without(RelationAtom::Same);
                self.assert_answer(*a, rest, *b, lex, replies)
            }
            (QuestionKind::YesNoRelation { a, b, atom }, AnswerValue::Yes | AnswerValue::Relation(_)) => {
                self.assert_answer(*a, (*atom).into(), *b, lex, replies)
            }
            (QuestionKind::YesNoRelation { a, b, atom }, AnswerValue::No) => {
                let rest = self
                    .world
                    .edge(*a, *b)
                    .unwrap_or(RelationSet::FULL)
                    .without(*atom);
                self.assert_answer(*a, rest, *b, lex, replies)
            }
            (QuestionKind::ChooseRelation { a, b, .. }, AnswerValue::Relation(r)) => {
                self.assert_answer(*a, (*r).into(), *b, lex, replies)
            }
            (QuestionKind::ChooseRelation { a, b, candidates }, AnswerValue::Choice(i)) => {
                self.assert_answer(*a, candidates[i - 1].into(), *b, lex, replies)
            }
            (QuestionKind::AskGender { entity }, AnswerValue::Gender(g)) => {
                let op = GroundOp::Gender {
                    entity: *entity,
                    gender: *g,
                    mention: None,
                };
                self.apply_or_report(vec![op], lex, replies);
            }
            (QuestionKind::AskName { entity }, AnswerValue::Name(n)) => {
                let op = GroundOp::Name {
                    entity: *entity,
                    name: n.clone(),
                    mention: None,
                };
                self.apply_or_report(vec![op], lex, replies);
            }
            (
                QuestionKind::ConfirmSplit {
                    entity,
                    moved,
                    refused,
                    ..
                },
                AnswerValue::Yes,
            ) => {
                let moved_set: BTreeSet<_> = moved.iter().copied().collect();
                match self.world.split_entity(*entity, &moved_set) {
                    Ok((_, successor)) => {
                        let ops = refused
                            .iter()
                            .cloned()
                            .map(|mut op| {
                                op.reattribute(*entity, moved, successor);
                                op
                            })
                            .collect();
                        replies.push("OK, I will keep them apart.".to_string());
                        self.apply_or_report(ops, lex, replies);
                    }
                    Err(e) => replies.push(format!("Sorry, I could not separate them: {e}.")),
                }
            }
            (QuestionKind::ConfirmSplit { refused, .. }, AnswerValue::No) => {
                replies.push("OK, then I will ignore the statement that did not fit.".to_string());
                self.apply_or_report(refused[1..].to_vec(), lex, replies);
            }
            (
                QuestionKind::ChooseEntity {
                    clarification,
                    facts,
                    forced,
                    utterance,
                },
                AnswerValue::Choice(i),
            ) => {
                let mut forced = forced.clone();
                forced.insert(clarification.key.clone(), clarification.candidates[i - 1]);
                self.process_facts(facts.clone(), forced, *utterance, lex, replies);
            }
            _ => replies.push(NOT_UNDERSTOOD.to_string()),
        }
    }

    pub fn state(&self) -> SessionState {
        SessionState {
            id: self.id.clone(),
            log: self.world.log().to_vec(),
            version: self.world.version(),
            pending: self.pending.clone(),
            failed_text: self.failed_text.clone(),
            repairs: self.repairs.clone(),
            transcript: self.transcript.clone(),
            utterances: self.utterances,
            next_question_id: self.next_question_id,
            config: self.config.clone(),
            created: self.created,
        }
    }

    pub fn save_json(&self) -> String {
        serde_json::to_string_pretty(&self.state()).expect("session state serializes")
    }

    pub fn from_state(table: Arc<CompositionTable>, state: SessionState) -> Result<Session, WorldError> {
        let mut world = WorldModel::replay(table, &state.log)?;
        world.set_version(state.version);
        Ok(Session {
            id: state.id,
            world,
            pending: state.pending,
            failed_text: state.failed_text,
            repairs: state.repairs,
            transcript: state.transcript,
            utterances: state.utterances,
            next_question_id: state.next_question_id,
            config: state.config,
            created: state.created,
        })
    }

    pub fn load_json(table: Arc<CompositionTable>, json: &str) -> Result<Session, LoadError> {
        let state: SessionState = serde_json::from_str(json)?;
        Ok(Session::from_state(table, state)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("malformed session file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("session log does not replay: {0}")]
    Replay(#[from] WorldError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::ParaphraseStore;
    use RelationAtom::*;

    fn session() -> Session {
        Session::new("t", Arc::new(CompositionTable::shipped()), SessionConfig::default()).unwrap()
    }

    fn run(s: &mut Session, store: &ParaphraseStore, lines: &[&str]) -> TurnReply {
        let lex = Lexicons::builtin();
        let mut last = None;
        for l in lines {
            last = Some(s.say(l, &lex, store));
        }
        last.unwrap()
    }

    fn named(s: &Session, name: &str) -> Vec<EntityId> {
        s.world()
            .entities()
            .filter(|e| e.has_name(name))
            .map(|e| e.id)
            .collect()
    }

    fn question(r: &TurnReply) -> &str {
        &r.question.as_ref().expect("a question").text
    }

    #[test]
    fn two_sams_become_two_people() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["Sam is my father and I have a brother named Sam"]);
        assert_eq!(
            question(&r),
            "Is Sam (your father) a different person from the one you called \"a brother named Sam\"?"
        );
        let r = run(&mut s, &store, &["Yes"]);
        assert_eq!(r.question, None);
        let sams = named(&s, "Sam");
        assert_eq!(sams.len(), 2);
        let me = s.world().narrator().unwrap();
        let atoms: Vec<_> = sams
            .iter()
            .map(|e| s.world().edge(*e, me).unwrap())
            .collect();
        assert!(atoms.contains(&Parent.into()) && atoms.contains(&Sibling.into()));
        assert_eq!(s.world().edge(sams[0], sams[1]).map(|x| x.len()), Some(1));
        assert!(s.world().is_stable());
    }

    #[test]
    fn declining_a_split_drops_the_statement() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let before = {
            run(&mut s, &store, &["Sam is my father."]);
            s.world().edges().collect::<Vec<_>>()
        };
        let r = run(&mut s, &store, &["Sam is my son.", "no"]);
        assert_eq!(r.replies, vec!["OK, then I will ignore the statement that did not fit."]);
        assert_eq!(s.world().edges().collect::<Vec<_>>(), before);
        assert_eq!(named(&s, "Sam").len(), 1);
    }

    #[test]
    fn self_contradiction_is_refused_without_change() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let empty = s.world().clone();
        let r = run(&mut s, &store, &["My father is my brother"]);
        assert_eq!(r.replies.len(), 1);
        assert!(r.replies[0].starts_with("That can't be right: your father is your brother"));
        assert!(r.replies[0].contains("your father is your parent"));
        assert_eq!(s.world().entities().count(), empty.entities().count());
        assert_eq!(s.world().edges().count(), 0);
        assert_eq!(r.question, None);
    }

    #[test]
    fn refusal_cites_earlier_statements() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["Sam is my father", "My father is my brother"]);
        assert_eq!(
            r.replies,
            vec![
                "That can't be right: Sam is your brother contradicts what you told me: \
                 Sam is your father; Sam is male."
            ]
        );
        assert_eq!(s.world().entities().count(), 2);
    }

    #[test]
    fn two_bills_are_split() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["My brother is named Bill.", "My father is named Bill."]);
        assert!(matches!(
            r.question.as_ref().unwrap().kind,
            QuestionKind::ConfirmSplit { .. }
        ));
        let r = run(&mut s, &store, &["yes"]);
        assert_eq!(r.replies, vec!["OK, I will keep them apart."]);
        let me = s.world().narrator().unwrap();
        let bills = named(&s, "Bill");
        assert_eq!(bills.len(), 2);
        let father = *bills
            .iter()
            .find(|b| s.world().edge(**b, me) == Some(Parent.into()))
            .unwrap();
        let brother = *bills
            .iter()
            .find(|b| s.world().edge(**b, me) == Some(Sibling.into()))
            .unwrap();
        assert_eq!(s.world().edge(father, brother), Some(Parent.into()));
    }

    #[test]
    fn mothers_husband_merges_with_father() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(
            &mut s,
            &store,
            &["My father is named Bill.", "My mother's husband is named Bill."],
        );
        assert_eq!(
            r.replies,
            vec![
                "I realised that Bill (your father) and the person you called \
                 \"my mother's husband named Bill\" are the same person."
            ]
        );
        assert_eq!(named(&s, "Bill").len(), 1);
        assert_eq!(s.world().entities().count(), 3);
        assert_eq!(r.question, None);
    }

    #[test]
    fn susan_merge_and_indeed() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["I have a daughter.", "Susan is my daughter."]);
        assert_eq!(question(&r), "Is Susan the same person as your daughter?");
        let id = r.question.as_ref().unwrap().id;
        let r = run(&mut s, &store, &["Indeed!"]);
        assert_eq!(r.replies, vec![NOT_UNDERSTOOD]);
        assert_eq!(r.question.as_ref().unwrap().id, id);
        let r = run(&mut s, &store, &["Yes"]);
        assert_eq!(r.question, None);
        assert_eq!(s.world().entities().count(), 2);
        assert_eq!(store.lookup("yes-no", "indeed!"), Some(AnswerValue::Yes));

        // The lesson carries over to a fresh session and another yes/no question.
        let mut t = session();
        let r = run(&mut t, &store, &["I have a son.", "Tom is my son."]);
        assert_eq!(question(&r), "Is Tom the same person as your son?");
        let r = run(&mut t, &store, &["Indeed!"]);
        assert_eq!(r.replies.len(), 1);
        assert!(r.replies[0].starts_with("I realised that"));
        assert_eq!(t.world().entities().count(), 2);
    }

    #[test]
    fn slot_paraphrase_generalizes() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        run(&mut s, &store, &["I have a daughter.", "Susan is my daughter."]);
        let r = run(&mut s, &store, &["Susan is indeed my daughter"]);
        assert_eq!(r.replies, vec![NOT_UNDERSTOOD]);
        run(&mut s, &store, &["yes"]);
        let mut t = session();
        run(&mut t, &store, &["I have a daughter.", "Mary is my daughter."]);
        let r = run(&mut t, &store, &["Mary is indeed my daughter"]);
        assert!(r.replies[0].starts_with("I realised that"));
        assert_eq!(named(&t, "Mary").len(), 1);
        assert_eq!(t.world().entities().count(), 2);
    }

    #[test]
    fn statement_instead_of_answer_is_processed() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        run(&mut s, &store, &["I have a daughter.", "Susan is my daughter."]);
        let r = run(&mut s, &store, &["Tom is my son"]);
        assert!(r.replies.is_empty());
        assert_eq!(named(&s, "Tom").len(), 1);
        assert_eq!(question(&r), "Is Susan the same person as your daughter?");
    }

    #[test]
    fn ambiguous_description_asks_which() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        run(
            &mut s,
            &store,
            &["I have a brother named Tom.", "I have a brother named Jim.", "no"],
        );
        let r = run(&mut s, &store, &["My brother's wife is named Ann"]);
        assert_eq!(
            question(&r),
            "Which \"my brother\" do you mean? (1) Tom (your brother), (2) Jim (your brother)"
        );
        let r = run(&mut s, &store, &["2"]);
        let jim = named(&s, "Jim")[0];
        let ann = named(&s, "Ann")[0];
        assert_eq!(s.world().edge(ann, jim), Some(Spouse.into()));
        assert!(r.question.is_none() || !r.question.unwrap().kind.is_repair());
    }

    #[test]
    fn unanswerable_question_is_repeated() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["I have a daughter.", "Susan is my daughter."]);
        let q = r.question.unwrap();
        let r = run(&mut s, &store, &["purple"]);
        assert_eq!(r.replies, vec![NOT_UNDERSTOOD]);
        assert_eq!(r.question.unwrap(), q);
    }

    #[test]
    fn answer_without_question() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        let r = run(&mut s, &store, &["yes"]);
        assert_eq!(r.replies, vec!["There is no open question right now."]);
    }

    #[test]
    fn names_can_be_requested() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        s.config.ask_names = true;
        let r = run(&mut s, &store, &["I have a daughter."]);
        assert_eq!(question(&r), "What is your daughter's name?");
        let r = run(&mut s, &store, &["Her name is Mary."]);
        assert_eq!(named(&s, "Mary").len(), 1);
        assert_eq!(r.question, None);
    }

    #[test]
    fn gender_question_settles_spouse_edge() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        // The mother of the narrator's son is the narrator or their spouse.
        let r = run(&mut s, &store, &["My son's mother is named Pat"]);
        assert_eq!(question(&r), "Are you male or female?");
        let r = run(&mut s, &store, &["I'm a man"]);
        assert_eq!(r.question, None);
        let pat = named(&s, "Pat")[0];
        let me = s.world().narrator().unwrap();
        assert_eq!(s.world().edge(pat, me), Some(Spouse.into()));
        assert!(s.world().edges().all(|(_, _, e)| e.len() == 1));
    }

    #[test]
    fn save_and_load_round_trip() {
        let store = ParaphraseStore::in_memory();
        let mut s = session();
        run(
            &mut s,
            &store,
            &["My brother is named Bill.", "My father is named Bill.", "yes", "I have a daughter.", "Susan is my daughter."],
        );
        let json = s.save_json();
        let mut t = Session::load_json(Arc::new(CompositionTable::shipped()), &json).unwrap();
        assert_eq!(t.world(), s.world());
        assert_eq!(t.pending(), s.pending());
        assert_eq!(t.transcript(), s.transcript());
        let lex = Lexicons::builtin();
        assert_eq!(t.say("yes", &lex, &store), s.say("yes", &lex, &store));
        assert!(Session::load_json(Arc::new(CompositionTable::shipped()), "{").is_err());
    }
}
