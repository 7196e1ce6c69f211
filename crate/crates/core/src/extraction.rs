//! Controlled-English front end.
//!
//! A fixed set of clause patterns turns user text into relation triples,
//! name and gender bindings, and bare answers. [`resolve_mentions`] then
//! grounds the mention descriptors of one clause onto world entities.
//!
//! Supported clause patterns (case-insensitive):
//!
//! ```text
//! P1  I have a/an <rel> [named|called <NAME>]
//! P2  My <rel> is [named|called] <NAME>  /  My <rel>'s name is <NAME>
//! P3  <NAME> is my <rel>
//! P4  <NAME>'s <rel> is [named|called] <NAME2>  /  <NAME2> is <NAME>'s <rel>
//! P5  My <rel>'s <rel2> is [named|called] <NAME>
//! P6  <NAME> is [a|an] man|woman|male|female|boy|girl
//! P7  yes | no | <NAME> | <rel> | same [person] | different [people]
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{RelationAtom, RelationSet};
use crate::world::{EntityId, Gender, MentionId, WorldError, WorldModel};

const BUILTIN_RELATIONS: &str = include_str!("../data/relations.csv");
const BUILTIN_NAMES: &str = include_str!("../data/names.csv");

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon is not valid CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read lexicon: {0}")]
    Io(#[from] std::io::Error),
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error("unknown relation atom `{0}`")]
    UnknownAtom(String),
    #[error("unknown gender `{0}` (expected male, female or none)")]
    UnknownGender(String),
    #[error("surface form `{0}` is listed twice")]
    Duplicate(String),
}

fn check_header(
    reader: &mut csv::Reader<&[u8]>,
    expected: &[&str],
) -> Result<(), LexiconError> {
    let found: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if found != expected {
        return Err(LexiconError::Header {
            expected: expected.join(","),
            found: found.join(","),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationLexiconEntry {
    pub surface: String,
    pub atom: RelationAtom,
    /// Gender implied for whoever holds the relation ("father" → male).
    pub gender: Option<Gender>,
}

#[derive(Debug, Clone)]
pub struct RelationLexicon {
    entries: Vec<RelationLexiconEntry>,
    by_surface: BTreeMap<String, usize>,
}

impl RelationLexicon {
    pub fn builtin() -> RelationLexicon {
        RelationLexicon::parse(BUILTIN_RELATIONS).expect("bundled relation lexicon is malformed")
    }

    pub fn load(path: &Path) -> Result<RelationLexicon, LexiconError> {
        RelationLexicon::parse(&std::fs::read_to_string(path)?)
    }

    /// Records of `surface,atom,gender` after a header line.
    pub fn parse(text: &str) -> Result<RelationLexicon, LexiconError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        check_header(&mut reader, &["surface", "atom", "gender"])?;
        let mut lex = RelationLexicon {
            entries: Vec::new(),
            by_surface: BTreeMap::new(),
        };
        for record in reader.records() {
            let record = record?;
            let surface = record[0].to_ascii_lowercase();
            let atom: RelationAtom = record[1]
                .parse()
                .map_err(|_| LexiconError::UnknownAtom(record[1].to_string()))?;
            let gender = match record[2].to_ascii_lowercase().as_str() {
                "male" => Some(Gender::Male),
                "female" => Some(Gender::Female),
                "none" | "" => None,
                other => return Err(LexiconError::UnknownGender(other.to_string())),
            };
            if lex.by_surface.contains_key(&surface) {
                return Err(LexiconError::Duplicate(surface));
            }
            lex.by_surface.insert(surface.clone(), lex.entries.len());
            lex.entries.push(RelationLexiconEntry {
                surface,
                atom,
                gender,
            });
        }
        Ok(lex)
    }

    pub fn lookup(&self, word: &str) -> Option<&RelationLexiconEntry> {
        self.by_surface
            .get(&word.to_ascii_lowercase())
            .map(|&i| &self.entries[i])
    }

    pub fn entries(&self) -> &[RelationLexiconEntry] {
        &self.entries
    }

    /// Preferred word for an atom: the first listed entry with the wanted
    /// gender, falling back to a neutral one.
    pub fn word_for(&self, atom: RelationAtom, gender: Option<Gender>) -> String {
        let gender = gender.and_then(Gender::leaning);
        let pick = |g: Option<Gender>| {
            self.entries
                .iter()
                .find(|e| e.atom == atom && e.gender == g)
                .map(|e| e.surface.clone())
        };
        gender
            .and_then(|g| pick(Some(g)))
            .or_else(|| pick(None))
            .unwrap_or_else(|| atom.phrase().to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct NameLexicon {
    counts: BTreeMap<String, (u64, u64)>,
}

impl NameLexicon {
    /// The small bundled sample list.
    pub fn builtin() -> NameLexicon {
        NameLexicon::parse(BUILTIN_NAMES).expect("bundled name lexicon is malformed")
    }

    pub fn load(path: &Path) -> Result<NameLexicon, LexiconError> {
        NameLexicon::parse(&std::fs::read_to_string(path)?)
    }

    /// Records of `name,male,female` after a header line.
    pub fn parse(text: &str) -> Result<NameLexicon, LexiconError> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        check_header(&mut reader, &["name", "male", "female"])?;
        let mut counts = BTreeMap::new();
        for record in reader.deserialize() {
            let (name, male, female): (String, u64, u64) = record?;
            counts.insert(name.to_lowercase(), (male, female));
        }
        Ok(NameLexicon { counts })
    }

    pub fn counts(&self, name: &str) -> Option<(u64, u64)> {
        self.counts.get(&name.to_lowercase()).copied()
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Exclusive use gives a definite gender, a tenfold majority a probable
    /// one; anything else is unknown.
    pub fn lookup_gender(&self, name: &str) -> Gender {
        let Some((m, f)) = self.counts(name) else {
            return Gender::Unknown;
        };
        match (m, f) {
            (0, 0) => Gender::Unknown,
            (_, 0) => Gender::Male,
            (0, _) => Gender::Female,
            (m, f) if m >= 10 * f => Gender::ProbablyMale,
            (m, f) if f >= 10 * m => Gender::ProbablyFemale,
            _ => Gender::Unknown,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Lexicons {
    pub relations: RelationLexicon,
    pub names: NameLexicon,
}

impl Lexicons {
    pub fn builtin() -> Lexicons {
        Lexicons {
            relations: RelationLexicon::builtin(),
            names: NameLexicon::builtin(),
        }
    }
}

/// How a clause refers to a person.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MentionDesc {
    Narrator,
    Name {
        name: String,
    },
    /// "my father", "Sam's brother", "my mother's husband".
    Possessive {
        anchor: Box<MentionDesc>,
        relation: RelationAtom,
        gender: Option<Gender>,
        surface: String,
    },
    /// "a brother" in "I have a brother"; always anchored on the narrator.
    Indefinite {
        relation: RelationAtom,
        gender: Option<Gender>,
        surface: String,
    },
}

impl MentionDesc {
    pub fn text(&self) -> String {
        match self {
            MentionDesc::Narrator => "I".to_string(),
            MentionDesc::Name { name } => name.clone(),
            MentionDesc::Possessive {
                anchor, surface, ..
            } => match anchor.as_ref() {
                MentionDesc::Narrator => format!("my {surface}"),
                other => format!("{}'s {surface}", other.text()),
            },
            MentionDesc::Indefinite { surface, .. } => {
                let article = if surface.starts_with(['a', 'e', 'i', 'o', 'u']) {
                    "an"
                } else {
                    "a"
                };
                format!("{article} {surface}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AnswerToken {
    Yes,
    No,
    Same,
    Different,
    Name { name: String },
    Relation { atom: RelationAtom, gender: Option<Gender> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FactKind {
    /// "holder is the <relation> of anchor".
    Relation {
        holder: MentionDesc,
        relation: RelationAtom,
        holder_gender: Option<Gender>,
        anchor: MentionDesc,
    },
    Name {
        mention: MentionDesc,
        name: String,
    },
    Gender {
        mention: MentionDesc,
        gender: Gender,
    },
    Answer {
        answer: AnswerToken,
    },
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedFact {
    pub kind: FactKind,
    /// Index of the clause within the utterance.
    pub clause: usize,
    /// The clause text the fact was read from.
    pub span: String,
}

impl ExtractedFact {
    pub fn is_statement(&self) -> bool {
        matches!(
            self.kind,
            FactKind::Relation { .. } | FactKind::Name { .. } | FactKind::Gender { .. }
        )
    }
}

/// Sentence punctuation and the word "and" separate clauses.
pub fn split_clauses(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for sentence in text.split(['.', '!', '?', ';']) {
        let mut current: Vec<&str> = Vec::new();
        for word in sentence.split_whitespace() {
            if word.eq_ignore_ascii_case("and") {
                push_clause(&mut out, &current);
                current.clear();
            } else {
                current.push(word);
            }
        }
        push_clause(&mut out, &current);
    }
    out
}

fn push_clause(out: &mut Vec<String>, words: &[&str]) {
    let clause = words.join(" ");
    let clause = clause.trim_matches(|c: char| c == ',' || c.is_whitespace());
    if !clause.is_empty() {
        out.push(clause.to_string());
    }
}

#[derive(Debug, Clone)]
struct Tok {
    word: String,
    orig: String,
    possessive: bool,
}

fn tokenize(clause: &str) -> Vec<Tok> {
    let mut toks: Vec<Tok> = Vec::new();
    for raw in clause.split_whitespace() {
        let trimmed = raw
            .trim_matches(|c: char| !c.is_alphanumeric() && c != '\'' && c != '’')
            .replace('’', "'");
        let trimmed = trimmed.trim_start_matches('\'');
        let (base, possessive) = match trimmed.strip_suffix("'s") {
            Some(b) => (b, true),
            None => (trimmed.trim_end_matches('\''), false),
        };
        if base.is_empty() {
            continue;
        }
        let word = base.to_lowercase();
        // "brother in law" and "brother in-law" become one token.
        if word == "law" && toks.len() >= 2 && toks[toks.len() - 1].word == "in" {
            toks.pop();
            let head = toks.last_mut().expect("checked");
            head.word = format!("{}-in-law", head.word);
            head.orig = format!("{}-in-law", head.orig);
            head.possessive = possessive;
            continue;
        }
        if word == "in-law" && !toks.is_empty() {
            let head = toks.last_mut().expect("checked");
            head.word = format!("{}-in-law", head.word);
            head.orig = format!("{}-in-law", head.orig);
            head.possessive = possessive;
            continue;
        }
        toks.push(Tok {
            word,
            orig: base.to_string(),
            possessive,
        });
    }
    toks
}

const RESERVED: &[&str] = &[
    "i", "my", "me", "is", "a", "an", "the", "have", "has", "named", "called", "name", "yes",
    "no", "same", "different", "and", "person", "people", "persons", "man", "woman", "male",
    "female", "boy", "girl", "of", "to", "not", "you", "your", "he", "she", "they", "his",
    "her", "their", "it",
];

struct Matcher<'a> {
    lex: &'a Lexicons,
}

impl Matcher<'_> {
    fn word(&self, t: &Tok, w: &str) -> bool {
        !t.possessive && t.word == w
    }

    fn rel(&self, t: &Tok) -> Option<&RelationLexiconEntry> {
        self.lex.relations.lookup(&t.word)
    }

    fn name(&self, t: &Tok) -> Option<String> {
        let ok = t
            .word
            .chars()
            .all(|c| c.is_alphabetic() || c == '-' || c == '\'')
            && t.word.chars().next().is_some_and(char::is_alphabetic)
            && !RESERVED.contains(&t.word.as_str())
            && self.lex.relations.lookup(&t.word).is_none();
        ok.then(|| capitalize(&t.orig))
    }

    fn gender_word(&self, t: &Tok) -> Option<Gender> {
        match t.word.as_str() {
            _ if t.possessive => None,
            "man" | "male" | "boy" => Some(Gender::Male),
            "woman" | "female" | "girl" => Some(Gender::Female),
            _ => None,
        }
    }

    /// Skip an optional "named"/"called".
    fn skip_named<'t>(&self, rest: &'t [Tok]) -> &'t [Tok] {
        match rest.first() {
            Some(t) if self.word(t, "named") || self.word(t, "called") => &rest[1..],
            _ => rest,
        }
    }

    fn single_name(&self, rest: &[Tok]) -> Option<String> {
        match rest {
            [t] if !t.possessive => self.name(t),
            _ => None,
        }
    }

    fn possessive(
        &self,
        anchor: MentionDesc,
        e: &RelationLexiconEntry,
    ) -> MentionDesc {
        MentionDesc::Possessive {
            anchor: Box::new(anchor),
            relation: e.atom,
            gender: e.gender,
            surface: e.surface.clone(),
        }
    }

    fn relation(holder: &MentionDesc, e: &RelationLexiconEntry, anchor: MentionDesc) -> FactKind {
        FactKind::Relation {
            holder: holder.clone(),
            relation: e.atom,
            holder_gender: e.gender,
            anchor,
        }
    }

    fn named(mention: &MentionDesc, name: String) -> FactKind {
        FactKind::Name {
            mention: mention.clone(),
            name,
        }
    }

    fn p1(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        if t.len() < 4 || !self.word(&t[0], "i") || !self.word(&t[1], "have") {
            return None;
        }
        if !(self.word(&t[2], "a") || self.word(&t[2], "an")) || t[3].possessive {
            return None;
        }
        let e = self.rel(&t[3])?;
        let holder = MentionDesc::Indefinite {
            relation: e.atom,
            gender: e.gender,
            surface: e.surface.clone(),
        };
        let mut facts = vec![Self::relation(&holder, e, MentionDesc::Narrator)];
        match &t[4..] {
            [] => {}
            [n, rest @ ..] if self.word(n, "named") || self.word(n, "called") => {
                facts.push(Self::named(&holder, self.single_name(rest)?));
            }
            _ => return None,
        }
        Some(facts)
    }

    fn p2(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        if t.len() < 4 || !self.word(&t[0], "my") {
            return None;
        }
        let e = self.rel(&t[1])?;
        let holder = self.possessive(MentionDesc::Narrator, e);
        let name = if t[1].possessive {
            if !(self.word(&t[2], "name") && self.word(&t[3], "is")) {
                return None;
            }
            self.single_name(&t[4..])?
        } else {
            if !self.word(&t[2], "is") {
                return None;
            }
            self.single_name(self.skip_named(&t[3..]))?
        };
        Some(vec![
            Self::relation(&holder, e, MentionDesc::Narrator),
            Self::named(&holder, name),
        ])
    }

    fn p3(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        match t {
            [n, is, my, r] if self.word(is, "is") && self.word(my, "my") && !r.possessive && !n.possessive => {
                let name = self.name(n)?;
                let e = self.rel(r)?;
                Some(vec![Self::relation(
                    &MentionDesc::Name { name },
                    e,
                    MentionDesc::Narrator,
                )])
            }
            // "my father is my brother": the subject is itself a description.
            [my1, r1, is, my2, r2]
                if self.word(my1, "my")
                    && self.word(is, "is")
                    && self.word(my2, "my")
                    && !r1.possessive
                    && !r2.possessive =>
            {
                let e1 = self.rel(r1)?;
                let e2 = self.rel(r2)?;
                let holder = self.possessive(MentionDesc::Narrator, e1);
                Some(vec![
                    Self::relation(&holder, e1, MentionDesc::Narrator),
                    Self::relation(&holder, e2, MentionDesc::Narrator),
                ])
            }
            _ => None,
        }
    }

    fn p4(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        if t.len() >= 4 && t[0].possessive && !t[1].possessive && self.word(&t[2], "is") {
            let owner = MentionDesc::Name {
                name: self.name(&t[0])?,
            };
            let e = self.rel(&t[1])?;
            let holder = self.possessive(owner.clone(), e);
            let name = self.single_name(self.skip_named(&t[3..]))?;
            return Some(vec![
                Self::relation(&holder, e, owner),
                Self::named(&holder, name),
            ]);
        }
        match t {
            [n2, is, n, r] if self.word(is, "is") && !n2.possessive && n.possessive && !r.possessive => {
                let holder = MentionDesc::Name {
                    name: self.name(n2)?,
                };
                let owner = MentionDesc::Name {
                    name: self.name(n)?,
                };
                let e = self.rel(r)?;
                Some(vec![Self::relation(&holder, e, owner)])
            }
            _ => None,
        }
    }

    fn p5(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        if t.len() < 5 || !self.word(&t[0], "my") || !t[1].possessive || t[2].possessive {
            return None;
        }
        if !self.word(&t[3], "is") {
            return None;
        }
        let e1 = self.rel(&t[1])?;
        let e2 = self.rel(&t[2])?;
        let middle = self.possessive(MentionDesc::Narrator, e1);
        let holder = self.possessive(middle.clone(), e2);
        let name = self.single_name(self.skip_named(&t[4..]))?;
        Some(vec![
            Self::relation(&middle, e1, MentionDesc::Narrator),
            Self::relation(&holder, e2, middle),
            Self::named(&holder, name),
        ])
    }

    fn p6(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        let (n, rest) = match t {
            [n, is, rest @ ..] if self.word(is, "is") && !n.possessive => (n, rest),
            _ => return None,
        };
        let rest = match rest {
            [a, rest @ ..] if self.word(a, "a") || self.word(a, "an") => rest,
            _ => rest,
        };
        match rest {
            [g] => Some(vec![FactKind::Gender {
                mention: MentionDesc::Name {
                    name: self.name(n)?,
                },
                gender: self.gender_word(g)?,
            }]),
            _ => None,
        }
    }

    fn p7(&self, t: &[Tok]) -> Option<Vec<FactKind>> {
        let answer = match t {
            [w] if self.word(w, "yes") => AnswerToken::Yes,
            [w] if self.word(w, "no") => AnswerToken::No,
            [w] | [w, _] if self.word(w, "same") && t.get(1).is_none_or(|p| self.word(p, "person")) => {
                AnswerToken::Same
            }
            [w] | [w, _]
                if self.word(w, "different")
                    && t
                        .get(1)
                        .is_none_or(|p| self.word(p, "people") || self.word(p, "persons")) =>
            {
                AnswerToken::Different
            }
            [w] if !w.possessive => {
                if let Some(e) = self.rel(w) {
                    AnswerToken::Relation {
                        atom: e.atom,
                        gender: e.gender,
                    }
                } else {
                    AnswerToken::Name {
                        name: self.name(w)?,
                    }
                }
            }
            _ => return None,
        };
        Some(vec![FactKind::Answer { answer }])
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Parse one utterance into facts, clause by clause. Clauses that match no
/// pattern come back as [`FactKind::Unparseable`].
pub fn parse_utterance(text: &str, lex: &Lexicons) -> Vec<ExtractedFact> {
    let m = Matcher { lex };
    let mut out = Vec::new();
    for (clause, span) in split_clauses(text).into_iter().enumerate() {
        let toks = tokenize(&span);
        let kinds = m
            .p1(&toks)
            .or_else(|| m.p2(&toks))
            .or_else(|| m.p3(&toks))
            .or_else(|| m.p4(&toks))
            .or_else(|| m.p5(&toks))
            .or_else(|| m.p6(&toks))
            .or_else(|| m.p7(&toks))
            .unwrap_or_else(|| vec![FactKind::Unparseable]);
        out.extend(kinds.into_iter().map(|kind| ExtractedFact {
            kind,
            clause,
            span: span.clone(),
        }));
    }
    out
}

/// A grounded, ready-to-apply world update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GroundOp {
    Assert {
        a: EntityId,
        a_mention: Option<MentionId>,
        relations: RelationSet,
        b: EntityId,
        b_mention: Option<MentionId>,
    },
    Gender {
        entity: EntityId,
        gender: Gender,
        mention: Option<MentionId>,
    },
    Name {
        entity: EntityId,
        name: String,
        mention: Option<MentionId>,
    },
    /// Gender guessed from name statistics; skipped when it would conflict.
    CensusGender {
        entity: EntityId,
        gender: Gender,
        mention: Option<MentionId>,
    },
}

impl GroundOp {
    /// Entities referenced, with the mention each was grounded through.
    pub fn references(&self) -> Vec<(EntityId, Option<MentionId>)> {
        match self {
            GroundOp::Assert {
                a,
                a_mention,
                b,
                b_mention,
                ..
            } => vec![(*a, *a_mention), (*b, *b_mention)],
            GroundOp::Gender {
                entity, mention, ..
            }
            | GroundOp::Name {
                entity, mention, ..
            }
            | GroundOp::CensusGender {
                entity, mention, ..
            } => vec![(*entity, *mention)],
        }
    }

    /// Re-point references to `from` made through one of `moved` at `to`.
    pub fn reattribute(&mut self, from: EntityId, moved: &[MentionId], to: EntityId) {
        let fix = |e: &mut EntityId, m: &Option<MentionId>| {
            if *e == from && m.is_some_and(|m| moved.contains(&m)) {
                *e = to;
            }
        };
        match self {
            GroundOp::Assert {
                a,
                a_mention,
                b,
                b_mention,
                ..
            } => {
                fix(a, a_mention);
                fix(b, b_mention);
            }
            GroundOp::Gender {
                entity, mention, ..
            }
            | GroundOp::Name {
                entity, mention, ..
            }
            | GroundOp::CensusGender {
                entity, mention, ..
            } => fix(entity, mention),
        }
    }

    /// Re-point every reference to `from` at `to`, as after a merge.
    pub fn remap(&mut self, from: EntityId, to: EntityId) {
        let fix = |e: &mut EntityId| {
            if *e == from {
                *e = to;
            }
        };
        match self {
            GroundOp::Assert { a, b, .. } => {
                fix(a);
                fix(b);
            }
            GroundOp::Gender { entity, .. }
            | GroundOp::Name { entity, .. }
            | GroundOp::CensusGender { entity, .. } => fix(entity),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            GroundOp::Assert { .. } => 0,
            GroundOp::Gender { .. } => 1,
            GroundOp::Name { .. } => 2,
            GroundOp::CensusGender { .. } => 3,
        }
    }
}

/// A mention that matches more than one entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clarification {
    /// Key under which the user's choice is remembered for the re-run.
    pub key: String,
    pub text: String,
    pub candidates: Vec<EntityId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Binding {
    Existing(EntityId),
    Fresh,
}

/// Mention grounding for one clause.
///
/// The narrator maps to the narrator entity. "my <rel>" maps to the unique
/// entity whose edge to the narrator is exactly that relation with a
/// compatible gender. Failing that, a mention carrying a name is grounded by
/// string match on the name, the way an upstream coreference step would; a
/// bare name is grounded the same way. Descriptions anchored on anyone other
/// than the narrator always start a fresh entity and leave identity to
/// propagation. Ambiguity is returned as a [`Clarification`] before anything
/// is mutated; otherwise fresh entities and mention records are created and
/// the clause's updates are returned in application order.
pub fn resolve_mentions(
    facts: &[ExtractedFact],
    world: &mut WorldModel,
    lex: &Lexicons,
    utterance: u32,
    forced: &BTreeMap<String, EntityId>,
) -> Result<Result<Vec<GroundOp>, Clarification>, WorldError> {
    let narrator = world
        .narrator()
        .ok_or_else(|| WorldError::Precondition("no narrator entity".to_string()))?;

    let mut names: BTreeMap<&MentionDesc, &str> = BTreeMap::new();
    let mut order: Vec<MentionDesc> = Vec::new();
    fn visit(d: &MentionDesc, order: &mut Vec<MentionDesc>) {
        if let MentionDesc::Possessive { anchor, .. } = d {
            visit(anchor, order);
        }
        if !order.contains(d) {
            order.push(d.clone());
        }
    }
    for f in facts {
        match &f.kind {
            FactKind::Relation { holder, anchor, .. } => {
                visit(anchor, &mut order);
                visit(holder, &mut order);
            }
            FactKind::Name { mention, name } => {
                visit(mention, &mut order);
                names.insert(mention, name);
            }
            FactKind::Gender { mention, .. } => visit(mention, &mut order),
            _ => {}
        }
    }

    let by_name = |name: &str| -> Vec<EntityId> {
        world
            .entities()
            .filter(|e| !e.is_narrator && e.has_name(name))
            .map(|e| e.id)
            .collect()
    };

    let mut bindings: BTreeMap<MentionDesc, Binding> = BTreeMap::new();
    for d in &order {
        let key = d.text().to_lowercase();
        if let Some(&id) = forced.get(&key) {
            bindings.insert(d.clone(), Binding::Existing(id));
            continue;
        }
        let ambiguous = |candidates: Vec<EntityId>| Clarification {
            key: key.clone(),
            text: d.text(),
            candidates,
        };
        let by_clause_name = |candidates: Vec<EntityId>| match candidates.len() {
            0 => Ok(Binding::Fresh),
            1 => Ok(Binding::Existing(candidates[0])),
            _ => Err(ambiguous(candidates)),
        };
        let binding = match d {
            MentionDesc::Narrator => Binding::Existing(narrator),
            MentionDesc::Name { name } => match by_clause_name(by_name(name)) {
                Ok(b) => b,
                Err(c) => return Ok(Err(c)),
            },
            MentionDesc::Possessive {
                anchor,
                relation,
                gender,
                ..
            } => {
                if bindings.get(anchor.as_ref()) == Some(&Binding::Existing(narrator)) {
                    let want = RelationSet::single(*relation);
                    let candidates: Vec<EntityId> = world
                        .entities()
                        .filter(|e| {
                            world.edge(e.id, narrator) == Some(want)
                                && match (gender, e.gender.leaning()) {
                                    (Some(g), Some(h)) => *g == h,
                                    _ => true,
                                }
                        })
                        .map(|e| e.id)
                        .collect();
                    match candidates.len() {
                        1 => Binding::Existing(candidates[0]),
                        0 => {
                            let named = names.get(d).map(|n| by_name(n)).unwrap_or_default();
                            match by_clause_name(named) {
                                Ok(b) => b,
                                Err(c) => return Ok(Err(c)),
                            }
                        }
                        _ => return Ok(Err(ambiguous(candidates))),
                    }
                } else {
                    Binding::Fresh
                }
            }
            MentionDesc::Indefinite { .. } => {
                let named = names.get(d).map(|n| by_name(n)).unwrap_or_default();
                match by_clause_name(named) {
                    Ok(b) => b,
                    Err(c) => return Ok(Err(c)),
                }
            }
        };
        bindings.insert(d.clone(), binding);
    }

    let mut grounded: BTreeMap<MentionDesc, (EntityId, Option<MentionId>)> = BTreeMap::new();
    for d in &order {
        let id = match bindings[d] {
            Binding::Existing(id) => id,
            Binding::Fresh => world.add_entity(None, None, false)?,
        };
        let text = match (d, names.get(d)) {
            (MentionDesc::Possessive { .. } | MentionDesc::Indefinite { .. }, Some(n)) => {
                format!("{} named {n}", d.text())
            }
            _ => d.text(),
        };
        let mention = if id == narrator {
            None
        } else {
            Some(world.add_mention(id, utterance, &text)?)
        };
        grounded.insert(d.clone(), (id, mention));
    }

    let mut ops = Vec::new();
    for f in facts {
        match &f.kind {
            FactKind::Relation {
                holder,
                relation,
                holder_gender,
                anchor,
            } => {
                let (a, am) = grounded[holder];
                let (b, bm) = grounded[anchor];
                ops.push(GroundOp::Assert {
                    a,
                    a_mention: am,
                    relations: (*relation).into(),
                    b,
                    b_mention: bm,
                });
                if let Some(g) = holder_gender {
                    ops.push(GroundOp::Gender {
                        entity: a,
                        gender: *g,
                        mention: am,
                    });
                }
            }
            FactKind::Name { mention, name } => {
                let (e, m) = grounded[mention];
                ops.push(GroundOp::Name {
                    entity: e,
                    name: name.clone(),
                    mention: m,
                });
                let g = lex.names.lookup_gender(name);
                if g != Gender::Unknown {
                    ops.push(GroundOp::CensusGender {
                        entity: e,
                        gender: g,
                        mention: m,
                    });
                }
            }
            FactKind::Gender { mention, gender } => {
                let (e, m) = grounded[mention];
                ops.push(GroundOp::Gender {
                    entity: e,
                    gender: *gender,
                    mention: m,
                });
            }
            FactKind::Answer { .. } | FactKind::Unparseable => {}
        }
    }
    // A bare name used as a mention names its entity.
    for d in &order {
        if let MentionDesc::Name { name } = d {
            let (e, m) = grounded[d];
            if world.entity(e).is_some_and(|x| !x.has_name(name)) {
                ops.push(GroundOp::Name {
                    entity: e,
                    name: name.clone(),
                    mention: m,
                });
                let g = lex.names.lookup_gender(name);
                if g != Gender::Unknown {
                    ops.push(GroundOp::CensusGender {
                        entity: e,
                        gender: g,
                        mention: m,
                    });
                }
            }
        }
    }
    ops.sort_by_key(GroundOp::rank);
    Ok(Ok(ops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::CompositionTable;
    use std::sync::Arc;
    use RelationAtom::*;

    fn lex() -> Lexicons {
        Lexicons::builtin()
    }

    fn kinds(text: &str) -> Vec<FactKind> {
        parse_utterance(text, &lex()).into_iter().map(|f| f.kind).collect()
    }

    fn my(rel: RelationAtom, gender: Option<Gender>, surface: &str) -> MentionDesc {
        MentionDesc::Possessive {
            anchor: Box::new(MentionDesc::Narrator),
            relation: rel,
            gender,
            surface: surface.to_string(),
        }
    }

    fn named(name: &str) -> MentionDesc {
        MentionDesc::Name {
            name: name.to_string(),
        }
    }

    #[test]
    fn gender_lookup_thresholds() {
        let names = NameLexicon::parse("name,male,female\nA,500,0\nB,1000,100\nC,60,40\nD,0,7\nE,99,10\n").unwrap();
        assert_eq!(names.lookup_gender("A"), Gender::Male);
        assert_eq!(names.lookup_gender("b"), Gender::ProbablyMale);
        assert_eq!(names.lookup_gender("C"), Gender::Unknown);
        assert_eq!(names.lookup_gender("D"), Gender::Female);
        assert_eq!(names.lookup_gender("E"), Gender::Unknown);
        assert_eq!(names.lookup_gender("Zed"), Gender::Unknown);
    }

    #[test]
    fn name_lexicon_requires_header() {
        assert!(matches!(
            NameLexicon::parse("Sam,10,1\n"),
            Err(LexiconError::Header { .. })
        ));
    }

    #[test]
    fn relation_lexicon_rejects_duplicates_and_bad_atoms() {
        assert!(matches!(
            RelationLexicon::parse("surface,atom,gender\nma,Parent,female\nma,Parent,female\n"),
            Err(LexiconError::Duplicate(_))
        ));
        assert!(matches!(
            RelationLexicon::parse("surface,atom,gender\nma,Mother,female\n"),
            Err(LexiconError::UnknownAtom(_))
        ));
    }

    #[test]
    fn builtin_relation_lexicon_coverage() {
        let rel = RelationLexicon::builtin();
        for atom in RelationAtom::ALL {
            if matches!(atom, Same | OutOfGraph) {
                continue;
            }
            let forms: Vec<_> = rel.entries().iter().filter(|e| e.atom == atom).collect();
            assert!(forms.iter().any(|e| e.gender.is_none()), "{atom} lacks a neutral form");
            if atom != Cousin {
                assert!(forms.iter().filter(|e| e.gender.is_some()).count() >= 2, "{atom}");
            }
        }
        assert_eq!(rel.word_for(Child, Some(Gender::ProbablyFemale)), "daughter");
        assert_eq!(rel.word_for(Cousin, Some(Gender::Male)), "cousin");
    }

    #[test]
    fn my_father_is_named_sam() {
        let holder = my(Parent, Some(Gender::Male), "father");
        assert_eq!(
            kinds("My father is named Sam"),
            vec![
                FactKind::Relation {
                    holder: holder.clone(),
                    relation: Parent,
                    holder_gender: Some(Gender::Male),
                    anchor: MentionDesc::Narrator,
                },
                FactKind::Name {
                    mention: holder,
                    name: "Sam".into(),
                },
            ]
        );
    }

    #[test]
    fn two_sams_in_one_utterance() {
        let facts = parse_utterance("Sam is my father and I have a brother named Sam", &lex());
        assert_eq!(facts.len(), 3);
        assert_eq!(facts[0].clause, 0);
        assert_eq!(facts[1].clause, 1);
        let FactKind::Relation { holder: first, .. } = &facts[0].kind else {
            panic!()
        };
        let FactKind::Name { mention: second, name } = &facts[2].kind else {
            panic!()
        };
        assert_eq!(name, "Sam");
        assert_eq!(first, &named("Sam"));
        assert!(matches!(second, MentionDesc::Indefinite { relation: Sibling, .. }));
    }

    #[test]
    fn empty_and_nonsense() {
        assert!(kinds("").is_empty());
        assert_eq!(
            kinds("Colorless green ideas sleep furiously"),
            vec![FactKind::Unparseable]
        );
    }

    #[test]
    fn other_patterns() {
        assert!(matches!(
            &kinds("My father's name is Bill")[1],
            FactKind::Name { name, .. } if name == "Bill"
        ));
        assert!(matches!(
            &kinds("Susan is my daughter")[0],
            FactKind::Relation { relation: Child, holder_gender: Some(Gender::Female), .. }
        ));
        let p4 = kinds("Ann's husband is called Bob");
        assert!(matches!(
            &p4[0],
            FactKind::Relation { relation: Spouse, anchor: MentionDesc::Name { name }, .. } if name == "Ann"
        ));
        let p4b = kinds("Bob is Ann's husband");
        assert_eq!(p4b.len(), 1);
        let p5 = kinds("My mother's husband is named Bill");
        assert_eq!(p5.len(), 3);
        assert!(matches!(&p5[1], FactKind::Relation { relation: Spouse, .. }));
        assert_eq!(
            kinds("Sam is a woman"),
            vec![FactKind::Gender {
                mention: named("Sam"),
                gender: Gender::Female
            }]
        );
        assert!(matches!(
            &kinds("My brother in law is named Tom")[0],
            FactKind::Relation { relation: SiblingInLaw, .. }
        ));
        assert!(matches!(&kinds("I have an aunt")[0], FactKind::Relation { relation: AuntUncle, .. }));
    }

    #[test]
    fn bare_answers() {
        let answer = |t: &str| match kinds(t).as_slice() {
            [FactKind::Answer { answer }] => answer.clone(),
            other => panic!("{t}: {other:?}"),
        };
        assert_eq!(answer("Yes"), AnswerToken::Yes);
        assert_eq!(answer("no."), AnswerToken::No);
        assert_eq!(answer("same person"), AnswerToken::Same);
        assert_eq!(answer("Different people"), AnswerToken::Different);
        assert_eq!(answer("Mary"), AnswerToken::Name { name: "Mary".into() });
        assert_eq!(
            answer("uncle"),
            AnswerToken::Relation {
                atom: AuntUncle,
                gender: Some(Gender::Male)
            }
        );
    }

    #[test]
    fn every_surface_round_trips() {
        let lex = lex();
        for e in lex.relations.entries() {
            let facts = parse_utterance(&format!("My {} is named Xavier", e.surface), &lex);
            match &facts[0].kind {
                FactKind::Relation {
                    relation,
                    holder_gender,
                    ..
                } => {
                    assert_eq!(*relation, e.atom, "{}", e.surface);
                    assert_eq!(*holder_gender, e.gender, "{}", e.surface);
                }
                other => panic!("{}: {other:?}", e.surface),
            }
        }
    }

    #[test]
    fn unparseable_clauses_are_kept() {
        let facts = parse_utterance("My father is named Sam and the weather is nice.", &lex());
        assert_eq!(facts.last().unwrap().kind, FactKind::Unparseable);
        assert_eq!(facts.last().unwrap().span, "the weather is nice");
    }

    fn session_world() -> (WorldModel, EntityId) {
        let mut w = WorldModel::new(Arc::new(CompositionTable::shipped())).unwrap();
        let me = w.add_entity(None, None, true).unwrap();
        (w, me)
    }

    fn ground(w: &mut WorldModel, text: &str) -> Result<Vec<GroundOp>, Clarification> {
        let facts = parse_utterance(text, &lex());
        let ops = resolve_mentions(&facts, w, &lex(), 0, &BTreeMap::new()).unwrap()?;
        for op in &ops {
            match op {
                GroundOp::Assert {
                    a,
                    a_mention,
                    relations,
                    b,
                    b_mention,
                } => {
                    w.assert_relation_with(*a, *a_mention, *relations, *b, *b_mention)
                        .unwrap();
                }
                GroundOp::Gender {
                    entity,
                    gender,
                    mention,
                } => {
                    w.set_gender_with(*entity, *gender, *mention).unwrap();
                }
                GroundOp::Name {
                    entity,
                    name,
                    mention,
                } => w.add_name(*entity, name, *mention).unwrap(),
                GroundOp::CensusGender { .. } => {}
            }
        }
        Ok(ops)
    }

    #[test]
    fn father_named_sam_on_empty_session() {
        let (mut w, me) = session_world();
        ground(&mut w, "My father is named Sam").unwrap();
        assert_eq!(w.entities().count(), 2);
        let sam = w.entities().find(|e| e.has_name("Sam")).unwrap();
        assert_eq!(sam.gender, Gender::Male);
        assert_eq!(w.edge(sam.id, me), Some(Parent.into()));
    }

    #[test]
    fn second_father_mention_reuses_entity() {
        let (mut w, _) = session_world();
        ground(&mut w, "My father is named Sam").unwrap();
        ground(&mut w, "My dad's name is Samuel").unwrap();
        assert_eq!(w.entities().count(), 2);
        let sam = w.entities().find(|e| e.has_name("Sam")).unwrap();
        assert!(sam.has_name("Samuel"));
        assert_eq!(sam.mentions.len(), 2);
    }

    #[test]
    fn bare_name_with_two_candidates_asks() {
        let (mut w, me) = session_world();
        let a = w.add_entity(Some("Sam"), None, false).unwrap();
        let b = w.add_entity(Some("Sam"), None, false).unwrap();
        w.assert_relation(a, Parent.into(), me).unwrap();
        let before = w.clone();
        let c = ground(&mut w, "Sam is a man").unwrap_err();
        assert_eq!(c.candidates, vec![a, b]);
        assert_eq!(w, before);
    }

    #[test]
    fn forced_choice_resolves_ambiguity() {
        let (mut w, _) = session_world();
        w.add_entity(Some("Sam"), None, false).unwrap();
        let b = w.add_entity(Some("Sam"), None, false).unwrap();
        let facts = parse_utterance("Sam is a man", &lex());
        let forced = BTreeMap::from([("sam".to_string(), b)]);
        let ops = resolve_mentions(&facts, &mut w, &lex(), 1, &forced).unwrap().unwrap();
        assert!(matches!(ops[0], GroundOp::Gender { entity, .. } if entity == b));
    }

    #[test]
    fn named_description_grounds_by_name() {
        let (mut w, _) = session_world();
        ground(&mut w, "My brother is named Bill").unwrap();
        let facts = parse_utterance("My father is named Bill", &lex());
        let ops = resolve_mentions(&facts, &mut w, &lex(), 1, &BTreeMap::new())
            .unwrap()
            .unwrap();
        let bill = w.entities().find(|e| e.has_name("Bill")).unwrap();
        assert_eq!(bill.mentions.len(), 2);
        assert!(matches!(ops[0], GroundOp::Assert { a, .. } if a == bill.id));
    }

    #[test]
    fn census_gender_is_emitted_for_names() {
        let (mut w, _) = session_world();
        let ops = ground(&mut w, "I have a daughter named Susan").unwrap();
        assert!(ops.iter().any(|op| matches!(
            op,
            GroundOp::CensusGender { gender: Gender::Female, .. }
        )));
    }
}
