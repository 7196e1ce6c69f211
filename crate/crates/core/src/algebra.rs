//! Relation atoms, relation sets and the composition table.
//!
//! An atom `R` on the ordered pair `(a, b)` reads "a is the R of b". The
//! composition table maps a pair of atoms chained through a shared middle
//! entity to the set of atoms that may hold between the two outer entities:
//! `R1(a, b) ∧ R2(b, c) → M(R1, R2)(a, c)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::TableError;

/// Number of atoms in the relation universe.
pub const ATOM_COUNT: usize = 14;

/// One of the fourteen family relations.
///
/// Variants are declared in alphabetical order of their canonical names; the
/// discriminant is the bit index inside a [`RelationSet`] and fixes the record
/// order of the table file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum RelationAtom {
    AuntUncle = 0,
    Child,
    ChildInLaw,
    Cousin,
    Grandchild,
    Grandparent,
    NieceNephew,
    OutOfGraph,
    Parent,
    ParentInLaw,
    /// Two nodes denote the same person. Canonical name `Self`.
    Same,
    Sibling,
    SiblingInLaw,
    Spouse,
}

impl RelationAtom {
    pub const ALL: [RelationAtom; ATOM_COUNT] = [
        RelationAtom::AuntUncle,
        RelationAtom::Child,
        RelationAtom::ChildInLaw,
        RelationAtom::Cousin,
        RelationAtom::Grandchild,
        RelationAtom::Grandparent,
        RelationAtom::NieceNephew,
        RelationAtom::OutOfGraph,
        RelationAtom::Parent,
        RelationAtom::ParentInLaw,
        RelationAtom::Same,
        RelationAtom::Sibling,
        RelationAtom::SiblingInLaw,
        RelationAtom::Spouse,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Option<RelationAtom> {
        Self::ALL.get(i).copied()
    }

    pub fn inverse(self) -> RelationAtom {
        use RelationAtom::*;
        match self {
            Grandparent => Grandchild,
            Grandchild => Grandparent,
            Parent => Child,
            Child => Parent,
            ParentInLaw => ChildInLaw,
            ChildInLaw => ParentInLaw,
            AuntUncle => NieceNephew,
            NieceNephew => AuntUncle,
            Spouse | Sibling | SiblingInLaw | Cousin | Same | OutOfGraph => self,
        }
    }

    pub fn name(self) -> &'static str {
        use RelationAtom::*;
        match self {
            AuntUncle => "AuntUncle",
            Child => "Child",
            ChildInLaw => "ChildInLaw",
            Cousin => "Cousin",
            Grandchild => "Grandchild",
            Grandparent => "Grandparent",
            NieceNephew => "NieceNephew",
            OutOfGraph => "OutOfGraph",
            Parent => "Parent",
            ParentInLaw => "ParentInLaw",
            Same => "Self",
            Sibling => "Sibling",
            SiblingInLaw => "SiblingInLaw",
            Spouse => "Spouse",
        }
    }

    /// Human phrasing of the relation, gender neutral ("aunt or uncle").
    pub fn phrase(self) -> &'static str {
        use RelationAtom::*;
        match self {
            AuntUncle => "aunt or uncle",
            Child => "child",
            ChildInLaw => "child-in-law",
            Cousin => "cousin",
            Grandchild => "grandchild",
            Grandparent => "grandparent",
            NieceNephew => "niece or nephew",
            OutOfGraph => "some other relation (or not related)",
            Parent => "parent",
            ParentInLaw => "parent-in-law",
            Same => "the same person",
            Sibling => "sibling",
            SiblingInLaw => "sibling-in-law",
            Spouse => "spouse",
        }
    }
}

impl fmt::Display for RelationAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelationAtom {
    type Err = TableError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationAtom::ALL
            .iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| TableError::UnknownAtom(s.to_string()))
    }
}

impl Serialize for RelationAtom {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for RelationAtom {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A subset of the relation universe, stored as a 14-bit membership mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct RelationSet(u16);

impl RelationSet {
    const MASK: u16 = (1 << ATOM_COUNT) - 1;

    pub const EMPTY: RelationSet = RelationSet(0);
    pub const FULL: RelationSet = RelationSet(Self::MASK);

    pub fn from_bits(bits: u16) -> RelationSet {
        RelationSet(bits & Self::MASK)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn single(atom: RelationAtom) -> RelationSet {
        RelationSet(1 << atom.index())
    }

    pub fn of(atoms: &[RelationAtom]) -> RelationSet {
        atoms.iter().copied().collect()
    }

    #[inline]
    pub fn contains(self, atom: RelationAtom) -> bool {
        self.0 & (1 << atom.index()) != 0
    }

    pub fn insert(&mut self, atom: RelationAtom) {
        self.0 |= 1 << atom.index();
    }

    pub fn remove(&mut self, atom: RelationAtom) {
        self.0 &= !(1 << atom.index());
    }

    pub fn without(self, atom: RelationAtom) -> RelationSet {
        RelationSet(self.0 & !(1 << atom.index()))
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    /// The only member, when the set is a singleton.
    pub fn as_single(self) -> Option<RelationAtom> {
        if self.len() == 1 {
            RelationAtom::from_index(self.0.trailing_zeros() as usize)
        } else {
            None
        }
    }

    pub fn union(self, other: RelationSet) -> RelationSet {
        RelationSet(self.0 | other.0)
    }

    pub fn intersection(self, other: RelationSet) -> RelationSet {
        RelationSet(self.0 & other.0)
    }

    pub fn is_subset(self, other: RelationSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = RelationAtom> {
        RelationAtom::ALL
            .into_iter()
            .filter(move |a| self.contains(*a))
    }

    /// Element-wise inverse.
    pub fn inverse(self) -> RelationSet {
        self.iter().map(RelationAtom::inverse).collect()
    }

    pub fn atoms(self) -> Vec<RelationAtom> {
        self.iter().collect()
    }
}

impl FromIterator<RelationAtom> for RelationSet {
    fn from_iter<I: IntoIterator<Item = RelationAtom>>(iter: I) -> Self {
        let mut s = RelationSet::EMPTY;
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl From<RelationAtom> for RelationSet {
    fn from(a: RelationAtom) -> Self {
        RelationSet::single(a)
    }
}

impl fmt::Debug for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, a) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(a.name())?;
        }
        f.write_str("}")
    }
}

impl Serialize for RelationSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for RelationSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let atoms = Vec::<RelationAtom>::deserialize(d)?;
        Ok(atoms.into_iter().collect())
    }
}

pub fn inverse(r: RelationAtom) -> RelationAtom {
    r.inverse()
}

pub fn invert_set(s: RelationSet) -> RelationSet {
    s.inverse()
}

/// Provenance recorded in the table file header.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TableMeta {
    pub version: String,
    pub seed: u64,
    pub budget: u64,
}

/// The composition matrix `M`, total over all ordered atom pairs.
#[derive(Clone, PartialEq, Eq)]
pub struct CompositionTable {
    entries: [[RelationSet; ATOM_COUNT]; ATOM_COUNT],
    pub meta: TableMeta,
}

const SHIPPED_TABLE: &str = include_str!("../data/composition_table.txt");

pub const TABLE_FORMAT_VERSION: &str = "relworld-table-1";

impl fmt::Debug for CompositionTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositionTable")
            .field("meta", &self.meta)
            .field("checksum", &self.checksum())
            .finish()
    }
}

impl CompositionTable {
    /// A table with every entry empty. Not valid until filled.
    pub fn empty() -> CompositionTable {
        CompositionTable {
            entries: [[RelationSet::EMPTY; ATOM_COUNT]; ATOM_COUNT],
            meta: TableMeta {
                version: TABLE_FORMAT_VERSION.to_string(),
                ..TableMeta::default()
            },
        }
    }

    /// The table bundled with the crate, derived by the genealogy oracle.
    pub fn shipped() -> CompositionTable {
        CompositionTable::parse(SHIPPED_TABLE).expect("bundled composition table is malformed")
    }

    #[inline]
    pub fn get(&self, r1: RelationAtom, r2: RelationAtom) -> RelationSet {
        self.entries[r1.index()][r2.index()]
    }

    pub fn set(&mut self, r1: RelationAtom, r2: RelationAtom, s: RelationSet) {
        self.entries[r1.index()][r2.index()] = s;
    }

    pub fn insert(&mut self, r1: RelationAtom, r2: RelationAtom, r: RelationAtom) -> bool {
        let e = &mut self.entries[r1.index()][r2.index()];
        let before = *e;
        e.insert(r);
        before != *e
    }

    /// Merge another table into this one entry-wise.
    pub fn union_with(&mut self, other: &CompositionTable) {
        for i in 0..ATOM_COUNT {
            for j in 0..ATOM_COUNT {
                self.entries[i][j] = self.entries[i][j].union(other.entries[i][j]);
            }
        }
    }

    pub fn compose(&self, r1: RelationAtom, r2: RelationAtom) -> RelationSet {
        self.get(r1, r2)
    }

    /// Union of `M(r1, r2)` over all members of the two sets.
    pub fn compose_sets(&self, s1: RelationSet, s2: RelationSet) -> RelationSet {
        let mut out = RelationSet::EMPTY;
        for r1 in s1.iter() {
            let row = &self.entries[r1.index()];
            for r2 in s2.iter() {
                out = out.union(row[r2.index()]);
                if out == RelationSet::FULL {
                    return out;
                }
            }
        }
        out
    }

    pub fn entries(&self) -> impl Iterator<Item = (RelationAtom, RelationAtom, RelationSet)> + '_ {
        RelationAtom::ALL.into_iter().flat_map(move |r1| {
            RelationAtom::ALL
                .into_iter()
                .map(move |r2| (r1, r2, self.get(r1, r2)))
        })
    }

    fn body(&self) -> String {
        let mut out = String::new();
        for (r1, r2, s) in self.entries() {
            out.push_str(r1.name());
            out.push(' ');
            out.push_str(r2.name());
            out.push_str(" :");
            for a in s.iter() {
                out.push(' ');
                out.push_str(a.name());
            }
            out.push('\n');
        }
        out
    }

    /// SHA-256 over the record lines only, so provenance does not affect it.
    pub fn checksum(&self) -> String {
        let digest = Sha256::digest(self.body().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("version: {}\n", self.meta.version));
        out.push_str(&format!("seed: {}\n", self.meta.seed));
        out.push_str(&format!("budget: {}\n", self.meta.budget));
        out.push_str(&format!("checksum: {}\n", self.checksum()));
        out.push_str("---\n");
        out.push_str(&self.body());
        out
    }

    /// Parse the text format. Every ordered pair must appear exactly once and
    /// the header checksum must match the records.
    pub fn parse(text: &str) -> Result<CompositionTable, TableError> {
        let (table, checksum) = CompositionTable::parse_records(text)?;
        if let Some(expected) = checksum {
            let actual = table.checksum();
            if expected != actual {
                return Err(TableError::ChecksumMismatch { expected, actual });
            }
        }
        Ok(table)
    }

    /// Parse without verifying the checksum, returning the declared one.
    /// Used to diagnose hand-edited files.
    pub fn parse_records(text: &str) -> Result<(CompositionTable, Option<String>), TableError> {
        let mut table = CompositionTable::empty();
        let mut seen = [[false; ATOM_COUNT]; ATOM_COUNT];
        let mut checksum = None;
        let mut in_body = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !in_body {
                if line == "---" {
                    in_body = true;
                    continue;
                }
                let (key, value) = line
                    .split_once(':')
                    .ok_or(TableError::Syntax { line: lineno + 1 })?;
                let value = value.trim();
                match key.trim() {
                    "version" => table.meta.version = value.to_string(),
                    "seed" => {
                        table.meta.seed = value
                            .parse()
                            .map_err(|_| TableError::Syntax { line: lineno + 1 })?
                    }
                    "budget" => {
                        table.meta.budget = value
                            .parse()
                            .map_err(|_| TableError::Syntax { line: lineno + 1 })?
                    }
                    "checksum" => checksum = Some(value.to_string()),
                    _ => return Err(TableError::Syntax { line: lineno + 1 }),
                }
                continue;
            }
            let (lhs, rhs) = line
                .split_once(':')
                .ok_or(TableError::Syntax { line: lineno + 1 })?;
            let mut pair = lhs.split_whitespace();
            let (Some(a), Some(b), None) = (pair.next(), pair.next(), pair.next()) else {
                return Err(TableError::Syntax { line: lineno + 1 });
            };
            let r1: RelationAtom = a.parse()?;
            let r2: RelationAtom = b.parse()?;
            if seen[r1.index()][r2.index()] {
                return Err(TableError::DuplicateEntry(r1, r2));
            }
            seen[r1.index()][r2.index()] = true;
            let set = rhs
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<RelationSet, _>>()?;
            table.set(r1, r2, set);
        }
        for r1 in RelationAtom::ALL {
            for r2 in RelationAtom::ALL {
                if !seen[r1.index()][r2.index()] {
                    return Err(TableError::MissingEntry(r1, r2));
                }
            }
        }
        Ok((table, checksum))
    }

    pub fn load(path: &std::path::Path) -> Result<CompositionTable, TableError> {
        let text = std::fs::read_to_string(path)?;
        CompositionTable::parse(&text)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

pub fn compose(r1: RelationAtom, r2: RelationAtom, m: &CompositionTable) -> RelationSet {
    m.compose(r1, r2)
}

pub fn compose_sets(s1: RelationSet, s2: RelationSet, m: &CompositionTable) -> RelationSet {
    m.compose_sets(s1, s2)
}

/// A single axiom failure found by [`check_axioms`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxiomViolation {
    /// `M(r1, r2)` is empty.
    EmptyEntry { r1: RelationAtom, r2: RelationAtom },
    /// `M(r2⁻¹, r1⁻¹)` is not the inverse of `M(r1, r2)`.
    InverseClosure {
        r1: RelationAtom,
        r2: RelationAtom,
        expected: RelationSet,
        found: RelationSet,
    },
    /// `r ∈ M(r1, r2)` but `r1 ∉ M(r, r2⁻¹)` or `r2 ∉ M(r1⁻¹, r)`.
    ConsistencyA {
        r1: RelationAtom,
        r2: RelationAtom,
        r: RelationAtom,
    },
    /// `r ∈ M(r1, r2)` but `r2⁻¹ ∉ M(r⁻¹, r1)` or `r1⁻¹ ∉ M(r2, r⁻¹)`.
    ConsistencyB {
        r1: RelationAtom,
        r2: RelationAtom,
        r: RelationAtom,
    },
}

impl fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomViolation::EmptyEntry { r1, r2 } => write!(f, "A1: M({r1}, {r2}) is empty"),
            AxiomViolation::InverseClosure {
                r1,
                r2,
                expected,
                found,
            } => write!(
                f,
                "A2: M({}, {}) = {found}, expected inverse of M({r1}, {r2}) = {expected}",
                r2.inverse(),
                r1.inverse()
            ),
            AxiomViolation::ConsistencyA { r1, r2, r } => {
                write!(f, "A3(a): ({r1}, {r2}, {r})")
            }
            AxiomViolation::ConsistencyB { r1, r2, r } => {
                write!(f, "A3(b): ({r1}, {r2}, {r})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AxiomReport {
    pub violations: Vec<AxiomViolation>,
}

impl AxiomReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for AxiomReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("no axiom violations");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Exhaustively check the non-emptiness, inverse closure and both
/// consistency conditions over every entry and member.
pub fn check_axioms(m: &CompositionTable) -> AxiomReport {
    let mut violations = Vec::new();
    for (r1, r2, s) in m.entries() {
        if s.is_empty() {
            violations.push(AxiomViolation::EmptyEntry { r1, r2 });
        }
        let mirrored = m.get(r2.inverse(), r1.inverse());
        if mirrored != s.inverse() {
            violations.push(AxiomViolation::InverseClosure {
                r1,
                r2,
                expected: s.inverse(),
                found: mirrored,
            });
        }
        for r in s.iter() {
            if !m.get(r, r2.inverse()).contains(r1) || !m.get(r1.inverse(), r).contains(r2) {
                violations.push(AxiomViolation::ConsistencyA { r1, r2, r });
            }
            let q = r.inverse();
            if !m.get(q, r1).contains(r2.inverse()) || !m.get(r2, q).contains(r1.inverse()) {
                violations.push(AxiomViolation::ConsistencyB { r1, r2, r });
            }
        }
    }
    AxiomReport { violations }
}

/// How an edge touches the shared node of two adjacent edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Incidence {
    /// The edge is oriented away from the shared node.
    StartsAt,
    /// The edge is oriented into the shared node.
    EndsAt,
}

/// Two adjacent edges of a 3-clique meeting at a shared node `E`, plus the
/// third edge set. The first relation joins `E` and `X`, the second joins
/// `E` and `Y`; `third` is the edge set oriented from `X` to `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CliqueContext {
    pub first: Incidence,
    pub second: Incidence,
    pub third: RelationSet,
}

impl CliqueContext {
    /// The same clique seen with the two adjacent edges swapped.
    pub fn swapped(self) -> CliqueContext {
        CliqueContext {
            first: self.second,
            second: self.first,
            third: self.third.inverse(),
        }
    }
}

/// Whether `r1` supports `r2` in the clique: some relation on the third edge
/// makes their co-occurrence consistent with `M`.
pub fn supports(
    r1: RelationAtom,
    r2: RelationAtom,
    clique: &CliqueContext,
    m: &CompositionTable,
) -> bool {
    use Incidence::*;
    let x_to_y = clique.third;
    let y_to_x = clique.third.inverse();
    match (clique.first, clique.second) {
        // X r1 E, Y r2 E: Y R X ∧ X r1 E
        (EndsAt, EndsAt) => y_to_x.iter().any(|r| m.get(r, r1).contains(r2)),
        // E r1 X, E r2 Y: E r1 X ∧ X R Y
        (StartsAt, StartsAt) => x_to_y.iter().any(|r| m.get(r1, r).contains(r2)),
        // X r1 E, E r2 Y: E r1⁻¹ X ∧ X R Y
        (EndsAt, StartsAt) => x_to_y.iter().any(|r| m.get(r1.inverse(), r).contains(r2)),
        // E r1 X, Y r2 E: Y R X ∧ X r1⁻¹ E
        (StartsAt, EndsAt) => y_to_x.iter().any(|r| m.get(r, r1.inverse()).contains(r2)),
    }
}

#[cfg(test)]
mod tests {
    use super::RelationAtom::*;
    use super::*;

    #[test]
    fn inverse_pairs() {
        assert_eq!(inverse(Parent), Child);
        assert_eq!(inverse(Spouse), Spouse);
        assert_eq!(inverse(OutOfGraph), OutOfGraph);
        assert_eq!(inverse(AuntUncle), NieceNephew);
        assert_eq!(inverse(ParentInLaw), ChildInLaw);
        for a in RelationAtom::ALL {
            assert_eq!(a.inverse().inverse(), a);
        }
    }

    #[test]
    fn atom_order_is_alphabetical_by_name() {
        let names: Vec<_> = RelationAtom::ALL.iter().map(|a| a.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        for (i, a) in RelationAtom::ALL.iter().enumerate() {
            assert_eq!(a.index(), i);
        }
    }

    #[test]
    fn invert_set_examples() {
        assert_eq!(
            invert_set(RelationSet::of(&[Parent, Spouse])),
            RelationSet::of(&[Child, Spouse])
        );
        assert_eq!(invert_set(RelationSet::EMPTY), RelationSet::EMPTY);
        assert_eq!(invert_set(RelationSet::FULL), RelationSet::FULL);
    }

    #[test]
    fn set_display_and_parse() {
        let s = RelationSet::of(&[Same, Cousin]);
        assert_eq!(s.to_string(), "{Cousin, Self}");
        assert_eq!("self".parse::<RelationAtom>().unwrap(), Same);
        assert!("Uncle".parse::<RelationAtom>().is_err());
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"["Cousin","Self"]"#);
        assert_eq!(serde_json::from_str::<RelationSet>(&json).unwrap(), s);
    }

    #[test]
    fn shipped_table_anchor_entries() {
        let m = CompositionTable::shipped();
        assert_eq!(compose(Parent, Sibling, &m), RelationSet::single(Parent));
        assert_eq!(
            compose(Cousin, Cousin, &m),
            RelationSet::of(&[Cousin, Same, Sibling, OutOfGraph])
        );
        assert_eq!(compose(Same, Cousin, &m), RelationSet::single(Cousin));
        assert_eq!(compose(Parent, Parent, &m), RelationSet::single(Grandparent));
    }

    #[test]
    fn compose_sets_examples() {
        let m = CompositionTable::shipped();
        assert_eq!(
            compose_sets(RelationSet::single(Same), RelationSet::single(Cousin), &m),
            RelationSet::single(Cousin)
        );
        let lhs = compose_sets(RelationSet::of(&[Parent, Sibling]), Sibling.into(), &m);
        assert_eq!(lhs, m.get(Parent, Sibling).union(m.get(Sibling, Sibling)));
        assert!(lhs.contains(Parent));
        assert_eq!(
            compose_sets(RelationSet::FULL, RelationSet::FULL, &m),
            RelationSet::FULL
        );
    }

    #[test]
    fn shipped_table_passes_axioms() {
        let report = check_axioms(&CompositionTable::shipped());
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn empty_entry_is_reported() {
        let mut m = CompositionTable::shipped();
        m.set(Parent, Sibling, RelationSet::EMPTY);
        let report = check_axioms(&m);
        assert!(report
            .violations
            .contains(&AxiomViolation::EmptyEntry { r1: Parent, r2: Sibling }));
    }

    #[test]
    fn missing_a3_membership_is_reported() {
        let mut m = CompositionTable::shipped();
        let required = m.get(Parent, Sibling);
        assert!(required.contains(Parent));
        // A3(a) on (Parent, Sibling, Parent) also needs Sibling ∈ M(Child, Parent).
        m.set(Child, Parent, m.get(Child, Parent).without(Sibling));
        let report = check_axioms(&m);
        assert!(report.violations.contains(&AxiomViolation::ConsistencyA {
            r1: Parent,
            r2: Sibling,
            r: Parent
        }));
    }

    #[test]
    fn text_round_trip_and_checksum() {
        let m = CompositionTable::shipped();
        let text = m.to_text();
        let back = CompositionTable::parse(&text).unwrap();
        assert_eq!(back, m);
        let corrupted = text.replace("Parent Sibling : Parent\n", "Parent Sibling : Child\n");
        assert!(matches!(
            CompositionTable::parse(&corrupted),
            Err(TableError::ChecksumMismatch { .. })
        ));
        let truncated: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(CompositionTable::parse(&truncated).is_err());
    }

    #[test]
    fn support_with_sibling_third_edge() {
        let m = CompositionTable::shipped();
        // A is parent of B and of C; B and C joined by Sibling. Shared node A.
        let ctx = CliqueContext {
            first: Incidence::StartsAt,
            second: Incidence::StartsAt,
            third: Sibling.into(),
        };
        assert!(supports(Parent, Parent, &ctx, &m));
        assert!(!supports(Parent, Grandparent, &ctx, &m));
    }
}
