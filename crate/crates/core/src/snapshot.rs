//! Immutable, serializable view of a world model for display and transport.

use serde::{Deserialize, Serialize};

use crate::algebra::RelationAtom;
use crate::world::{EntityId, Gender, WorldModel};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityView {
    pub id: EntityId,
    pub names: Vec<String>,
    pub gender: Gender,
    pub narrator: bool,
}

/// Edge read as "a is R of b" for each listed atom.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeView {
    pub a: EntityId,
    pub b: EntityId,
    pub relations: Vec<RelationAtom>,
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSnapshot {
    pub version: u64,
    pub entities: Vec<EntityView>,
    pub edges: Vec<EdgeView>,
    pub components: Vec<Vec<EntityId>>,
}

impl GraphSnapshot {
    pub fn of(w: &WorldModel) -> GraphSnapshot {
        GraphSnapshot {
            version: w.version(),
            entities: w
                .entities()
                .map(|e| EntityView {
                    id: e.id,
                    names: e.names.iter().cloned().collect(),
                    gender: e.gender,
                    narrator: e.is_narrator,
                })
                .collect(),
            edges: w
                .edges()
                .map(|(a, b, s)| EdgeView {
                    a,
                    b,
                    relations: s.atoms(),
                    ambiguous: s.len() > 1,
                })
                .collect(),
            components: w.components().into_values().collect(),
        }
    }
}
