//! Possibilistic family-relation world model.

pub mod algebra;
pub mod dialog;
pub mod error;
pub mod extraction;
pub mod oracle;
pub mod session;
pub mod snapshot;
pub mod world;

pub use algebra::{CompositionTable, RelationAtom, RelationSet};
pub use world::{EntityId, Gender, WorldModel};
