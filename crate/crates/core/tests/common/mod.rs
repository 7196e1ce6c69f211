//! Generators shared by the integration suites.
#![allow(dead_code)]

pub mod scenario;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relworld::oracle::{
    build_world, generate_genealogy, random_true_facts, Genealogy, GenealogyParams,
};
use relworld::world::WorklistOrder;
use relworld::{CompositionTable, EntityId, RelationAtom, RelationSet, WorldModel};

pub fn table() -> Arc<CompositionTable> {
    static TABLE: OnceLock<Arc<CompositionTable>> = OnceLock::new();
    TABLE
        .get_or_init(|| Arc::new(CompositionTable::shipped()))
        .clone()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Any atom but Self, which never holds between two distinct entities
/// built by these generators.
pub fn random_atom(rng: &mut impl Rng) -> RelationAtom {
    loop {
        let a = RelationAtom::ALL[rng.gen_range(0..14)];
        if a != RelationAtom::Same {
            return a;
        }
    }
}

pub fn random_set(rng: &mut impl Rng, max_len: usize) -> RelationSet {
    let mut s = RelationSet::EMPTY;
    for _ in 0..rng.gen_range(1..=max_len) {
        s.insert(RelationAtom::ALL[rng.gen_range(0..14)]);
    }
    s
}

/// `truth` plus a few random decoys.
pub fn padded(rng: &mut impl Rng, truth: RelationAtom, decoys: usize) -> RelationSet {
    let mut s = RelationSet::single(truth);
    for _ in 0..rng.gen_range(0..=decoys) {
        s.insert(random_atom(rng));
    }
    s
}

/// A non-empty random subset of `s`.
pub fn shrink(rng: &mut impl Rng, s: RelationSet) -> RelationSet {
    let atoms = s.atoms();
    let mut out = RelationSet::EMPTY;
    while out.is_empty() {
        for a in &atoms {
            if rng.gen_bool(0.5) {
                out.insert(*a);
            }
        }
    }
    out
}

pub fn genealogy(seed: u64, max_persons: usize) -> Genealogy {
    generate_genealogy(&GenealogyParams {
        max_persons,
        max_generations: 4,
        families: 2,
        intermarriage_rate: 0.5,
        seed,
        ..GenealogyParams::default()
    })
    .expect("valid parameters")
}

pub fn edges(w: &WorldModel) -> Vec<(EntityId, EntityId, RelationSet)> {
    w.edges().collect()
}

/// A stable, propagated 3-clique whose edge sets all contain the true
/// relation of three people from a random genealogy.
pub fn stable_clique(rng: &mut ChaCha8Rng) -> (WorldModel, [EntityId; 3]) {
    loop {
        let g = genealogy(rng.gen(), 14);
        if g.len() < 3 {
            continue;
        }
        let mut people: Vec<usize> = (0..g.len()).collect();
        people.shuffle(rng);
        let (a, b, c) = (people[0], people[1], people[2]);
        let layout = [
            (0, 1, padded(rng, g.classify(a, b), 4)),
            (1, 2, padded(rng, g.classify(b, c), 4)),
            (0, 2, padded(rng, g.classify(a, c), 4)),
        ];
        let (mut w, ids) = WorldModel::with_raw_component(table(), 3, &layout);
        let dirty = vec![(ids[0], ids[1]), (ids[1], ids[2]), (ids[0], ids[2])];
        w.propagate(dirty).expect("true sets never conflict");
        return (w, [ids[0], ids[1], ids[2]]);
    }
}

/// The worklist orders compared by the confluence checks.
pub fn orders(seed: u64) -> Vec<WorklistOrder> {
    vec![
        WorklistOrder::Fifo,
        WorklistOrder::Lifo,
        WorklistOrder::Random(Box::new(rng(seed))),
        WorklistOrder::Random(Box::new(rng(seed ^ 0x9e37_79b9))),
        WorklistOrder::Random(Box::new(rng(seed.wrapping_mul(31).wrapping_add(7)))),
    ]
}

/// A connected component of at most `max` entities built from true facts
/// about a random genealogy, with the person behind each entity.
pub fn random_component(
    rng: &mut ChaCha8Rng,
    max: usize,
) -> (WorldModel, Vec<EntityId>, Genealogy, BTreeMap<usize, EntityId>) {
    loop {
        let g = genealogy(rng.gen(), max);
        if g.len() < 3 {
            continue;
        }
        let facts = random_true_facts(&g, g.len() * 2, rng);
        let (w, mapping) = build_world(&g, &facts, rng.gen_bool(0.5), table())
            .expect("true facts are accepted");
        let largest = w
            .components()
            .into_values()
            .max_by_key(Vec::len)
            .unwrap_or_default();
        if largest.len() >= 3 {
            return (w, largest, g, mapping);
        }
    }
}
