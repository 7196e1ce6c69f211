//! Properties of question selection and answer learning.

mod common;

use proptest::prelude::*;
use relworld::dialog::{abstract_slots, fill_slots, next_question, normalize, score_edge, QuestionKind};

use common::{random_component, rng};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn slot_abstraction_round_trips(
        words in prop::collection::vec("[a-z]{1,6}", 1..8),
        name in "[A-Z][a-z]{2,6}",
        at in 0usize..8,
    ) {
        let mut words = words;
        let at = at.min(words.len());
        words.insert(at, name.clone());
        let text = words.join(" ");
        let slots = vec![name.clone()];
        let pattern = abstract_slots(&normalize(&text), &slots);
        let has_slot = pattern.contains("{X}");
        prop_assert!(has_slot);
        prop_assert_eq!(fill_slots(&pattern, &slots), normalize(&text));
    }

    #[test]
    fn scoring_leaves_the_model_alone(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (w, _, _, _) = random_component(&mut r, 7);
        let before = w.clone();
        for (a, b, s) in w.edges().collect::<Vec<_>>() {
            if s.len() > 1 {
                let score = score_edge(&w, a, b).unwrap();
                prop_assert!(score >= 0.0);
                prop_assert!(score <= w.total_cardinality() as f64);
            } else {
                prop_assert!(score_edge(&w, a, b).is_err());
            }
        }
        prop_assert!(w == before);
    }

    #[test]
    fn relation_questions_target_a_best_edge(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (w, _, _, _) = random_component(&mut r, 7);
        let target = match next_question(&w, &[], false) {
            Some(QuestionKind::YesNoSelf { a, b })
            | Some(QuestionKind::YesNoRelation { a, b, .. })
            | Some(QuestionKind::ChooseRelation { a, b, .. }) => Some((a, b)),
            _ => None,
        };
        let open: Vec<_> = w.edges().filter(|(_, _, s)| s.len() > 1).collect();
        match target {
            Some((a, b)) => {
                let best = score_edge(&w, a, b).unwrap();
                for (x, y, _) in &open {
                    prop_assert!(best <= score_edge(&w, *x, *y).unwrap());
                }
            }
            None => {
                let asks_gender =
                    matches!(next_question(&w, &[], false), Some(QuestionKind::AskGender { .. }));
                prop_assert!(open.is_empty() || asks_gender);
            }
        }
    }
}
