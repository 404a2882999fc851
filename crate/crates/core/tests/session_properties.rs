use std::collections::HashSet;

use proptest::prelude::*;
use triage::inference::{posterior_update, Answer, Distribution, SelectionPolicy};
use triage::knowledge::{KnowledgeMatrix, SymptomId};
use triage::session::{Session, SessionConfig, StopReason};

fn instance() -> impl Strategy<Value = (KnowledgeMatrix, Vec<f64>)> {
    (2usize..6, 1usize..15).prop_flat_map(|(c, s)| {
        (
            prop::collection::vec(prop::collection::vec(1e-4f64..=0.9999, s), c),
            prop::collection::vec(0.01f64..1.0, c),
        )
            .prop_map(move |(rows, prior)| {
                let conditions = (0..c).map(|i| format!("c{i}")).collect();
                let symptoms = (0..s).map(|j| format!("s{j}")).collect();
                (KnowledgeMatrix::new(conditions, symptoms, rows).unwrap(), prior)
            })
    })
}

fn answer_from(bits: u64, step: usize) -> Answer {
    match (bits >> (2 * (step % 32))) & 3 {
        0 => Answer::Yes,
        1 => Answer::No,
        _ => Answer::Unknown,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn episodes_respect_session_invariants(
        (m, w) in instance(),
        answers in any::<u64>(),
        max_questions in 1usize..8,
        threshold in 0.6f64..0.99,
        initial_mask in any::<u16>(),
        yes_branch in any::<bool>(),
    ) {
        let initial: Vec<SymptomId> = (0..m.symptom_count().min(16))
            .filter(|j| initial_mask >> j & 1 == 1 && j % 3 == 0)
            .map(SymptomId)
            .collect();
        let policy = if yes_branch { SelectionPolicy::YesBranch } else { SelectionPolicy::ExpectedIg };
        let config = SessionConfig::new(Distribution::from_weights(w).unwrap())
            .with_initial_symptoms(initial.clone())
            .with_max_questions(max_questions)
            .with_threshold(threshold)
            .with_policy(policy);
        let mut session = Session::create(config.clone(), &m).unwrap();
        let mut twin = Session::create(config, &m).unwrap();
        let mut asked = HashSet::new();
        let mut step = 0;
        while let Some(s) = session.pending() {
            prop_assert!(!initial.contains(&s));
            prop_assert!(asked.insert(s), "asked {s} twice");
            let a = answer_from(answers, step);
            session.submit_answer(&m, s, a).unwrap();
            twin.submit_answer(&m, s, a).unwrap();
            step += 1;
        }
        prop_assert_eq!(&session, &twin);
        prop_assert!(session.questions_asked() <= max_questions);
        let replayed = session.replay(&m).unwrap();
        for (x, y) in replayed.probs().iter().zip(session.posterior().probs()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
        match session.stop_reason().unwrap() {
            StopReason::ThresholdReached => prop_assert!(session.posterior().max() >= threshold),
            StopReason::BudgetExhausted => prop_assert_eq!(session.questions_asked(), max_questions),
            StopReason::SymptomsExhausted => {
                prop_assert_eq!(session.history().len(), m.symptom_count())
            }
        }
    }

    #[test]
    fn updates_commute((m, w) in instance(), a in 0u64..9) {
        prop_assume!(m.symptom_count() >= 2);
        let prior = Distribution::from_weights(w).unwrap();
        let (s, t) = (SymptomId(0), SymptomId(m.symptom_count() - 1));
        let (a_s, a_t) = (answer_from(a, 0), answer_from(a >> 2, 0));
        let st = posterior_update(&posterior_update(&prior, &m, s, a_s).unwrap(), &m, t, a_t).unwrap();
        let ts = posterior_update(&posterior_update(&prior, &m, t, a_t).unwrap(), &m, s, a_s).unwrap();
        for (x, y) in st.probs().iter().zip(ts.probs()) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }
}
