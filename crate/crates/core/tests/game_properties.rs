use fpcoord_core::game::{
    best_response, canonical_game, enumerate_pure_nash, expected_reward, make_tcas_game, ActionId,
    GameDocument, MixedStrategy, NormalFormGame, TieBreak, TieBreaker,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|k| format!("a{k}")).collect()
}

/// Small integer payoffs so that ties occur often.
fn bimatrix() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    (1usize..=4, 1usize..=4).prop_flat_map(|(n0, n1)| {
        let m = prop::collection::vec(prop::collection::vec((-2i32..=2).prop_map(f64::from), n1), n0);
        (m.clone(), m)
    })
}

fn strategy(n: usize) -> impl Strategy<Value = MixedStrategy> {
    prop::collection::vec(0.0f64..1.0, n).prop_map(move |w| {
        let total: f64 = w.iter().sum();
        if total <= 1e-9 {
            MixedStrategy::uniform(n)
        } else {
            MixedStrategy::new(w.iter().map(|v| v / total).collect()).unwrap()
        }
    })
}

/// First `n` components of `s`, renormalized.
fn trim(s: &MixedStrategy, n: usize) -> MixedStrategy {
    let w = &s.probs()[..n];
    let total: f64 = w.iter().sum();
    if total <= 1e-9 {
        MixedStrategy::uniform(n)
    } else {
        MixedStrategy::new(w.iter().map(|v| v / total).collect()).unwrap()
    }
}

/// Direct double-loop deviation check.
fn nash_oracle(row: &[Vec<f64>], col: &[Vec<f64>]) -> Vec<Vec<ActionId>> {
    let mut out = Vec::new();
    for a in 0..row.len() {
        for b in 0..row[0].len() {
            let row_ok = (0..row.len()).all(|a2| row[a2][b] <= row[a][b]);
            let col_ok = (0..row[0].len()).all(|b2| col[a][b2] <= col[a][b]);
            if row_ok && col_ok {
                out.push(vec![ActionId(a), ActionId(b)]);
            }
        }
    }
    out
}

proptest! {
    #[test]
    fn nash_enumeration_matches_double_loop((row, col) in bimatrix()) {
        let game = NormalFormGame::from_bimatrix([labels(row.len()), labels(row[0].len())], &row, &col).unwrap();
        prop_assert_eq!(enumerate_pure_nash(&game).unwrap(), nash_oracle(&row, &col));
    }

    #[test]
    fn best_response_attains_the_maximum(
        (row, col) in bimatrix(),
        seed in any::<u64>(),
        policy in prop_oneof![Just(TieBreak::First), Just(TieBreak::Stay), Just(TieBreak::UniformRandom)],
        weights in strategy(4),
    ) {
        let game = NormalFormGame::from_bimatrix([labels(row.len()), labels(row[0].len())], &row, &col).unwrap();
        let n1 = row[0].len();
        let other = trim(&weights, n1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tie = TieBreaker::new(policy, Some(ActionId(0)), &mut rng);
        let chosen = best_response(&game, 0, std::slice::from_ref(&other), &mut tie).unwrap();
        let value = |a: usize| -> f64 { (0..n1).map(|b| other.probs()[b] * row[a][b]).sum() };
        let best = (0..row.len()).map(value).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(best - value(chosen.index()) <= 1e-12);
        let own = MixedStrategy::pure(row.len(), chosen).unwrap();
        let er = expected_reward(&game, 0, &own, std::slice::from_ref(&other)).unwrap();
        prop_assert!((er - value(chosen.index())).abs() <= 1e-12);
    }

    #[test]
    fn expected_reward_is_bilinear((row, col) in bimatrix(), s0 in strategy(4), s1 in strategy(4)) {
        let (n0, n1) = (row.len(), row[0].len());
        let game = NormalFormGame::from_bimatrix([labels(n0), labels(n1)], &row, &col).unwrap();
        let (own, other) = (trim(&s0, n0), trim(&s1, n1));
        let mut direct = 0.0;
        for a in 0..n0 {
            for b in 0..n1 {
                direct += own.probs()[a] * other.probs()[b] * col[a][b];
            }
        }
        let er = expected_reward(&game, 1, &other, std::slice::from_ref(&own)).unwrap();
        prop_assert!((er - direct).abs() <= 1e-12);
    }

    #[test]
    fn document_round_trip((row, col) in bimatrix()) {
        let game = NormalFormGame::from_bimatrix([labels(row.len()), labels(row[0].len())], &row, &col).unwrap();
        let text = serde_json::to_string(&game.to_document().unwrap()).unwrap();
        let back = NormalFormGame::from_document(serde_json::from_str::<GameDocument>(&text).unwrap()).unwrap();
        for joint in game.joint_actions() {
            prop_assert_eq!(game.rewards(&joint).unwrap(), back.rewards(&joint).unwrap());
        }
    }

    #[test]
    fn tcas_games_are_symmetric_common_interest(n in 2usize..=5, a in 0.01f64..100.0) {
        let game = make_tcas_game(n, a).unwrap();
        prop_assert!(game.is_symmetric());
        prop_assert!(game.is_common_interest());
        // Swap the players by hand as well.
        for joint in game.joint_actions() {
            let swapped = vec![joint[1], joint[0]];
            prop_assert_eq!(game.reward(0, &joint).unwrap(), game.reward(1, &swapped).unwrap());
        }
        let equilibria = enumerate_pure_nash(&game).unwrap();
        prop_assert_eq!(equilibria.len(), n * (n - 1));
        prop_assert!(equilibria.iter().all(|j| j[0] != j[1]));
    }
}

#[test]
fn canonical_games_have_known_equilibria() {
    assert_eq!(enumerate_pure_nash(&canonical_game("tcas2").unwrap()).unwrap().len(), 2);
    assert!(enumerate_pure_nash(&canonical_game("matching_pennies").unwrap()).unwrap().is_empty());
    assert!(enumerate_pure_nash(&canonical_game("shapley").unwrap()).unwrap().is_empty());
    assert_eq!(enumerate_pure_nash(&canonical_game("tcas3").unwrap()).unwrap().len(), 6);
}

#[test]
fn asymmetric_game_detected() {
    let row = vec![vec![1.0, 0.0], vec![0.0, 0.0]];
    let col = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
    let game = NormalFormGame::from_bimatrix([labels(2), labels(2)], &row, &col).unwrap();
    assert!(!game.is_symmetric());
}
