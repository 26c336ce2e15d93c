//! Normal-form games: payoff tables, mixed strategies, best response and
//! pure-strategy Nash enumeration.
//!
//! The dense payoff layout is row-major over joint actions (player 0's action
//! varies slowest) with one reward per player at each joint action. Games can
//! also be backed by a callback for n-player experiments, but only dense games
//! serialize.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Two expected rewards closer than this are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Allowed deviation of a probability vector's sum from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Upper bound on the joint-action count `enumerate_pure_nash` will visit.
pub const MAX_ENUMERATION: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("a TCAS game needs at least 2 altitudes, got {0}")]
    TooFewAltitudes(usize),
    #[error("reward constant must be positive and finite, got {0}")]
    InvalidRewardConstant(f64),
    #[error("player {player} out of range for a {num_players}-player game")]
    InvalidPlayer { player: usize, num_players: usize },
    #[error("action {action} out of range for a set of {count} actions")]
    InvalidAction { action: usize, count: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not a probability vector: {0}")]
    InvalidStrategy(String),
    #[error("joint action space has {0} entries, above the enumeration limit of {MAX_ENUMERATION}")]
    EnumerationLimit(usize),
    #[error("unknown canonical game `{0}`")]
    UnknownGame(String),
    #[error("invalid game document: {0}")]
    InvalidDocument(String),
}

/// Index of an action within one player's action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Probability vector over one player's action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy("empty vector".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(GameError::InvalidStrategy(format!("component {p} is not a probability")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(GameError::InvalidStrategy(format!("components sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Point mass on `action`.
    pub fn pure(num_actions: usize, action: ActionId) -> Result<Self, GameError> {
        if action.0 >= num_actions {
            return Err(GameError::InvalidAction { action: action.0, count: num_actions });
        }
        let mut probs = vec![0.0; num_actions];
        probs[action.0] = 1.0;
        Ok(Self(probs))
    }

    pub fn uniform(num_actions: usize) -> Self {
        assert!(num_actions > 0, "uniform strategy over an empty action set");
        Self(vec![1.0 / num_actions as f64; num_actions])
    }

    /// Wraps a vector the caller has already normalized.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!(Self::new(probs.clone()).is_ok(), "not normalized: {probs:?}");
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prob(&self, action: ActionId) -> f64 {
        self.0[action.0]
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = GameError;

    fn try_from(probs: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(probs)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(s: MixedStrategy) -> Self {
        s.0
    }
}

type PayoffFn = dyn Fn(&[ActionId]) -> Vec<f64> + Send + Sync;

#[derive(Clone)]
enum Payoff {
    /// `num_joint_actions * num_players` rewards, row-major by joint action.
    Dense(Vec<f64>),
    Callback(Arc<PayoffFn>),
}

/// A finite game in strategic form.
#[derive(Clone)]
pub struct NormalFormGame {
    name: Option<String>,
    action_labels: Vec<Vec<String>>,
    payoff: Payoff,
}

impl fmt::Debug for NormalFormGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalFormGame")
            .field("name", &self.name)
            .field("action_labels", &self.action_labels)
            .field("dense", &matches!(self.payoff, Payoff::Dense(_)))
            .finish()
    }
}

impl NormalFormGame {
    /// Builds a two-player game from row-player and column-player matrices.
    pub fn from_bimatrix(
        labels: [Vec<String>; 2],
        row: &[Vec<f64>],
        col: &[Vec<f64>],
    ) -> Result<Self, GameError> {
        let (n0, n1) = (labels[0].len(), labels[1].len());
        let shape_ok = |m: &[Vec<f64>]| m.len() == n0 && m.iter().all(|r| r.len() == n1);
        if !shape_ok(row) || !shape_ok(col) {
            return Err(GameError::DimensionMismatch(format!("payoff matrices must be {n0}x{n1}")));
        }
        let mut dense = Vec::with_capacity(n0 * n1 * 2);
        for a in 0..n0 {
            for b in 0..n1 {
                dense.push(row[a][b]);
                dense.push(col[a][b]);
            }
        }
        Self::from_dense(None, labels.to_vec(), dense)
    }

    pub fn from_dense(
        name: Option<String>,
        action_labels: Vec<Vec<String>>,
        payoffs: Vec<f64>,
    ) -> Result<Self, GameError> {
        if action_labels.len() < 2 {
            return Err(GameError::DimensionMismatch("a game needs at least 2 players".into()));
        }
        if action_labels.iter().any(Vec::is_empty) {
            return Err(GameError::DimensionMismatch("every player needs an action".into()));
        }
        let joint: usize = action_labels.iter().map(Vec::len).product();
        let expected = joint * action_labels.len();
        if payoffs.len() != expected {
            return Err(GameError::DimensionMismatch(format!(
                "expected {expected} payoff entries, got {}",
                payoffs.len()
            )));
        }
        if payoffs.iter().any(|r| !r.is_finite()) {
            return Err(GameError::InvalidDocument("payoffs must be finite".into()));
        }
        Ok(Self { name, action_labels, payoff: Payoff::Dense(payoffs) })
    }

    /// Game whose rewards come from `payoff`, which must return one reward
    /// per player for every joint action.
    pub fn from_fn<F>(action_counts: &[usize], payoff: F) -> Result<Self, GameError>
    where
        F: Fn(&[ActionId]) -> Vec<f64> + Send + Sync + 'static,
    {
        if action_counts.len() < 2 || action_counts.contains(&0) {
            return Err(GameError::DimensionMismatch("need >= 2 players with >= 1 action".into()));
        }
        let action_labels =
            action_counts.iter().map(|&n| (0..n).map(|k| format!("a{k}")).collect()).collect();
        Ok(Self { name: None, action_labels, payoff: Payoff::Callback(Arc::new(payoff)) })
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn num_players(&self) -> usize {
        self.action_labels.len()
    }

    pub fn action_count(&self, player: usize) -> usize {
        self.action_labels[player].len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.action_labels.iter().map(Vec::len).collect()
    }

    pub fn action_labels(&self, player: usize) -> &[String] {
        &self.action_labels[player]
    }

    pub fn num_joint_actions(&self) -> usize {
        self.action_labels.iter().map(Vec::len).product()
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.payoff, Payoff::Dense(_))
    }

    fn check_player(&self, player: usize) -> Result<(), GameError> {
        if player >= self.num_players() {
            return Err(GameError::InvalidPlayer { player, num_players: self.num_players() });
        }
        Ok(())
    }

    fn check_joint(&self, joint: &[ActionId]) -> Result<(), GameError> {
        if joint.len() != self.num_players() {
            return Err(GameError::DimensionMismatch(format!(
                "joint action has {} entries for {} players",
                joint.len(),
                self.num_players()
            )));
        }
        for (p, a) in joint.iter().enumerate() {
            if a.0 >= self.action_count(p) {
                return Err(GameError::InvalidAction { action: a.0, count: self.action_count(p) });
            }
        }
        Ok(())
    }

    fn joint_index(&self, joint: &[ActionId]) -> usize {
        joint
            .iter()
            .zip(&self.action_labels)
            .fold(0, |idx, (a, labels)| idx * labels.len() + a.0)
    }

    /// Rewards of every player at a joint action.
    pub fn rewards(&self, joint: &[ActionId]) -> Result<Vec<f64>, GameError> {
        self.check_joint(joint)?;
        Ok(self.rewards_unchecked(joint))
    }

    fn rewards_unchecked(&self, joint: &[ActionId]) -> Vec<f64> {
        match &self.payoff {
            Payoff::Dense(table) => {
                let n = self.num_players();
                let base = self.joint_index(joint) * n;
                table[base..base + n].to_vec()
            }
            Payoff::Callback(f) => f(joint),
        }
    }

    pub fn reward(&self, player: usize, joint: &[ActionId]) -> Result<f64, GameError> {
        self.check_player(player)?;
        self.check_joint(joint)?;
        Ok(self.reward_unchecked(player, joint))
    }

    fn reward_unchecked(&self, player: usize, joint: &[ActionId]) -> f64 {
        match &self.payoff {
            Payoff::Dense(table) => table[self.joint_index(joint) * self.num_players() + player],
            Payoff::Callback(f) => f(joint)[player],
        }
    }

    /// All joint actions in row-major order.
    pub fn joint_actions(&self) -> JointActions {
        JointActions::new(self.action_counts())
    }

    /// True when every player receives the same reward at every joint action.
    pub fn is_common_interest(&self) -> bool {
        self.joint_actions().all(|joint| {
            let r = self.rewards_unchecked(&joint);
            r.iter().all(|x| *x == r[0])
        })
    }

    /// Two-player symmetry: `r_0(a, b) == r_1(b, a)` for all `a, b`.
    pub fn is_symmetric(&self) -> bool {
        if self.num_players() != 2 || self.action_count(0) != self.action_count(1) {
            return false;
        }
        self.joint_actions().all(|joint| {
            let swapped = [joint[1], joint[0]];
            self.reward_unchecked(0, &joint) == self.reward_unchecked(1, &swapped)
        })
    }

    pub fn to_document(&self) -> Result<GameDocument, GameError> {
        let Payoff::Dense(table) = &self.payoff else {
            return Err(GameError::InvalidDocument("callback games cannot be serialized".into()));
        };
        if self.num_players() != 2 {
            return Err(GameError::InvalidDocument("only two-player games serialize".into()));
        }
        let (n0, n1) = (self.action_count(0), self.action_count(1));
        let payoffs = (0..n0)
            .map(|a| (0..n1).map(|b| table[(a * n1 + b) * 2..(a * n1 + b) * 2 + 2].to_vec()).collect())
            .collect();
        Ok(GameDocument {
            name: self.name.clone(),
            players: 2,
            action_labels: self.action_labels.clone(),
            payoffs,
        })
    }

    pub fn from_document(doc: GameDocument) -> Result<Self, GameError> {
        if doc.players != 2 || doc.action_labels.len() != 2 {
            return Err(GameError::InvalidDocument("expected a two-player game".into()));
        }
        let (n0, n1) = (doc.action_labels[0].len(), doc.action_labels[1].len());
        if doc.payoffs.len() != n0 {
            return Err(GameError::InvalidDocument(format!("payoffs must have {n0} rows")));
        }
        let mut dense = Vec::with_capacity(n0 * n1 * 2);
        for (a, row) in doc.payoffs.iter().enumerate() {
            if row.len() != n1 {
                return Err(GameError::InvalidDocument(format!("payoff row {a} must have {n1} cells")));
            }
            for (b, cell) in row.iter().enumerate() {
                if cell.len() != 2 {
                    return Err(GameError::InvalidDocument(format!(
                        "payoff cell ({a},{b}) must hold 2 rewards"
                    )));
                }
                dense.extend_from_slice(cell);
            }
        }
        Self::from_dense(doc.name, doc.action_labels, dense)
    }
}

/// JSON form of a dense two-player game. `payoffs[a][b]` holds the rewards of
/// both players when player 0 plays `a` and player 1 plays `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub players: usize,
    pub action_labels: Vec<Vec<String>>,
    pub payoffs: Vec<Vec<Vec<f64>>>,
}

/// Odometer over the cross product of action sets.
#[derive(Debug, Clone)]
pub struct JointActions {
    counts: Vec<usize>,
    next: Option<Vec<ActionId>>,
}

impl JointActions {
    fn new(counts: Vec<usize>) -> Self {
        let next = if counts.iter().all(|&c| c > 0) {
            Some(vec![ActionId(0); counts.len()])
        } else {
            None
        };
        Self { counts, next }
    }
}

impl Iterator for JointActions {
    type Item = Vec<ActionId>;

    fn next(&mut self) -> Option<Self::Item> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for p in (0..succ.len()).rev() {
            succ[p].0 += 1;
            if succ[p].0 < self.counts[p] {
                self.next = Some(succ);
                return Some(current);
            }
            succ[p].0 = 0;
        }
        Some(current)
    }
}

/// The shared-reward altitude game: every UAV earns `a` when all chosen
/// altitudes differ and 0 otherwise.
///
/// With two altitudes the actions are labelled `High` (0) and `Low` (1).
pub fn make_tcas_game(num_altitudes: usize, a: f64) -> Result<NormalFormGame, GameError> {
    if num_altitudes < 2 {
        return Err(GameError::TooFewAltitudes(num_altitudes));
    }
    if !(a.is_finite() && a > 0.0) {
        return Err(GameError::InvalidRewardConstant(a));
    }
    let labels: Vec<String> = if num_altitudes == 2 {
        vec!["High".into(), "Low".into()]
    } else {
        (0..num_altitudes).map(|k| format!("alt{k}")).collect()
    };
    let m: Vec<Vec<f64>> = (0..num_altitudes)
        .map(|i| (0..num_altitudes).map(|j| if i != j { a } else { 0.0 }).collect())
        .collect();
    let mut game = NormalFormGame::from_bimatrix([labels.clone(), labels], &m, &m)?;
    game.name = Some(format!("tcas{num_altitudes}"));
    Ok(game)
}

/// Canonical games by name: `tcas2`, `tcas3`, `matching_pennies`, `shapley`.
pub fn canonical_game(name: &str) -> Result<NormalFormGame, GameError> {
    let labels = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let mut game = match name {
        "tcas2" => return make_tcas_game(2, 1.0),
        "tcas3" => return make_tcas_game(3, 1.0),
        "matching_pennies" => {
            let hl = labels(&["Heads", "Tails"]);
            NormalFormGame::from_bimatrix(
                [hl.clone(), hl],
                &[vec![1.0, -1.0], vec![-1.0, 1.0]],
                &[vec![-1.0, 1.0], vec![1.0, -1.0]],
            )?
        }
        "shapley" => {
            let rps = labels(&["A", "B", "C"]);
            NormalFormGame::from_bimatrix(
                [rps.clone(), rps],
                &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
                &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
            )?
        }
        other => return Err(GameError::UnknownGame(other.to_string())),
    };
    game.name = Some(name.to_string());
    Ok(game)
}

fn check_profile(
    game: &NormalFormGame,
    player: usize,
    others: &[MixedStrategy],
) -> Result<(), GameError> {
    game.check_player(player)?;
    if others.len() + 1 != game.num_players() {
        return Err(GameError::DimensionMismatch(format!(
            "expected {} opponent strategies, got {}",
            game.num_players() - 1,
            others.len()
        )));
    }
    let opponents = (0..game.num_players()).filter(|&p| p != player);
    for (p, s) in opponents.zip(others) {
        if s.len() != game.action_count(p) {
            return Err(GameError::DimensionMismatch(format!(
                "player {p} has {} actions but the strategy has {}",
                game.action_count(p),
                s.len()
            )));
        }
    }
    Ok(())
}

/// Expected reward of each of `player`'s pure actions against `others`
/// (opponent strategies in player order, skipping `player`).
pub fn pure_action_values(
    game: &NormalFormGame,
    player: usize,
    others: &[MixedStrategy],
) -> Result<Vec<f64>, GameError> {
    check_profile(game, player, others)?;
    let mut values = vec![0.0; game.action_count(player)];
    for joint in game.joint_actions() {
        let weight: f64 = (0..game.num_players())
            .filter(|&p| p != player)
            .zip(others)
            .map(|(p, s)| s.prob(joint[p]))
            .product();
        if weight != 0.0 {
            values[joint[player].0] += weight * game.reward_unchecked(player, &joint);
        }
    }
    Ok(values)
}

/// Expected reward of `player` using `own` while opponents use `others`.
pub fn expected_reward(
    game: &NormalFormGame,
    player: usize,
    own: &MixedStrategy,
    others: &[MixedStrategy],
) -> Result<f64, GameError> {
    check_profile(game, player, others)?;
    if own.len() != game.action_count(player) {
        return Err(GameError::DimensionMismatch(format!(
            "own strategy has {} components for {} actions",
            own.len(),
            game.action_count(player)
        )));
    }
    let values = pure_action_values(game, player, others)?;
    Ok(values.iter().zip(own.probs()).map(|(v, p)| v * p).sum())
}

/// How to choose among several maximizing actions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Lowest index.
    First,
    /// Keep the current action if it is among the maximizers.
    #[default]
    Stay,
    /// Uniform over the maximizers, drawn from the caller's seeded source.
    UniformRandom,
}

/// A [`TieBreak`] policy together with the state it needs.
pub enum TieBreaker<'a> {
    First,
    Stay(Option<ActionId>),
    UniformRandom(&'a mut dyn RngCore),
}

impl<'a> TieBreaker<'a> {
    pub fn new(policy: TieBreak, current: Option<ActionId>, rng: &'a mut dyn RngCore) -> Self {
        match policy {
            TieBreak::First => TieBreaker::First,
            TieBreak::Stay => TieBreaker::Stay(current),
            TieBreak::UniformRandom => TieBreaker::UniformRandom(rng),
        }
    }

    /// `candidates` is non-empty and sorted ascending.
    pub fn select(&mut self, candidates: &[ActionId]) -> ActionId {
        match self {
            TieBreaker::First => candidates[0],
            TieBreaker::Stay(Some(current)) if candidates.contains(current) => *current,
            TieBreaker::Stay(_) => candidates[0],
            TieBreaker::UniformRandom(rng) => {
                if candidates.len() == 1 {
                    candidates[0]
                } else {
                    candidates[rng.random_range(0..candidates.len())]
                }
            }
        }
    }
}

/// Actions whose value is within [`TIE_TOLERANCE`] of the maximum.
pub fn maximizers(values: &[f64]) -> Vec<ActionId> {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| best - **v <= TIE_TOLERANCE)
        .map(|(k, _)| ActionId(k))
        .collect()
}

/// A pure action maximizing `player`'s expected reward against `others`.
pub fn best_response(
    game: &NormalFormGame,
    player: usize,
    others: &[MixedStrategy],
    tie: &mut TieBreaker<'_>,
) -> Result<ActionId, GameError> {
    let values = pure_action_values(game, player, others)?;
    Ok(tie.select(&maximizers(&values)))
}

/// Joint actions at which no player gains strictly by a unilateral pure
/// deviation.
pub fn enumerate_pure_nash(game: &NormalFormGame) -> Result<Vec<Vec<ActionId>>, GameError> {
    let total = game.num_joint_actions();
    if total > MAX_ENUMERATION {
        return Err(GameError::EnumerationLimit(total));
    }
    let mut equilibria = Vec::new();
    for joint in game.joint_actions() {
        let stable = (0..game.num_players()).all(|p| {
            let current = game.reward_unchecked(p, &joint);
            let mut deviation = joint.clone();
            (0..game.action_count(p)).all(|alt| {
                deviation[p] = ActionId(alt);
                game.reward_unchecked(p, &deviation) <= current + TIE_TOLERANCE
            })
        });
        if stable {
            equilibria.push(joint);
        }
    }
    Ok(equilibria)
}
