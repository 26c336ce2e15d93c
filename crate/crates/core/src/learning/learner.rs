//! Learner configuration and per-agent learner state.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    ekf_predict, ekf_update, ekf_update_closed_form_2x2, fp_strategy, fp_update, EkfParams,
    FictitiousPlayBelief, JacobianForm, LearnError, ObsNoiseSchedule, Observation, PropensityBelief,
};
use crate::game::{best_response, ActionId, MixedStrategy, NormalFormGame, TieBreak, TieBreaker};

/// Learner configuration, tagged by `type`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LearnerSpec {
    Fp(FpSpec),
    EkfFp(EkfFpSpec),
    Fixed(FixedSpec),
}

impl Default for LearnerSpec {
    fn default() -> Self {
        LearnerSpec::EkfFp(EkfFpSpec::default())
    }
}

/// Initial fictitious-play weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitWeights {
    Explicit(Vec<f64>),
    Named(NamedWeights),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedWeights {
    /// Uniform on (0, 1] per action.
    Random,
}

impl Default for InitWeights {
    fn default() -> Self {
        InitWeights::Named(NamedWeights::Random)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FpSpec {
    pub tie_break: TieBreak,
    pub seed: Option<u64>,
    pub kappa0: InitWeights,
}

impl Default for FpSpec {
    fn default() -> Self {
        Self { tie_break: TieBreak::Stay, seed: None, kappa0: InitWeights::default() }
    }
}

/// Initial propensity mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitMean {
    Explicit(Vec<f64>),
    Named(NamedMean),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedMean {
    /// A draw from the initial prior `N(0, init_cov · I)`.
    Prior,
    Zero,
}

impl Default for InitMean {
    fn default() -> Self {
        InitMean::Named(NamedMean::Prior)
    }
}

/// Which measurement update an EKF learner runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    #[default]
    Generic,
    ClosedForm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EkfFpSpec {
    pub tau: f64,
    pub xi_diag: Vec<f64>,
    pub z_diag: Vec<f64>,
    pub d_base: f64,
    pub d_scale: f64,
    pub noise_var: f64,
    pub obs_noise_schedule: ObsNoiseSchedule,
    pub jacobian: JacobianForm,
    pub update: UpdateMode,
    pub tie_break: TieBreak,
    pub seed: Option<u64>,
    pub init_mean: InitMean,
    /// Diagonal of the initial covariance `P_0`.
    pub init_cov: f64,
}

impl Default for EkfFpSpec {
    fn default() -> Self {
        let p = EkfParams::default();
        Self {
            tau: p.tau,
            xi_diag: p.xi_diag,
            z_diag: p.z_diag,
            d_base: p.d_base,
            d_scale: p.d_scale,
            noise_var: p.noise_var,
            obs_noise_schedule: p.obs_noise_schedule,
            jacobian: p.jacobian,
            update: UpdateMode::Generic,
            tie_break: TieBreak::Stay,
            seed: None,
            init_mean: InitMean::default(),
            init_cov: 1.0,
        }
    }
}

impl EkfFpSpec {
    pub fn params(&self) -> EkfParams {
        EkfParams {
            tau: self.tau,
            xi_diag: self.xi_diag.clone(),
            z_diag: self.z_diag.clone(),
            d_base: self.d_base,
            d_scale: self.d_scale,
            noise_var: self.noise_var,
            obs_noise_schedule: self.obs_noise_schedule,
            jacobian: self.jacobian,
        }
    }
}

/// Always plays `action`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedSpec {
    pub action: ActionId,
}

impl LearnerSpec {
    pub fn fixed(action: usize) -> Self {
        LearnerSpec::Fixed(FixedSpec { action: ActionId(action) })
    }

    /// Checks the spec against an opponent with `opponent_actions` actions and
    /// an own action set of `own_actions`.
    pub fn validate(&self, own_actions: usize, opponent_actions: usize) -> Result<(), LearnError> {
        match self {
            LearnerSpec::Fp(spec) => {
                if let InitWeights::Explicit(k) = &spec.kappa0 {
                    if k.len() != opponent_actions {
                        return Err(LearnError::InvalidParams(format!(
                            "kappa0 has {} entries for {opponent_actions} actions",
                            k.len()
                        )));
                    }
                    FictitiousPlayBelief::new(k.clone())?;
                }
                Ok(())
            }
            LearnerSpec::EkfFp(spec) => {
                spec.params().validate(opponent_actions)?;
                if !(spec.init_cov.is_finite() && spec.init_cov >= 0.0) {
                    return Err(LearnError::InvalidParams("init_cov must be finite and >= 0".into()));
                }
                if let InitMean::Explicit(m) = &spec.init_mean {
                    if m.len() != opponent_actions || m.iter().any(|v| !v.is_finite()) {
                        return Err(LearnError::InvalidParams(format!(
                            "init_mean must hold {opponent_actions} finite values"
                        )));
                    }
                }
                if spec.update == UpdateMode::ClosedForm && opponent_actions != 2 {
                    return Err(LearnError::InvalidParams("closed_form update needs 2 actions".into()));
                }
                Ok(())
            }
            LearnerSpec::Fixed(spec) => {
                if spec.action.index() >= own_actions {
                    return Err(LearnError::InvalidAction {
                        action: spec.action.index(),
                        count: own_actions,
                    });
                }
                Ok(())
            }
        }
    }
}

/// What a learner believes about its opponent, for traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BeliefView {
    Weights { kappa: Vec<f64> },
    Propensity { mean: Vec<f64>, cov: Vec<Vec<f64>> },
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: ActionId,
    /// Opponent strategy the decision responded to; `None` for fixed learners.
    pub opponent_strategy: Option<MixedStrategy>,
}

#[derive(Debug, Clone)]
enum State {
    Fp(FictitiousPlayBelief),
    Ekf { belief: PropensityBelief, params: EkfParams, mode: UpdateMode, predicted: bool },
    Fixed(ActionId),
}

/// One agent's opponent model in a two-player game.
#[derive(Debug, Clone)]
pub struct Learner {
    state: State,
    tie_break: TieBreak,
    rng: ChaCha8Rng,
    updates: u64,
    regularized_updates: u64,
}

impl Learner {
    /// Builds a learner whose random stream is `(spec.seed or run_seed, stream)`.
    pub fn new(
        spec: &LearnerSpec,
        own_actions: usize,
        opponent_actions: usize,
        run_seed: u64,
        stream: u64,
    ) -> Result<Self, LearnError> {
        spec.validate(own_actions, opponent_actions)?;
        let seed = match spec {
            LearnerSpec::Fp(s) => s.seed,
            LearnerSpec::EkfFp(s) => s.seed,
            LearnerSpec::Fixed(_) => None,
        }
        .unwrap_or(run_seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);

        let (state, tie_break) = match spec {
            LearnerSpec::Fp(s) => {
                let kappa = match &s.kappa0 {
                    InitWeights::Explicit(k) => k.clone(),
                    InitWeights::Named(NamedWeights::Random) => {
                        (0..opponent_actions).map(|_| 1.0 - rng.random::<f64>()).collect()
                    }
                };
                (State::Fp(FictitiousPlayBelief::new(kappa)?), s.tie_break)
            }
            LearnerSpec::EkfFp(s) => {
                let mean = match &s.init_mean {
                    InitMean::Explicit(m) => m.clone(),
                    InitMean::Named(NamedMean::Zero) => vec![0.0; opponent_actions],
                    InitMean::Named(NamedMean::Prior) => {
                        let sd = s.init_cov.sqrt();
                        (0..opponent_actions)
                            .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
                            .collect()
                    }
                };
                let belief = PropensityBelief::isotropic(mean, s.init_cov)?;
                let state =
                    State::Ekf { belief, params: s.params(), mode: s.update, predicted: false };
                (state, s.tie_break)
            }
            LearnerSpec::Fixed(s) => (State::Fixed(s.action), TieBreak::First),
        };
        Ok(Self { state, tie_break, rng, updates: 0, regularized_updates: 0 })
    }

    /// Number of observations absorbed so far.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    /// Updates whose innovation covariance needed regularizing.
    pub fn regularized_updates(&self) -> u64 {
        self.regularized_updates
    }

    pub fn propensity_belief(&self) -> Option<&PropensityBelief> {
        match &self.state {
            State::Ekf { belief, .. } => Some(belief),
            _ => None,
        }
    }

    pub fn belief_view(&self) -> BeliefView {
        match &self.state {
            State::Fp(b) => BeliefView::Weights { kappa: b.weights().to_vec() },
            State::Ekf { belief, .. } => {
                let snap = belief.snapshot();
                BeliefView::Propensity { mean: snap.mean, cov: snap.cov }
            }
            State::Fixed(_) => BeliefView::Fixed,
        }
    }

    fn ensure_predicted(&mut self) -> Result<(), LearnError> {
        if let State::Ekf { belief, params, predicted, .. } = &mut self.state {
            if !*predicted {
                *belief = ekf_predict(belief, params, &mut self.rng)?;
                *predicted = true;
            }
        }
        Ok(())
    }

    /// Chooses an action for `player` in a two-player `game`. For EKF learners
    /// this runs the prediction step first.
    pub fn decide(
        &mut self,
        game: &NormalFormGame,
        player: usize,
        current: Option<ActionId>,
    ) -> Result<Decision, LearnError> {
        self.ensure_predicted()?;
        let opponent = match &self.state {
            State::Fixed(a) => return Ok(Decision { action: *a, opponent_strategy: None }),
            State::Fp(b) => fp_strategy(b)?,
            State::Ekf { belief, params, .. } => belief.strategy(params.tau)?,
        };
        let mut tie = TieBreaker::new(self.tie_break, current, &mut self.rng);
        let action = best_response(game, player, std::slice::from_ref(&opponent), &mut tie)?;
        Ok(Decision { action, opponent_strategy: Some(opponent) })
    }

    /// Absorbs the opponent's action for the current iteration.
    pub fn observe(&mut self, action: ActionId) -> Result<(), LearnError> {
        self.ensure_predicted()?;
        let obs = Observation { action, time_index: self.updates + 1 };
        match &mut self.state {
            State::Fixed(_) => {}
            State::Fp(b) => *b = fp_update(b, &obs)?,
            State::Ekf { belief, params, mode, predicted } => {
                *belief = match mode {
                    UpdateMode::Generic => {
                        let u = ekf_update(belief, &obs, params)?;
                        if u.diagnostics.regularized {
                            self.regularized_updates += 1;
                        }
                        u.belief
                    }
                    UpdateMode::ClosedForm => ekf_update_closed_form_2x2(belief, &obs, params)?.belief,
                };
                *predicted = false;
            }
        }
        self.updates += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::make_tcas_game;

    #[test]
    fn spec_json_forms() {
        let fp: LearnerSpec =
            serde_json::from_str(r#"{"type":"fp","tie_break":"first","kappa0":[1,1]}"#).unwrap();
        assert_eq!(
            fp,
            LearnerSpec::Fp(FpSpec {
                tie_break: TieBreak::First,
                seed: None,
                kappa0: InitWeights::Explicit(vec![1.0, 1.0])
            })
        );
        let ekf: LearnerSpec = serde_json::from_str(
            r#"{"type":"ekf_fp","tau":2,"xi_diag":[0.05,0.05],"z_diag":[0.3,0.3],"d_base":0.1,
                "d_scale":0.0001,"noise_var":0.0001,"obs_noise_schedule":"decaying_1_over_t",
                "tie_break":"stay","seed":9}"#,
        )
        .unwrap();
        assert_eq!(ekf, LearnerSpec::EkfFp(EkfFpSpec { seed: Some(9), ..Default::default() }));
        let fixed: LearnerSpec = serde_json::from_str(r#"{"type":"fixed","action":1}"#).unwrap();
        assert_eq!(fixed, LearnerSpec::fixed(1));
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<LearnerSpec>(r#"{"type":"ekf_fp","temperature":2}"#).is_err());
        assert!(serde_json::from_str::<LearnerSpec>(r#"{"type":"sarsa"}"#).is_err());
    }

    #[test]
    fn same_seed_same_stream_is_reproducible() {
        let spec = LearnerSpec::default();
        let a = Learner::new(&spec, 2, 2, 5, 1).unwrap();
        let b = Learner::new(&spec, 2, 2, 5, 1).unwrap();
        let c = Learner::new(&spec, 2, 2, 5, 2).unwrap();
        assert_eq!(a.belief_view(), b.belief_view());
        assert_ne!(a.belief_view(), c.belief_view());
    }

    #[test]
    fn zero_mean_learner_starts_uniform() {
        let spec = LearnerSpec::EkfFp(EkfFpSpec {
            init_mean: InitMean::Named(NamedMean::Zero),
            ..Default::default()
        });
        let g = make_tcas_game(2, 1.0).unwrap();
        let mut l = Learner::new(&spec, 2, 2, 1, 1).unwrap();
        let d = l.decide(&g, 0, Some(ActionId(1))).unwrap();
        assert_eq!(d.action, ActionId(1));
        assert_eq!(d.opponent_strategy.unwrap().probs(), &[0.5, 0.5]);
        l.observe(ActionId(1)).unwrap();
        // Opponent seen on Low, so move to High.
        assert_eq!(l.decide(&g, 0, Some(ActionId(1))).unwrap().action, ActionId(0));
        assert_eq!(l.updates(), 1);
    }

    #[test]
    fn fp_learner_counts_observations() {
        let spec = LearnerSpec::Fp(FpSpec {
            kappa0: InitWeights::Explicit(vec![1.0, 1.0]),
            ..Default::default()
        });
        let mut l = Learner::new(&spec, 2, 2, 0, 1).unwrap();
        l.observe(ActionId(0)).unwrap();
        l.observe(ActionId(0)).unwrap();
        assert_eq!(l.belief_view(), BeliefView::Weights { kappa: vec![3.0, 1.0] });
    }

    #[test]
    fn random_kappa_in_unit_interval() {
        let l = Learner::new(&LearnerSpec::Fp(FpSpec::default()), 2, 3, 11, 1).unwrap();
        let BeliefView::Weights { kappa } = l.belief_view() else { panic!() };
        assert_eq!(kappa.len(), 3);
        assert!(kappa.iter().all(|k| *k > 0.0 && *k <= 1.0));
    }

    #[test]
    fn fixed_learner_validated() {
        assert!(Learner::new(&LearnerSpec::fixed(2), 2, 2, 0, 1).is_err());
        let g = make_tcas_game(2, 1.0).unwrap();
        let mut l = Learner::new(&LearnerSpec::fixed(0), 2, 2, 0, 1).unwrap();
        assert_eq!(l.decide(&g, 1, None).unwrap().action, ActionId(0));
    }
}
