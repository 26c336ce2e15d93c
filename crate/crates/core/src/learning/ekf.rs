//! Extended-Kalman-filter fictitious play.
//!
//! Each agent tracks an opponent's unconstrained propensities with a random
//! walk state model, `x_t = x_{t-1} + ξ`, and observes the opponent's action
//! indicator through the Boltzmann map, `1[a_t] = h(x_t) + ζ`. The measurement
//! update here is the textbook EKF; [`super::closed_form`] holds the printed
//! two-action algebra for comparison.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::boltzmann::{jacobian_from_strategy, softmax};
use super::{LearnError, Observation};
use crate::game::{best_response, ActionId, MixedStrategy, NormalFormGame, TieBreaker};

/// Symmetry and PSD tolerance for covariance matrices.
pub const COV_TOLERANCE: f64 = 1e-9;

/// Added to the innovation covariance when it cannot be factorized.
pub const INNOVATION_REGULARIZATION: f64 = 1e-9;

/// Mean and covariance of an opponent's propensities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BeliefSnapshot", into = "BeliefSnapshot")]
pub struct PropensityBelief {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Serialized form of a [`PropensityBelief`]: `{mean: [...], cov: [[...]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSnapshot {
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

impl PropensityBelief {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, LearnError> {
        let n = mean.len();
        if n == 0 || cov.nrows() != n || cov.ncols() != n {
            return Err(LearnError::DimensionMismatch(format!(
                "mean of length {n} with a {}x{} covariance",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(LearnError::NonFinite("belief"));
        }
        // Tolerances scale with the largest entry once it exceeds 1.
        let scale = cov.amax().max(1.0);
        let asym = asymmetry(&cov);
        if asym > COV_TOLERANCE * scale {
            return Err(LearnError::InvalidBelief(format!("covariance asymmetric by {asym:e}")));
        }
        let min_eig = min_eigenvalue(&cov);
        if min_eig < -COV_TOLERANCE * scale {
            return Err(LearnError::InvalidBelief(format!(
                "covariance has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { mean, cov })
    }

    /// Mean `mean` with covariance `variance · I`.
    pub fn isotropic(mean: Vec<f64>, variance: f64) -> Result<Self, LearnError> {
        let n = mean.len();
        Self::new(DVector::from_vec(mean), DMatrix::identity(n, n) * variance)
    }

    pub fn from_slices(mean: &[f64], cov_rows: &[&[f64]]) -> Result<Self, LearnError> {
        let n = mean.len();
        if cov_rows.len() != n || cov_rows.iter().any(|r| r.len() != n) {
            return Err(LearnError::DimensionMismatch("covariance rows".into()));
        }
        let cov = DMatrix::from_fn(n, n, |i, j| cov_rows[i][j]);
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn num_actions(&self) -> usize {
        self.mean.len()
    }

    /// Opponent strategy implied by the mean propensities.
    pub fn strategy(&self, tau: f64) -> Result<MixedStrategy, LearnError> {
        super::boltzmann(self.mean.as_slice(), tau)
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot::from(self.clone())
    }
}

impl From<PropensityBelief> for BeliefSnapshot {
    fn from(b: PropensityBelief) -> Self {
        let n = b.mean.len();
        BeliefSnapshot {
            mean: b.mean.iter().copied().collect(),
            cov: (0..n).map(|i| (0..n).map(|j| b.cov[(i, j)]).collect()).collect(),
        }
    }
}

impl TryFrom<BeliefSnapshot> for PropensityBelief {
    type Error = LearnError;

    fn try_from(s: BeliefSnapshot) -> Result<Self, Self::Error> {
        let rows: Vec<&[f64]> = s.cov.iter().map(Vec::as_slice).collect();
        Self::from_slices(&s.mean, &rows)
    }
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).abs().max()
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Observation-noise covariance used in the measurement update.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObsNoiseSchedule {
    /// `R = Z` at every step.
    #[serde(rename = "constant_z", alias = "constant_Z")]
    ConstantZ,
    /// `R = (1/t) I`.
    #[default]
    #[serde(rename = "decaying_1_over_t")]
    DecayingOneOverT,
}

/// Which Jacobian of the Boltzmann map the measurement update linearizes with.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianForm {
    /// `σ_k (δ_km − σ_m) / τ`.
    #[default]
    Exact,
    /// `σ_k (δ_km − σ_m)`, without the `1/τ` factor.
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EkfParams {
    pub tau: f64,
    /// Diagonal of the process-noise covariance Ξ.
    pub xi_diag: Vec<f64>,
    /// Diagonal of the observation-noise covariance Z.
    pub z_diag: Vec<f64>,
    pub d_base: f64,
    pub d_scale: f64,
    /// Variance of the scalar `n` in `d = d_base + d_scale·|n|`.
    pub noise_var: f64,
    pub obs_noise_schedule: ObsNoiseSchedule,
    pub jacobian: JacobianForm,
}

impl Default for EkfParams {
    fn default() -> Self {
        Self {
            tau: 2.0,
            xi_diag: vec![0.05, 0.05],
            z_diag: vec![0.3, 0.3],
            d_base: 0.1,
            d_scale: 0.0001,
            noise_var: 0.0001,
            obs_noise_schedule: ObsNoiseSchedule::DecayingOneOverT,
            jacobian: JacobianForm::Exact,
        }
    }
}

impl EkfParams {
    /// Checks the parameters against an opponent with `num_actions` actions.
    pub fn validate(&self, num_actions: usize) -> Result<(), LearnError> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(LearnError::InvalidTemperature(self.tau));
        }
        for (name, diag) in [("xi_diag", &self.xi_diag), ("z_diag", &self.z_diag)] {
            if diag.len() != num_actions {
                return Err(LearnError::InvalidParams(format!(
                    "{name} has {} entries for {num_actions} actions",
                    diag.len()
                )));
            }
            if diag.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(LearnError::InvalidParams(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(LearnError::InvalidParams("noise_var must be finite and >= 0".into()));
        }
        if !(self.d_base.is_finite() && self.d_scale.is_finite()) {
            return Err(LearnError::InvalidParams("d_base and d_scale must be finite".into()));
        }
        if self.d_base < 0.0 || self.d_scale < 0.0 {
            return Err(LearnError::InvalidParams("d_base and d_scale must be >= 0".into()));
        }
        Ok(())
    }

    /// `d = d_base + d_scale·|n|`.
    pub fn d_term(&self, n: f64) -> f64 {
        self.d_base + self.d_scale * n.abs()
    }

    /// Observation-noise covariance at update `t` (t ≥ 1).
    pub fn observation_noise(&self, t: u64) -> Result<DMatrix<f64>, LearnError> {
        if t == 0 {
            return Err(LearnError::InvalidTimeIndex);
        }
        let n = self.z_diag.len();
        Ok(match self.obs_noise_schedule {
            ObsNoiseSchedule::ConstantZ => DMatrix::from_diagonal(&DVector::from_column_slice(&self.z_diag)),
            ObsNoiseSchedule::DecayingOneOverT => DMatrix::identity(n, n) / t as f64,
        })
    }

    fn jacobian_scale(&self) -> f64 {
        match self.jacobian {
            JacobianForm::Exact => self.tau,
            JacobianForm::Printed => 1.0,
        }
    }
}

/// Prediction step with the scalar noise `n` drawn from `N(0, noise_var)`.
pub fn ekf_predict<R: Rng + ?Sized>(
    belief: &PropensityBelief,
    params: &EkfParams,
    rng: &mut R,
) -> Result<PropensityBelief, LearnError> {
    let z: f64 = rng.sample(StandardNormal);
    ekf_predict_with_noise(belief, params, params.noise_var.sqrt() * z)
}

/// Prediction step with a caller-supplied `n`: the mean is unchanged and
/// `Ξ_kk + d` is added to each diagonal entry of the covariance.
pub fn ekf_predict_with_noise(
    belief: &PropensityBelief,
    params: &EkfParams,
    n: f64,
) -> Result<PropensityBelief, LearnError> {
    params.validate(belief.num_actions())?;
    let d = params.d_term(n);
    let mut cov = belief.cov.clone();
    for (k, xi) in params.xi_diag.iter().enumerate() {
        cov[(k, k)] += xi + d;
    }
    Ok(PropensityBelief { mean: belief.mean.clone(), cov })
}

/// Observed action indicator minus the predicted strategy.
pub fn ekf_innovation(
    predicted: &MixedStrategy,
    obs: &Observation,
) -> Result<DVector<f64>, LearnError> {
    let k = obs.action.index();
    if k >= predicted.len() {
        return Err(LearnError::InvalidAction { action: k, count: predicted.len() });
    }
    Ok(DVector::from_fn(predicted.len(), |m, _| {
        let indicator = if m == k { 1.0 } else { 0.0 };
        indicator - predicted.probs()[m]
    }))
}

/// Numerical facts about one measurement update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    pub innovation: Vec<f64>,
    /// Largest `|P − Pᵀ|` entry before re-symmetrization.
    pub asymmetry_before: f64,
    /// Smallest eigenvalue of the symmetrized covariance before flooring.
    pub min_eigenvalue_before_floor: f64,
    /// The innovation covariance needed the `1e-9·I` regularizer.
    pub regularized: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EkfUpdate {
    pub belief: PropensityBelief,
    pub diagnostics: UpdateDiagnostics,
}

/// Textbook EKF measurement update with `h` = Boltzmann map.
///
/// `S = H P⁻ Hᵀ + R`, `K = P⁻ Hᵀ S⁻¹`, `x̂ = x̂⁻ + K v`, `P = (I − K H) P⁻`,
/// followed by re-symmetrization and an eigenvalue floor at zero.
pub fn ekf_update(
    predicted: &PropensityBelief,
    obs: &Observation,
    params: &EkfParams,
) -> Result<EkfUpdate, LearnError> {
    let n = predicted.num_actions();
    params.validate(n)?;
    let sigma = softmax(predicted.mean.as_slice(), params.tau);
    let innovation = ekf_innovation(&MixedStrategy::from_normalized(sigma.clone()), obs)?;
    let h = jacobian_from_strategy(&sigma, params.jacobian_scale());
    let r = params.observation_noise(obs.time_index)?;
    let p = &predicted.cov;

    let mut s = &h * p * h.transpose() + r;
    s = (&s + s.transpose()) * 0.5;
    // A pivot at rounding level means S is numerically singular even when the
    // factorization itself goes through.
    let pivot_floor = f64::EPSILON * s.trace().abs().max(f64::MIN_POSITIVE);
    let chol = s.clone().cholesky().filter(|c| c.l_dirty().diagonal().iter().all(|d| d * d > pivot_floor));
    let (s_inv, regularized) = match chol {
        Some(chol) => (chol.inverse(), false),
        None => {
            let reg = s + DMatrix::identity(n, n) * INNOVATION_REGULARIZATION;
            let inv = reg.try_inverse().ok_or(LearnError::SingularInnovation)?;
            (inv, true)
        }
    };
    let gain = p * h.transpose() * s_inv;
    let mean = &predicted.mean + &gain * &innovation;
    let raw = (DMatrix::identity(n, n) - &gain * &h) * p;

    let asymmetry_before = asymmetry(&raw);
    let mut cov = (&raw + raw.transpose()) * 0.5;
    let eig = cov.clone().symmetric_eigen();
    let min_eigenvalue_before_floor = eig.eigenvalues.min();
    if min_eigenvalue_before_floor < 0.0 {
        let floored = eig.eigenvalues.map(|v| v.max(0.0));
        cov = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
        cov = (&cov + cov.transpose()) * 0.5;
    }
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(LearnError::NonFinite("updated belief"));
    }
    Ok(EkfUpdate {
        belief: PropensityBelief { mean, cov },
        diagnostics: UpdateDiagnostics {
            innovation: innovation.iter().copied().collect(),
            asymmetry_before,
            min_eigenvalue_before_floor,
            regularized,
        },
    })
}

/// Best response of `player` to the strategies implied by its beliefs about
/// each opponent (in player order, skipping `player`).
pub fn ekf_fp_decide(
    beliefs: &[PropensityBelief],
    game: &NormalFormGame,
    player: usize,
    params: &EkfParams,
    tie: &mut TieBreaker<'_>,
) -> Result<ActionId, LearnError> {
    let strategies = beliefs
        .iter()
        .map(|b| b.strategy(params.tau))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(best_response(game, player, &strategies, tie)?)
}
