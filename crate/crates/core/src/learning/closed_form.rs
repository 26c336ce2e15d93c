//! The published two-action closed-form EKF update, reproduced as printed.
//!
//! The formulas are written for the case where the opponent was observed
//! playing action 0; an observation of action 1 is handled by swapping the
//! two coordinates. Where the printed algebra departs from the generic update
//! in [`super::ekf_update`], this module follows the print and lists the
//! departure in [`ClosedFormReport::divergences`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::boltzmann::softmax;
use super::ekf::{EkfParams, PropensityBelief};
use super::{LearnError, Observation};

/// A place where the printed algebra differs from the textbook EKF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Divergence {
    /// `H = σ1σ2 [[1,−1],[−1,1]]`, missing the `1/τ` of the exact derivative.
    JacobianOmitsTemperature,
    /// `c1 = σ1σ2 (P11 + P22 − 2P12)`, where `H P Hᵀ` carries `(σ1σ2)²`.
    C1SinglePower,
    /// `c2 = 1/(t c1) · 1/(P11 + P22 − 2P12) · 1/(c1 (1 + c1)²)`, taken as a
    /// literal left-to-right product.
    C2LiteralGrouping,
    /// Both mean components move by `2 (P11 − P12) σ2 c2`; `K v` would use
    /// `P22 − P12` for the second.
    MeanUsesFirstRowForBoth,
    /// The observation noise is `(1/t) I` whatever the configured schedule.
    ObservationNoiseOneOverT,
}

impl Divergence {
    pub const ALL: [Divergence; 5] = [
        Divergence::JacobianOmitsTemperature,
        Divergence::C1SinglePower,
        Divergence::C2LiteralGrouping,
        Divergence::MeanUsesFirstRowForBoth,
        Divergence::ObservationNoiseOneOverT,
    ];

    pub fn describe(self) -> &'static str {
        match self {
            Divergence::JacobianOmitsTemperature => "Jacobian omits the 1/tau factor",
            Divergence::C1SinglePower => "c1 uses a single power of sigma1*sigma2",
            Divergence::C2LiteralGrouping => "c2 is the literal product of three fractions",
            Divergence::MeanUsesFirstRowForBoth => "mean update uses P11-P12 for both components",
            Divergence::ObservationNoiseOneOverT => "observation noise fixed at (1/t)I",
        }
    }
}

/// Intermediate quantities of one closed-form update, in the coordinates
/// where the observed action is first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub observed: usize,
    pub t: u64,
    /// Predicted strategy, observed action first.
    pub sigma: [f64; 2],
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    /// Innovation covariance `c1 [[1,−1],[−1,1]] + (1/t) I`.
    pub s: [[f64; 2]; 2],
    /// Shift applied to the observed action's propensity (the other moves by
    /// the negation).
    pub mean_shift: f64,
    /// The update was skipped because `c1`, the innovation or the variance
    /// denominator was zero.
    pub degenerate: bool,
    /// The printed covariance update left a negative eigenvalue that was
    /// floored.
    pub floored: bool,
    pub divergences: Vec<Divergence>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormUpdate {
    pub belief: PropensityBelief,
    pub report: ClosedFormReport,
}

/// Printed `c1 = σ1σ2 (P11 + P22 − 2P12)`.
pub fn printed_c1(sigma1: f64, sigma2: f64, p11: f64, p22: f64, p12: f64) -> f64 {
    sigma1 * sigma2 * (p11 + p22 - 2.0 * p12)
}

/// Printed `c2 = 1/(t c1) · 1/(P11 + P22 − 2P12) · 1/(c1 (1 + c1)²)`.
pub fn printed_c2(t: u64, c1: f64, p11: f64, p22: f64, p12: f64) -> f64 {
    let t = t as f64;
    (1.0 / (t * c1)) * (1.0 / (p11 + p22 - 2.0 * p12)) * (1.0 / (c1 * (1.0 + c1).powi(2)))
}

/// Closed-form measurement update for a two-action opponent.
pub fn ekf_update_closed_form_2x2(
    predicted: &PropensityBelief,
    obs: &Observation,
    params: &EkfParams,
) -> Result<ClosedFormUpdate, LearnError> {
    if predicted.num_actions() != 2 {
        return Err(LearnError::DimensionMismatch(format!(
            "closed form needs 2 actions, got {}",
            predicted.num_actions()
        )));
    }
    let k = obs.action.index();
    if k >= 2 {
        return Err(LearnError::InvalidAction { action: k, count: 2 });
    }
    if obs.time_index == 0 {
        return Err(LearnError::InvalidTimeIndex);
    }
    if !(params.tau.is_finite() && params.tau > 0.0) {
        return Err(LearnError::InvalidTemperature(params.tau));
    }
    let t = obs.time_index;
    let (i, j) = if k == 0 { (0, 1) } else { (1, 0) };
    let x = predicted.mean();
    let p = predicted.cov();
    let sigma = softmax(x.as_slice(), params.tau);
    let (s1, s2) = (sigma[i], sigma[j]);
    let (p11, p22, p12) = (p[(i, i)], p[(j, j)], p[(i, j)]);

    let c1 = printed_c1(s1, s2, p11, p22, p12);
    let c3 = p11 - p12;
    let c4 = p22 - p12;
    let spread = p11 + p22 - 2.0 * p12;
    let inv_t = 1.0 / t as f64;
    let s = [[c1 + inv_t, -c1], [-c1, c1 + inv_t]];

    let mut report = ClosedFormReport {
        observed: k,
        t,
        sigma: [s1, s2],
        c1,
        c2: 0.0,
        c3,
        c4,
        s,
        mean_shift: 0.0,
        degenerate: false,
        floored: false,
        divergences: Divergence::ALL.to_vec(),
    };
    // The innovation is (σ2, −σ2): nothing to learn when it or c1 vanishes.
    if c1 == 0.0 || s2 == 0.0 || spread == 0.0 {
        report.degenerate = true;
        return Ok(ClosedFormUpdate { belief: predicted.clone(), report });
    }

    let c2 = printed_c2(t, c1, p11, p22, p12);
    let shift = 2.0 * c3 * s2 * c2;
    let f = (2.0 + inv_t) * c2 * c2 * c1;
    report.c2 = c2;
    report.mean_shift = shift;

    let mut mean: DVector<f64> = x.clone();
    mean[i] += shift;
    mean[j] -= shift;
    let mut cov: DMatrix<f64> = p.clone();
    cov[(i, i)] = p11 - f * (c3 * c3 - c3 * c4);
    cov[(i, j)] = p12 - f * (-c3 * c3 - c3 * c4);
    cov[(j, i)] = cov[(i, j)];
    cov[(j, j)] = p22 - f * (c4 * c4 - c3 * c4);

    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.min() < 0.0 {
        let floored = eig.eigenvalues.map(|v| v.max(0.0));
        cov = &eig.eigenvectors * DMatrix::from_diagonal(&floored) * eig.eigenvectors.transpose();
        cov = (&cov + cov.transpose()) * 0.5;
        report.floored = true;
    }
    let belief = PropensityBelief::new(mean, cov)?;
    Ok(ClosedFormUpdate { belief, report })
}
