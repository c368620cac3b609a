//! Feasibility curves for the bipartite mixing bound.
//!
//! For an error fraction θ and a per-piece skill count k, the mixing
//! inequality certifies (α, β) pairs for which all but an α fraction of
//! skills keep at most a βθ fraction of their edges inside the error set.
//! The boundary of the certified region, swept over a grid of α values, is
//! a performance curve. Plotting coordinates follow the convention
//! x = 1 − α, y = βθ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::{bernoulli_kl_raw, h_nat};

pub const DEFAULT_ALPHA_POINTS: usize = 400;
pub const DEFAULT_ALPHA_MIN: f64 = 1e-3;
pub const DEFAULT_ALPHA_MAX: f64 = 0.5;

/// Absolute bisection tolerance on β.
pub const BETA_TOLERANCE: f64 = 1e-9;

/// θ is clamped this far away from {0, 1} before entropy evaluation.
const THETA_CLAMP: f64 = 1e-12;

/// Default cutoff for "meaningful" curve points: keep a point only while the
/// certified bound still leaves majority competence, βθ < 1/2. A bound above
/// one half certifies skills that may get most of their edges wrong, and a
/// bound at one (100% of edges) is entirely vacuous. The full boundary is
/// available through [`performance_curve_filtered`] with a different cutoff
/// or none at all.
pub const MAJORITY_BETA_THETA: f64 = 0.5;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("theta must lie strictly inside (0, 1), got {0}")]
    Theta(f64),
    #[error("alpha must lie strictly inside (0, 1), got {0}")]
    Alpha(f64),
    #[error("beta must be positive, got {0}")]
    Beta(f64),
    #[error("alpha*beta must lie strictly inside (0, 1), got {0}")]
    AlphaBeta(f64),
    #[error("k must be at least 1")]
    KZero,
    #[error("kprime must be at least 1")]
    KPrimeZero,
    #[error("recombined error fraction kprime*theta = {0} must stay below 1")]
    RecombinedTheta(f64),
    #[error("per-piece loss delta must be positive, got {0}")]
    Delta(f64),
    #[error("tuple error fraction 2*delta*kprime = {0} must stay below 1")]
    TupleLoss(f64),
    #[error("alpha grid must be strictly increasing inside (0, 1); offence at index {0}")]
    Grid(usize),
}

/// Parameters a curve is computed for (k' = 1 means plain skills).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveParams {
    pub theta: f64,
    pub k: u32,
    #[serde(default = "default_kprime")]
    pub kprime: u32,
}

fn default_kprime() -> u32 {
    1
}

/// One point on a performance curve, carried in both raw and plotting
/// coordinates. `lhs_residual` is the mixing LHS at the point; a certified
/// boundary point has a residual in `[-1e-6, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub alpha: f64,
    pub beta: f64,
    pub one_minus_alpha: f64,
    pub beta_theta: f64,
    pub lhs_residual: f64,
}

/// Serialization-ready curve: parameters plus boundary points.
#[derive(Debug, Clone, Serialize)]
pub struct Curve {
    pub params: CurveParams,
    pub feasible: bool,
    pub points: Vec<CurvePoint>,
}

fn check_theta(theta: f64) -> Result<(), CurveError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(CurveError::Theta(theta));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<(), CurveError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CurveError::Alpha(alpha));
    }
    Ok(())
}

fn check_k(k: u32) -> Result<(), CurveError> {
    if k == 0 {
        return Err(CurveError::KZero);
    }
    Ok(())
}

fn clamp_theta(theta: f64) -> f64 {
    theta.clamp(THETA_CLAMP, 1.0 - THETA_CLAMP)
}

/// Unchecked mixing LHS: H(θ) − kθ·KL(βα ‖ α).
fn lhs_raw(theta: f64, k: u32, alpha: f64, beta: f64) -> f64 {
    let theta = clamp_theta(theta);
    h_nat(theta) - k as f64 * theta * bernoulli_kl_raw(beta * alpha, alpha)
}

/// Left-hand side of the mixing inequality,
/// H(θ) + kθ·(H(βα) − βα ln(1/α) − (1−βα) ln(1/(1−α))).
///
/// A negative value certifies the (α, β) pair: all but an α fraction of
/// skills keep at most a βθ fraction of their edges inside any error set of
/// measure θ. The bracketed term collapses algebraically to −KL(βα ‖ α),
/// which is how it is evaluated.
pub fn mixing_lhs(theta: f64, k: u32, alpha: f64, beta: f64) -> Result<f64, CurveError> {
    check_theta(theta)?;
    check_k(k)?;
    check_alpha(alpha)?;
    if !(beta > 0.0) {
        return Err(CurveError::Beta(beta));
    }
    let product = alpha * beta;
    if !(product > 0.0 && product < 1.0) {
        return Err(CurveError::AlphaBeta(product));
    }
    Ok(lhs_raw(theta, k, alpha, beta))
}

/// Mixing LHS after k'-wise recombination: H(k'θ) + kk'θ·(…). Identical to
/// [`mixing_lhs`] with θ replaced by k'θ.
pub fn tensorized_lhs(
    theta: f64,
    k: u32,
    kprime: u32,
    alpha: f64,
    beta: f64,
) -> Result<f64, CurveError> {
    check_theta(theta)?;
    if kprime == 0 {
        return Err(CurveError::KPrimeZero);
    }
    let effective = kprime as f64 * theta;
    if effective >= 1.0 {
        return Err(CurveError::RecombinedTheta(effective));
    }
    mixing_lhs(effective, k, alpha, beta)
}

/// Smallest β in (1, 1/α) whose mixing LHS is negative, found by bisection
/// to [`BETA_TOLERANCE`]; `None` when no such β exists.
///
/// The LHS is strictly decreasing in β over the bracket (KL(βα ‖ α) grows
/// with β once β > 1), so the sign change is unique. The returned β sits on
/// the certified side of the root.
pub fn solve_beta(theta: f64, k: u32, alpha: f64) -> Result<Option<f64>, CurveError> {
    check_theta(theta)?;
    check_k(k)?;
    check_alpha(alpha)?;
    let mut lo = 1.0 + BETA_TOLERANCE;
    let mut hi = 1.0 / alpha - BETA_TOLERANCE;
    if hi <= lo {
        return Ok(None);
    }
    if lhs_raw(theta, k, alpha, hi) >= 0.0 {
        return Ok(None);
    }
    if lhs_raw(theta, k, alpha, lo) < 0.0 {
        return Ok(Some(lo));
    }
    while hi - lo > BETA_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if lhs_raw(theta, k, alpha, mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Tensorized variant of [`solve_beta`]: boundary of Eq. H(k'θ) + kk'θ(…) < 0.
pub fn solve_beta_tensorized(
    theta: f64,
    k: u32,
    kprime: u32,
    alpha: f64,
) -> Result<Option<f64>, CurveError> {
    check_theta(theta)?;
    if kprime == 0 {
        return Err(CurveError::KPrimeZero);
    }
    let effective = kprime as f64 * theta;
    if effective >= 1.0 {
        return Err(CurveError::RecombinedTheta(effective));
    }
    solve_beta(effective, k, alpha)
}

fn check_grid(alpha_grid: &[f64]) -> Result<(), CurveError> {
    let mut prev = 0.0;
    for (i, &a) in alpha_grid.iter().enumerate() {
        if !(a > 0.0 && a < 1.0) || a <= prev {
            return Err(CurveError::Grid(i));
        }
        prev = a;
    }
    Ok(())
}

/// Boundary points over an α grid, keeping points with βθ below
/// `max_beta_theta` (`None` keeps the whole boundary). An empty result means
/// no feasible region under the requested cutoff, not an error.
pub fn performance_curve_filtered(
    theta: f64,
    k: u32,
    alpha_grid: &[f64],
    max_beta_theta: Option<f64>,
) -> Result<Vec<CurvePoint>, CurveError> {
    check_theta(theta)?;
    check_k(k)?;
    check_grid(alpha_grid)?;
    let mut points = Vec::new();
    for &alpha in alpha_grid {
        if let Some(beta) = solve_beta(theta, k, alpha)? {
            let beta_theta = beta * theta;
            if let Some(cutoff) = max_beta_theta {
                if beta_theta >= cutoff {
                    continue;
                }
            }
            points.push(CurvePoint {
                alpha,
                beta,
                one_minus_alpha: 1.0 - alpha,
                beta_theta,
                lhs_residual: lhs_raw(theta, k, alpha, beta),
            });
        }
    }
    Ok(points)
}

/// Performance curve restricted to meaningful points (βθ < 1/2).
pub fn performance_curve(
    theta: f64,
    k: u32,
    alpha_grid: &[f64],
) -> Result<Vec<CurvePoint>, CurveError> {
    performance_curve_filtered(theta, k, alpha_grid, Some(MAJORITY_BETA_THETA))
}

/// Curve for k'-tuples of skills from a per-piece loss δ: pieces are
/// recombined in groups of k', each group errs when any member does, so the
/// error fraction among k'-pieces is bounded by 2δk' and the plain curve
/// machinery applies at θ = 2δk'.
pub fn tuple_curve_from_loss(
    delta: f64,
    k: u32,
    kprime: u32,
    alpha_grid: &[f64],
) -> Result<Vec<CurvePoint>, CurveError> {
    tuple_curve_from_loss_filtered(delta, k, kprime, alpha_grid, Some(MAJORITY_BETA_THETA))
}

/// [`tuple_curve_from_loss`] with an explicit βθ cutoff.
pub fn tuple_curve_from_loss_filtered(
    delta: f64,
    k: u32,
    kprime: u32,
    alpha_grid: &[f64],
    max_beta_theta: Option<f64>,
) -> Result<Vec<CurvePoint>, CurveError> {
    if !(delta > 0.0) {
        return Err(CurveError::Delta(delta));
    }
    if kprime == 0 {
        return Err(CurveError::KPrimeZero);
    }
    let theta = 2.0 * delta * kprime as f64;
    if theta >= 1.0 {
        return Err(CurveError::TupleLoss(theta));
    }
    performance_curve_filtered(theta, k, alpha_grid, max_beta_theta)
}

/// 400 log-spaced α values spanning [1e-3, 0.5]; log spacing resolves the
/// steep part of the boundary at small α.
pub fn default_alpha_grid() -> Vec<f64> {
    log_spaced_grid(DEFAULT_ALPHA_MIN, DEFAULT_ALPHA_MAX, DEFAULT_ALPHA_POINTS)
}

pub fn log_spaced_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2 && min > 0.0 && max > min);
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

/// CSV rendering of curve points; one row per point, ascending α.
pub fn points_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("alpha,beta,one_minus_alpha,beta_theta,lhs_residual\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            p.alpha, p.beta, p.one_minus_alpha, p.beta_theta, p.lhs_residual
        ));
    }
    out
}
