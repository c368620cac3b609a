//! The probabilistic-method bound behind the mixing guarantee, plus an
//! exhaustive oracle for tiny instances.

use itertools::Itertools;
use statrs::function::gamma::ln_gamma;

use super::{round_half_up, skill_error_profile, ErrorSet, GraphError, SkillCluster};

/// Exhaustive enumeration refuses to iterate more than this many sets.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Natural log of the expected number of bad (Y, Z) pairs:
///
/// N2·N1·C(N2, αN2)·C(N1, θN1)·C(kθN1, βαkθN1)·α^(βαkθN1)·(1−α)^((1−βα)kθN1)
///
/// with every fractional count rounded half-up. Everything runs in log
/// space through the log-gamma function, so nothing overflows. A negative
/// return certifies that the expected number of bad pairs is below one;
/// divided by N1 it converges to the mixing LHS as N1 grows with N2 = o(N1).
pub fn expected_bad_pairs_log_bound(
    num_pieces: u64,
    num_skills: u64,
    k: u32,
    theta: f64,
    alpha: f64,
    beta: f64,
) -> Result<f64, GraphError> {
    if num_pieces == 0 {
        return Err(GraphError::NoPieces);
    }
    if num_skills == 0 {
        return Err(GraphError::NoSkills);
    }
    if k == 0 {
        return Err(GraphError::KZero);
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(GraphError::Theta(theta));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GraphError::Alpha(alpha));
    }
    if !(beta > 0.0 && alpha * beta < 1.0) {
        return Err(GraphError::AlphaBeta { alpha, beta });
    }
    let flagged = round_half_up(theta * num_pieces as f64);
    let skills_chosen = round_half_up(alpha * num_skills as f64);
    let edges_into_y = k as u64 * flagged;
    let concentrated = round_half_up(beta * alpha * k as f64 * theta * num_pieces as f64);
    if concentrated > edges_into_y {
        return Err(GraphError::CountNotRepresentable {
            what: "concentrated edge count beta*alpha*k*theta*N1",
            count: concentrated,
            ceiling: edges_into_y,
        });
    }
    if skills_chosen > num_skills {
        return Err(GraphError::CountNotRepresentable {
            what: "chosen skill count alpha*N2",
            count: skills_chosen,
            ceiling: num_skills,
        });
    }
    Ok((num_skills as f64).ln()
        + (num_pieces as f64).ln()
        + ln_choose(num_skills, skills_chosen)
        + ln_choose(num_pieces, flagged)
        + ln_choose(edges_into_y, concentrated)
        + concentrated as f64 * alpha.ln()
        + (edges_into_y - concentrated) as f64 * (1.0 - alpha).ln())
}

/// The worst error set an exhaustive search can find.
#[derive(Debug, Clone)]
pub struct WorstCase {
    pub error_set: ErrorSet,
    /// Largest μ1-measure of skills pushed above the βθ edge-fraction bound.
    pub violating_measure: f64,
}

fn choose_count(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    // Running product with early exit; saturates at u64::MAX.
    let k = k.min(n - k);
    let mut result: u64 = 1;
    for i in 0..k {
        result = match result.checked_mul(n - i).map(|v| v / (i + 1)) {
            Some(v) => v,
            None => return u64::MAX,
        };
        if result > ENUMERATION_BUDGET * 2 {
            return result;
        }
    }
    result
}

/// Exhausts every Y of exactly round(θ·N1) pieces and returns the one
/// maximizing the violating skill measure against the βθ bound — the
/// for-every-Y quantifier made literal, for instances small enough to
/// afford it.
pub fn enumerate_worst_y(
    cluster: &SkillCluster,
    theta: f64,
    alpha: f64,
    beta: f64,
) -> Result<WorstCase, GraphError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(GraphError::Theta(theta));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GraphError::Alpha(alpha));
    }
    if !(beta > 1.0 && alpha * beta < 1.0) {
        return Err(GraphError::AlphaBeta { alpha, beta });
    }
    let n1 = cluster.num_pieces();
    let flagged = (round_half_up(theta * n1 as f64) as usize).min(n1);
    let total = choose_count(n1 as u64, flagged as u64);
    if total > ENUMERATION_BUDGET {
        return Err(GraphError::EnumerationBudget {
            pieces: n1,
            flagged,
            budget: ENUMERATION_BUDGET,
        });
    }

    let mut worst: Option<(Vec<u32>, f64)> = None;
    for combo in (0..n1 as u32).combinations(flagged) {
        let y = ErrorSet::from_pieces(cluster, &combo)?;
        let bound = beta * y.theta();
        let violating: f64 = skill_error_profile(cluster, &y)
            .iter()
            .filter(|r| !r.zero_degree && r.fraction > bound)
            .map(|r| cluster.skill_measure().get(r.skill as usize))
            .sum();
        // Strict improvement keeps the first maximizer: deterministic.
        if worst.as_ref().map_or(true, |(_, best)| violating > *best) {
            worst = Some((combo, violating));
        }
    }
    let (pieces, violating_measure) = worst.expect("at least one combination");
    Ok(WorstCase {
        error_set: ErrorSet::from_pieces(cluster, &pieces)?,
        violating_measure,
    })
}
