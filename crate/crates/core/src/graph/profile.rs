//! Per-skill error statistics and the mixing-guarantee check.

use serde::Serialize;

use super::{round_half_up, ErrorSet, GraphError, SkillCluster};

/// Measure-weighted edge statistics of one skill against an error set.
/// With uniform piece measure the weighted values reduce to plain edge
/// counts divided by the piece count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SkillErrorRecord {
    pub skill: u32,
    /// μ2-weighted edges landing in Y (multiplicity kept).
    pub edges_to_y: f64,
    /// μ2-weighted edge total.
    pub total_edges: f64,
    pub count_to_y: u64,
    pub count_total: u64,
    /// Weighted share of this skill's edges inside Y; 0 for zero-degree
    /// skills, which are flagged rather than silently counted as competent.
    pub fraction: f64,
    pub zero_degree: bool,
}

/// One pass over all edges; O(N1·k), no index required.
pub fn skill_error_profile(cluster: &SkillCluster, y: &ErrorSet) -> Vec<SkillErrorRecord> {
    let n2 = cluster.num_skills();
    let mut weighted_y = vec![0.0f64; n2];
    let mut weighted_total = vec![0.0f64; n2];
    let mut count_y = vec![0u64; n2];
    let mut count_total = vec![0u64; n2];
    for piece in 0..cluster.num_pieces() {
        let weight = cluster.piece_measure().get(piece);
        let flagged = y.contains(piece);
        for &s in cluster.piece_endpoints(piece) {
            let s = s as usize;
            weighted_total[s] += weight;
            count_total[s] += 1;
            if flagged {
                weighted_y[s] += weight;
                count_y[s] += 1;
            }
        }
    }
    (0..n2)
        .map(|s| {
            let zero_degree = count_total[s] == 0;
            let fraction = if zero_degree {
                0.0
            } else if weighted_total[s] > 0.0 {
                weighted_y[s] / weighted_total[s]
            } else {
                // All incident pieces carry zero measure; fall back to counts.
                count_y[s] as f64 / count_total[s] as f64
            };
            SkillErrorRecord {
                skill: s as u32,
                edges_to_y: weighted_y[s],
                total_edges: weighted_total[s],
                count_to_y: count_y[s],
                count_total: count_total[s],
                fraction,
                zero_degree,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GuaranteeCheck {
    pub holds: bool,
    /// Exact μ1-measure of skills whose edge fraction exceeds βθ.
    pub violating_skill_measure: f64,
    /// The edge-fraction bound βθ the guarantee promises.
    pub edge_fraction_bound: f64,
}

/// Checks the mixing guarantee on a concrete (cluster, Y) pair: the
/// μ1-measure of skills with more than a βθ fraction of their edges in Y
/// must not exceed α.
pub fn verify_mixing_guarantee(
    cluster: &SkillCluster,
    y: &ErrorSet,
    alpha: f64,
    beta: f64,
) -> Result<GuaranteeCheck, GraphError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GraphError::Alpha(alpha));
    }
    if !(beta > 1.0 && alpha * beta < 1.0) {
        return Err(GraphError::AlphaBeta { alpha, beta });
    }
    let bound = beta * y.theta();
    let profile = skill_error_profile(cluster, y);
    let violating_skill_measure = profile
        .iter()
        .filter(|r| !r.zero_degree && r.fraction > bound)
        .map(|r| cluster.skill_measure().get(r.skill as usize))
        .sum();
    Ok(GuaranteeCheck {
        holds: violating_skill_measure <= alpha,
        violating_skill_measure,
        edge_fraction_bound: bound,
    })
}

/// Both sides of the tempting per-skill accounting identity
/// "average piece loss spreads evenly over skills".
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearityGap {
    pub target_skill: u32,
    /// Error rate of the targeted skill's statistical task.
    pub lhs: f64,
    /// μ1-weighted mean error rate across skills (≈ θ whatever Y is, by
    /// edge-count conservation).
    pub rhs: f64,
    pub gap: f64,
}

/// Evaluates the targeted-vs-average error rates for an arbitrary Y.
pub fn linearity_gap(
    cluster: &SkillCluster,
    y: &ErrorSet,
    target_skill: u32,
) -> Result<LinearityGap, GraphError> {
    if target_skill as usize >= cluster.num_skills() {
        return Err(GraphError::BadTuple {
            num_skills: cluster.num_skills(),
        });
    }
    let profile = skill_error_profile(cluster, y);
    let mut mass = 0.0;
    let mut mean = 0.0;
    for record in profile.iter().filter(|r| !r.zero_degree) {
        let weight = cluster.skill_measure().get(record.skill as usize);
        mass += weight;
        mean += weight * record.fraction;
    }
    let rhs = if mass > 0.0 { mean / mass } else { 0.0 };
    let lhs = profile[target_skill as usize].fraction;
    Ok(LinearityGap {
        target_skill,
        lhs,
        rhs,
        gap: lhs - rhs,
    })
}

/// Demonstrates why average loss says nothing about individual skills: an
/// error set of measure θ packed into one skill's neighborhood drives that
/// skill's error rate far above the average, which stays pinned near θ.
///
/// The target is the skill with the largest neighborhood. If θ·N1 exceeds
/// the neighborhood, the remainder spills onto the lowest-index pieces
/// outside it (the gap shrinks but stays macroscopic).
pub fn linearity_counterexample(
    cluster: &SkillCluster,
    theta: f64,
) -> Result<LinearityGap, GraphError> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(GraphError::Theta(theta));
    }
    let target = cluster
        .largest_neighborhood_skill()
        .ok_or(GraphError::NoTargetNeighborhood)?;
    let m = (round_half_up(theta * cluster.num_pieces() as f64) as usize)
        .min(cluster.num_pieces());
    let neighborhood = cluster.skill_pieces(target as usize);
    let mut chosen: Vec<u32> = neighborhood.iter().copied().take(m).collect();
    if chosen.len() < m {
        let mut in_y = vec![false; cluster.num_pieces()];
        for &t in &chosen {
            in_y[t as usize] = true;
        }
        chosen.extend(
            (0..cluster.num_pieces() as u32)
                .filter(|&t| !in_y[t as usize])
                .take(m - chosen.len()),
        );
    }
    let y = ErrorSet::from_pieces(cluster, &chosen)?;
    linearity_gap(cluster, &y, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_error_set, ErrorMode};

    #[test]
    fn all_pieces_flagged_means_fraction_one() {
        let cluster = SkillCluster::uniform(6, 60, 3, 1).unwrap();
        let y = ErrorSet::from_pieces(&cluster, &(0..60).collect::<Vec<_>>()).unwrap();
        for record in skill_error_profile(&cluster, &y) {
            if !record.zero_degree {
                assert_eq!(record.fraction, 1.0);
            }
        }
    }

    #[test]
    fn empty_error_set_means_fraction_zero() {
        let cluster = SkillCluster::uniform(6, 60, 3, 1).unwrap();
        let y = ErrorSet::empty(&cluster);
        for record in skill_error_profile(&cluster, &y) {
            assert_eq!(record.fraction, 0.0);
            assert_eq!(record.count_to_y, 0);
        }
    }

    #[test]
    fn profile_matches_hand_count_on_tiny_cluster() {
        let cluster = SkillCluster::uniform(3, 6, 2, 42).unwrap();
        let y = ErrorSet::from_pieces(&cluster, &[0, 2, 5]).unwrap();
        let profile = skill_error_profile(&cluster, &y);
        // Independent recount straight off the 12 edge endpoints.
        for s in 0..3u32 {
            let mut total = 0u64;
            let mut in_y = 0u64;
            for piece in 0..6 {
                for &e in cluster.piece_endpoints(piece) {
                    if e == s {
                        total += 1;
                        if [0usize, 2, 5].contains(&piece) {
                            in_y += 1;
                        }
                    }
                }
            }
            let record = &profile[s as usize];
            assert_eq!(record.count_total, total);
            assert_eq!(record.count_to_y, in_y);
            if total > 0 {
                assert!((record.fraction - in_y as f64 / total as f64).abs() < 1e-12);
            } else {
                assert!(record.zero_degree);
            }
        }
    }

    #[test]
    fn edge_conservation_under_uniform_measure() {
        let cluster = SkillCluster::uniform(7, 200, 5, 8).unwrap();
        let y = sample_error_set(&cluster, 0.3, ErrorMode::UniformRandom, 4).unwrap();
        let profile = skill_error_profile(&cluster, &y);
        let total: u64 = profile.iter().map(|r| r.count_to_y).sum();
        assert_eq!(total, 5 * y.count() as u64);
        let grand: u64 = profile.iter().map(|r| r.count_total).sum();
        assert_eq!(grand, 5 * 200);
    }

    #[test]
    fn guarantee_holds_trivially_for_empty_y() {
        let cluster = SkillCluster::uniform(10, 400, 4, 2).unwrap();
        let y = ErrorSet::empty(&cluster);
        for &(alpha, beta) in &[(0.05, 2.0), (0.3, 3.0), (0.9, 1.1)] {
            let check = verify_mixing_guarantee(&cluster, &y, alpha, beta).unwrap();
            assert!(check.holds);
            assert_eq!(check.violating_skill_measure, 0.0);
        }
    }

    #[test]
    fn guarantee_rejects_invalid_pairs() {
        let cluster = SkillCluster::uniform(4, 40, 2, 2).unwrap();
        let y = ErrorSet::empty(&cluster);
        assert!(verify_mixing_guarantee(&cluster, &y, 0.0, 2.0).is_err());
        assert!(verify_mixing_guarantee(&cluster, &y, 0.5, 0.9).is_err());
        assert!(verify_mixing_guarantee(&cluster, &y, 0.5, 3.0).is_err());
    }

    #[test]
    fn adversarial_target_violates_weak_bounds() {
        // Flood one neighborhood: 250 of the target's ≈400 edges land in Y,
        // far above the βθ = 0.1 bound, so at least that skill violates.
        let cluster = SkillCluster::uniform(50, 5000, 4, 17).unwrap();
        let y = sample_error_set(&cluster, 0.05, ErrorMode::AdversarialGreedy, 0).unwrap();
        let target = cluster.largest_neighborhood_skill().unwrap();
        let profile = skill_error_profile(&cluster, &y);
        assert!(profile[target as usize].fraction > 0.5);
        let check = verify_mixing_guarantee(&cluster, &y, 0.1, 2.0).unwrap();
        assert!(check.violating_skill_measure >= 1.0 / 50.0 - 1e-12);
    }

    #[test]
    fn linearity_counterexample_shows_macroscopic_gap() {
        let cluster = SkillCluster::uniform(50, 20_000, 4, 23).unwrap();
        let gap = linearity_counterexample(&cluster, 0.02).unwrap();
        // Target error ≈ min(1, θN2/k) = 0.25, average ≈ θ = 0.02.
        assert!(gap.lhs > 0.15, "lhs {}", gap.lhs);
        assert!((gap.rhs - 0.02).abs() < 0.01, "rhs {}", gap.rhs);
        assert!(gap.gap > 0.1);
    }

    #[test]
    fn linearity_gap_vanishes_for_random_y() {
        let cluster = SkillCluster::uniform(50, 20_000, 4, 23).unwrap();
        let target = cluster.largest_neighborhood_skill().unwrap();
        let y = sample_error_set(&cluster, 0.02, ErrorMode::UniformRandom, 5).unwrap();
        let gap = linearity_gap(&cluster, &y, target).unwrap();
        // Binomial noise at degree ≈ kN1/N2 = 1600: σ ≈ 0.0035.
        assert!(gap.gap.abs() < 5.0 * 0.0035, "gap {}", gap.gap);
    }

    #[test]
    fn linearity_both_sides_zero_for_empty_y() {
        let cluster = SkillCluster::uniform(10, 500, 3, 31).unwrap();
        let target = cluster.largest_neighborhood_skill().unwrap();
        let gap = linearity_gap(&cluster, &ErrorSet::empty(&cluster), target).unwrap();
        assert_eq!(gap.lhs, 0.0);
        assert_eq!(gap.rhs, 0.0);
        assert_eq!(gap.gap, 0.0);
    }
}
