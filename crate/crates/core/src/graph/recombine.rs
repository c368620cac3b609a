//! k'-wise recombination, tuple competence, and measure discretization.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ErrorSet, GraphError, SkillCluster};
use crate::entropy::Distribution;

/// A recombined cluster plus the grouping that produced it, so error sets
/// can be lifted onto the new pieces.
#[derive(Debug, Clone)]
pub struct Recombination {
    pub cluster: SkillCluster,
    /// Original piece indices per recombined piece, in concatenation order.
    pub groups: Vec<Vec<u32>>,
    /// Pieces in the dropped partial group when k' does not divide N1.
    pub dropped_pieces: Vec<u32>,
    /// True when measures were rescaled to absorb the dropped mass.
    pub measure_renormalized: bool,
}

/// Randomly partitions the pieces into groups of k' and concatenates each
/// group into one k'-piece carrying k·k' endpoints and the summed measure.
/// k' = 1 is the identity transformation (no shuffle). A trailing partial
/// group is dropped and reported; its measure is renormalized away.
pub fn recombine(
    cluster: &SkillCluster,
    kprime: usize,
    seed: u64,
) -> Result<Recombination, GraphError> {
    if kprime == 0 {
        return Err(GraphError::KPrimeZero);
    }
    let n1 = cluster.num_pieces();
    if kprime > n1 {
        return Err(GraphError::RecombineTooFew {
            kprime,
            pieces: n1,
        });
    }

    let mut order: Vec<u32> = (0..n1 as u32).collect();
    if kprime > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
    }
    let complete = n1 / kprime;
    let dropped_pieces: Vec<u32> = order[complete * kprime..].to_vec();

    let mut groups = Vec::with_capacity(complete);
    let mut edges = Vec::with_capacity(complete);
    let mut weights = Vec::with_capacity(complete);
    for group_index in 0..complete {
        let members = &order[group_index * kprime..(group_index + 1) * kprime];
        let mut endpoints = Vec::with_capacity(cluster.k() * kprime);
        let mut weight = 0.0;
        for &piece in members {
            endpoints.extend_from_slice(cluster.piece_endpoints(piece as usize));
            weight += cluster.piece_measure().get(piece as usize);
        }
        groups.push(members.to_vec());
        edges.push(endpoints);
        weights.push(weight);
    }

    let measure_renormalized = !dropped_pieces.is_empty();
    let piece_measure = if measure_renormalized {
        Distribution::renormalized(weights)?
    } else {
        // Group sums repartition the original mass exactly; keep them.
        Distribution::new(weights)?
    };
    let recombined = SkillCluster::from_parts(
        cluster.k() * kprime,
        cluster.skill_measure().clone(),
        piece_measure,
        &edges,
        seed,
    )?;
    Ok(Recombination {
        cluster: recombined,
        groups,
        dropped_pieces,
        measure_renormalized,
    })
}

impl Recombination {
    /// Lifts an error set from the original cluster: a k'-piece errs when
    /// any of its members does.
    pub fn lift_error_set(&self, original: &ErrorSet) -> Result<ErrorSet, GraphError> {
        let flags: Vec<bool> = self
            .groups
            .iter()
            .map(|members| members.iter().any(|&t| original.contains(t as usize)))
            .collect();
        ErrorSet::from_flags(&self.cluster, flags)
    }
}

/// Competence of a skill tuple: one minus the measure-weighted error rate
/// over pieces adjacent to every skill in the tuple. `None` when no piece
/// contains the whole tuple — undefined, not zero.
pub fn tuple_competence(
    cluster: &SkillCluster,
    y: &ErrorSet,
    tuple: &[u32],
) -> Result<Option<f64>, GraphError> {
    let bad = || GraphError::BadTuple {
        num_skills: cluster.num_skills(),
    };
    if tuple.is_empty() || tuple.len() > cluster.k() {
        return Err(bad());
    }
    let mut seen = std::collections::BTreeSet::new();
    for &s in tuple {
        if s as usize >= cluster.num_skills() || !seen.insert(s) {
            return Err(bad());
        }
    }

    // Intersect the distinct-piece lists, smallest first.
    let mut lists: Vec<&[u32]> = tuple
        .iter()
        .map(|&s| cluster.skill_pieces(s as usize))
        .collect();
    lists.sort_by_key(|l| l.len());
    let mut support: Vec<u32> = lists[0].to_vec();
    for list in &lists[1..] {
        if support.is_empty() {
            break;
        }
        support.retain(|t| list.binary_search(t).is_ok());
    }
    if support.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    let mut erroneous = 0.0;
    let mut count_in_y = 0u64;
    for &t in &support {
        let w = cluster.piece_measure().get(t as usize);
        total += w;
        if y.contains(t as usize) {
            erroneous += w;
            count_in_y += 1;
        }
    }
    let error_rate = if total > 0.0 {
        erroneous / total
    } else {
        count_in_y as f64 / support.len() as f64
    };
    Ok(Some(1.0 - error_rate))
}

/// One band of the measure discretization: pieces whose measure falls in
/// [(1+ε)^{-(i+1)}, (1+ε)^{-i}).
#[derive(Debug, Clone, Serialize)]
pub struct MeasureClass {
    pub index: u32,
    pub pieces: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureClasses {
    pub epsilon: f64,
    pub classes: Vec<MeasureClass>,
    /// Pieces with exactly zero measure; they belong to no band.
    pub zero_measure_pieces: Vec<u32>,
    /// Bands smaller than the skill count; the asymptotic argument wants
    /// every band to dwarf N2, so these are worth a look.
    pub small_class_indices: Vec<u32>,
}

/// Partitions pieces into geometric measure bands. Membership is a pure
/// function of (μ2, ε) and can be recomputed at will.
pub fn measure_classes(
    cluster: &SkillCluster,
    epsilon: f64,
) -> Result<MeasureClasses, GraphError> {
    if !(epsilon > 0.0) {
        return Err(GraphError::Epsilon(epsilon));
    }
    let log_base = (1.0 + epsilon).ln();
    let mut by_index: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    let mut zero_measure_pieces = Vec::new();
    for t in 0..cluster.num_pieces() {
        let mu = cluster.piece_measure().get(t);
        if mu <= 0.0 {
            zero_measure_pieces.push(t as u32);
            continue;
        }
        // Smallest i with (1+ε)^{-(i+1)} ≤ μ < (1+ε)^{-i}.
        let mut i = ((-mu.ln() / log_base).ceil() - 1.0).max(0.0) as u32;
        // Guard the band edges against rounding.
        while (-(f64::from(i)) * log_base).exp() <= mu && i > 0 {
            i -= 1;
        }
        while (-(f64::from(i + 1)) * log_base).exp() > mu {
            i += 1;
        }
        by_index.entry(i).or_default().push(t as u32);
    }
    let classes: Vec<MeasureClass> = by_index
        .into_iter()
        .map(|(index, pieces)| MeasureClass { index, pieces })
        .collect();
    let small_class_indices = classes
        .iter()
        .filter(|c| c.pieces.len() < cluster.num_skills())
        .map(|c| c.index)
        .collect();
    Ok(MeasureClasses {
        epsilon,
        classes,
        zero_measure_pieces,
        small_class_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{sample_error_set, ClusterConfig, ErrorMode};

    #[test]
    fn kprime_one_is_identity() {
        let cluster = SkillCluster::uniform(5, 30, 3, 77).unwrap();
        let rec = recombine(&cluster, 1, 123).unwrap();
        assert_eq!(rec.cluster.num_pieces(), 30);
        assert_eq!(rec.cluster.k(), 3);
        assert!(rec.dropped_pieces.is_empty());
        for piece in 0..30 {
            assert_eq!(
                rec.cluster.piece_endpoints(piece),
                cluster.piece_endpoints(piece)
            );
        }
        assert_eq!(
            rec.cluster.piece_measure().as_slice(),
            cluster.piece_measure().as_slice()
        );
    }

    #[test]
    fn groups_concatenate_endpoints_and_sum_measures() {
        let cluster = SkillCluster::uniform(4, 8, 3, 5).unwrap();
        let rec = recombine(&cluster, 2, 9).unwrap();
        assert_eq!(rec.cluster.num_pieces(), 4);
        assert_eq!(rec.cluster.k(), 6);
        assert!(rec.dropped_pieces.is_empty());
        assert!(!rec.measure_renormalized);
        for (g, members) in rec.groups.iter().enumerate() {
            assert_eq!(members.len(), 2);
            let mut expected = Vec::new();
            let mut weight = 0.0;
            for &t in members {
                expected.extend_from_slice(cluster.piece_endpoints(t as usize));
                weight += cluster.piece_measure().get(t as usize);
            }
            assert_eq!(rec.cluster.piece_endpoints(g), &expected[..]);
            assert!((rec.cluster.piece_measure().get(g) - weight).abs() < 1e-15);
        }
    }

    #[test]
    fn partial_group_is_dropped_and_reported() {
        let cluster = SkillCluster::uniform(4, 10, 2, 5).unwrap();
        let rec = recombine(&cluster, 3, 9).unwrap();
        assert_eq!(rec.cluster.num_pieces(), 3);
        assert_eq!(rec.dropped_pieces.len(), 1);
        assert!(rec.measure_renormalized);
        let total: f64 = rec.cluster.piece_measure().as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recombination_is_seeded() {
        let cluster = SkillCluster::uniform(6, 60, 2, 5).unwrap();
        let a = recombine(&cluster, 3, 1).unwrap();
        let b = recombine(&cluster, 3, 1).unwrap();
        let c = recombine(&cluster, 3, 2).unwrap();
        assert_eq!(a.groups, b.groups);
        assert_ne!(a.groups, c.groups);
    }

    #[test]
    fn lifted_error_fraction_matches_inclusion_exclusion() {
        // For a count-based random Y of m pieces, a group of k' stays clean
        // with probability C(N1−m, k')/C(N1, k'); the lifted flagged share
        // concentrates at one minus that.
        let n1 = 20_000usize;
        let kprime = 4usize;
        let theta = 0.05;
        let cluster = SkillCluster::uniform(40, n1, 2, 3).unwrap();
        let m = (theta * n1 as f64).round();
        let clean: f64 = (0..kprime)
            .map(|j| ((n1 as f64 - m) - j as f64) / (n1 as f64 - j as f64))
            .product();
        let expected = 1.0 - clean;
        let trials = 60u64;
        let groups = n1 / kprime;
        let sigma_mean = (expected * (1.0 - expected) / (groups as u64 * trials) as f64).sqrt();
        let mut total = 0.0;
        for trial in 0..trials {
            let y =
                sample_error_set(&cluster, theta, ErrorMode::UniformRandom, 1000 + trial).unwrap();
            let rec = recombine(&cluster, kprime, 2000 + trial).unwrap();
            let lifted = rec.lift_error_set(&y).unwrap();
            total += lifted.count() as f64 / groups as f64;
            // The lifted measure can never exceed k' times the original.
            assert!(lifted.theta() <= kprime as f64 * y.theta() + 1e-12);
        }
        let observed = total / trials as f64;
        // The exact hypergeometric value sits next to the iid approximation
        // 1 − 0.95^4 = 0.18549375.
        assert!((expected - 0.18549375).abs() < 2e-4);
        assert!(
            (observed - expected).abs() <= 4.0 * sigma_mean,
            "observed {observed}, expected {expected}, sigma {sigma_mean}"
        );
    }

    #[test]
    fn tuple_competence_boundary_cases() {
        let cluster = SkillCluster::uniform(5, 100, 3, 8).unwrap();
        let all = ErrorSet::from_pieces(&cluster, &(0..100).collect::<Vec<_>>()).unwrap();
        let none = ErrorSet::empty(&cluster);
        for s in 0..5u32 {
            if cluster.skill_pieces(s as usize).is_empty() {
                continue;
            }
            assert_eq!(tuple_competence(&cluster, &none, &[s]).unwrap(), Some(1.0));
            assert_eq!(tuple_competence(&cluster, &all, &[s]).unwrap(), Some(0.0));
        }
    }

    #[test]
    fn tuple_competence_matches_exhaustive_enumeration() {
        let cluster = SkillCluster::uniform(5, 20, 3, 41).unwrap();
        let y = ErrorSet::from_pieces(&cluster, &[0, 3, 7, 11, 19]).unwrap();
        for a in 0..5u32 {
            for b in (a + 1)..5u32 {
                // Independent direct scan of all 20 pieces.
                let mut support = 0u64;
                let mut errors = 0u64;
                for piece in 0..20 {
                    let endpoints = cluster.piece_endpoints(piece);
                    if endpoints.contains(&a) && endpoints.contains(&b) {
                        support += 1;
                        if y.contains(piece) {
                            errors += 1;
                        }
                    }
                }
                let expected = if support == 0 {
                    None
                } else {
                    Some(1.0 - errors as f64 / support as f64)
                };
                let got = tuple_competence(&cluster, &y, &[a, b]).unwrap();
                match (expected, got) {
                    (None, None) => {}
                    (Some(e), Some(g)) => assert!((e - g).abs() < 1e-12),
                    other => panic!("tuple ({a},{b}): {other:?}"),
                }
            }
        }
    }

    #[test]
    fn tuple_competence_rejects_bad_tuples() {
        let cluster = SkillCluster::uniform(5, 20, 3, 41).unwrap();
        let y = ErrorSet::empty(&cluster);
        assert!(tuple_competence(&cluster, &y, &[]).is_err());
        assert!(tuple_competence(&cluster, &y, &[0, 0]).is_err());
        assert!(tuple_competence(&cluster, &y, &[9]).is_err());
        assert!(tuple_competence(&cluster, &y, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn measure_classes_partition_and_recompute() {
        let weights: Vec<f64> = (0..200).map(|t| 1.0 / ((t + 2) as f64)).collect();
        let mu2 = Distribution::renormalized(weights).unwrap();
        let cluster = SkillCluster::generate(&ClusterConfig {
            num_skills: 8,
            num_pieces: 200,
            k: 2,
            skill_measure: None,
            piece_measure: Some(mu2),
            require_full_coverage: false,
            seed: 4,
        })
        .unwrap();
        let classes = measure_classes(&cluster, 0.01).unwrap();
        let mut seen = vec![false; 200];
        for class in &classes.classes {
            let upper = (1.0f64 + 0.01).powi(-(class.index as i32));
            let lower = (1.0f64 + 0.01).powi(-(class.index as i32 + 1));
            for &t in &class.pieces {
                assert!(!seen[t as usize]);
                seen[t as usize] = true;
                let mu = cluster.piece_measure().get(t as usize);
                assert!(mu >= lower && mu < upper, "mu {mu} not in [{lower},{upper})");
            }
        }
        for &t in &classes.zero_measure_pieces {
            assert!(!seen[t as usize]);
            seen[t as usize] = true;
        }
        assert!(seen.iter().all(|&s| s));
        // ε = 0.01 bands are narrow; every band here is smaller than 200/8.
        assert!(!classes.small_class_indices.is_empty());
    }
}
