//! Cross-module verification suite: algebraic identities, the Pinsker
//! property, bisection-vs-scan agreement, Monte-Carlo validation of the
//! mixing guarantee, exhaustive small-instance universality, and export
//! determinism. Every check carries an explicit budget; a zero budget
//! skips the check and the report says so.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use emergence_core::curves::{mixing_lhs, solve_beta};
use emergence_core::entropy::{
    binary_entropy, cross_entropy_decompose, pinsker_cloze_bound, Distribution,
};
use emergence_core::graph::{
    enumerate_worst_y, expected_bad_pairs_log_bound, sample_error_set, verify_mixing_guarantee,
    ErrorMode, SkillCluster,
};
use emergence_core::seeding::derive_seed;

use crate::config::RunConfig;
use crate::export::{render_curves, OutputFormat};
use crate::manifest::sha256_hex;
use crate::CliError;

/// (θ, k, α, β) tuples certified by the mixing inequality with margin
/// (mixing LHS below −0.01), used by the Monte-Carlo guarantee checks.
pub const CERTIFIED_TUPLES: [(f64, u32, f64, f64); 5] = [
    (0.1, 8, 0.05, 8.0),
    (0.05, 8, 0.05, 10.0),
    (0.2, 8, 0.02, 20.0),
    (0.1, 16, 0.1, 5.0),
    (0.05, 4, 0.05, 12.0),
];

/// Cluster shape pinned for the Monte-Carlo guarantee checks.
pub const MC_PIECES: usize = 100_000;
pub const MC_SKILLS: usize = 1_000;

/// Tiny-instance shape for exhaustive universality checks.
pub const TINY_PIECES: usize = 12;
pub const TINY_SKILLS: usize = 4;
pub const TINY_K: usize = 2;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub budget: u64,
    pub ran: u64,
    pub passed: u64,
    pub skipped: bool,
    pub skip_reason: Option<String>,
    pub ok: bool,
    pub details: String,
}

impl CheckResult {
    fn skipped(name: &str, reason: &str) -> Self {
        Self {
            name: name.to_string(),
            budget: 0,
            ran: 0,
            passed: 0,
            skipped: true,
            skip_reason: Some(reason.to_string()),
            ok: true,
            details: String::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_ok: bool,
}

fn random_pair(rng: &mut ChaCha8Rng) -> (Distribution, Distribution) {
    let n = rng.gen_range(2..=16usize);
    let draw = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0)).collect();
        Distribution::renormalized(w).unwrap()
    };
    (draw(rng), draw(rng))
}

fn check_mixing_identity(seed: u64, budget: u64) -> CheckResult {
    let name = "mixing_lhs_algebraic_identity";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 101, 0));
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..budget {
        let theta = rng.gen_range(0.01..0.95);
        let k = rng.gen_range(1..=16u32);
        let alpha = rng.gen_range(1e-3..0.9);
        let x: f64 = rng.gen_range(0.01..0.99);
        let beta = x / alpha;
        let via_kl = mixing_lhs(theta, k, alpha, beta).unwrap();
        let bracket = binary_entropy(x).unwrap()
            - x * (1.0 / alpha).ln()
            - (1.0 - x) * (1.0 / (1.0 - alpha)).ln();
        let direct = binary_entropy(theta).unwrap() + k as f64 * theta * bracket;
        let diff = (via_kl - direct).abs();
        worst = worst.max(diff);
        if diff <= 1e-12 {
            passed += 1;
        }
    }
    CheckResult {
        name: name.to_string(),
        budget,
        ran: budget,
        passed,
        skipped: false,
        skip_reason: None,
        ok: passed == budget,
        details: format!("worst |difference| = {worst:.3e} (tolerance 1e-12)"),
    }
}

fn check_decomposition(seed: u64, budget: u64) -> CheckResult {
    let name = "cross_entropy_decomposition";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 102, 0));
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..budget {
        let (p, q) = random_pair(&mut rng);
        let parts = cross_entropy_decompose(&p, &q).unwrap();
        let diff = (parts.cross_entropy - parts.entropy - parts.excess).abs();
        worst = worst.max(diff);
        if diff <= 1e-12 {
            passed += 1;
        }
    }
    CheckResult {
        name: name.to_string(),
        budget,
        ran: budget,
        passed,
        skipped: false,
        skip_reason: None,
        ok: passed == budget,
        details: format!("worst |ce − (h + kl)| = {worst:.3e} (tolerance 1e-12)"),
    }
}

fn check_pinsker(seed: u64, budget: u64) -> CheckResult {
    let name = "pinsker_cloze_property";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 103, 0));
    let mut passed = 0;
    for _ in 0..budget {
        let (p, q) = random_pair(&mut rng);
        let b = pinsker_cloze_bound(&p, &q).unwrap();
        if b.satisfied && b.disagreement <= b.classical_bound + 1e-12 {
            passed += 1;
        }
    }
    CheckResult {
        name: name.to_string(),
        budget,
        ran: budget,
        passed,
        skipped: false,
        skip_reason: None,
        ok: passed == budget,
        details: "disagreement ≤ sqrt(kl/2) ≤ sqrt(2·kl) on every pair".to_string(),
    }
}

fn check_bisection_scan(seed: u64, budget: u64) -> CheckResult {
    let name = "bisection_grid_agreement";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 104, 0));
    let step = 1e-3;
    let mut passed = 0;
    for _ in 0..budget {
        let theta = rng.gen_range(0.05..0.5);
        let k = rng.gen_range(1..=16u32);
        let alpha = rng.gen_range(0.08..0.8);
        let solved = solve_beta(theta, k, alpha).unwrap();
        let max_beta = 1.0 / alpha - 1e-9;
        let mut agreed = true;
        let mut beta = 1.0 + step;
        while beta < max_beta {
            let lhs = mixing_lhs(theta, k, alpha, beta).unwrap();
            let expected_feasible = solved.is_some_and(|b| beta > b);
            if solved.map_or(false, |b| (beta - b).abs() <= 1e-7) {
                beta += step;
                continue;
            }
            if (lhs < 0.0) != expected_feasible {
                agreed = false;
                break;
            }
            beta += step;
        }
        if agreed {
            passed += 1;
        }
    }
    CheckResult {
        name: name.to_string(),
        budget,
        ran: budget,
        passed,
        skipped: false,
        skip_reason: None,
        ok: passed == budget,
        details: format!("scan step {step}"),
    }
}

fn check_guarantee(seed: u64, budget: u64) -> CheckResult {
    let name = "mixing_guarantee_monte_carlo";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let modes = [
        ErrorMode::UniformRandom,
        ErrorMode::MeasureWeighted,
        ErrorMode::AdversarialGreedy,
    ];
    let results: Vec<(u64, u64)> = CERTIFIED_TUPLES
        .par_iter()
        .enumerate()
        .map(|(t, &(theta, k, alpha, beta))| {
            let mut ran = 0;
            let mut passed = 0;
            for trial in 0..budget {
                let graph_seed = derive_seed(seed, 105 + t as u64, trial);
                let cluster =
                    SkillCluster::uniform(MC_SKILLS, MC_PIECES, k as usize, graph_seed).unwrap();
                for (m, &mode) in modes.iter().enumerate() {
                    let y_seed = derive_seed(seed, 120 + t as u64 * 3 + m as u64, trial);
                    let y = sample_error_set(&cluster, theta, mode, y_seed).unwrap();
                    let check = verify_mixing_guarantee(&cluster, &y, alpha, beta).unwrap();
                    ran += 1;
                    if check.holds {
                        passed += 1;
                    }
                }
            }
            (ran, passed)
        })
        .collect();
    let ran: u64 = results.iter().map(|r| r.0).sum();
    let passed: u64 = results.iter().map(|r| r.1).sum();
    let rate = passed as f64 / ran as f64;
    CheckResult {
        name: name.to_string(),
        budget,
        ran,
        passed,
        skipped: false,
        skip_reason: None,
        ok: rate >= 0.999,
        details: format!(
            "{} certified tuples x {budget} graphs x 3 error modes at N1={MC_PIECES}, \
             N2={MC_SKILLS}; hold rate {rate:.5}",
            CERTIFIED_TUPLES.len()
        ),
    }
}

/// (θ, α, β) combinations on the tiny instance whose expected-bad-pairs
/// bound certifies below the given log threshold.
pub fn certified_small_instance_combos(log_threshold: f64) -> Vec<(f64, f64, f64)> {
    let thetas = [0.25, 1.0 / 3.0, 5.0 / 12.0, 0.5, 7.0 / 12.0, 2.0 / 3.0];
    let alphas = [0.125, 0.2, 0.25, 0.3, 0.375, 0.5];
    let mut combos = Vec::new();
    for &theta in &thetas {
        for &alpha in &alphas {
            let max_beta = 1.0 / alpha;
            for i in 1..8 {
                let beta = 1.0 + (max_beta - 1.0 - 1e-6) * i as f64 / 8.0;
                if beta <= 1.0 {
                    continue;
                }
                if let Ok(bound) = expected_bad_pairs_log_bound(
                    TINY_PIECES as u64,
                    TINY_SKILLS as u64,
                    TINY_K as u32,
                    theta,
                    alpha,
                    beta,
                ) {
                    if bound < log_threshold {
                        combos.push((theta, alpha, beta));
                    }
                }
            }
        }
    }
    combos
}

fn check_universality(seed: u64, budget: u64) -> CheckResult {
    let name = "small_instance_universality";
    if budget == 0 {
        return CheckResult::skipped(name, "budget is zero");
    }
    let combos = certified_small_instance_combos(0.01f64.ln());
    if combos.is_empty() {
        return CheckResult {
            name: name.to_string(),
            budget,
            ran: 0,
            passed: 0,
            skipped: false,
            skip_reason: None,
            ok: false,
            details: "no certified combinations on the tiny-instance grid".to_string(),
        };
    }
    let clean: u64 = (0..budget)
        .into_par_iter()
        .map(|g| {
            let cluster = SkillCluster::uniform(
                TINY_SKILLS,
                TINY_PIECES,
                TINY_K,
                derive_seed(seed, 140, g),
            )
            .unwrap();
            for &(theta, alpha, beta) in &combos {
                let worst = enumerate_worst_y(&cluster, theta, alpha, beta).unwrap();
                if worst.violating_measure > alpha {
                    return 0u64;
                }
            }
            1u64
        })
        .sum();
    let rate = clean as f64 / budget as f64;
    CheckResult {
        name: name.to_string(),
        budget,
        ran: budget,
        passed: clean,
        skipped: false,
        skip_reason: None,
        ok: rate >= 0.99,
        details: format!(
            "{} certified combos, exhaustive over all error sets; {clean}/{budget} graphs clean",
            combos.len()
        ),
    }
}

fn check_export_determinism(config: &RunConfig) -> CheckResult {
    let name = "export_determinism";
    let first = render_curves(config, OutputFormat::Csv);
    let second = render_curves(config, OutputFormat::Csv);
    match (first, second) {
        (Ok(a), Ok(b)) => {
            let ha: Vec<String> = a.iter().map(|(_, bytes)| sha256_hex(bytes)).collect();
            let hb: Vec<String> = b.iter().map(|(_, bytes)| sha256_hex(bytes)).collect();
            let ok = ha == hb;
            CheckResult {
                name: name.to_string(),
                budget: a.len() as u64,
                ran: a.len() as u64,
                passed: if ok { a.len() as u64 } else { 0 },
                skipped: false,
                skip_reason: None,
                ok,
                details: "two renders hashed identically".to_string(),
            }
        }
        (Err(e), _) | (_, Err(e)) => CheckResult {
            name: name.to_string(),
            budget: 0,
            ran: 0,
            passed: 0,
            skipped: false,
            skip_reason: None,
            ok: false,
            details: format!("render failed: {e}"),
        },
    }
}

fn check_generation_reproducibility(seed: u64) -> CheckResult {
    let name = "cluster_generation_reproducibility";
    let a = SkillCluster::uniform(50, 2_000, 4, derive_seed(seed, 150, 0)).unwrap();
    let b = SkillCluster::uniform(50, 2_000, 4, derive_seed(seed, 150, 0)).unwrap();
    let ok = a == b;
    CheckResult {
        name: name.to_string(),
        budget: 1,
        ran: 1,
        passed: ok as u64,
        skipped: false,
        skip_reason: None,
        ok,
        details: "identical seeds produce bit-identical clusters".to_string(),
    }
}

fn check_cluster_file(config: &RunConfig) -> Option<CheckResult> {
    let name = "cluster_file_validation";
    let path = config.cluster_file.as_ref()?;
    let outcome = std::fs::read_to_string(path)
        .map_err(|e| format!("read {}: {e}", path.display()))
        .and_then(|text| {
            serde_json::from_str::<SkillCluster>(&text).map_err(|e| e.to_string())
        });
    Some(match outcome {
        Ok(cluster) => CheckResult {
            name: name.to_string(),
            budget: 1,
            ran: 1,
            passed: 1,
            skipped: false,
            skip_reason: None,
            ok: true,
            details: format!(
                "cluster valid: {} skills, {} pieces, k = {}",
                cluster.num_skills(),
                cluster.num_pieces(),
                cluster.k()
            ),
        },
        Err(message) => CheckResult {
            name: name.to_string(),
            budget: 1,
            ran: 1,
            passed: 0,
            skipped: false,
            skip_reason: None,
            ok: false,
            details: message,
        },
    })
}

/// Runs every check under the configured budgets.
pub fn verify_suite(config: &RunConfig) -> Result<VerifyReport, CliError> {
    let seed = config.seed;
    let budgets = config.verify;
    let mut checks = vec![
        check_mixing_identity(seed, budgets.identity_samples),
        check_decomposition(seed, budgets.identity_samples),
        check_pinsker(seed, budgets.pinsker_samples),
        check_bisection_scan(seed, budgets.bisection_triples),
        check_guarantee(seed, budgets.guarantee_trials),
        check_universality(seed, budgets.universality_graphs),
        check_export_determinism(config),
        check_generation_reproducibility(seed),
    ];
    if let Some(result) = check_cluster_file(config) {
        checks.push(result);
    }
    let all_ok = checks.iter().all(|c| c.ok);
    Ok(VerifyReport { checks, all_ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certified_tuples_have_margin() {
        for &(theta, k, alpha, beta) in &CERTIFIED_TUPLES {
            let lhs = mixing_lhs(theta, k, alpha, beta).unwrap();
            assert!(lhs < -0.01, "({theta},{k},{alpha},{beta}) has lhs {lhs}");
        }
    }

    #[test]
    fn tiny_budget_marks_skips() {
        let mut config = RunConfig::default();
        config.verify = crate::config::VerifyBudgets {
            identity_samples: 0,
            pinsker_samples: 0,
            bisection_triples: 0,
            guarantee_trials: 0,
            universality_graphs: 0,
        };
        let report = verify_suite(&config).unwrap();
        let skipped: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.skipped)
            .map(|c| c.name.as_str())
            .collect();
        assert!(skipped.contains(&"mixing_lhs_algebraic_identity"));
        assert!(skipped.contains(&"mixing_guarantee_monte_carlo"));
        assert!(skipped.contains(&"small_instance_universality"));
        // Budget-free checks still run.
        assert!(report.checks.iter().any(|c| c.name == "export_determinism" && !c.skipped));
        assert!(report.all_ok);
    }

    #[test]
    fn small_instance_grid_is_nonempty() {
        let combos = certified_small_instance_combos(0.01f64.ln());
        assert!(!combos.is_empty());
        // All certified combos here are vacuously safe bounds (βθ > 1);
        // the check still validates bound-vs-enumeration consistency.
        for (theta, alpha, beta) in combos {
            assert!(theta > 0.0 && alpha > 0.0 && beta > 1.0);
        }
    }
}
