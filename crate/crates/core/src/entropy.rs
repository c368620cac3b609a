//! Information-theoretic primitives on finite distributions.
//!
//! All quantities are in nats (natural log); [`nats_to_bits`] converts for
//! display. The `0 ln 0 = 0` convention applies throughout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance for "probabilities sum to one".
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EntropyError {
    #[error("{what} = {value} lies outside [0, 1]")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("reference probability must lie strictly inside (0, 1), got {0}")]
    DegenerateReference(f64),
    #[error("distribution has empty support")]
    EmptySupport,
    #[error("negative probability {value} at index {index}")]
    NegativeProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}; expected 1 within {SUM_TOLERANCE:e}")]
    NotNormalized { sum: f64 },
    #[error("support sizes differ: {0} vs {1}")]
    SupportMismatch(usize, usize),
    #[error("q is not absolutely continuous w.r.t. p: q[{index}] = 0 while p[{index}] = {p}")]
    AbsoluteContinuity { index: usize, p: f64 },
}

/// A finite probability distribution, validated on construction.
///
/// Entries are non-negative and sum to one within [`SUM_TOLERANCE`]. There
/// is no silent renormalization: fix the input or call
/// [`Distribution::renormalized`] explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self, EntropyError> {
        if probs.is_empty() {
            return Err(EntropyError::EmptySupport);
        }
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(EntropyError::NegativeProbability { index, value });
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(EntropyError::NotNormalized { sum });
        }
        Ok(Self { probs })
    }

    /// The uniform distribution on `n` outcomes.
    pub fn uniform(n: usize) -> Self {
        assert!(n >= 1, "uniform distribution needs at least one outcome");
        Self {
            probs: vec![1.0 / n as f64; n],
        }
    }

    /// Scales a non-negative weight vector to total mass one.
    pub fn renormalized(weights: Vec<f64>) -> Result<Self, EntropyError> {
        if weights.is_empty() {
            return Err(EntropyError::EmptySupport);
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(EntropyError::NegativeProbability { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(EntropyError::NotNormalized { sum });
        }
        Ok(Self {
            probs: weights.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// True when every entry is bit-identical to the first. Construction via
    /// [`Distribution::uniform`] guarantees this; it gates fast sampling paths.
    pub fn is_uniform(&self) -> bool {
        self.probs.iter().all(|&p| p == self.probs[0])
    }
}

impl TryFrom<Vec<f64>> for Distribution {
    type Error = EntropyError;
    fn try_from(probs: Vec<f64>) -> Result<Self, EntropyError> {
        Self::new(probs)
    }
}

impl From<Distribution> for Vec<f64> {
    fn from(d: Distribution) -> Vec<f64> {
        d.probs
    }
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}

/// Unchecked binary entropy; callers guarantee `t` in `[0, 1]`.
pub(crate) fn h_nat(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    -t * t.ln() - (1.0 - t) * (1.0 - t).ln()
}

/// Unchecked Bernoulli KL; callers guarantee `x` in `[0, 1]`, `a` in `(0, 1)`.
pub(crate) fn bernoulli_kl_raw(x: f64, a: f64) -> f64 {
    let mut s = 0.0;
    if x > 0.0 {
        s += x * (x / a).ln();
    }
    if x < 1.0 {
        s += (1.0 - x) * ((1.0 - x) / (1.0 - a)).ln();
    }
    s
}

/// Binary entropy H(t) = −t ln t − (1−t) ln(1−t), in `[0, ln 2]`.
pub fn binary_entropy(t: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(EntropyError::OutOfRange {
            what: "binary entropy argument",
            value: t,
        });
    }
    Ok(h_nat(t))
}

/// KL divergence between Bernoulli(x) and Bernoulli(a): x ln(x/a) + (1−x) ln((1−x)/(1−a)).
///
/// Non-negative, zero exactly at x = a.
pub fn bernoulli_kl(x: f64, a: f64) -> Result<f64, EntropyError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(EntropyError::OutOfRange {
            what: "bernoulli probability",
            value: x,
        });
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(EntropyError::DegenerateReference(a));
    }
    Ok(bernoulli_kl_raw(x, a))
}

fn check_pair(p: &Distribution, q: &Distribution) -> Result<(), EntropyError> {
    if p.len() != q.len() {
        return Err(EntropyError::SupportMismatch(p.len(), q.len()));
    }
    Ok(())
}

/// KL(p‖q) = Σ p(w) ln(p(w)/q(w)), the excess entropy of coding p with q.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64, EntropyError> {
    check_pair(p, q)?;
    let mut sum = 0.0;
    for (index, (&pw, &qw)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pw > 0.0 {
            if qw <= 0.0 {
                return Err(EntropyError::AbsoluteContinuity { index, p: pw });
            }
            sum += pw * (pw / qw).ln();
        }
    }
    // Rounding can push the sum a hair below zero when p == q.
    Ok(sum.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossEntropyParts {
    pub cross_entropy: f64,
    pub entropy: f64,
    pub excess: f64,
}

/// Splits −Σ p ln q into entropy H(p) plus excess entropy KL(p‖q).
pub fn cross_entropy_decompose(
    p: &Distribution,
    q: &Distribution,
) -> Result<CrossEntropyParts, EntropyError> {
    let excess = kl_divergence(p, q)?;
    let entropy: f64 = p
        .as_slice()
        .iter()
        .filter(|&&pw| pw > 0.0)
        .map(|&pw| -pw * pw.ln())
        .sum();
    let cross_entropy: f64 = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(&pw, _)| pw > 0.0)
        .map(|(&pw, &qw)| -pw * qw.ln())
        .sum();
    Ok(CrossEntropyParts {
        cross_entropy,
        entropy,
        excess,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClozeSplit {
    /// Indices where p(w) > q(w); ties are excluded, which is deterministic
    /// and leaves the disagreement unchanged.
    pub set_a: Vec<usize>,
    /// Σ over `set_a` of p(w) − q(w); equals half the L1 distance.
    pub disagreement: f64,
}

/// The answer split that maximizes the chance p and q answer differently:
/// a binary cloze question asking "is the next word in A?".
pub fn optimal_cloze_split(
    p: &Distribution,
    q: &Distribution,
) -> Result<ClozeSplit, EntropyError> {
    check_pair(p, q)?;
    let mut set_a = Vec::new();
    let mut disagreement = 0.0;
    for (index, (&pw, &qw)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if pw > qw {
            set_a.push(index);
            disagreement += pw - qw;
        }
    }
    Ok(ClozeSplit {
        set_a,
        disagreement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinskerBound {
    /// √(2·KL(p‖q)) — the guarantee used for cloze questions.
    pub bound: f64,
    /// √(KL(p‖q)/2) — the classical Pinsker constant for half-L1 total
    /// variation, reported for diagnostics; it is the tighter of the two.
    pub classical_bound: f64,
    /// Disagreement of the optimal split (half-L1 distance).
    pub disagreement: f64,
    pub satisfied: bool,
}

/// Bounds the probability that model and reference answer the optimal binary
/// cloze question differently by √(2·excess entropy).
pub fn pinsker_cloze_bound(
    p: &Distribution,
    q: &Distribution,
) -> Result<PinskerBound, EntropyError> {
    let kl = kl_divergence(p, q)?;
    let split = optimal_cloze_split(p, q)?;
    let bound = (2.0 * kl).sqrt();
    let classical_bound = (kl / 2.0).sqrt();
    Ok(PinskerBound {
        bound,
        classical_bound,
        disagreement: split.disagreement,
        satisfied: split.disagreement <= bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN_2: f64 = std::f64::consts::LN_2;

    fn dist(v: &[f64]) -> Distribution {
        Distribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn binary_entropy_boundary_convention() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
    }

    #[test]
    fn binary_entropy_maximum_at_half() {
        assert!((binary_entropy(0.5).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn binary_entropy_frozen_tenth() {
        // Independent high-precision evaluation: 0.32508297339144823951
        assert!((binary_entropy(0.1).unwrap() - 0.325082973391448_24).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_rejects_out_of_range() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn bernoulli_kl_zero_at_identity() {
        assert_eq!(bernoulli_kl(0.3, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn bernoulli_kl_frozen() {
        // Independent high-precision evaluation: 0.55605721904487028143
        assert!((bernoulli_kl(0.4, 0.05).unwrap() - 0.556057219044870_28).abs() < 1e-12);
    }

    #[test]
    fn bernoulli_kl_degenerate_bernoulli() {
        assert!((bernoulli_kl(1.0, 0.5).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_kl_rejects_degenerate_reference() {
        assert!(bernoulli_kl(0.5, 0.0).is_err());
        assert!(bernoulli_kl(0.5, 1.0).is_err());
        assert!(bernoulli_kl(1.5, 0.5).is_err());
    }

    #[test]
    fn kl_zero_for_equal() {
        let p = dist(&[0.3, 0.4, 0.3]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_frozen_pair() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.25, 0.75]);
        // 0.5 ln(4/3) = 0.14384103622589046
        assert!((kl_divergence(&p, &q).unwrap() - 0.143841036225890_46).abs() < 1e-12);
    }

    #[test]
    fn kl_fully_confused_model() {
        // Certain reference vs a 50/50 model: the whole ln 2 is excess.
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.5, 0.5]);
        assert!((kl_divergence(&p, &q).unwrap() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_absolute_continuity_error() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[1.0, 0.0]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(EntropyError::AbsoluteContinuity { index: 1, .. })
        ));
    }

    #[test]
    fn kl_support_mismatch() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.5, 0.25, 0.25]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(EntropyError::SupportMismatch(2, 3))
        ));
    }

    #[test]
    fn decompose_uniform_pair() {
        let u = dist(&[0.5, 0.5]);
        let parts = cross_entropy_decompose(&u, &u).unwrap();
        assert!((parts.cross_entropy - LN_2).abs() < 1e-15);
        assert!((parts.entropy - LN_2).abs() < 1e-15);
        assert_eq!(parts.excess, 0.0);
    }

    #[test]
    fn decompose_frozen_pair() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.25, 0.75]);
        let parts = cross_entropy_decompose(&p, &q).unwrap();
        // Independent summation: 0.83698821678583577, ln 2, 0.14384103622589046
        assert!((parts.cross_entropy - 0.836988216785835_77).abs() < 1e-12);
        assert!((parts.entropy - LN_2).abs() < 1e-12);
        assert!((parts.excess - 0.143841036225890_46).abs() < 1e-12);
        assert!((parts.cross_entropy - parts.entropy - parts.excess).abs() < 1e-12);
    }

    #[test]
    fn decompose_certain_reference() {
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.5, 0.5]);
        let parts = cross_entropy_decompose(&p, &q).unwrap();
        assert!((parts.cross_entropy - LN_2).abs() < 1e-15);
        assert_eq!(parts.entropy, 0.0);
        assert!((parts.excess - LN_2).abs() < 1e-15);
    }

    /// Exhaustive subset maximization, kept independent of the implementation.
    fn brute_force_split(p: &[f64], q: &[f64]) -> f64 {
        let n = p.len();
        let mut best = 0.0f64;
        for mask in 0..(1u32 << n) {
            let mut s = 0.0;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    s += p[i] - q[i];
                }
            }
            best = best.max(s);
        }
        best
    }

    #[test]
    fn cloze_split_equal_distributions() {
        let p = dist(&[0.2, 0.8]);
        let split = optimal_cloze_split(&p, &p).unwrap();
        assert!(split.set_a.is_empty());
        assert_eq!(split.disagreement, 0.0);
    }

    #[test]
    fn cloze_split_certain_vs_uniform() {
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.5, 0.5]);
        let split = optimal_cloze_split(&p, &q).unwrap();
        assert_eq!(split.set_a, vec![0]);
        assert!((split.disagreement - 0.5).abs() < 1e-15);
        assert!((split.disagreement - brute_force_split(p.as_slice(), q.as_slice())).abs() < 1e-15);
    }

    #[test]
    fn cloze_split_three_outcomes() {
        let p = dist(&[0.7, 0.2, 0.1]);
        let q = dist(&[0.2, 0.5, 0.3]);
        let split = optimal_cloze_split(&p, &q).unwrap();
        assert_eq!(split.set_a, vec![0]);
        assert!((split.disagreement - 0.5).abs() < 1e-15);
        assert!((split.disagreement - brute_force_split(p.as_slice(), q.as_slice())).abs() < 1e-15);
    }

    #[test]
    fn pinsker_equal_distributions() {
        let p = dist(&[0.4, 0.6]);
        let b = pinsker_cloze_bound(&p, &p).unwrap();
        assert_eq!(b.bound, 0.0);
        assert!(b.satisfied);
    }

    #[test]
    fn pinsker_confused_model() {
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.5, 0.5]);
        let b = pinsker_cloze_bound(&p, &q).unwrap();
        // sqrt(2 ln 2) = 1.177410022515474691
        assert!((b.bound - 1.177410022515474_7).abs() < 1e-12);
        assert!((b.disagreement - 0.5).abs() < 1e-15);
        assert!(b.satisfied);
        assert!(b.classical_bound < b.bound);
    }

    #[test]
    fn distribution_rejects_bad_input() {
        assert!(matches!(
            Distribution::new(vec![]),
            Err(EntropyError::EmptySupport)
        ));
        assert!(matches!(
            Distribution::new(vec![0.5, -0.1, 0.6]),
            Err(EntropyError::NegativeProbability { index: 1, .. })
        ));
        assert!(matches!(
            Distribution::new(vec![0.5, 0.6]),
            Err(EntropyError::NotNormalized { .. })
        ));
    }

    #[test]
    fn renormalization_is_explicit() {
        let d = Distribution::renormalized(vec![2.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.as_slice(), &[0.5, 0.25, 0.25]);
        assert!(Distribution::renormalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn uniform_flag_detected() {
        assert!(Distribution::uniform(7).is_uniform());
        assert!(!dist(&[0.5, 0.25, 0.25]).is_uniform());
    }
}
