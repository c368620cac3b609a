//! Scaling-law arithmetic: loss decomposition, the loss → error-fraction
//! map, union-vs-solo training comparison, and tuple-coverage accounting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::entropy::Distribution;

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("skill count {skills} must stay below the token count {tokens}")]
    SkillCountExceedsData { skills: f64, tokens: f64 },
    #[error("weights and losses differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

fn check_positive(what: &'static str, value: f64) -> Result<(), ScalingError> {
    if !(value > 0.0) {
        return Err(ScalingError::NonPositive { what, value });
    }
    Ok(())
}

/// Parametric loss law  L(N, D) = A + B/N^a + C/D^b.
///
/// The irreducible term A is the entropy of the data itself; the two power
/// terms are the excess entropy that scaling drives down. Defaults are the
/// published Chinchilla fit; the constants are architecture- and
/// tokenizer-specific, so they stay configurable per run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingLaw {
    pub irreducible: f64,
    pub param_coeff: f64,
    pub data_coeff: f64,
    pub param_exponent: f64,
    pub data_exponent: f64,
}

impl Default for ScalingLaw {
    fn default() -> Self {
        Self {
            irreducible: 1.61,
            param_coeff: 406.4,
            data_coeff: 410.7,
            param_exponent: 0.34,
            data_exponent: 0.28,
        }
    }
}

impl ScalingLaw {
    pub fn validate(&self) -> Result<(), ScalingError> {
        check_positive("irreducible entropy", self.irreducible)?;
        check_positive("parameter coefficient", self.param_coeff)?;
        check_positive("data coefficient", self.data_coeff)?;
        check_positive("parameter exponent", self.param_exponent)?;
        check_positive("data exponent", self.data_exponent)?;
        Ok(())
    }

    fn check_scale(params: f64, tokens: f64) -> Result<(), ScalingError> {
        check_positive("parameter count", params)?;
        check_positive("token count", tokens)?;
        Ok(())
    }

    pub fn param_term(&self, params: f64) -> f64 {
        self.param_coeff / params.powf(self.param_exponent)
    }

    pub fn data_term(&self, tokens: f64) -> f64 {
        self.data_coeff / tokens.powf(self.data_exponent)
    }

    /// Test loss at a given scale: A + B/N^a + C/D^b.
    pub fn loss(&self, params: f64, tokens: f64) -> Result<f64, ScalingError> {
        Self::check_scale(params, tokens)?;
        Ok(self.irreducible + self.param_term(params) + self.data_term(tokens))
    }

    /// Excess entropy: the loss above the irreducible floor, strictly
    /// positive and decreasing in both arguments.
    pub fn excess_entropy(&self, params: f64, tokens: f64) -> Result<f64, ScalingError> {
        Self::check_scale(params, tokens)?;
        Ok(self.param_term(params) + self.data_term(tokens))
    }

    /// Exponent e such that union training beats naive single-skill
    /// learning-theory rates once S > D^e; equals 1 − 2·(data exponent).
    pub fn crossover_exponent(&self) -> f64 {
        1.0 - 2.0 * self.data_exponent
    }
}

/// Error-fraction bound from a per-piece excess loss δ: a piece counts as a
/// mistake when its loss reaches 1/2, so at most a 2δ fraction of pieces are
/// mistakes. Clamped at 1; a clamped value means the analysis has nothing to
/// say yet at this scale.
pub fn theta_from_loss(delta: f64) -> Result<f64, ScalingError> {
    check_positive("per-piece excess loss", delta)?;
    Ok((2.0 * delta).min(1.0))
}

/// Rate comparison for training one model on the union of S skills versus
/// one model per skill, all rates normalized so the union rate is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlingshotComparison {
    /// Union-training excess rate (the normalization unit).
    pub union_rate: f64,
    /// Per-skill training is worse by the factor S^(data exponent).
    pub solo_rate: f64,
    /// Naive learning-theory rate 1/sqrt(D/S), in union-rate units.
    pub naive_rate: f64,
    /// solo/union advantage factor, S^(data exponent).
    pub advantage: f64,
    /// True when the naive rate exceeds the union rate, i.e. S > D^(1−2b).
    pub crossover: bool,
    pub crossover_exponent: f64,
}

/// Compares excess-entropy scaling on a union corpus of `skills`
/// sub-languages against per-skill training and against the naive
/// learning-theory rate. All exponent arithmetic runs in log10 space.
pub fn slingshot_compare(
    law: &ScalingLaw,
    tokens: f64,
    skills: f64,
) -> Result<SlingshotComparison, ScalingError> {
    check_positive("token count", tokens)?;
    if !(skills >= 1.0) {
        return Err(ScalingError::NonPositive {
            what: "skill count",
            value: skills,
        });
    }
    if skills >= tokens {
        return Err(ScalingError::SkillCountExceedsData {
            skills,
            tokens,
        });
    }
    let b = law.data_exponent;
    let log_s = skills.log10();
    let log_d = tokens.log10();
    // union ∝ 1/D^b, solo ∝ S^b/D^b, naive = sqrt(S/D); divide through by the union rate.
    let solo_rate = 10f64.powf(b * log_s);
    let naive_rate = 10f64.powf(0.5 * log_s - (0.5 - b) * log_d);
    let crossover_exponent = law.crossover_exponent();
    Ok(SlingshotComparison {
        union_rate: 1.0,
        solo_rate,
        naive_rate,
        advantage: solo_rate,
        crossover: log_s > crossover_exponent * log_d,
        crossover_exponent,
    })
}

/// Coverage accounting for k'-tuples of skills, in log10 space: a corpus
/// grown to D·c^k' tokens against S^k' distinct tuples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PaucityCheck {
    /// log10 of D·c^k', the most tuple occurrences the corpus could exhibit.
    pub log10_seen_bound: f64,
    /// log10 of S^k', the number of tuples of size k'.
    pub log10_tuple_count: f64,
    pub margin_decades: f64,
    /// True when the corpus bound falls more than `margin_decades` short.
    pub paucity: bool,
}

pub fn paucity_check(
    tokens: f64,
    per_decade_multiplier: f64,
    skills: f64,
    kprime: u32,
    margin_decades: f64,
) -> Result<PaucityCheck, ScalingError> {
    check_positive("token count", tokens)?;
    check_positive("per-decade data multiplier", per_decade_multiplier)?;
    check_positive("skill count", skills)?;
    if kprime == 0 {
        return Err(ScalingError::NonPositive {
            what: "tuple size",
            value: 0.0,
        });
    }
    let log10_seen_bound = tokens.log10() + kprime as f64 * per_decade_multiplier.log10();
    let log10_tuple_count = kprime as f64 * skills.log10();
    Ok(PaucityCheck {
        log10_seen_bound,
        log10_tuple_count,
        margin_decades,
        paucity: log10_seen_bound < log10_tuple_count - margin_decades,
    })
}

/// Corpus-level loss over disjoint clusters: the weighted sum of per-cluster
/// losses. The theory says nothing about how loss splits across clusters;
/// the per-cluster values are caller-supplied.
pub fn multi_cluster_loss(
    weights: &Distribution,
    losses: &[f64],
) -> Result<f64, ScalingError> {
    if weights.len() != losses.len() {
        return Err(ScalingError::LengthMismatch(weights.len(), losses.len()));
    }
    Ok(weights
        .as_slice()
        .iter()
        .zip(losses)
        .map(|(w, l)| w * l)
        .sum())
}
