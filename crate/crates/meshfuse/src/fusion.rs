//! Combined scoring of forwarding candidates and the top-k selection rule.
//!
//! Each candidate gets four model outputs — success probability (A),
//! expected remaining hops (B), expected remaining delay in seconds (C)
//! and forwarder suitability (D) — combined linearly into one score.
//! The full variant shortlists the top-k candidates by D first; if the best
//! combined score sits below the threshold, selection signals fallback and
//! the caller reverts to classic AODV choice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::models::ModelBundle;
use crate::sim::Strategy;

/// Unweighted combined score: `d + a - b - c/100`.
pub fn score_eq6(a: f64, b: f64, c: f64, d: f64) -> f64 {
    d + a - b - c / 100.0
}

/// Three-model score: `0.5a - 0.25b - 0.25(c/100)`.
pub fn score_abc(a: f64, b: f64, c: f64) -> f64 {
    0.5 * a - 0.25 * b - 0.25 * (c / 100.0)
}

/// Four-model score: `0.4d + 0.4a - 0.1b - 0.1(c/100)`.
pub fn score_abcd(a: f64, b: f64, c: f64, d: f64) -> f64 {
    0.4 * d + 0.4 * a - 0.1 * b - 0.1 * (c / 100.0)
}

/// Which scoring formula a weight set represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionVariant {
    /// The unweighted general form; shortlists by D like the full variant.
    Eq6,
    /// Models A, B, C only; every candidate is scored, no shortlist.
    Abc,
    /// All four models with the tuned weights and a top-k shortlist.
    Abcd,
}

/// Weights applied as `w_d*d + w_a*a - w_b*b - w_c*(c/delay_divisor)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    pub w_d: f64,
    pub w_a: f64,
    pub w_b: f64,
    pub w_c: f64,
    pub delay_divisor: f64,
    pub variant: FusionVariant,
}

impl FusionWeights {
    pub fn abc(delay_divisor: f64) -> Self {
        FusionWeights {
            w_d: 0.0,
            w_a: 0.5,
            w_b: 0.25,
            w_c: 0.25,
            delay_divisor,
            variant: FusionVariant::Abc,
        }
    }

    pub fn abcd(delay_divisor: f64) -> Self {
        FusionWeights {
            w_d: 0.4,
            w_a: 0.4,
            w_b: 0.1,
            w_c: 0.1,
            delay_divisor,
            variant: FusionVariant::Abcd,
        }
    }

    pub fn eq6(delay_divisor: f64) -> Self {
        FusionWeights {
            w_d: 1.0,
            w_a: 1.0,
            w_b: 1.0,
            w_c: 1.0,
            delay_divisor,
            variant: FusionVariant::Eq6,
        }
    }

    /// Whether candidates are pre-filtered to the top-k by Model D.
    pub fn uses_shortlist(&self) -> bool {
        !matches!(self.variant, FusionVariant::Abc)
    }

    pub fn combine(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        self.w_d * d + self.w_a * a - self.w_b * b - self.w_c * (c / self.delay_divisor)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delay_divisor <= 0.0 {
            return Err(Error::Config("delay_divisor must be positive".into()));
        }
        Ok(())
    }
}

/// Selection knobs carried in the simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionParams {
    /// Shortlist size for D-based pre-filtering.
    pub k: usize,
    /// Minimum combined score for a model-based pick; below it the caller
    /// falls back to classic AODV selection.
    pub threshold: f64,
    /// Scale applied to the delay prediction inside the combined score.
    pub delay_divisor: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            k: 3,
            threshold: 0.0,
            delay_divisor: 100.0,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("fusion k must be >= 1".into()));
        }
        if self.delay_divisor <= 0.0 {
            return Err(Error::Config("delay_divisor must be positive".into()));
        }
        Ok(())
    }

    pub fn weights_for(&self, strategy: Strategy) -> FusionWeights {
        match strategy {
            Strategy::Abcd | Strategy::Baseline => FusionWeights::abcd(self.delay_divisor),
            Strategy::Abc => FusionWeights::abc(self.delay_divisor),
        }
    }
}

/// Model outputs and combined score of one scored candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBreakdown {
    pub candidate_id: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub combined: f64,
}

/// Result of fusion-based selection: a forwarder or the fallback signal.
#[derive(Debug, Clone, PartialEq)]
pub enum Decision {
    Chosen { id: u32, breakdown: ScoreBreakdown },
    Fallback,
}

/// Chooses a forwarder among `candidates` (id plus features, any order).
///
/// Shortlist variants rank by Model D descending (ties by lower id), keep
/// the top `k`, then score with the combined formula; the ABC variant
/// scores every candidate directly. The best scorer wins (ties by lower
/// id); an empty candidate set or a best score below `threshold` yields
/// [`Decision::Fallback`]. Never returns "no decision".
pub fn select_forwarder(
    candidates: &[(u32, FeatureVector)],
    bundle: &ModelBundle,
    k: usize,
    threshold: f64,
    weights: &FusionWeights,
) -> Decision {
    if candidates.is_empty() || k == 0 {
        return Decision::Fallback;
    }

    let shortlist: Vec<(u32, &FeatureVector, f64)> = if weights.uses_shortlist() {
        let mut ranked: Vec<(u32, &FeatureVector, f64)> = candidates
            .iter()
            .map(|(id, fv)| (*id, fv, bundle.predict_d(fv)))
            .collect();
        ranked.sort_by(|x, y| {
            y.2.partial_cmp(&x.2)
                .expect("model D outputs are finite")
                .then(x.0.cmp(&y.0))
        });
        ranked.truncate(k);
        ranked
    } else {
        candidates.iter().map(|(id, fv)| (*id, fv, 0.0)).collect()
    };

    let mut best: Option<ScoreBreakdown> = None;
    for (id, fv, d) in shortlist {
        let a = bundle.predict_a(fv);
        let b = bundle.predict_b(fv);
        let c = bundle.predict_c(fv);
        let combined = weights.combine(a, b, c, d);
        let bd = ScoreBreakdown { candidate_id: id, a, b, c, d, combined };
        let better = match &best {
            None => true,
            Some(cur) => {
                combined > cur.combined || (combined == cur.combined && id < cur.candidate_id)
            }
        };
        if better {
            best = Some(bd);
        }
    }

    match best {
        Some(bd) if bd.combined >= threshold => Decision::Chosen { id: bd.candidate_id, breakdown: bd },
        _ => Decision::Fallback,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn eq6_hand_values() {
        assert!((score_eq6(1.0, 0.0, 0.0, 1.0) - 2.0).abs() < EPS);
        assert!((score_eq6(1.0, 2.0, 100.0, 1.0) - (-1.0)).abs() < EPS);
        assert!((score_eq6(0.0, 0.0, 0.0, 0.0)).abs() < EPS);
    }

    #[test]
    fn abc_hand_values() {
        assert!((score_abc(1.0, 0.0, 0.0) - 0.5).abs() < EPS);
        assert!((score_abc(1.0, 1.0, 100.0)).abs() < EPS);
        assert!((score_abc(0.0, 4.0, 0.0) - (-1.0)).abs() < EPS);
    }

    #[test]
    fn abcd_hand_values() {
        assert!((score_abcd(1.0, 0.0, 0.0, 1.0) - 0.8).abs() < EPS);
        assert!((score_abcd(1.0, 4.0, 140.0, 1.0) - 0.26).abs() < EPS);
        assert!((score_abcd(0.0, 0.0, 0.0, 0.0)).abs() < EPS);
    }

    #[test]
    fn presets_match_the_direct_formulas() {
        let cases = [
            (0.9, 2.0, 35.0, 0.7),
            (0.1, 7.5, 140.0, 0.2),
            (1.0, 0.0, 0.0, 1.0),
        ];
        for (a, b, c, d) in cases {
            assert!((FusionWeights::abcd(100.0).combine(a, b, c, d) - score_abcd(a, b, c, d)).abs() < EPS);
            assert!((FusionWeights::abc(100.0).combine(a, b, c, d) - score_abc(a, b, c)).abs() < EPS);
            assert!((FusionWeights::eq6(100.0).combine(a, b, c, d) - score_eq6(a, b, c, d)).abs() < EPS);
        }
    }

    #[test]
    fn combined_is_reproducible_from_breakdown_fields() {
        let w = FusionWeights::abcd(100.0);
        let bd = ScoreBreakdown {
            candidate_id: 3,
            a: 0.73,
            b: 2.25,
            c: 48.5,
            d: 0.61,
            combined: w.combine(0.73, 2.25, 48.5, 0.61),
        };
        assert!((bd.combined - w.combine(bd.a, bd.b, bd.c, bd.d)).abs() < EPS);
    }
}
