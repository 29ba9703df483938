//! Exhaustive reference decoder for tiny instances.
//!
//! Enumerates every frame-level path, multiplies its per-frame
//! probabilities in the linear domain, collapses it, and sums the masses
//! per label sequence with compensated summation. Fusion terms are added
//! once per sequence at the end. Shares nothing with the beam-search code
//! beyond the core types.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::alphabet::{collapse, Alphabet, LabelSequence};
use crate::error::{Error, Result};
use crate::lm::CharLm;
use crate::logmath::CompensatedSum;
use crate::posterior::PosteriorFrame;

/// Upper bound on `|L′|^T`.
pub const MAX_PATHS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleScore {
    /// `ln Σ_{π: F(π)=z} Π_t y_t[π_t]`.
    pub ctc_logp: f64,
    /// `ctc_logp + α·ln P_LM(z) + β·|z|`.
    pub fused: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OracleResult {
    /// Only sequences with nonzero CTC mass appear.
    pub scores: BTreeMap<LabelSequence, OracleScore>,
}

impl OracleResult {
    /// `Σ_z P_CTC(z)` in the linear domain.
    pub fn total_probability(&self) -> f64 {
        self.scores
            .values()
            .map(|s| s.ctc_logp.exp())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn get(&self, z: &[usize]) -> Option<&OracleScore> {
        self.scores.get(&z.iter().copied().collect::<LabelSequence>())
    }
}

pub fn oracle_decode<M: CharLm>(
    frames: &[PosteriorFrame<f64>],
    alphabet: &Alphabet,
    lm: &M,
    alpha: f64,
    beta: f64,
) -> Result<OracleResult> {
    let width = alphabet.len();
    let paths = (width as f64).powi(frames.len() as i32);
    if paths > MAX_PATHS {
        return Err(Error::InstanceTooLarge {
            paths,
            limit: MAX_PATHS,
        });
    }
    for f in frames {
        if f.len() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                found: f.len(),
            });
        }
    }
    let probs: Vec<Vec<f64>> = frames
        .iter()
        .map(|f| f.logp().iter().map(|x| x.exp()).collect())
        .collect();

    let t_len = frames.len();
    let mut sums: BTreeMap<LabelSequence, CompensatedSum> = BTreeMap::new();
    let mut path = vec![0usize; t_len];
    loop {
        let p: f64 = path.iter().enumerate().map(|(t, &s)| probs[t][s]).product();
        if p > 0.0 {
            sums.entry(collapse(&path, alphabet)?).or_default().add(p);
        }
        // Odometer increment over the path digits.
        let mut t = 0;
        while t < t_len {
            path[t] += 1;
            if path[t] < width {
                break;
            }
            path[t] = 0;
            t += 1;
        }
        if t == t_len {
            break;
        }
    }

    let mut scores = BTreeMap::new();
    for (z, sum) in sums {
        let mass = sum.value();
        if mass <= 0.0 {
            continue;
        }
        let ctc_logp = mass.ln();
        let lm_term = if alpha == 0.0 {
            0.0
        } else {
            alpha * lm.score_sequence(&z)?
        };
        let fused = ctc_logp + lm_term + beta * z.len() as f64;
        scores.insert(z, OracleScore { ctc_logp, fused });
    }
    Ok(OracleResult { scores })
}

/// Highest fused score; ties go to the shorter, then lexicographically
/// smaller sequence.
pub fn oracle_argmax(result: &OracleResult) -> Option<(LabelSequence, f64)> {
    result
        .scores
        .iter()
        .min_by(|(za, sa), (zb, sb)| {
            sb.fused
                .partial_cmp(&sa.fused)
                .unwrap_or(Ordering::Equal)
                .then(za.len().cmp(&zb.len()))
                .then_with(|| za.cmp(zb))
        })
        .map(|(z, s)| (z.clone(), s.fused))
}
