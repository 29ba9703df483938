//! Stateful character language models.
//!
//! A [`CharLm`] scores one label at a time given an opaque, cloneable
//! context. The decoder keeps one context per hypothesis node, so contexts
//! must be cheap to clone and must never share mutable state.

mod ngram;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alphabet::{Alphabet, EOS_CHAR};
use crate::error::{Error, Result};
use crate::logmath::CompensatedSum;

pub use ngram::{training_stream, NgramCharLm, NgramContext, DEFAULT_DISCOUNT};

pub trait CharLm {
    type Context: Clone + std::fmt::Debug + PartialEq + Send + Sync;

    /// Shares index space with the decoder; the blank is never scored.
    fn alphabet(&self) -> &Alphabet;

    /// Context at a sentence start, i.e. just after consuming EOS.
    fn initial_context(&self) -> Self::Context;

    /// `ln P(label | ctx)` for a valid label index.
    fn log_prob(&self, ctx: &Self::Context, label: usize) -> Result<f64>;

    /// Successor context after appending `label`.
    fn extend(&self, ctx: &Self::Context, label: usize) -> Self::Context;

    fn advance(&self, ctx: &Self::Context, label: usize) -> Result<(Self::Context, f64)> {
        let lp = self.log_prob(ctx, label)?;
        Ok((self.extend(ctx, label), lp))
    }

    /// Log-probabilities indexed like the alphabet; the blank slot is `-inf`.
    fn next_log_probs(&self, ctx: &Self::Context) -> Vec<f64> {
        let a = self.alphabet();
        (0..a.len())
            .map(|i| {
                if a.is_label(i) {
                    self.log_prob(ctx, i).unwrap_or(f64::NEG_INFINITY)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect()
    }

    /// `Σᵢ ln P(zᵢ | z<ᵢ)` from the initial context.
    fn score_sequence(&self, labels: &[usize]) -> Result<f64> {
        let mut ctx = self.initial_context();
        let mut total = 0.0;
        for &l in labels {
            let (next, lp) = self.advance(&ctx, l)?;
            total += lp;
            ctx = next;
        }
        Ok(total)
    }
}

macro_rules! forward_lm {
    ($($ty:ty),*) => {$(
        impl<T: CharLm + ?Sized> CharLm for $ty {
            type Context = T::Context;

            fn alphabet(&self) -> &Alphabet {
                (**self).alphabet()
            }

            fn initial_context(&self) -> Self::Context {
                (**self).initial_context()
            }

            fn log_prob(&self, ctx: &Self::Context, label: usize) -> Result<f64> {
                (**self).log_prob(ctx, label)
            }

            fn extend(&self, ctx: &Self::Context, label: usize) -> Self::Context {
                (**self).extend(ctx, label)
            }
        }
    )*};
}

forward_lm!(&T, std::sync::Arc<T>, Box<T>);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BpcReport {
    pub bits_per_char: f64,
    pub perplexity: f64,
    /// Scored symbols, EOS at line ends included.
    pub scored: usize,
    pub dropped: usize,
}

/// Bits per character over held-out text, one sentence per line. Context is
/// carried across lines; each line end scores an EOS when the alphabet has
/// one.
pub fn lm_bpc<M: CharLm>(lm: &M, heldout: &str) -> Result<BpcReport> {
    let a = lm.alphabet();
    let mut ctx = lm.initial_context();
    let mut nats = CompensatedSum::new();
    let mut scored = 0;
    let mut dropped = 0;
    for line in heldout.lines() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let (seq, d) = a.encode_lossy(line);
        dropped += d;
        for &l in seq.iter().chain(a.eos().as_ref()) {
            let (next, lp) = lm.advance(&ctx, l)?;
            nats.add(lp);
            scored += 1;
            ctx = next;
        }
    }
    if scored == 0 {
        return Err(Error::Empty("held-out text has no scorable characters"));
    }
    let bits_per_char = -(nats.value() / scored as f64) / std::f64::consts::LN_2;
    Ok(BpcReport {
        bits_per_char,
        perplexity: bits_per_char.exp2(),
        scored,
        dropped,
    })
}

/// Ancestral sampling, one label at a time, from the initial context. EOS
/// is rendered as a line break. `temperature` rescales log-probabilities.
pub fn lm_sample<M: CharLm>(lm: &M, max_chars: usize, temperature: f64, seed: u64) -> Result<String> {
    if max_chars == 0 {
        return Err(Error::InvalidConfig("max_chars must be at least 1".into()));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidConfig("temperature must be positive".into()));
    }
    let a = lm.alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ctx = lm.initial_context();
    let mut out = String::with_capacity(max_chars);
    for _ in 0..max_chars {
        let logp = lm.next_log_probs(&ctx);
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = logp.iter().map(|&x| ((x - max) / temperature).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            pick = Some(i);
            if u < w {
                break;
            }
            u -= w;
        }
        let label = pick.ok_or(Error::Empty("language model has no support"))?;
        out.push(a.char_of(label).unwrap_or(EOS_CHAR));
        ctx = lm.extend(&ctx, label);
    }
    Ok(out)
}
