//! Synthetic CTC-shaped posteriors from a transcript, and the greedy
//! best-path baseline.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::alphabet::{collapse, Alphabet, LabelSequence};
use crate::error::{Error, Result};
use crate::logmath::log_sum_exp_slice;
use crate::posterior::PosteriorFrame;
use crate::scalar::LogFloat;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub frames_per_char: usize,
    /// Blank-peaked frames before the first character and after each one.
    pub blank_run: usize,
    /// Mass on the intended symbol.
    pub peak_prob: f64,
    /// Mass spread evenly over every other symbol.
    pub noise_eps: f64,
    /// Standard deviation of Gaussian noise added to each log-probability
    /// before renormalizing; 0 keeps frames exactly as specified above.
    pub logit_noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            frames_per_char: 4,
            blank_run: 2,
            peak_prob: 0.9,
            noise_eps: 0.1,
            logit_noise: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    /// Peak `p`, the rest scattered.
    pub fn with_peak(peak_prob: f64) -> Self {
        Self {
            peak_prob,
            noise_eps: 1.0 - peak_prob,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.frames_per_char < 1 || self.blank_run < 1 {
            return bad("frames_per_char and blank_run must be at least 1");
        }
        if !(self.peak_prob > 0.0 && self.peak_prob <= 1.0) || !(self.noise_eps >= 0.0) {
            return bad("peak_prob must lie in (0, 1] and noise_eps be non-negative");
        }
        if (self.peak_prob + self.noise_eps - 1.0).abs() > 1e-9 {
            return bad("peak_prob + noise_eps must equal 1");
        }
        if !(self.logit_noise >= 0.0 && self.logit_noise.is_finite()) {
            return bad("logit_noise must be finite and non-negative");
        }
        Ok(())
    }

    pub fn frame_count(&self, text_len: usize) -> usize {
        self.blank_run + text_len * (self.frames_per_char + self.blank_run)
    }
}

/// Blank run, then per character `frames_per_char` frames peaked on it
/// followed by another blank run.
pub fn synth_posteriors<F: LogFloat>(text: &str, alphabet: &Alphabet, config: &SynthConfig) -> Result<Vec<PosteriorFrame<F>>> {
    config.validate()?;
    let labels = alphabet.encode(text)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.logit_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let width = alphabet.len();
    let scatter = config.noise_eps / (width - 1) as f64;

    let mut frame_for = |target: usize| -> PosteriorFrame<F> {
        let mut logp: Vec<f64> = (0..width)
            .map(|i| if i == target { config.peak_prob } else { scatter }.ln())
            .collect();
        if config.logit_noise > 0.0 {
            for x in logp.iter_mut() {
                *x += noise.sample(&mut rng);
            }
            let z = log_sum_exp_slice(&logp);
            for x in logp.iter_mut() {
                *x -= z;
            }
        }
        PosteriorFrame::new(logp.into_iter().map(F::of).collect()).expect("finite log-probabilities")
    };

    let blank = alphabet.blank();
    let mut frames = Vec::with_capacity(config.frame_count(labels.len()));
    for _ in 0..config.blank_run {
        frames.push(frame_for(blank));
    }
    for &c in labels.iter() {
        for _ in 0..config.frames_per_char {
            frames.push(frame_for(c));
        }
        for _ in 0..config.blank_run {
            frames.push(frame_for(blank));
        }
    }
    Ok(frames)
}

/// Per-frame argmax, then collapse.
pub fn greedy_decode<F: LogFloat>(frames: &[PosteriorFrame<F>], alphabet: &Alphabet) -> Result<LabelSequence> {
    let path: Vec<usize> = frames.iter().map(PosteriorFrame::argmax).collect();
    collapse(&path, alphabet)
}
