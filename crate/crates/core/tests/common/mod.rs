//! Shared corpus and stream generators for the integration tests.
#![allow(dead_code)]

use ctcstream::{synth_posteriors, Alphabet, NgramCharLm, PosteriorFrame, SynthConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: &[&str] = &[
    "THE", "A", "CAT", "DOG", "SAT", "RAN", "ON", "IN", "MAT", "HOUSE", "OVER", "UNDER", "QUICK", "BROWN",
    "FOX", "JUMPS", "LAZY", "OLD", "MAN", "WOMAN", "SAW", "HER", "HIS", "GREEN", "RED", "TREE", "BY", "RIVER",
    "WATER", "STONE", "WALKED", "TOWARD", "BRIGHT", "LIGHT", "NIGHT", "DAY", "IT'S", "NOT", "VERY", "GOOD",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(3..=7);
    (0..n)
        .map(|_| *VOCAB.choose(rng).expect("non-empty vocabulary"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn sentences(seed: u64, n: usize) -> Vec<String> {
    let mut r = rng(seed);
    (0..n).map(|_| sentence(&mut r)).collect()
}

/// Order-3 LM trained on text drawn from the same word distribution as
/// [`sentences`], with a disjoint seed range.
pub fn matched_lm(alphabet: &Alphabet) -> NgramCharLm {
    let corpus = sentences(1_000_000, 3000).join("\n");
    NgramCharLm::train(&corpus, alphabet.clone(), 3, 0.5, 0).expect("training succeeds")
}

/// Uniformly random characters, no line breaks.
pub fn random_text(rng: &mut ChaCha8Rng, alphabet: &Alphabet, max_len: usize) -> String {
    let chars: Vec<char> = alphabet
        .labels()
        .filter_map(|l| alphabet.char_of(l))
        .filter(|&c| c != ctcstream::EOS_CHAR)
        .collect();
    let n = rng.random_range(1..=max_len);
    (0..n).map(|_| *chars.choose(rng).expect("labels")).collect()
}

/// Peak 0.75 with the remainder scattered, plus log-domain jitter so that
/// the per-frame argmax is sometimes wrong.
pub fn noisy(seed: u64) -> SynthConfig {
    SynthConfig {
        logit_noise: NOISE_STD,
        seed,
        ..SynthConfig::with_peak(0.75)
    }
}

pub const NOISE_STD: f64 = 1.6;

pub fn noisy_frames(text: &str, alphabet: &Alphabet, seed: u64) -> Vec<PosteriorFrame<f64>> {
    synth_posteriors(text, alphabet, &noisy(seed)).expect("text within alphabet")
}

/// Random frame over `width` symbols; some entries are exactly zero when
/// `zeros` is set (at least one stays positive).
pub fn random_frame(rng: &mut ChaCha8Rng, width: usize, zeros: bool) -> PosteriorFrame<f64> {
    loop {
        let v: Vec<f64> = (0..width)
            .map(|_| {
                if zeros && rng.random_bool(0.25) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            let p: Vec<f64> = v.iter().map(|x| x / s).collect();
            return PosteriorFrame::from_probs(&p).expect("valid frame");
        }
    }
}

/// One-sided sign test: probability of at least `wins` successes out of
/// `n` fair coin flips.
pub fn sign_test_p(wins: usize, n: usize) -> f64 {
    let mut p = 0.0;
    for k in wins..=n {
        p += binomial(n, k) * 0.5f64.powi(n as i32);
    }
    p
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
