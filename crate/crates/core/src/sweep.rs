//! Accuracy and latency over a grid of beam widths and depths.

use rayon::prelude::*;

use crate::alphabet::Alphabet;
use crate::decoder::{Decoder, DecoderConfig, EmissionRecord};
use crate::error::Result;
use crate::lm::CharLm;
use crate::metrics::{score_transcript, stability_from_emissions, ErrorReport, Level};
use crate::posterior::PosteriorFrame;
use crate::scalar::LogFloat;

#[derive(Debug, Clone)]
pub struct Utterance<F> {
    pub reference: String,
    pub frames: Vec<PosteriorFrame<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub beam_width: usize,
    pub beam_depth: usize,
    pub chars: ErrorReport,
    pub words: ErrorReport,
    /// Averaged over every committed label of every utterance.
    pub mean_latency: Option<f64>,
}

impl SweepRow {
    pub fn cer(&self) -> f64 {
        self.chars.rate()
    }

    pub fn wer(&self) -> f64 {
        self.words.rate()
    }
}

#[derive(Debug, Clone)]
pub struct Transcription {
    pub text: String,
    pub emissions: Vec<EmissionRecord>,
}

/// Decodes one utterance from scratch and renders the final best hypothesis.
pub fn transcribe<F: LogFloat, M: CharLm>(
    alphabet: &Alphabet,
    lm: M,
    config: &DecoderConfig,
    frames: &[PosteriorFrame<F>],
) -> Result<Transcription> {
    let mut decoder = Decoder::<F, M>::new(alphabet.clone(), lm, config.clone())?;
    let emissions = decoder.decode_frames(frames)?;
    let text = emissions
        .last()
        .map(|e| alphabet.render(&e.best_full()))
        .unwrap_or_default();
    Ok(Transcription { text, emissions })
}

/// One row per (width, depth) pair, widths outermost, in input order.
/// Cells are decoded in parallel.
pub fn sweep<F, M>(
    alphabet: &Alphabet,
    lm: &M,
    base: &DecoderConfig,
    widths: &[usize],
    depths: &[usize],
    utterances: &[Utterance<F>],
) -> Result<Vec<SweepRow>>
where
    F: LogFloat,
    M: CharLm + Sync,
{
    let grid: Vec<(usize, usize)> = widths
        .iter()
        .flat_map(|&w| depths.iter().map(move |&d| (w, d)))
        .collect();
    grid.par_iter()
        .map(|&(w, d)| {
            let config = DecoderConfig {
                beam_width: w,
                beam_depth: d,
                nbest: base.nbest.min(w),
                ..base.clone()
            };
            let mut row = SweepRow {
                beam_width: w,
                beam_depth: d,
                chars: ErrorReport::default(),
                words: ErrorReport::default(),
                mean_latency: None,
            };
            let (mut latency_sum, mut committed) = (0.0, 0usize);
            for u in utterances {
                let t = transcribe(alphabet, lm, &config, &u.frames)?;
                row.chars = row.chars.merge(&score_transcript(&u.reference, &t.text, Level::Char));
                row.words = row.words.merge(&score_transcript(&u.reference, &t.text, Level::Word));
                let s = stability_from_emissions(&t.emissions)?;
                if let Some(l) = s.mean_commit_latency {
                    latency_sum += l * s.committed as f64;
                    committed += s.committed;
                }
            }
            row.mean_latency = (committed > 0).then(|| latency_sum / committed as f64);
            Ok(row)
        })
        .collect()
}
