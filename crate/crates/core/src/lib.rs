//! Streaming character-level CTC decoding: prefix-tree beam search with
//! shallow n-gram LM fusion, plus the tooling around it (posterior I/O,
//! exhaustive reference decoder, synthetic posteriors, error metrics).
//!
//! The numeric core is generic over [`LogFloat`] (`f32` or `f64`); the
//! aliases below fix the common choices.

pub mod alphabet;
pub mod decoder;
pub mod error;
pub mod lm;
pub mod logmath;
pub mod metrics;
pub mod oracle;
pub mod posterior;
pub mod scalar;
pub mod sweep;
pub mod synth;

pub use alphabet::{collapse, Alphabet, LabelSequence, Symbol, EOS_CHAR};
pub use decoder::{Decoder, DecoderConfig, EmissionLog, EmissionRecord, Hypothesis};
pub use error::{Error, Result};
pub use lm::{lm_bpc, lm_sample, BpcReport, CharLm, NgramCharLm};
pub use metrics::{edit_distance, score_transcript, stability_from_emissions, ErrorReport, Level, StabilityReport};
pub use oracle::{oracle_argmax, oracle_decode, OracleResult};
pub use posterior::{PosteriorFrame, PosteriorReader, PosteriorWriter};
pub use scalar::LogFloat;
pub use synth::{greedy_decode, synth_posteriors, SynthConfig};

pub type PosteriorFrame64 = PosteriorFrame<f64>;
pub type PosteriorFrame32 = PosteriorFrame<f32>;
pub type NgramDecoder = Decoder<f64, NgramCharLm>;
pub type NgramDecoder32 = Decoder<f32, NgramCharLm>;
