//! Emission records and their line-oriented JSON log.
//!
//! ```text
//! {"config":{"beam_width":...,"alpha":2.0,"beta":1.5,...}}      optional header
//! {"frame":50,"committed":"HE'S ","nbest":[{"text":"HE'S THE","score":-12.5}]}
//! ```
//!
//! `text` is the full hypothesis, committed prefix included. Key order is
//! fixed.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::DecoderConfig;
use crate::alphabet::{Alphabet, LabelSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Labels below the committed prefix.
    pub suffix: LabelSequence,
    /// Fused score: CTC log-mass plus LM and insertion terms.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmissionRecord {
    /// Frames consumed when the record was taken.
    pub frame: usize,
    pub committed: LabelSequence,
    /// Best first.
    pub nbest: Vec<Hypothesis>,
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    text: String,
    score: f64,
}

#[derive(Serialize, Deserialize)]
struct RecordJson {
    frame: usize,
    committed: String,
    nbest: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    config: DecoderConfig,
}

impl EmissionRecord {
    /// Committed prefix followed by the best pending suffix.
    pub fn best_full(&self) -> LabelSequence {
        self.full(0).unwrap_or_else(|| self.committed.clone())
    }

    pub fn full(&self, rank: usize) -> Option<LabelSequence> {
        self.nbest.get(rank).map(|h| {
            let mut seq = self.committed.clone();
            seq.extend_from(&h.suffix);
            seq
        })
    }

    pub fn to_json(&self, alphabet: &Alphabet) -> String {
        let rec = RecordJson {
            frame: self.frame,
            committed: alphabet.render(&self.committed),
            nbest: (0..self.nbest.len())
                .map(|i| EntryJson {
                    text: alphabet.render(&self.full(i).expect("in range")),
                    score: self.nbest[i].score,
                })
                .collect(),
        };
        serde_json::to_string(&rec).expect("record serializes")
    }

    pub fn from_json(line: &str, alphabet: &Alphabet) -> Result<Self> {
        Self::from_json_at(line, alphabet, 1)
    }

    fn from_json_at(line: &str, alphabet: &Alphabet, line_no: usize) -> Result<Self> {
        let rec: RecordJson = serde_json::from_str(line).map_err(|e| Error::format(line_no, e.to_string()))?;
        let committed = alphabet.encode(&rec.committed)?;
        let nbest = rec
            .nbest
            .into_iter()
            .map(|e| {
                let full = alphabet.encode(&e.text)?;
                let suffix = full
                    .strip_prefix(&committed[..])
                    .ok_or_else(|| Error::format(line_no, "hypothesis does not extend the committed prefix"))?;
                Ok(Hypothesis {
                    suffix: suffix.iter().copied().collect(),
                    score: e.score,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            frame: rec.frame,
            committed,
            nbest,
        })
    }
}

pub fn config_header_json(config: &DecoderConfig) -> String {
    serde_json::to_string(&HeaderJson {
        config: config.clone(),
    })
    .expect("config serializes")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmissionLog {
    pub config: Option<DecoderConfig>,
    pub records: Vec<EmissionRecord>,
}

impl EmissionLog {
    pub fn write_to<W: Write>(&self, alphabet: &Alphabet, mut sink: W) -> Result<()> {
        if let Some(c) = &self.config {
            writeln!(sink, "{}", config_header_json(c))?;
        }
        for r in &self.records {
            writeln!(sink, "{}", r.to_json(alphabet))?;
        }
        sink.flush()?;
        Ok(())
    }

    pub fn to_string(&self, alphabet: &Alphabet) -> String {
        let mut buf = Vec::new();
        self.write_to(alphabet, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 log")
    }
}

/// Parses a log written by [`EmissionLog::write_to`]; the config header is
/// optional.
pub fn read_emission_log(text: &str, alphabet: &Alphabet) -> Result<EmissionLog> {
    let mut log = EmissionLog::default();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        if i == 0 && line.starts_with("{\"config\"") {
            let h: HeaderJson = serde_json::from_str(line).map_err(|e| Error::format(1, e.to_string()))?;
            log.config = Some(h.config);
            continue;
        }
        log.records.push(EmissionRecord::from_json_at(line, alphabet, i + 1)?);
    }
    Ok(log)
}
