//! Per-frame posterior distributions and the CPF-1 text format.
//!
//! ```text
//! cpf1 <num_labels_incl_blank> <blank_index>
//! <logp_0> <logp_1> ... <logp_{n-1}>      one line per frame
//! ```
//!
//! Values are natural-log probabilities; zero mass is written `-inf`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Lines, Write};
use std::marker::PhantomData;
use std::path::Path;

use crate::alphabet::Alphabet;
use crate::error::{Error, Result};
use crate::logmath::log_sum_exp_slice;
use crate::scalar::LogFloat;

const MAGIC: &str = "cpf1";
const NEG_INF_TOKEN: &str = "-inf";

/// Tolerance on `logsumexp(frame)` in strict mode.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// One time step: log-probabilities over every symbol, blank included.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorFrame<F> {
    logp: Vec<F>,
}

impl<F: LogFloat> PosteriorFrame<F> {
    /// Rejects NaN and `+inf`; `-inf` is zero mass.
    pub fn new(logp: Vec<F>) -> Result<Self> {
        if let Some(i) = logp.iter().position(|x| x.is_nan() || *x == F::infinity()) {
            return Err(Error::InvalidConfig(format!(
                "frame entry {i} is not a log-probability"
            )));
        }
        Ok(Self { logp })
    }

    /// Builds a frame from linear-domain probabilities.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        Self::new(probs.iter().map(|&p| F::of(p.ln())).collect())
    }

    pub fn logp(&self) -> &[F] {
        &self.logp
    }

    pub fn len(&self) -> usize {
        self.logp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logp.is_empty()
    }

    pub fn log_total(&self) -> F {
        log_sum_exp_slice(&self.logp)
    }

    /// Entries must be ≤ 0 and sum to one within [`NORMALIZATION_TOLERANCE`].
    pub fn check_normalized(&self, frame: usize) -> Result<()> {
        let total = self.log_total().as_f64();
        let positive = self.logp.iter().any(|x| *x > F::zero());
        if positive || total.is_nan() || total.abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Normalization {
                frame,
                logsumexp: total,
            });
        }
        Ok(())
    }

    /// Index of the most probable symbol; lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &x) in self.logp.iter().enumerate() {
            if x > self.logp[best] {
                best = i;
            }
        }
        best
    }

    pub fn cast<G: LogFloat>(&self) -> PosteriorFrame<G> {
        PosteriorFrame {
            logp: self.logp.iter().map(|x| G::of(x.as_f64())).collect(),
        }
    }
}

/// Parsed `cpf1` header line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CpfHeader {
    pub width: usize,
    pub blank: usize,
}

impl CpfHeader {
    pub fn for_alphabet(alphabet: &Alphabet) -> Self {
        Self {
            width: alphabet.len(),
            blank: alphabet.blank(),
        }
    }

    fn parse(line: &str) -> Result<Self> {
        let mut parts = line.split_ascii_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::format(1, "missing `cpf1` header"));
        }
        let mut field = |name: &str| -> Result<usize> {
            parts
                .next()
                .ok_or_else(|| Error::format(1, format!("header lacks {name}")))?
                .parse()
                .map_err(|_| Error::format(1, format!("header {name} is not an integer")))
        };
        let width = field("label count")?;
        let blank = field("blank index")?;
        if parts.next().is_some() {
            return Err(Error::format(1, "trailing tokens in header"));
        }
        if width < 2 || blank >= width {
            return Err(Error::format(1, "blank index outside label range"));
        }
        Ok(Self { width, blank })
    }

    fn check(&self, alphabet: &Alphabet) -> Result<()> {
        if self.width != alphabet.len() {
            return Err(Error::DimensionMismatch {
                expected: alphabet.len(),
                found: self.width,
            });
        }
        if self.blank != alphabet.blank() {
            return Err(Error::AlphabetMismatch(format!(
                "file blank index {} but alphabet blank index {}",
                self.blank,
                alphabet.blank()
            )));
        }
        Ok(())
    }
}

/// Lazily parses frames from a CPF-1 source.
pub struct PosteriorReader<R, F> {
    lines: Lines<R>,
    header: CpfHeader,
    strict: bool,
    line_no: usize,
    frame_no: usize,
    _scalar: PhantomData<F>,
}

impl<R: BufRead, F: LogFloat> PosteriorReader<R, F> {
    /// Reads the header without checking it against an alphabet.
    pub fn new_unchecked(source: R, strict: bool) -> Result<Self> {
        let mut lines = source.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::format(1, "empty posterior file"))??;
        let header = CpfHeader::parse(&first)?;
        Ok(Self {
            lines,
            header,
            strict,
            line_no: 1,
            frame_no: 0,
            _scalar: PhantomData,
        })
    }

    pub fn new(source: R, alphabet: &Alphabet, strict: bool) -> Result<Self> {
        let reader = Self::new_unchecked(source, strict)?;
        reader.header.check(alphabet)?;
        Ok(reader)
    }

    pub fn header(&self) -> CpfHeader {
        self.header
    }

    fn parse_frame(&self, line: &str) -> Result<PosteriorFrame<F>> {
        let mut logp = Vec::with_capacity(self.header.width);
        for tok in line.split_ascii_whitespace() {
            logp.push(parse_value::<F>(tok).ok_or_else(|| {
                Error::format(self.line_no, format!("invalid value {tok:?}"))
            })?);
        }
        if logp.len() != self.header.width {
            return Err(Error::format(
                self.line_no,
                format!("expected {} values, found {}", self.header.width, logp.len()),
            ));
        }
        let frame = PosteriorFrame { logp };
        if self.strict {
            frame.check_normalized(self.frame_no)?;
        }
        Ok(frame)
    }
}

impl<R: BufRead, F: LogFloat> Iterator for PosteriorReader<R, F> {
    type Item = Result<PosteriorFrame<F>>;

    fn next(&mut self) -> Option<Self::Item> {
        let line = match self.lines.next()? {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        self.line_no += 1;
        let frame = self.parse_frame(&line);
        self.frame_no += 1;
        Some(frame)
    }
}

pub fn open_posteriors<F: LogFloat>(
    path: impl AsRef<Path>,
    alphabet: &Alphabet,
    strict: bool,
) -> Result<PosteriorReader<BufReader<File>, F>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    PosteriorReader::new(BufReader::new(file), alphabet, strict)
}

/// Reads a whole CPF-1 file into memory.
pub fn read_posteriors<F: LogFloat>(
    path: impl AsRef<Path>,
    alphabet: &Alphabet,
    strict: bool,
) -> Result<Vec<PosteriorFrame<F>>> {
    open_posteriors(path, alphabet, strict)?.collect()
}

/// Streams frames into a CPF-1 sink.
pub struct PosteriorWriter<W: Write> {
    sink: W,
    header: CpfHeader,
}

impl<W: Write> PosteriorWriter<W> {
    pub fn new(mut sink: W, header: CpfHeader) -> Result<Self> {
        writeln!(sink, "{MAGIC} {} {}", header.width, header.blank)?;
        Ok(Self { sink, header })
    }

    pub fn write_frame<F: LogFloat>(&mut self, frame: &PosteriorFrame<F>) -> Result<()> {
        if frame.len() != self.header.width {
            return Err(Error::DimensionMismatch {
                expected: self.header.width,
                found: frame.len(),
            });
        }
        let mut line = String::with_capacity(frame.len() * 12);
        for (i, &x) in frame.logp.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&format_value(x));
        }
        line.push('\n');
        self.sink.write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.sink.flush()?;
        Ok(self.sink)
    }
}

pub fn write_posterior_stream<'a, F, W, I>(alphabet: &Alphabet, frames: I, sink: W) -> Result<W>
where
    F: LogFloat,
    W: Write,
    I: IntoIterator<Item = &'a PosteriorFrame<F>>,
{
    let mut writer = PosteriorWriter::new(sink, CpfHeader::for_alphabet(alphabet))?;
    for frame in frames {
        writer.write_frame(frame)?;
    }
    writer.finish()
}

pub fn write_posteriors_file<F: LogFloat>(
    path: impl AsRef<Path>,
    alphabet: &Alphabet,
    frames: &[PosteriorFrame<F>],
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    write_posterior_stream(alphabet, frames, BufWriter::new(file))?;
    Ok(())
}

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub(crate) fn format_value<F: LogFloat>(x: F) -> String {
    if x == F::neg_infinity() {
        return NEG_INF_TOKEN.to_string();
    }
    let a = x.abs();
    if a == F::zero() || (a >= F::of(1e-4) && a < F::of(1e16)) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn parse_value<F: LogFloat>(tok: &str) -> Option<F> {
    if tok == NEG_INF_TOKEN {
        return Some(F::neg_infinity());
    }
    let x: F = tok.parse().ok()?;
    x.is_finite().then_some(x)
}
