//! Interpolated absolute-discounting character n-gram model.
//!
//! For a history `h` with `|h| < n` and a shorter history `h'` (drop the
//! oldest label):
//!
//! ```text
//! P(c | h) = max(C(h c) - d, 0) / C(h ·)  +  d · T(h ·) / C(h ·) · P(c | h')
//! P(c | ·) = 1 / |L|                                          (order 0)
//! ```
//!
//! where `C(h ·)` is the number of events following `h` and `T(h ·)` the
//! number of distinct labels seen after it. A history never seen in
//! training falls through to `P(c | h')`. Every label keeps strictly
//! positive mass.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use super::CharLm;
use crate::alphabet::Alphabet;
use crate::error::{Error, Result};

pub const DEFAULT_DISCOUNT: f64 = 0.5;

const MAGIC: &str = "nclm1";

type Label = u32;

/// The most recent `order - 1` labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct NgramContext {
    history: SmallVec<[Label; 8]>,
}

impl NgramContext {
    pub fn history(&self) -> impl Iterator<Item = usize> + '_ {
        self.history.iter().map(|&l| l as usize)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Continuations {
    total: u64,
    /// Sorted by label.
    next: Vec<(Label, u64)>,
}

impl Continuations {
    fn count(&self, label: Label) -> u64 {
        self.next
            .binary_search_by_key(&label, |&(l, _)| l)
            .map_or(0, |i| self.next[i].1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramCharLm {
    alphabet: Alphabet,
    order: usize,
    discount: f64,
    /// Keyed by history (possibly empty), oldest label first.
    tables: HashMap<Vec<Label>, Continuations>,
}

/// Sentences from `corpus` (one per line, empty lines skipped) in seeded
/// random order, each followed by EOS, preceded by one leading EOS. Without
/// an EOS label the sentences are simply concatenated. Returns the stream
/// and the number of characters dropped for being outside the alphabet.
pub fn training_stream(corpus: &str, alphabet: &Alphabet, seed: u64) -> (Vec<usize>, usize) {
    let mut sentences: Vec<&str> = corpus
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.is_empty())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sentences.shuffle(&mut rng);

    let eos = alphabet.eos();
    let mut stream: Vec<usize> = eos.into_iter().collect();
    let mut dropped = 0;
    for s in sentences {
        let (seq, d) = alphabet.encode_lossy(s);
        dropped += d;
        stream.extend_from_slice(&seq);
        stream.extend(eos);
    }
    (stream, dropped)
}

impl NgramCharLm {
    /// An untrained model: uniform over the labels in every context.
    pub fn uniform(alphabet: Alphabet) -> Self {
        Self {
            alphabet,
            order: 1,
            discount: DEFAULT_DISCOUNT,
            tables: HashMap::new(),
        }
    }

    pub fn train(corpus: &str, alphabet: Alphabet, order: usize, discount: f64, seed: u64) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be at least 1".into()));
        }
        if !(discount > 0.0 && discount < 1.0) {
            return Err(Error::InvalidConfig("discount must lie in (0, 1)".into()));
        }
        let (stream, dropped) = training_stream(corpus, &alphabet, seed);
        if dropped > 0 {
            log::warn!("dropped {dropped} characters outside the alphabet");
        }
        // The leading EOS is history only, never an event.
        let start = usize::from(alphabet.eos().is_some());
        if stream.len() <= start {
            return Err(Error::Empty("training corpus"));
        }

        let mut counts: HashMap<Vec<Label>, BTreeMap<Label, u64>> = HashMap::new();
        for i in start..stream.len() {
            let c = stream[i] as Label;
            for k in 0..order.min(i + 1) {
                let h: Vec<Label> = stream[i - k..i].iter().map(|&l| l as Label).collect();
                *counts.entry(h).or_default().entry(c).or_default() += 1;
            }
        }
        let tables = counts
            .into_iter()
            .map(|(h, next)| {
                let next: Vec<(Label, u64)> = next.into_iter().collect();
                let total = next.iter().map(|&(_, n)| n).sum();
                (h, Continuations { total, next })
            })
            .collect();
        Ok(Self {
            alphabet,
            order,
            discount,
            tables,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Raw count of the k-gram `labels` (history followed by the predicted
    /// label); zero if never seen.
    pub fn count(&self, labels: &[usize]) -> u64 {
        let Some((&last, hist)) = labels.split_last() else {
            return 0;
        };
        let hist: Vec<Label> = hist.iter().map(|&l| l as Label).collect();
        self.tables
            .get(&hist)
            .map_or(0, |t| t.count(last as Label))
    }

    fn prob(&self, history: &[Label], label: Label) -> f64 {
        let mut p = 1.0 / self.alphabet.num_labels() as f64;
        for k in 0..=history.len() {
            let h = &history[history.len() - k..];
            if let Some(t) = self.tables.get(h) {
                let total = t.total as f64;
                let seen = (t.count(label) as f64 - self.discount).max(0.0);
                let backoff = self.discount * t.next.len() as f64 / total;
                p = seen / total + backoff * p;
            }
        }
        p
    }

    /// Flat text serialization: header, alphabet line, then one
    /// `<count> <label>...` line per k-gram in (length, labels) order.
    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC} {} {}", self.order, self.discount);
        let alphabet_file = self.alphabet.to_file_string();
        let tokens: Vec<&str> = alphabet_file.lines().collect();
        let _ = writeln!(out, "alphabet {}", tokens.join(" "));
        let mut grams: Vec<(Vec<Label>, u64)> = self
            .tables
            .iter()
            .flat_map(|(h, t)| {
                t.next.iter().map(move |&(c, n)| {
                    let mut g = h.clone();
                    g.push(c);
                    (g, n)
                })
            })
            .collect();
        grams.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (g, n) in grams {
            let _ = write!(out, "{n}");
            for l in g {
                let _ = write!(out, " {l}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::format(1, "empty model file"))?;
        let mut h = header.split(' ');
        if h.next() != Some(MAGIC) {
            return Err(Error::format(1, "missing `nclm1` header"));
        }
        let order: usize = h
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|&o| o >= 1)
            .ok_or_else(|| Error::format(1, "bad order"))?;
        let discount: f64 = h
            .next()
            .and_then(|s| s.parse().ok())
            .filter(|d| *d > 0.0 && *d < 1.0)
            .ok_or_else(|| Error::format(1, "bad discount"))?;

        let (_, alpha_line) = lines.next().ok_or_else(|| Error::format(2, "missing alphabet"))?;
        let tokens = alpha_line
            .strip_prefix("alphabet ")
            .ok_or_else(|| Error::format(2, "missing alphabet"))?;
        let alphabet = Alphabet::parse(&tokens.split(' ').fold(String::new(), |mut s, t| {
            s.push_str(t);
            s.push('\n');
            s
        }))?;

        let mut counts: HashMap<Vec<Label>, BTreeMap<Label, u64>> = HashMap::new();
        for (n, line) in lines {
            let mut parts = line.split(' ');
            let count: u64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::format(n + 1, "bad count"))?;
            let mut gram = Vec::new();
            for p in parts {
                let l: usize = p.parse().map_err(|_| Error::format(n + 1, "bad label"))?;
                alphabet.check_label(l)?;
                gram.push(l as Label);
            }
            if gram.is_empty() || gram.len() > order {
                return Err(Error::format(n + 1, "k-gram length outside 1..=order"));
            }
            let c = gram.pop().expect("nonempty");
            counts.entry(gram).or_default().insert(c, count);
        }
        let tables = counts
            .into_iter()
            .map(|(h, next)| {
                let next: Vec<(Label, u64)> = next.into_iter().collect();
                let total = next.iter().map(|&(_, n)| n).sum();
                (h, Continuations { total, next })
            })
            .collect();
        Ok(Self {
            alphabet,
            order,
            discount,
            tables,
        })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_model_string()).map_err(|e| Error::file(path, e))
    }
}

impl CharLm for NgramCharLm {
    type Context = NgramContext;

    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn initial_context(&self) -> NgramContext {
        let mut ctx = NgramContext::default();
        if let Some(eos) = self.alphabet.eos() {
            if self.order > 1 {
                ctx.history.push(eos as Label);
            }
        }
        ctx
    }

    fn log_prob(&self, ctx: &NgramContext, label: usize) -> Result<f64> {
        self.alphabet.check_label(label)?;
        Ok(self.prob(&ctx.history, label as Label).ln())
    }

    fn extend(&self, ctx: &NgramContext, label: usize) -> NgramContext {
        let keep = self.order - 1;
        let mut history = ctx.history.clone();
        if keep > 0 {
            if history.len() == keep {
                history.remove(0);
            }
            history.push(label as Label);
        }
        NgramContext { history }
    }
}
