//! Label inventories, label sequences and the CTC collapse map.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::ops::Deref;
use std::path::Path;

use crate::error::{Error, Result};

/// Character used to render the end-of-sentence label in text.
pub const EOS_CHAR: char = '\n';

const BLANK_TOKEN: &str = "<blank>";
const EOS_TOKEN: &str = "<eos>";
const SPACE_TOKEN: &str = "<sp>";

/// Default 31-way inventory: A-Z, space, apostrophe, period, EOS, blank.
const DEFAULT_ALPHABET: &str = include_str!("../data/default.alphabet");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Blank,
    Char(char),
}

/// The label set plus the CTC blank. Indices `0..len()` cover every symbol,
/// blank included; `blank()` is the one index that is not a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    symbols: Vec<Symbol>,
    blank: usize,
    eos: Option<usize>,
    index: HashMap<char, usize>,
}

impl Alphabet {
    pub fn new(symbols: Vec<Symbol>) -> Result<Self> {
        let mut blank = None;
        let mut index = HashMap::with_capacity(symbols.len());
        for (i, s) in symbols.iter().enumerate() {
            match *s {
                Symbol::Blank => {
                    if blank.replace(i).is_some() {
                        return Err(Error::InvalidAlphabet("more than one blank".into()));
                    }
                }
                Symbol::Char(c) => {
                    if index.insert(c, i).is_some() {
                        return Err(Error::InvalidAlphabet(format!("duplicate label {c:?}")));
                    }
                }
            }
        }
        let blank = blank.ok_or_else(|| Error::InvalidAlphabet("no blank symbol".into()))?;
        if symbols.len() < 2 {
            return Err(Error::InvalidAlphabet("need at least one label".into()));
        }
        let eos = index.get(&EOS_CHAR).copied();
        Ok(Self {
            symbols,
            blank,
            eos,
            index,
        })
    }

    /// Labels from `chars` in order, followed by the blank.
    pub fn with_blank_last(chars: &str) -> Result<Self> {
        let mut symbols: Vec<Symbol> = chars.chars().map(Symbol::Char).collect();
        symbols.push(Symbol::Blank);
        Self::new(symbols)
    }

    /// The 31-symbol inventory used for English character recognition.
    pub fn default_english() -> Self {
        Self::parse(DEFAULT_ALPHABET).expect("bundled alphabet is valid")
    }

    /// Parses the alphabet file format: one symbol per line, `<blank>`,
    /// `<eos>` and `<sp>` as reserved tokens.
    pub fn parse(text: &str) -> Result<Self> {
        let mut symbols = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            let sym = match line {
                BLANK_TOKEN => Symbol::Blank,
                EOS_TOKEN => Symbol::Char(EOS_CHAR),
                SPACE_TOKEN => Symbol::Char(' '),
                "" => return Err(Error::format(n + 1, "empty alphabet line")),
                _ => {
                    let mut chars = line.chars();
                    match (chars.next(), chars.next()) {
                        (Some(c), None) => Symbol::Char(c),
                        _ => {
                            return Err(Error::format(
                                n + 1,
                                format!("label {line:?} is not a single character"),
                            ))
                        }
                    }
                }
            };
            symbols.push(sym);
        }
        Self::new(symbols)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::parse(&text)
    }

    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        for s in &self.symbols {
            out.push_str(&symbol_token(*s));
            out.push('\n');
        }
        out
    }

    /// Number of symbols including the blank (|L′|).
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Number of labels excluding the blank (|L|).
    pub fn num_labels(&self) -> usize {
        self.symbols.len() - 1
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn eos(&self) -> Option<usize> {
        self.eos
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    /// Indices of all non-blank labels, ascending.
    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        let blank = self.blank;
        (0..self.symbols.len()).filter(move |&i| i != blank)
    }

    pub fn is_label(&self, index: usize) -> bool {
        index < self.symbols.len() && index != self.blank
    }

    pub fn check_label(&self, index: usize) -> Result<()> {
        if self.is_label(index) {
            Ok(())
        } else {
            Err(Error::InvalidLabel {
                index,
                size: self.symbols.len(),
            })
        }
    }

    pub fn char_of(&self, index: usize) -> Option<char> {
        match self.symbols.get(index) {
            Some(Symbol::Char(c)) => Some(*c),
            _ => None,
        }
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn encode(&self, text: &str) -> Result<LabelSequence> {
        text.chars()
            .map(|c| self.index_of(c).ok_or(Error::UnknownChar(c)))
            .collect::<Result<Vec<_>>>()
            .map(LabelSequence)
    }

    /// Encodes `text`, dropping characters outside the alphabet. Returns the
    /// sequence and the number of dropped characters.
    pub fn encode_lossy(&self, text: &str) -> (LabelSequence, usize) {
        let mut dropped = 0;
        let seq = text
            .chars()
            .filter_map(|c| {
                let i = self.index_of(c);
                if i.is_none() {
                    dropped += 1;
                }
                i
            })
            .collect();
        (LabelSequence(seq), dropped)
    }

    /// Renders label indices as text. Blanks and out-of-range indices are
    /// skipped.
    pub fn render(&self, labels: &[usize]) -> String {
        labels.iter().filter_map(|&i| self.char_of(i)).collect()
    }
}

fn symbol_token(s: Symbol) -> String {
    match s {
        Symbol::Blank => BLANK_TOKEN.to_string(),
        Symbol::Char(EOS_CHAR) => EOS_TOKEN.to_string(),
        Symbol::Char(' ') => SPACE_TOKEN.to_string(),
        Symbol::Char(c) => c.to_string(),
    }
}

/// A blank-free sequence of label indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelSequence(Vec<usize>);

impl LabelSequence {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Validates that every index is a non-blank label of `alphabet`.
    pub fn from_indices(indices: Vec<usize>, alphabet: &Alphabet) -> Result<Self> {
        for &i in &indices {
            alphabet.check_label(i)?;
        }
        Ok(Self(indices))
    }

    pub(crate) fn from_raw(indices: Vec<usize>) -> Self {
        Self(indices)
    }

    pub fn push(&mut self, label: usize) {
        self.0.push(label);
    }

    pub fn extend_from(&mut self, other: &[usize]) {
        self.0.extend_from_slice(other);
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn is_prefix_of(&self, other: &[usize]) -> bool {
        other.starts_with(&self.0)
    }
}

impl Deref for LabelSequence {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl FromIterator<usize> for LabelSequence {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

impl fmt::Display for LabelSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// The CTC many-to-one map: merge consecutive repeats, then drop blanks.
pub fn collapse(path: &[usize], alphabet: &Alphabet) -> Result<LabelSequence> {
    let blank = alphabet.blank();
    let mut out = Vec::with_capacity(path.len());
    let mut prev = None;
    for &s in path {
        if s >= alphabet.len() {
            return Err(Error::InvalidLabel {
                index: s,
                size: alphabet.len(),
            });
        }
        if Some(s) != prev && s != blank {
            out.push(s);
        }
        prev = Some(s);
    }
    Ok(LabelSequence(out))
}
