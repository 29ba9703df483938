//! Error rates and incremental-output stability.

use crate::decoder::EmissionRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ErrorReport {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl ErrorReport {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// Errors per reference symbol. An empty reference yields 0 when the
    /// hypothesis is also empty and infinity otherwise.
    pub fn rate(&self) -> f64 {
        match (self.errors(), self.ref_len) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (e, n) => e as f64 / n as f64,
        }
    }

    pub fn merge(&self, other: &ErrorReport) -> ErrorReport {
        ErrorReport {
            substitutions: self.substitutions + other.substitutions,
            insertions: self.insertions + other.insertions,
            deletions: self.deletions + other.deletions,
            ref_len: self.ref_len + other.ref_len,
        }
    }
}

/// Unit-cost Levenshtein alignment. Among minimal alignments the backtrace
/// prefers substitution (or match), then insertion, then deletion.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> ErrorReport {
    let (n, m) = (reference.len(), hypothesis.len());
    let w = m + 1;
    let mut d = vec![0usize; (n + 1) * w];
    for i in 0..=n {
        d[i * w] = i;
    }
    for j in 0..=m {
        d[j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[(i - 1) * w + j - 1] + usize::from(reference[i - 1] != hypothesis[j - 1]);
            let ins = d[i * w + j - 1] + 1;
            let del = d[(i - 1) * w + j] + 1;
            d[i * w + j] = sub.min(ins).min(del);
        }
    }

    let mut report = ErrorReport {
        ref_len: n,
        ..ErrorReport::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * w + j];
        if i > 0 && j > 0 {
            let mismatch = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if d[(i - 1) * w + j - 1] + mismatch == here {
                report.substitutions += mismatch;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i * w + j - 1] + 1 == here {
            report.insertions += 1;
            j -= 1;
        } else {
            report.deletions += 1;
            i -= 1;
        }
    }
    report
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Char,
    Word,
}

/// Word tokens: the text split on spaces, empty pieces dropped. EOS line
/// breaks are ordinary characters inside tokens.
pub fn words(text: &str) -> Vec<&str> {
    text.split(' ').filter(|w| !w.is_empty()).collect()
}

pub fn score_transcript(reference: &str, hypothesis: &str, level: Level) -> ErrorReport {
    match level {
        Level::Char => {
            let r: Vec<char> = reference.chars().collect();
            let h: Vec<char> = hypothesis.chars().collect();
            edit_distance(&r, &h)
        }
        Level::Word => edit_distance(&words(reference), &words(hypothesis)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// Per emission: labels of the previous best hypothesis that the new
    /// one no longer agrees with. The first entry is always 0.
    pub revisions: Vec<usize>,
    /// Mean frames between a label settling into the best hypothesis (and
    /// staying there) and its commitment. `None` if nothing was committed.
    pub mean_commit_latency: Option<f64>,
    pub committed: usize,
}

impl StabilityReport {
    pub fn total_revisions(&self) -> usize {
        self.revisions.iter().sum()
    }
}

fn common_prefix(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

pub fn stability_from_emissions(emissions: &[EmissionRecord]) -> Result<StabilityReport> {
    for pair in emissions.windows(2) {
        if pair[1].frame <= pair[0].frame {
            return Err(Error::OutOfOrder {
                previous: pair[0].frame,
                found: pair[1].frame,
            });
        }
        if !pair[0].committed.is_prefix_of(&pair[1].committed) {
            return Err(Error::CommitViolation { frame: pair[1].frame });
        }
    }
    let bests: Vec<_> = emissions.iter().map(EmissionRecord::best_full).collect();
    let mut revisions = vec![0; emissions.len()];
    for i in 1..bests.len() {
        revisions[i] = bests[i - 1].len() - common_prefix(&bests[i - 1], &bests[i]);
    }

    let Some(last) = emissions.last() else {
        return Ok(StabilityReport {
            revisions,
            mean_commit_latency: None,
            committed: 0,
        });
    };
    let final_commit = &last.committed;

    // `runs` maps label positions to the emission from which the best
    // hypothesis has agreed with the final commit through that position.
    // A disagreement at position p resets every position ≥ p, so the map
    // is a sorted list of (first position, emission index) segments.
    let mut runs: Vec<(usize, usize)> = vec![(0, 0)];
    let mut latency_sum = 0.0;
    let mut done = 0;
    for (i, (e, best)) in emissions.iter().zip(&bests).enumerate() {
        let agree = common_prefix(best, final_commit);
        while runs.last().is_some_and(|&(from, _)| from >= agree) {
            runs.pop();
        }
        runs.push((agree, i + 1));
        let now = e.committed.len().min(final_commit.len());
        for pos in done..now {
            let seg = runs.partition_point(|&(from, _)| from <= pos) - 1;
            let since = runs[seg].1;
            latency_sum += (e.frame - emissions[since].frame) as f64;
        }
        done = done.max(now);
    }
    Ok(StabilityReport {
        revisions,
        mean_commit_latency: (done > 0).then(|| latency_sum / done as f64),
        committed: done,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::{Alphabet, LabelSequence};
    use crate::decoder::Hypothesis;
    use proptest::prelude::*;

    /// Minimum over every alignment, explored recursively.
    fn exhaustive(r: &[u8], h: &[u8]) -> usize {
        match (r, h) {
            ([], _) => h.len(),
            (_, []) => r.len(),
            ([a, rr @ ..], [b, hh @ ..]) => {
                let sub = exhaustive(rr, hh) + usize::from(a != b);
                let del = exhaustive(rr, h) + 1;
                let ins = exhaustive(r, hh) + 1;
                sub.min(del).min(ins)
            }
        }
    }

    #[test]
    fn identity_and_kitten() {
        let r = score_transcript("ABC", "ABC", Level::Char);
        assert_eq!((r.errors(), r.rate()), (0, 0.0));
        let k = edit_distance(b"KITTEN", b"SITTING");
        assert_eq!(k.errors(), 3);
        assert_eq!(exhaustive(b"KITTEN", b"SITTING"), 3);
        assert_eq!((k.substitutions, k.insertions, k.deletions), (2, 1, 0));
    }

    #[test]
    fn word_level() {
        let r = score_transcript("THE CAT", "THE HAT", Level::Word);
        assert_eq!(r.substitutions, 1);
        assert_eq!(r.rate(), 0.5);
        assert_eq!(words("A  B\nC "), vec!["A", "B\nC"]);
        assert!(words("").is_empty());
    }

    #[test]
    fn appended_word() {
        let reference = "THE CAT SAT";
        let hyp = "THE CAT SAT DOG";
        let c = score_transcript(reference, hyp, Level::Char);
        assert_eq!(c.insertions, 4);
        assert_eq!(c.rate(), 4.0 / reference.len() as f64);
        assert_eq!(score_transcript(reference, hyp, Level::Word).rate(), 1.0 / 3.0);
    }

    #[test]
    fn empty_cases() {
        let r = score_transcript("AB", "", Level::Char);
        assert_eq!((r.deletions, r.rate()), (2, 1.0));
        assert_eq!(score_transcript("", "", Level::Char).rate(), 0.0);
        assert_eq!(score_transcript("", "A", Level::Char).rate(), f64::INFINITY);
    }

    #[test]
    fn exhaustive_agreement_small_alphabet() {
        // Every pair of strings over {a,b,c} with lengths ≤ 4 here; the
        // acceptance suite covers lengths ≤ 6.
        let mut all: Vec<Vec<u8>> = vec![vec![]];
        let mut frontier = all.clone();
        for _ in 0..4 {
            let next: Vec<Vec<u8>> = frontier
                .iter()
                .flat_map(|s| b"abc".iter().map(move |&c| [s.clone(), vec![c]].concat()))
                .collect();
            all.extend(next.iter().cloned());
            frontier = next;
        }
        for r in &all {
            for h in &all {
                assert_eq!(edit_distance(r, h).errors(), exhaustive(r, h), "{r:?} {h:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_total(a in "[abc]{0,8}", b in "[abc]{0,8}") {
            prop_assert_eq!(edit_distance(a.as_bytes(), b.as_bytes()).errors(),
                            edit_distance(b.as_bytes(), a.as_bytes()).errors());
        }

        #[test]
        fn triangle(a in "[abc]{0,7}", b in "[abc]{0,7}", c in "[abc]{0,7}") {
            let ab = edit_distance(a.as_bytes(), b.as_bytes()).errors();
            let bc = edit_distance(b.as_bytes(), c.as_bytes()).errors();
            let ac = edit_distance(a.as_bytes(), c.as_bytes()).errors();
            prop_assert!(ac <= ab + bc);
        }

        #[test]
        fn counts_form_a_valid_script(a in "[ab]{0,6}", b in "[ab]{0,6}") {
            let r = edit_distance(a.as_bytes(), b.as_bytes());
            // Every reference symbol is matched, substituted or deleted;
            // every hypothesis symbol is matched, substituted or inserted.
            prop_assert!(r.deletions + r.substitutions <= a.len());
            prop_assert_eq!(a.len() - r.deletions + r.insertions, b.len());
        }
    }

    fn rec(a: &Alphabet, frame: usize, committed: &str, best: &str) -> EmissionRecord {
        let committed = a.encode(committed).unwrap();
        let full = a.encode(best).unwrap();
        EmissionRecord {
            frame,
            nbest: vec![Hypothesis {
                suffix: full[committed.len()..].iter().copied().collect::<LabelSequence>(),
                score: 0.0,
            }],
            committed,
        }
    }

    #[test]
    fn identical_bests_never_revise() {
        let a = Alphabet::default_english();
        let es = vec![rec(&a, 50, "", "THE"), rec(&a, 100, "", "THE"), rec(&a, 150, "T", "THE")];
        let s = stability_from_emissions(&es).unwrap();
        assert_eq!(s.revisions, vec![0, 0, 0]);
        // 'T' was in the best hypothesis from frame 50, committed at 150.
        assert_eq!(s.mean_commit_latency, Some(100.0));
    }

    #[test]
    fn correction_counts_replaced_suffix() {
        let a = Alphabet::default_english();
        let es = vec![
            rec(&a, 400, "", "IN THE PLAZA IN ROCK R"),
            rec(&a, 450, "", "IN THE PLAZA IN DRAW RATE"),
        ];
        let s = stability_from_emissions(&es).unwrap();
        let prefix = "IN THE PLAZA IN ".len();
        assert_eq!(s.revisions[1], "IN THE PLAZA IN ROCK R".len() - prefix);
        assert_eq!(s.mean_commit_latency, None);
    }

    #[test]
    fn latency_restarts_after_revision() {
        let a = Alphabet::default_english();
        let es = vec![
            rec(&a, 10, "", "AX"),
            rec(&a, 20, "", "AB"),
            rec(&a, 30, "AB", "AB"),
        ];
        let s = stability_from_emissions(&es).unwrap();
        // A settles at 10 (latency 20), B at 20 (latency 10).
        assert_eq!(s.mean_commit_latency, Some(15.0));
        assert_eq!(s.revisions, vec![0, 1, 0]);
    }

    #[test]
    fn validation_errors() {
        let a = Alphabet::default_english();
        let out_of_order = vec![rec(&a, 20, "", "A"), rec(&a, 10, "", "A")];
        assert!(matches!(stability_from_emissions(&out_of_order), Err(Error::OutOfOrder { .. })));
        let doctored = vec![rec(&a, 10, "AB", "AB"), rec(&a, 20, "AC", "AC")];
        assert!(matches!(
            stability_from_emissions(&doctored),
            Err(Error::CommitViolation { frame: 20 })
        ));
        assert_eq!(stability_from_emissions(&[]).unwrap().committed, 0);
    }
}
