//! Online prefix-tree CTC beam search with shallow LM fusion.
//!
//! Per frame, every surviving node `u` (label `c`, parent `v`) updates
//!
//! ```text
//! p_b(u)  = lse(p_b'(u), p_nb'(u)) + ln y[blank]
//! p_nb(u) = lse(p_nb'(u) + ln y[c],  entry(v, c) + ln y[c] + bonus(u))
//! entry(v, c) = p_b'(v)              if label(v) == c
//!             = lse(p_b'(v), p_nb'(v)) otherwise
//! ```
//!
//! and the `N` best nodes by fused score survive. Every
//! `depth_prune_interval` frames the tree is re-rooted at the `M`-th
//! ancestor of the best node; labels above the new root become committed
//! output and everything outside its subtree is dropped.

mod emission;
mod tree;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::alphabet::{Alphabet, LabelSequence};
use crate::error::{Error, Result};
use crate::lm::CharLm;
use crate::logmath::log_sum_exp;
use crate::posterior::PosteriorFrame;
use crate::scalar::LogFloat;

pub use emission::{config_header_json, read_emission_log, EmissionLog, EmissionRecord, Hypothesis};
pub use tree::NodeId;

use tree::{Arena, Node};

/// `ln(1e9)`: new children whose incoming mass trails the frame's best
/// score by more than this are not materialized.
pub const DEFAULT_ADMISSION_MARGIN: f64 = 20.72326583694641;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoderConfig {
    /// Maximum number of active nodes kept per frame.
    pub beam_width: usize,
    /// Labels retained behind the best node when re-rooting.
    pub beam_depth: usize,
    /// LM weight.
    pub alpha: f64,
    /// Insertion bonus per label.
    pub beta: f64,
    pub depth_prune_interval: usize,
    pub emit_interval: usize,
    pub nbest: usize,
    /// `None` materializes every child with nonzero incoming mass.
    pub admission_margin: Option<f64>,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            beam_width: 128,
            beam_depth: 50,
            alpha: 2.0,
            beta: 1.5,
            depth_prune_interval: 20,
            emit_interval: 50,
            nbest: 1,
            admission_margin: Some(DEFAULT_ADMISSION_MARGIN),
        }
    }
}

impl DecoderConfig {
    /// No width, depth or admission pruning: the decoder tracks every
    /// reachable label sequence exactly.
    pub fn exhaustive(alpha: f64, beta: f64) -> Self {
        Self {
            beam_width: usize::MAX,
            beam_depth: usize::MAX,
            alpha,
            beta,
            depth_prune_interval: usize::MAX,
            emit_interval: usize::MAX,
            nbest: usize::MAX,
            admission_margin: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if self.beam_width < 1 {
            return bad("beam width must be at least 1");
        }
        if self.beam_depth < 1 {
            return bad("beam depth must be at least 1");
        }
        if self.nbest < 1 || self.nbest > self.beam_width {
            return bad("nbest must lie in 1..=beam width");
        }
        if self.depth_prune_interval < 1 || self.emit_interval < 1 {
            return bad("intervals must be at least 1");
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be finite and non-negative");
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite");
        }
        if let Some(m) = self.admission_margin {
            if !(m > 0.0) {
                return bad("admission margin must be positive");
            }
        }
        Ok(())
    }
}

pub struct Decoder<F: LogFloat, M: CharLm> {
    alphabet: Alphabet,
    labels: Vec<usize>,
    lm: M,
    config: DecoderConfig,
    alpha: F,
    beta: F,
    nodes: Arena<F, M::Context>,
    root: NodeId,
    active: Vec<NodeId>,
    committed: LabelSequence,
    frame_count: usize,
    since_depth_prune: usize,
    epoch: u64,
    peak_nodes: usize,
    prev: Vec<(NodeId, F, F)>,
    touched: Vec<NodeId>,
}

fn touch<F: LogFloat, C>(node: &mut Node<F, C>, id: NodeId, epoch: u64, touched: &mut Vec<NodeId>) {
    if node.stamp != epoch {
        node.stamp = epoch;
        node.next_nb = F::neg_infinity();
        node.next_b = F::neg_infinity();
        touched.push(id);
    }
}

impl<F: LogFloat, M: CharLm> Decoder<F, M> {
    pub fn new(alphabet: Alphabet, lm: M, config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        if lm.alphabet() != &alphabet {
            return Err(Error::AlphabetMismatch(
                "language model and decoder use different label inventories".into(),
            ));
        }
        let mut nodes = Arena::new();
        let mut root = Node::new(None, None, lm.initial_context(), F::zero(), 0);
        root.p_b = F::zero();
        root.active = true;
        let root = nodes.insert(root);
        Ok(Self {
            labels: alphabet.labels().collect(),
            alphabet,
            alpha: F::of(config.alpha),
            beta: F::of(config.beta),
            lm,
            config,
            nodes,
            root,
            active: vec![root],
            committed: LabelSequence::new(),
            frame_count: 0,
            since_depth_prune: 0,
            epoch: 0,
            peak_nodes: 1,
            prev: Vec::new(),
            touched: Vec::new(),
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    pub fn lm(&self) -> &M {
        &self.lm
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn committed(&self) -> &LabelSequence {
        &self.committed
    }

    /// Live tree nodes, structural ancestors included.
    pub fn node_count(&self) -> usize {
        self.nodes.live()
    }

    /// Largest live node count seen at any point, including the transient
    /// children materialized within a frame.
    pub fn peak_node_count(&self) -> usize {
        self.peak_nodes
    }

    /// Allocated arena slots; never shrinks.
    pub fn arena_capacity(&self) -> usize {
        self.nodes.capacity()
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Advances the search by one frame.
    pub fn step(&mut self, frame: &PosteriorFrame<F>) -> Result<()> {
        if frame.len() != self.alphabet.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alphabet.len(),
                found: frame.len(),
            });
        }
        let logp = frame.logp();
        let ninf = F::neg_infinity();
        let blank_lp = logp[self.alphabet.blank()];
        self.epoch += 1;
        let epoch = self.epoch;

        let mut prev = std::mem::take(&mut self.prev);
        let mut touched = std::mem::take(&mut self.touched);
        prev.clear();
        touched.clear();
        for &id in &self.active {
            let n = &self.nodes[id];
            prev.push((id, n.p_nb, n.p_b));
        }

        // Staying within a node: blank self-loop and label self-loop.
        for &(id, nb, b) in &prev {
            let node = &mut self.nodes[id];
            touch(node, id, epoch, &mut touched);
            node.next_b = log_sum_exp(nb, b) + blank_lp;
            if let Some(c) = node.label {
                node.next_nb = log_sum_exp(node.next_nb, nb + logp[c]);
            }
        }

        // Entering already materialized children.
        for &(v, nb, b) in &prev {
            let v_label = self.nodes[v].label;
            let full = log_sum_exp(nb, b);
            for k in 0..self.nodes[v].children.len() {
                let (c, u) = self.nodes[v].children[k];
                let entry = if v_label == Some(c) { b } else { full };
                let node = &mut self.nodes[u];
                let m = entry + logp[c] + node.bonus;
                if m > ninf {
                    touch(node, u, epoch, &mut touched);
                    node.next_nb = log_sum_exp(node.next_nb, m);
                }
            }
        }

        // A new child scores at most `base + β` (α ≥ 0, ln P_LM ≤ 0). If that
        // is strictly below the N-th best existing candidate it can never
        // survive width-pruning, so it is not built.
        let width = self.config.beam_width;
        let mut scores: Vec<F> = touched
            .iter()
            .map(|&id| self.nodes[id].next_score())
            .filter(|s| *s > ninf)
            .collect();
        let best_now = scores.iter().copied().fold(ninf, F::max);
        let floor = if scores.len() >= width {
            let (_, nth, _) = scores.select_nth_unstable_by(width - 1, |a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
            *nth
        } else {
            ninf
        };
        let admit_floor = match self.config.admission_margin {
            Some(m) if best_now > ninf => best_now - F::of(m),
            _ => ninf,
        };

        for &(v, nb, b) in &prev {
            let v_label = self.nodes[v].label;
            let full = log_sum_exp(nb, b);
            for &c in &self.labels {
                if self.nodes[v].child(c).is_some() {
                    continue;
                }
                let entry = if v_label == Some(c) { b } else { full };
                let base = entry + logp[c];
                if base == ninf || base <= admit_floor || base + self.beta < floor {
                    continue;
                }
                let (ctx, lm_lp) = self.lm.advance(&self.nodes[v].lm_ctx, c)?;
                let bonus = if self.config.alpha == 0.0 {
                    self.beta
                } else {
                    self.alpha * F::of(lm_lp) + self.beta
                };
                let m = base + bonus;
                if !(m > ninf) {
                    continue;
                }
                let depth = self.nodes[v].abs_depth + 1;
                let mut child = Node::new(Some(c), Some(v), ctx, bonus, depth);
                child.stamp = epoch;
                child.next_nb = m;
                let u = self.nodes.insert(child);
                self.nodes[v].children.push((c, u));
                touched.push(u);
            }
        }
        self.peak_nodes = self.peak_nodes.max(self.nodes.live());

        // Width pruning.
        let mut survivors: Vec<NodeId> = touched
            .iter()
            .copied()
            .filter(|&id| self.nodes[id].next_score() > ninf)
            .collect();
        if survivors.len() > width {
            let nodes = &self.nodes;
            survivors.select_nth_unstable_by(width - 1, |&a, &b| rank(nodes, a, b, true));
            survivors.truncate(width);
        }

        for &(id, _, _) in &prev {
            let n = &mut self.nodes[id];
            n.active = false;
            n.p_nb = ninf;
            n.p_b = ninf;
        }
        for &id in &survivors {
            let n = &mut self.nodes[id];
            n.p_nb = n.next_nb;
            n.p_b = n.next_b;
            n.active = true;
        }
        self.active = survivors;

        for &id in &touched {
            self.reclaim(id);
        }
        for &(id, _, _) in &prev {
            self.reclaim(id);
        }

        self.prev = prev;
        self.touched = touched;
        self.frame_count += 1;
        self.since_depth_prune += 1;
        if self.since_depth_prune >= self.config.depth_prune_interval {
            self.since_depth_prune = 0;
            self.prune_depth();
        }
        Ok(())
    }

    /// Drops `id` if it holds no mass and has no children, then walks up.
    fn reclaim(&mut self, mut id: NodeId) {
        while id != self.root && self.nodes.contains(id) {
            let n = &self.nodes[id];
            if n.active || !n.children.is_empty() {
                return;
            }
            let parent = n.parent.expect("non-root node has a parent");
            self.nodes.remove(id);
            self.nodes[parent].children.retain(|&mut (_, c)| c != id);
            id = parent;
        }
    }

    /// Re-roots the tree at the `beam_depth`-th ancestor of the best node
    /// and returns the labels that became committed (possibly none).
    pub fn prune_depth(&mut self) -> LabelSequence {
        let Some(best) = self.best_node() else {
            return LabelSequence::new();
        };
        let root_depth = self.nodes[self.root].abs_depth;
        let depth = self.nodes[best].abs_depth - root_depth;
        let keep = self.config.beam_depth;
        if depth <= keep {
            return LabelSequence::new();
        }
        let mut new_root = best;
        for _ in 0..keep {
            new_root = self.nodes[new_root].parent.expect("ancestor within depth");
        }

        let mut newly: Vec<usize> = Vec::with_capacity(depth - keep);
        let mut cur = new_root;
        while cur != self.root {
            let n = &self.nodes[cur];
            newly.push(n.label.expect("non-root node has a label"));
            cur = n.parent.expect("non-root node has a parent");
        }
        newly.reverse();

        let mut keep_mark = vec![false; self.nodes.capacity()];
        let mut stack = vec![new_root];
        while let Some(id) = stack.pop() {
            keep_mark[id.index()] = true;
            stack.extend(self.nodes[id].children.iter().map(|&(_, c)| c));
        }
        let doomed: Vec<NodeId> = self.nodes.ids().filter(|&id| !keep_mark[id.index()]).collect();
        for id in doomed {
            self.nodes.remove(id);
        }
        self.nodes[new_root].parent = None;
        self.root = new_root;
        self.active.retain(|&id| keep_mark[id.index()]);

        let newly = LabelSequence::from_raw(newly);
        self.committed.extend_from(&newly);
        newly
    }

    fn best_node(&self) -> Option<NodeId> {
        self.active
            .iter()
            .copied()
            .min_by(|&a, &b| rank(&self.nodes, a, b, false))
    }

    /// Labels on the path from the current root (exclusive) to `id`.
    fn suffix(&self, id: NodeId) -> LabelSequence {
        LabelSequence::from_raw(path_labels(&self.nodes, id, Some(self.root)))
    }

    fn full_sequence(&self, id: NodeId) -> LabelSequence {
        let mut seq = self.committed.clone();
        seq.extend_from(&self.suffix(id));
        seq
    }

    /// Best full hypothesis (committed prefix included) and its fused score.
    pub fn best(&self) -> Option<(LabelSequence, F)> {
        self.best_node()
            .map(|id| (self.full_sequence(id), self.nodes[id].score()))
    }

    /// Every active hypothesis with its fused score, best first.
    pub fn hypotheses(&self) -> Vec<(LabelSequence, F)> {
        let mut ids = self.active.clone();
        ids.sort_by(|&a, &b| rank(&self.nodes, a, b, false));
        ids.into_iter()
            .map(|id| (self.full_sequence(id), self.nodes[id].score()))
            .collect()
    }

    /// Fused score of a full label sequence, `-inf` if it is not active.
    pub fn score_of(&self, labels: &[usize]) -> F {
        let Some(rest) = labels.strip_prefix(&self.committed[..]) else {
            return F::neg_infinity();
        };
        let mut cur = self.root;
        for &l in rest {
            match self.nodes[cur].child(l) {
                Some(c) => cur = c,
                None => return F::neg_infinity(),
            }
        }
        let n = &self.nodes[cur];
        if n.active {
            n.score()
        } else {
            F::neg_infinity()
        }
    }

    pub fn emit(&self) -> EmissionRecord {
        let mut ids = self.active.clone();
        ids.sort_by(|&a, &b| rank(&self.nodes, a, b, false));
        ids.truncate(self.config.nbest);
        EmissionRecord {
            frame: self.frame_count,
            committed: self.committed.clone(),
            nbest: ids
                .into_iter()
                .map(|id| Hypothesis {
                    suffix: self.suffix(id),
                    score: self.nodes[id].score().as_f64(),
                })
                .collect(),
        }
    }

    /// Steps through `frames`, emitting every `emit_interval` frames and once
    /// more at the end unless the last frame already emitted.
    pub fn run<I>(&mut self, frames: I, mut on_emit: impl FnMut(EmissionRecord) -> Result<()>) -> Result<()>
    where
        I: IntoIterator<Item = Result<PosteriorFrame<F>>>,
    {
        let mut last_emit = None;
        for frame in frames {
            self.step(&frame?)?;
            if self.frame_count.is_multiple_of(self.config.emit_interval) {
                on_emit(self.emit())?;
                last_emit = Some(self.frame_count);
            }
        }
        if last_emit != Some(self.frame_count) {
            on_emit(self.emit())?;
        }
        Ok(())
    }

    pub fn decode_stream<I>(&mut self, frames: I) -> Result<Vec<EmissionRecord>>
    where
        I: IntoIterator<Item = Result<PosteriorFrame<F>>>,
    {
        let mut out = Vec::new();
        self.run(frames, |r| {
            out.push(r);
            Ok(())
        })?;
        Ok(out)
    }

    pub fn decode_frames(&mut self, frames: &[PosteriorFrame<F>]) -> Result<Vec<EmissionRecord>> {
        self.decode_stream(frames.iter().cloned().map(Ok))
    }
}

fn path_labels<F: LogFloat, C>(nodes: &Arena<F, C>, id: NodeId, stop: Option<NodeId>) -> Vec<usize> {
    let mut out = Vec::new();
    let mut cur = Some(id);
    while let Some(c) = cur {
        if Some(c) == stop {
            break;
        }
        let n = &nodes[c];
        if let Some(l) = n.label {
            out.push(l);
        }
        cur = n.parent;
    }
    out.reverse();
    out
}

/// Total order used for pruning, best selection and N-best lists: higher
/// score, then shorter sequence, then smaller label indices.
fn rank<F: LogFloat, C>(nodes: &Arena<F, C>, a: NodeId, b: NodeId, next: bool) -> Ordering {
    if a == b {
        return Ordering::Equal;
    }
    let (na, nb) = (&nodes[a], &nodes[b]);
    let (sa, sb) = if next {
        (na.next_score(), nb.next_score())
    } else {
        (na.score(), nb.score())
    };
    sb.partial_cmp(&sa)
        .unwrap_or(Ordering::Equal)
        .then(na.abs_depth.cmp(&nb.abs_depth))
        .then_with(|| path_labels(nodes, a, None).cmp(&path_labels(nodes, b, None)))
}
