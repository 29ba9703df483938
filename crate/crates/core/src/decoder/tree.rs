//! Arena storage for the label-level prefix tree.
//!
//! Every node stands for one label sequence (the labels on its root path)
//! and carries that sequence's two CTC-state masses: paths whose last frame
//! emitted the node's label (`p_nb`) and paths whose last frame was a blank
//! after it (`p_b`). Since each `(parent, label)` pair has at most one
//! child, all paths that collapse to the same sequence share one node.

use smallvec::SmallVec;

use crate::logmath::log_sum_exp;
use crate::scalar::LogFloat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub(crate) fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Node<F, C> {
    /// `None` only for the initial root.
    pub label: Option<usize>,
    pub parent: Option<NodeId>,
    pub children: SmallVec<[(usize, NodeId); 4]>,
    pub p_nb: F,
    pub p_b: F,
    pub lm_ctx: C,
    /// `α·ln P_LM(label | history) + β`, applied to every unit of mass
    /// entering this node from its parent.
    pub bonus: F,
    /// Distance from the start of the stream, committed labels included.
    pub abs_depth: usize,
    pub active: bool,
    // Next-frame masses, valid while `stamp` equals the decoder epoch.
    pub next_nb: F,
    pub next_b: F,
    pub stamp: u64,
}

impl<F: LogFloat, C> Node<F, C> {
    pub fn new(label: Option<usize>, parent: Option<NodeId>, lm_ctx: C, bonus: F, abs_depth: usize) -> Self {
        Self {
            label,
            parent,
            children: SmallVec::new(),
            p_nb: F::neg_infinity(),
            p_b: F::neg_infinity(),
            lm_ctx,
            bonus,
            abs_depth,
            active: false,
            next_nb: F::neg_infinity(),
            next_b: F::neg_infinity(),
            stamp: 0,
        }
    }

    pub fn score(&self) -> F {
        log_sum_exp(self.p_nb, self.p_b)
    }

    pub fn next_score(&self) -> F {
        log_sum_exp(self.next_nb, self.next_b)
    }

    pub fn child(&self, label: usize) -> Option<NodeId> {
        self.children
            .iter()
            .find_map(|&(l, id)| (l == label).then_some(id))
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Arena<F, C> {
    slots: Vec<Option<Node<F, C>>>,
    free: Vec<NodeId>,
    live: usize,
}

impl<F: LogFloat, C> Arena<F, C> {
    pub fn new() -> Self {
        Self {
            slots: Vec::new(),
            free: Vec::new(),
            live: 0,
        }
    }

    pub fn insert(&mut self, node: Node<F, C>) -> NodeId {
        self.live += 1;
        if let Some(id) = self.free.pop() {
            self.slots[id.index()] = Some(node);
            id
        } else {
            let id = NodeId(u32::try_from(self.slots.len()).expect("arena exceeds u32 ids"));
            self.slots.push(Some(node));
            id
        }
    }

    pub fn remove(&mut self, id: NodeId) -> Node<F, C> {
        let node = self.slots[id.index()].take().expect("removing a dead node");
        self.free.push(id);
        self.live -= 1;
        node
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.slots.get(id.index()).is_some_and(Option::is_some)
    }

    pub fn live(&self) -> usize {
        self.live
    }

    /// Allocated slots, live or free.
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|_| NodeId(i as u32)))
    }
}

impl<F, C> std::ops::Index<NodeId> for Arena<F, C> {
    type Output = Node<F, C>;

    fn index(&self, id: NodeId) -> &Node<F, C> {
        self.slots[id.index()].as_ref().expect("dangling node id")
    }
}

impl<F, C> std::ops::IndexMut<NodeId> for Arena<F, C> {
    fn index_mut(&mut self, id: NodeId) -> &mut Node<F, C> {
        self.slots[id.index()].as_mut().expect("dangling node id")
    }
}
