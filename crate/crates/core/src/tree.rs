//! Finite filtered event trees.
//!
//! An [`EventTree`] is a rooted tree whose nodes are the atoms of a discrete
//! filtration: the stage-`i` nodes are the atoms observable at stage `i`, the
//! single root at stage 0 is the trivial atom, and every leaf sits at the
//! terminal stage `M`. Strictly positive one-step transition probabilities
//! hang on the edges and sum to one per parent. Calendar dates are attached
//! to stages as metadata; all decision logic in this crate is stage-indexed.
//!
//! [`AdaptedProcess`] attaches one real value to every node, i.e. a process
//! whose stage-`i` value is known from stage-`i` information.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance for per-node probability sums.
pub const EPS_PROB: f64 = 1e-12;

/// External identifier of a tree node, as chosen by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Node description consumed by [`EventTree::build`].
#[derive(Clone, Debug)]
pub struct NodeSpec {
    pub id: u32,
    pub stage: u32,
    /// Child id plus one-step transition probability. Empty for leaves.
    pub children: Vec<(u32, f64)>,
}

#[derive(Debug)]
struct Node {
    id: NodeId,
    stage: u32,
    parent: Option<usize>,
    children: Vec<(usize, f64)>,
}

/// Immutable filtered event tree. Cheap to share via `Arc`; all consumers
/// hold it immutably, so concurrent reads are safe.
#[derive(Debug)]
pub struct EventTree {
    nodes: Vec<Node>,
    index: BTreeMap<NodeId, usize>,
    dates: Vec<f64>,
    horizon: u32,
    root: usize,
    leaves: Vec<usize>,
}

impl PartialEq for EventTree {
    fn eq(&self, other: &Self) -> bool {
        if self.dates != other.dates || self.nodes.len() != other.nodes.len() {
            return false;
        }
        self.nodes.iter().zip(other.nodes.iter()).all(|(a, b)| {
            a.id == b.id
                && a.stage == b.stage
                && a.children.len() == b.children.len()
                && a.children
                    .iter()
                    .zip(b.children.iter())
                    .all(|(&(ci, cp), &(di, dp))| {
                        self.nodes[ci].id == other.nodes[di].id && cp == dp
                    })
        })
    }
}

impl EventTree {
    /// Validates and assembles a tree from node descriptions plus one date
    /// per stage. Nodes may be listed in any order; ids are arbitrary u32s.
    pub fn build(specs: &[NodeSpec], dates: &[f64]) -> Result<Arc<Self>> {
        if specs.is_empty() {
            return Err(Error::RootCount { count: 0 });
        }

        let mut order: Vec<usize> = (0..specs.len()).collect();
        order.sort_by_key(|&i| specs[i].id);
        for w in order.windows(2) {
            if specs[w[0]].id == specs[w[1]].id {
                return Err(Error::DuplicateNodeId { id: specs[w[0]].id });
            }
        }

        let index: BTreeMap<NodeId, usize> = order
            .iter()
            .enumerate()
            .map(|(dense, &i)| (NodeId(specs[i].id), dense))
            .collect();

        let mut nodes: Vec<Node> = order
            .iter()
            .map(|&i| Node {
                id: NodeId(specs[i].id),
                stage: specs[i].stage,
                parent: None,
                children: Vec::with_capacity(specs[i].children.len()),
            })
            .collect();

        for &i in &order {
            let spec = &specs[i];
            let pdense = index[&NodeId(spec.id)];
            let mut sum = 0.0;
            for &(child_id, prob) in &spec.children {
                let cdense = *index.get(&NodeId(child_id)).ok_or(Error::DanglingChild {
                    parent: spec.id,
                    child: child_id,
                })?;
                if nodes[cdense].parent.is_some() {
                    return Err(Error::MultipleParents { child: child_id });
                }
                if cdense == pdense {
                    return Err(Error::MultipleParents { child: child_id });
                }
                if !(prob.is_finite() && prob > 0.0 && prob <= 1.0) {
                    return Err(Error::InvalidProbability {
                        parent: spec.id,
                        child: child_id,
                        prob,
                    });
                }
                nodes[cdense].parent = Some(pdense);
                nodes[pdense].children.push((cdense, prob));
                sum += prob;
            }
            if !spec.children.is_empty() && (sum - 1.0).abs() > EPS_PROB {
                return Err(Error::ProbabilitySumViolation { node: spec.id, sum });
            }
        }

        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();
        if roots.len() != 1 {
            return Err(Error::RootCount { count: roots.len() });
        }
        let root = roots[0];
        if nodes[root].stage != 0 {
            return Err(Error::RootNotAtStageZero {
                id: nodes[root].id.0,
                stage: nodes[root].stage,
            });
        }

        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            seen[v] = true;
            for &(c, _) in &nodes[v].children {
                if nodes[c].stage != nodes[v].stage + 1 {
                    return Err(Error::StageSkip {
                        parent: nodes[v].id.0,
                        child: nodes[c].id.0,
                    });
                }
                stack.push(c);
            }
        }
        if let Some(miss) = seen.iter().position(|&s| !s) {
            return Err(Error::UnreachableNode {
                id: nodes[miss].id.0,
            });
        }

        let horizon = nodes.iter().map(|n| n.stage).max().unwrap();
        let leaves: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].children.is_empty())
            .collect();
        for &l in &leaves {
            if nodes[l].stage != horizon {
                return Err(Error::LeafAtWrongStage {
                    id: nodes[l].id.0,
                    stage: nodes[l].stage,
                    expected: horizon,
                });
            }
        }

        let expected = horizon as usize + 1;
        if dates.len() != expected {
            return Err(Error::DateCountMismatch {
                expected,
                found: dates.len(),
            });
        }
        if !(dates[0].is_finite() && dates[0] >= 0.0) {
            return Err(Error::NonIncreasingDates { stage: 0 });
        }
        for s in 1..dates.len() {
            if !(dates[s].is_finite() && dates[s] > dates[s - 1]) {
                return Err(Error::NonIncreasingDates { stage: s as u32 });
            }
        }

        Ok(Arc::new(EventTree {
            nodes,
            index,
            dates: dates.to_vec(),
            horizon,
            root,
            leaves,
        }))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Terminal stage `M`; every leaf sits here.
    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn dates(&self) -> &[f64] {
        &self.dates
    }

    pub fn date(&self, stage: u32) -> Result<f64> {
        self.dates
            .get(stage as usize)
            .copied()
            .ok_or(Error::StageOutOfRange {
                stage,
                max: self.horizon,
            })
    }

    /// Date of the terminal stage.
    pub fn terminal_date(&self) -> f64 {
        *self.dates.last().unwrap()
    }

    pub fn root(&self) -> NodeId {
        self.nodes[self.root].id
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// All node ids in ascending order.
    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.nodes.iter().map(|n| n.id)
    }

    pub fn stage_of(&self, id: NodeId) -> Result<u32> {
        Ok(self.nodes[self.idx(id)?].stage)
    }

    pub fn parent_of(&self, id: NodeId) -> Result<Option<NodeId>> {
        Ok(self.nodes[self.idx(id)?].parent.map(|p| self.nodes[p].id))
    }

    pub fn children_of(&self, id: NodeId) -> Result<Vec<(NodeId, f64)>> {
        Ok(self.nodes[self.idx(id)?]
            .children
            .iter()
            .map(|&(c, p)| (self.nodes[c].id, p))
            .collect())
    }

    pub fn is_leaf(&self, id: NodeId) -> Result<bool> {
        Ok(self.nodes[self.idx(id)?].children.is_empty())
    }

    /// Leaf ids in ascending order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.leaves.iter().map(|&l| self.nodes[l].id).collect()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    /// Ids of all nodes at the given stage, ascending.
    pub fn stage_nodes(&self, stage: u32) -> Result<Vec<NodeId>> {
        if stage > self.horizon {
            return Err(Error::StageOutOfRange {
                stage,
                max: self.horizon,
            });
        }
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.stage == stage)
            .map(|n| n.id)
            .collect())
    }

    /// Subtree of `id` including itself, ids ascending.
    pub fn descendants(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let mut out = Vec::new();
        let mut stack = vec![self.idx(id)?];
        while let Some(v) = stack.pop() {
            out.push(self.nodes[v].id);
            stack.extend(self.nodes[v].children.iter().map(|&(c, _)| c));
        }
        out.sort();
        Ok(out)
    }

    /// Leaves of the subtree rooted at `id`, i.e. the atom the node resolves
    /// into at the terminal stage. Ids ascending.
    pub fn leaves_under(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let idx = self.idx(id)?;
        let mut out = Vec::new();
        let mut stack = vec![idx];
        while let Some(v) = stack.pop() {
            if self.nodes[v].children.is_empty() {
                out.push(self.nodes[v].id);
            } else {
                stack.extend(self.nodes[v].children.iter().map(|&(c, _)| c));
            }
        }
        out.sort();
        Ok(out)
    }

    /// True when `anc` lies on the path from the root to `node` (inclusive).
    pub fn is_ancestor_or_self(&self, anc: NodeId, node: NodeId) -> Result<bool> {
        let target = self.idx(anc)?;
        let mut cur = Some(self.idx(node)?);
        while let Some(v) = cur {
            if v == target {
                return Ok(true);
            }
            cur = self.nodes[v].parent;
        }
        Ok(false)
    }

    /// Product of one-step probabilities along the path from the root.
    pub fn path_probability(&self, id: NodeId) -> Result<f64> {
        let mut v = self.idx(id)?;
        let mut p = 1.0;
        while let Some(parent) = self.nodes[v].parent {
            let (_, edge) = self.nodes[parent]
                .children
                .iter()
                .find(|&&(c, _)| c == v)
                .copied()
                .unwrap();
            p *= edge;
            v = parent;
        }
        Ok(p)
    }

    pub(crate) fn idx(&self, id: NodeId) -> Result<usize> {
        self.index
            .get(&id)
            .copied()
            .ok_or(Error::UnknownNode { id: id.0 })
    }

    pub(crate) fn id_of(&self, idx: usize) -> NodeId {
        self.nodes[idx].id
    }

    pub(crate) fn root_idx(&self) -> usize {
        self.root
    }

    pub(crate) fn parent_idx(&self, idx: usize) -> Option<usize> {
        self.nodes[idx].parent
    }

    pub(crate) fn children_idx(&self, idx: usize) -> &[(usize, f64)] {
        &self.nodes[idx].children
    }

    pub(crate) fn is_leaf_idx(&self, idx: usize) -> bool {
        self.nodes[idx].children.is_empty()
    }

    /// Dense traversal order: indices sorted by stage descending, suitable
    /// for backward induction. Ties keep id order for determinism.
    pub(crate) fn backward_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            self.nodes[b]
                .stage
                .cmp(&self.nodes[a].stage)
                .then(self.nodes[a].id.cmp(&self.nodes[b].id))
        });
        order
    }
}

/// Real-valued process carrying one value per node; the stage-`i` value is
/// known from stage-`i` information by construction.
#[derive(Clone, Debug)]
pub struct AdaptedProcess {
    tree: Arc<EventTree>,
    values: Vec<f64>,
}

impl AdaptedProcess {
    /// Builds from a total map node id -> value. Every node must be covered
    /// and every value finite.
    pub fn from_map(tree: &Arc<EventTree>, values: &BTreeMap<NodeId, f64>) -> Result<Self> {
        for id in values.keys() {
            if !tree.contains(*id) {
                return Err(Error::UnknownNode { id: id.0 });
            }
        }
        let mut dense = vec![0.0; tree.node_count()];
        for id in tree.node_ids() {
            let v = *values.get(&id).ok_or(Error::MissingPayoff { node: id.0 })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { node: id.0 });
            }
            dense[tree.idx(id).unwrap()] = v;
        }
        Ok(AdaptedProcess {
            tree: Arc::clone(tree),
            values: dense,
        })
    }

    pub fn from_fn(tree: &Arc<EventTree>, f: impl Fn(NodeId) -> f64) -> Result<Self> {
        let mut dense = vec![0.0; tree.node_count()];
        for id in tree.node_ids() {
            let v = f(id);
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { node: id.0 });
            }
            dense[tree.idx(id).unwrap()] = v;
        }
        Ok(AdaptedProcess {
            tree: Arc::clone(tree),
            values: dense,
        })
    }

    pub fn constant(tree: &Arc<EventTree>, c: f64) -> Result<Self> {
        Self::from_fn(tree, |_| c)
    }

    pub fn tree(&self) -> &Arc<EventTree> {
        &self.tree
    }

    pub fn get(&self, id: NodeId) -> Result<f64> {
        Ok(self.values[self.tree.idx(id)?])
    }

    /// Pairs (id, value) in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, f64)> + '_ {
        self.tree
            .node_ids()
            .map(move |id| (id, self.values[self.tree.idx(id).unwrap()]))
    }

    /// True when the process is constant on every stage-`stage` atom, i.e.
    /// its value is already determined by stage-`stage` information.
    pub fn is_measurable_at(&self, stage: u32) -> Result<bool> {
        for id in self.tree.stage_nodes(stage)? {
            let v = self.get(id)?;
            for d in self.tree.descendants(id)? {
                if self.get(d)? != v {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub(crate) fn get_idx(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub(crate) fn from_dense(tree: &Arc<EventTree>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), tree.node_count());
        AdaptedProcess {
            tree: Arc::clone(tree),
            values,
        }
    }

    pub(crate) fn same_tree(&self, other: &Arc<EventTree>) -> bool {
        Arc::ptr_eq(&self.tree, other) || *self.tree == **other
    }
}
