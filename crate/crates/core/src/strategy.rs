//! Bermudan stopping strategies on event trees.
//!
//! An [`ExerciseSchedule`] fixes a non-decreasing ladder of exercise dates
//! `theta_0 <= theta_1 <= ... <= theta_K`, each an exact cut of the tree:
//! `theta_0` stops at the root (time 0) and `theta_K` at the leaves (the
//! horizon). A [`BermudanStoppingTime`] is an exact cut whose stop nodes are
//! either leaves or nodes of some `theta_k`; equivalently, on every
//! root-to-leaf path it stops at exactly one admissible node.
//!
//! The set of such strategies is a lattice: it is closed under pathwise
//! minimum ([`BermudanStoppingTime::meet`]), pathwise maximum
//! ([`BermudanStoppingTime::join`]) and concatenation along an event that is
//! measurable at the earlier of the two stop times
//! ([`BermudanStoppingTime::concatenate`]).

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::tree::{AdaptedProcess, EventTree, NodeId};

/// Ladder of exercise dates over an event tree. Immutable; share via `Arc`.
#[derive(Debug)]
pub struct ExerciseSchedule {
    tree: Arc<EventTree>,
    theta: Vec<BTreeSet<NodeId>>,
    exercisable: Vec<bool>,
}

impl PartialEq for ExerciseSchedule {
    fn eq(&self, other: &Self) -> bool {
        *self.tree == *other.tree && self.theta == other.theta
    }
}

impl ExerciseSchedule {
    /// Schedule where every stage is an exercise date: `theta_k` stops at all
    /// stage-`k` nodes. A single-node tree gets the degenerate ladder
    /// `theta_0 = theta_1 = {root}`.
    pub fn all_stages(tree: &Arc<EventTree>) -> Arc<Self> {
        let horizon = tree.horizon();
        let count = horizon.max(1) + 1;
        let theta: Vec<BTreeSet<NodeId>> = (0..count)
            .map(|k| {
                tree.stage_nodes(k.min(horizon))
                    .unwrap()
                    .into_iter()
                    .collect()
            })
            .collect();
        Self::from_node_sets(tree, &theta).expect("stage ladder is always a valid schedule")
    }

    /// Builds a schedule from explicit stopping-time node sets
    /// `theta_0, ..., theta_K`. Each set must be an exact cut; the ladder
    /// must start at the root, end at the leaves and be pathwise
    /// non-decreasing.
    pub fn from_node_sets(tree: &Arc<EventTree>, theta: &[BTreeSet<NodeId>]) -> Result<Arc<Self>> {
        if theta.len() < 2 {
            return Err(Error::InvalidSchedule {
                detail: format!("need at least two exercise dates, got {}", theta.len()),
            });
        }
        for (k, cut) in theta.iter().enumerate() {
            validate_cut(tree, cut).map_err(|e| Error::InvalidSchedule {
                detail: format!("exercise date {k} is not an exact cut: {e}"),
            })?;
        }
        let root_cut: BTreeSet<NodeId> = [tree.root()].into_iter().collect();
        if theta[0] != root_cut {
            return Err(Error::InvalidSchedule {
                detail: "first exercise date must stop at the root".to_string(),
            });
        }
        let leaf_cut: BTreeSet<NodeId> = tree.leaves().into_iter().collect();
        if *theta.last().unwrap() != leaf_cut {
            return Err(Error::InvalidSchedule {
                detail: "last exercise date must stop at the leaves".to_string(),
            });
        }
        for k in 0..theta.len() - 1 {
            if !cut_leq(tree, &theta[k], &theta[k + 1]) {
                return Err(Error::InvalidSchedule {
                    detail: format!("exercise date {} does not precede date {}", k, k + 1),
                });
            }
        }

        let mut exercisable = vec![false; tree.node_count()];
        for cut in theta {
            for id in cut {
                exercisable[tree.idx(*id)?] = true;
            }
        }
        Ok(Arc::new(ExerciseSchedule {
            tree: Arc::clone(tree),
            theta: theta.to_vec(),
            exercisable,
        }))
    }

    pub fn tree(&self) -> &Arc<EventTree> {
        &self.tree
    }

    /// Number of exercise dates `K` before the horizon completion; the
    /// ladder has `K + 1` entries.
    pub fn last_date_index(&self) -> usize {
        self.theta.len() - 1
    }

    pub fn theta(&self, k: usize) -> Result<&BTreeSet<NodeId>> {
        self.theta.get(k).ok_or(Error::StageOutOfRange {
            stage: k as u32,
            max: (self.theta.len() - 1) as u32,
        })
    }

    pub fn thetas(&self) -> &[BTreeSet<NodeId>] {
        &self.theta
    }

    /// True when some exercise date stops at this node.
    pub fn is_exercisable(&self, id: NodeId) -> Result<bool> {
        Ok(self.exercisable[self.tree.idx(id)?])
    }

    /// Exercisable node ids, ascending.
    pub fn exercisable_nodes(&self) -> Vec<NodeId> {
        self.tree
            .node_ids()
            .filter(|&id| self.exercisable[self.tree.idx(id).unwrap()])
            .collect()
    }

    /// Stop node of exercise date `k` on the path through `leaf`.
    pub fn theta_stop_on_path(&self, k: usize, leaf: NodeId) -> Result<NodeId> {
        let cut = self.theta(k)?.clone();
        ascend_to_member(&self.tree, &cut, leaf)
    }

    pub(crate) fn exercisable_idx(&self, idx: usize) -> bool {
        self.exercisable[idx]
    }

    pub(crate) fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

/// Exact cut of the tree stopping only at exercisable nodes or leaves.
#[derive(Clone, Debug)]
pub struct BermudanStoppingTime {
    schedule: Arc<ExerciseSchedule>,
    stops: BTreeSet<NodeId>,
}

impl PartialEq for BermudanStoppingTime {
    fn eq(&self, other: &Self) -> bool {
        self.schedule.same_as(&other.schedule) && self.stops == other.stops
    }
}

impl Eq for BermudanStoppingTime {}

impl BermudanStoppingTime {
    /// Validates that `stops` is an exact cut supported on exercisable nodes
    /// and leaves.
    pub fn new(
        schedule: &Arc<ExerciseSchedule>,
        stops: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self> {
        let tree = schedule.tree();
        let stops: BTreeSet<NodeId> = stops.into_iter().collect();
        for &id in &stops {
            let idx = tree.idx(id)?;
            if !(schedule.exercisable_idx(idx) || tree.is_leaf_idx(idx)) {
                return Err(Error::InvalidStoppingTime {
                    detail: format!("node {id} is neither exercisable nor a leaf"),
                });
            }
        }
        validate_cut(tree, &stops)?;
        Ok(BermudanStoppingTime {
            schedule: Arc::clone(schedule),
            stops,
        })
    }

    /// Strategy that stops immediately (the root is always exercisable).
    pub fn at_root(schedule: &Arc<ExerciseSchedule>) -> Self {
        let stops = [schedule.tree().root()].into_iter().collect();
        BermudanStoppingTime {
            schedule: Arc::clone(schedule),
            stops,
        }
    }

    /// Strategy that never stops early: every path runs to its leaf.
    pub fn horizon(schedule: &Arc<ExerciseSchedule>) -> Self {
        let stops = schedule.tree().leaves().into_iter().collect();
        BermudanStoppingTime {
            schedule: Arc::clone(schedule),
            stops,
        }
    }

    pub fn schedule(&self) -> &Arc<ExerciseSchedule> {
        &self.schedule
    }

    pub fn tree(&self) -> &Arc<EventTree> {
        self.schedule.tree()
    }

    /// Stop nodes in ascending id order.
    pub fn stops(&self) -> &BTreeSet<NodeId> {
        &self.stops
    }

    pub fn contains_stop(&self, id: NodeId) -> bool {
        self.stops.contains(&id)
    }

    /// True when the strategy stops at the root on every path.
    pub fn is_immediate(&self) -> bool {
        self.stops.len() == 1 && self.stops.contains(&self.tree().root())
    }

    /// True when the strategy runs to the horizon on every path.
    pub fn is_horizon(&self) -> bool {
        self.stops.len() == self.tree().leaf_count()
            && self
                .stops
                .iter()
                .all(|&id| self.tree().is_leaf(id).unwrap())
    }

    /// Stop node governing the path through `leaf`.
    pub fn stop_on_path(&self, leaf: NodeId) -> Result<NodeId> {
        if !self.tree().is_leaf(leaf)? {
            return Err(Error::InvalidStoppingTime {
                detail: format!("node {leaf} is not a leaf"),
            });
        }
        ascend_to_member(self.tree(), &self.stops, leaf)
    }

    /// Stop node at or above `node`, when already determined there.
    pub fn stop_at_or_before(&self, node: NodeId) -> Result<Option<NodeId>> {
        let tree = self.tree();
        let mut cur = Some(tree.idx(node)?);
        while let Some(v) = cur {
            let id = tree.id_of(v);
            if self.stops.contains(&id) {
                return Ok(Some(id));
            }
            cur = tree.parent_idx(v);
        }
        Ok(None)
    }

    /// Pathwise minimum: stops at the earlier stop node on every path.
    pub fn meet(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b, tree| {
            if tree.stage_of(a).unwrap() <= tree.stage_of(b).unwrap() {
                a
            } else {
                b
            }
        })
    }

    /// Pathwise maximum: stops at the later stop node on every path.
    pub fn join(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b, tree| {
            if tree.stage_of(a).unwrap() >= tree.stage_of(b).unwrap() {
                a
            } else {
                b
            }
        })
    }

    fn combine(
        &self,
        other: &Self,
        pick: impl Fn(NodeId, NodeId, &EventTree) -> NodeId,
    ) -> Result<Self> {
        if !self.schedule.same_as(&other.schedule) {
            return Err(Error::SchemaMismatch);
        }
        let tree = self.tree();
        let mut stops = BTreeSet::new();
        for leaf in tree.leaves() {
            let a = self.stop_on_path(leaf)?;
            let b = other.stop_on_path(leaf)?;
            stops.insert(pick(a, b, tree));
        }
        let out = BermudanStoppingTime {
            schedule: Arc::clone(&self.schedule),
            stops,
        };
        debug_assert!(validate_cut(tree, &out.stops).is_ok());
        Ok(out)
    }

    /// Pathwise comparison: true when this strategy stops no later than
    /// `other` on every path.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        if !self.schedule.same_as(&other.schedule) {
            return Err(Error::SchemaMismatch);
        }
        let tree = self.tree();
        for &t in &other.stops {
            let mut cur = Some(tree.idx(t)?);
            let mut covered = false;
            while let Some(v) = cur {
                if self.stops.contains(&tree.id_of(v)) {
                    covered = true;
                    break;
                }
                cur = tree.parent_idx(v);
            }
            if !covered {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Follows `self` on the event `on` (a set of leaves) and `other` off it.
    /// The event must be a union of atoms of the pathwise minimum of the two
    /// strategies, i.e. decided by the time the earlier one stops.
    pub fn concatenate(&self, on: &BTreeSet<NodeId>, other: &Self) -> Result<Self> {
        if !self.schedule.same_as(&other.schedule) {
            return Err(Error::SchemaMismatch);
        }
        let tree = self.tree();
        for &id in on {
            if !tree.is_leaf(id)? {
                return Err(Error::NotMeasurable {
                    detail: format!("event member {id} is not a leaf"),
                });
            }
        }
        let min = self.meet(other)?;
        for &stop in &min.stops {
            let atom = tree.leaves_under(stop)?;
            let inside = atom.iter().filter(|l| on.contains(l)).count();
            if inside != 0 && inside != atom.len() {
                return Err(Error::NotMeasurable {
                    detail: format!(
                        "event splits the atom of stop node {stop} ({} of {} leaves inside)",
                        inside,
                        atom.len()
                    ),
                });
            }
        }
        let mut stops = BTreeSet::new();
        for leaf in tree.leaves() {
            let pickfrom = if on.contains(&leaf) { self } else { other };
            stops.insert(pickfrom.stop_on_path(leaf)?);
        }
        BermudanStoppingTime::new(&self.schedule, stops)
    }

    /// Decomposes the strategy into the events `parts[k]` = "stops exactly at
    /// exercise date k, strictly before the horizon" (with date 0 kept as a
    /// plain coincidence event) and the complement "runs to the horizon".
    /// Earlier dates win where several coincide, so the parts are disjoint.
    pub fn canonical_partition(&self) -> CanonicalPartition {
        let tree = self.tree();
        let count = self.schedule.theta.len();
        let mut parts: Vec<BTreeSet<NodeId>> = vec![BTreeSet::new(); count];
        let mut complement = BTreeSet::new();
        for leaf in tree.leaves() {
            let stop = self.stop_on_path(leaf).unwrap();
            let mut assigned = false;
            for (k, part) in parts.iter_mut().enumerate() {
                let theta_stop = self.schedule.theta_stop_on_path(k, leaf).unwrap();
                if theta_stop != stop {
                    continue;
                }
                // Date 0 is taken as-is; later dates only count strictly
                // before the horizon.
                if k > 0 && tree.is_leaf(theta_stop).unwrap() {
                    continue;
                }
                part.insert(leaf);
                assigned = true;
                break;
            }
            if !assigned {
                complement.insert(leaf);
            }
        }
        CanonicalPartition { parts, complement }
    }

    /// Rebuilds a strategy from per-date stop events plus a horizon
    /// complement. Accepts any partition of the leaves as long as `parts[k]`
    /// is measurable at exercise date `k`; the result is stored in cut form,
    /// so non-canonical inputs are normalized.
    pub fn from_partition(
        schedule: &Arc<ExerciseSchedule>,
        parts: &[BTreeSet<NodeId>],
        complement: &BTreeSet<NodeId>,
    ) -> Result<Self> {
        let tree = schedule.tree();
        if parts.len() != schedule.theta.len() {
            return Err(Error::InvalidStoppingTime {
                detail: format!(
                    "expected {} stop events, got {}",
                    schedule.theta.len(),
                    parts.len()
                ),
            });
        }
        let mut seen: BTreeSet<NodeId> = BTreeSet::new();
        for set in parts.iter().chain(std::iter::once(complement)) {
            for &id in set {
                if !tree.is_leaf(id)? {
                    return Err(Error::InvalidStoppingTime {
                        detail: format!("event member {id} is not a leaf"),
                    });
                }
                if !seen.insert(id) {
                    return Err(Error::InvalidStoppingTime {
                        detail: format!("leaf {id} appears in more than one event"),
                    });
                }
            }
        }
        if seen.len() != tree.leaf_count() {
            return Err(Error::InvalidStoppingTime {
                detail: "events do not cover all leaves".to_string(),
            });
        }
        for (k, part) in parts.iter().enumerate() {
            for &stop in &schedule.theta[k] {
                let atom = tree.leaves_under(stop)?;
                let inside = atom.iter().filter(|l| part.contains(l)).count();
                if inside != 0 && inside != atom.len() {
                    return Err(Error::NotMeasurable {
                        detail: format!(
                            "stop event {k} splits the atom of node {stop} at its exercise date"
                        ),
                    });
                }
            }
        }
        let mut stops = BTreeSet::new();
        for leaf in tree.leaves() {
            if complement.contains(&leaf) {
                stops.insert(leaf);
                continue;
            }
            for (k, part) in parts.iter().enumerate() {
                if part.contains(&leaf) {
                    stops.insert(schedule.theta_stop_on_path(k, leaf)?);
                    break;
                }
            }
        }
        BermudanStoppingTime::new(schedule, stops)
    }
}

/// Stop events per exercise date plus the horizon complement, all as leaf
/// sets. Produced by [`BermudanStoppingTime::canonical_partition`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalPartition {
    pub parts: Vec<BTreeSet<NodeId>>,
    pub complement: BTreeSet<NodeId>,
}

/// Earliest strategy that stops inside `region`: on every path it stops at
/// the first region node that is exercisable or a leaf, falling back to the
/// leaf when the path never meets the region.
pub fn first_hitting(
    schedule: &Arc<ExerciseSchedule>,
    region: &BTreeSet<NodeId>,
) -> Result<BermudanStoppingTime> {
    let tree = schedule.tree();
    for &id in region {
        tree.idx(id)?;
    }
    let mut stops = BTreeSet::new();
    let mut stack = vec![tree.root_idx()];
    while let Some(v) = stack.pop() {
        let id = tree.id_of(v);
        let leaf = tree.is_leaf_idx(v);
        if leaf || (region.contains(&id) && schedule.exercisable_idx(v)) {
            stops.insert(id);
        } else {
            stack.extend(tree.children_idx(v).iter().map(|&(c, _)| c));
        }
    }
    let out = BermudanStoppingTime {
        schedule: Arc::clone(schedule),
        stops,
    };
    debug_assert!(validate_cut(tree, &out.stops).is_ok());
    Ok(out)
}

/// Number of valid strategies (at least `from` when given), saturating.
pub fn strategy_count(
    schedule: &Arc<ExerciseSchedule>,
    from: Option<&BermudanStoppingTime>,
) -> Result<u128> {
    let tree = schedule.tree();
    let beyond = beyond_mask(schedule, from)?;
    Ok(count_rec(tree, schedule, &beyond, tree.root_idx()))
}

fn count_rec(tree: &EventTree, schedule: &ExerciseSchedule, beyond: &[bool], v: usize) -> u128 {
    if tree.is_leaf_idx(v) {
        return 1;
    }
    let mut product: u128 = 1;
    for &(c, _) in tree.children_idx(v) {
        product = product.saturating_mul(count_rec(tree, schedule, beyond, c));
    }
    let own = (beyond[v] && schedule.exercisable_idx(v)) as u128;
    own.saturating_add(product)
}

/// Enumerates every valid strategy (at least `from` when given) in
/// lexicographic order of sorted stop-node ids. Fails before materializing
/// anything when the count exceeds `limit`.
pub fn enumerate_strategies(
    schedule: &Arc<ExerciseSchedule>,
    from: Option<&BermudanStoppingTime>,
    limit: usize,
) -> Result<Vec<BermudanStoppingTime>> {
    let tree = schedule.tree();
    let beyond = beyond_mask(schedule, from)?;
    let count = count_rec(tree, schedule, &beyond, tree.root_idx());
    if count > limit as u128 {
        return Err(Error::EnumerationLimitExceeded { limit });
    }
    let combos = enumerate_rec(tree, schedule, &beyond, tree.root_idx());
    let mut out: Vec<BermudanStoppingTime> = combos
        .into_iter()
        .map(|stops| BermudanStoppingTime {
            schedule: Arc::clone(schedule),
            stops: stops.into_iter().map(|v| tree.id_of(v)).collect(),
        })
        .collect();
    out.sort_by(|a, b| a.stops.cmp(&b.stops));
    debug_assert!(out.iter().all(|s| validate_cut(tree, &s.stops).is_ok()));
    Ok(out)
}

fn enumerate_rec(
    tree: &EventTree,
    schedule: &ExerciseSchedule,
    beyond: &[bool],
    v: usize,
) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if tree.is_leaf_idx(v) {
        out.push(vec![v]);
        return out;
    }
    if beyond[v] && schedule.exercisable_idx(v) {
        out.push(vec![v]);
    }
    let mut product: Vec<Vec<usize>> = vec![Vec::new()];
    for &(c, _) in tree.children_idx(v) {
        let sub = enumerate_rec(tree, schedule, beyond, c);
        let mut next = Vec::with_capacity(product.len() * sub.len());
        for base in &product {
            for branch in &sub {
                let mut merged = base.clone();
                merged.extend_from_slice(branch);
                next.push(merged);
            }
        }
        product = next;
    }
    out.extend(product);
    out
}

/// Uniform-ish random strategy: walking down from the root, stops with
/// probability 1/2 at each admissible interior node and always at leaves.
/// Respects `from` (result stops at or after it on every path).
pub fn random_stopping_time(
    schedule: &Arc<ExerciseSchedule>,
    rng: &mut impl Rng,
    from: Option<&BermudanStoppingTime>,
) -> Result<BermudanStoppingTime> {
    let tree = schedule.tree();
    let beyond = beyond_mask(schedule, from)?;
    let mut stops = BTreeSet::new();
    let mut stack = vec![tree.root_idx()];
    while let Some(v) = stack.pop() {
        if tree.is_leaf_idx(v) {
            stops.insert(tree.id_of(v));
            continue;
        }
        if beyond[v] && schedule.exercisable_idx(v) && rng.gen_bool(0.5) {
            stops.insert(tree.id_of(v));
            continue;
        }
        // Push in reverse so children are decided in their stored order.
        for &(c, _) in tree.children_idx(v).iter().rev() {
            stack.push(c);
        }
    }
    let out = BermudanStoppingTime {
        schedule: Arc::clone(schedule),
        stops,
    };
    debug_assert!(validate_cut(tree, &out.stops).is_ok());
    Ok(out)
}

/// Reads an adapted process at the stop node governing each path, giving the
/// terminal-stage view of "the value received when stopping": a map
/// leaf -> value at that path's stop node.
pub fn evaluate_family_at(
    phi: &AdaptedProcess,
    tau: &BermudanStoppingTime,
) -> Result<BTreeMap<NodeId, f64>> {
    if !phi.same_tree(tau.tree()) {
        return Err(Error::SchemaMismatch);
    }
    let tree = tau.tree();
    let mut out = BTreeMap::new();
    for leaf in tree.leaves() {
        let stop = tau.stop_on_path(leaf)?;
        out.insert(leaf, phi.get(stop)?);
    }
    Ok(out)
}

/// For every node, the stop node at or above it (earliest wins), as dense
/// indices. `None` where every stop on the node's paths lies strictly below.
pub(crate) fn cut_ancestor(tree: &EventTree, stops: &BTreeSet<NodeId>) -> Vec<Option<usize>> {
    let mut anc: Vec<Option<usize>> = vec![None; tree.node_count()];
    let root = tree.root_idx();
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        let inherited = tree.parent_idx(v).and_then(|p| anc[p]);
        anc[v] = inherited.or_else(|| {
            if stops.contains(&tree.id_of(v)) {
                Some(v)
            } else {
                None
            }
        });
        stack.extend(tree.children_idx(v).iter().map(|&(c, _)| c));
    }
    anc
}

fn beyond_mask(
    schedule: &Arc<ExerciseSchedule>,
    from: Option<&BermudanStoppingTime>,
) -> Result<Vec<bool>> {
    let tree = schedule.tree();
    match from {
        None => Ok(vec![true; tree.node_count()]),
        Some(f) => {
            if !f.schedule.same_as(schedule) {
                return Err(Error::SchemaMismatch);
            }
            Ok(cut_ancestor(tree, &f.stops)
                .into_iter()
                .map(|a| a.is_some())
                .collect())
        }
    }
}

/// True when, along every root-to-leaf path, the `earlier` cut stops at or
/// before the `later` cut. For exact cuts this is equivalent to every node
/// of `later` having an ancestor-or-self in `earlier`.
fn cut_leq(tree: &EventTree, earlier: &BTreeSet<NodeId>, later: &BTreeSet<NodeId>) -> bool {
    later
        .iter()
        .all(|&id| ascend_to_member(tree, earlier, id).is_ok())
}

fn ascend_to_member(tree: &EventTree, set: &BTreeSet<NodeId>, node: NodeId) -> Result<NodeId> {
    let mut cur = Some(tree.idx(node)?);
    while let Some(v) = cur {
        let id = tree.id_of(v);
        if set.contains(&id) {
            return Ok(id);
        }
        cur = tree.parent_idx(v);
    }
    Err(Error::InvalidStoppingTime {
        detail: format!("no stop node on the path through {node}"),
    })
}

/// Checks that `stops` crosses every root-to-leaf path exactly once.
pub(crate) fn validate_cut(tree: &EventTree, stops: &BTreeSet<NodeId>) -> Result<()> {
    for &id in stops {
        tree.idx(id)?;
    }
    let mut stack = vec![(tree.root_idx(), false)];
    while let Some((v, above)) = stack.pop() {
        let id = tree.id_of(v);
        let here = stops.contains(&id);
        if here && above {
            return Err(Error::InvalidStoppingTime {
                detail: format!("node {id} lies below another stop node"),
            });
        }
        let stopped = here || above;
        if tree.is_leaf_idx(v) {
            if !stopped {
                return Err(Error::InvalidStoppingTime {
                    detail: format!("path through leaf {id} has no stop node"),
                });
            }
        } else {
            for &(c, _) in tree.children_idx(v) {
                stack.push((c, stopped));
            }
        }
    }
    Ok(())
}
