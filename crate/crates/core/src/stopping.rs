//! Optimal stopping of a payoff process under a non-linear evaluation.
//!
//! [`value_family`] runs the backward induction for the problem "stop at an
//! exercisable node no later than a cap strategy, collecting the payoff
//! there, valued through the operator's local aggregators". Beyond the cap
//! the value is frozen at the payoff collected where the cap stopped, which
//! makes the family well-defined at every node. [`minimal_optimal`] extracts
//! the earliest optimal strategy as the first hitting time of the region
//! where the value touches the payoff; [`brute_force_value`] recomputes the
//! same values by enumerating every admissible strategy, serving as an
//! independent oracle for the induction.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evaluation::EvaluationOperator;
use crate::strategy::{
    cut_ancestor, enumerate_strategies, first_hitting, BermudanStoppingTime, ExerciseSchedule,
};
use crate::tree::{AdaptedProcess, EventTree, NodeId};

/// Values, effective payoffs and freeze markers of one backward induction.
#[derive(Clone, Debug)]
pub struct ValueFamily {
    operator: EvaluationOperator,
    cap: BermudanStoppingTime,
    values: Vec<f64>,
    effective: Vec<f64>,
    raw: Vec<f64>,
    frozen: Vec<bool>,
}

impl ValueFamily {
    pub fn tree(&self) -> &Arc<EventTree> {
        self.operator.tree()
    }

    pub fn schedule(&self) -> &Arc<ExerciseSchedule> {
        self.cap.schedule()
    }

    pub fn operator(&self) -> &EvaluationOperator {
        &self.operator
    }

    /// Strategy bounding the stopping problem from above.
    pub fn cap(&self) -> &BermudanStoppingTime {
        &self.cap
    }

    /// Value of the stopping problem viewed from `id`.
    pub fn value(&self, id: NodeId) -> Result<f64> {
        Ok(self.values[self.tree().idx(id)?])
    }

    /// Value at the root: the worth of the whole problem at time zero.
    pub fn root_value(&self) -> f64 {
        self.values[self.tree().root_idx()]
    }

    /// Payoff collected when stopping at `id`: the raw payoff strictly
    /// before the cap, the payoff frozen at the cap's stop node beyond it.
    pub fn effective_payoff(&self, id: NodeId) -> Result<f64> {
        Ok(self.effective[self.tree().idx(id)?])
    }

    /// The payoff process as supplied, without freezing.
    pub fn raw_payoff(&self, id: NodeId) -> Result<f64> {
        Ok(self.raw[self.tree().idx(id)?])
    }

    /// True when `id` lies at or beyond the cap's stop node on its paths.
    pub fn is_frozen(&self, id: NodeId) -> Result<bool> {
        Ok(self.frozen[self.tree().idx(id)?])
    }

    /// Reads the value family at the stop nodes of `tau`.
    pub fn read_at(&self, tau: &BermudanStoppingTime) -> Result<BTreeMap<NodeId, f64>> {
        if !tau.schedule().same_as(self.schedule()) {
            return Err(Error::SchemaMismatch);
        }
        let mut out = BTreeMap::new();
        for &stop in tau.stops() {
            out.insert(stop, self.value(stop)?);
        }
        Ok(out)
    }
}

/// Backward induction for stopping no later than `cap`: at nodes at or
/// beyond the cap the value and payoff freeze at the cap's stop; strictly
/// before it, the value is the better of stopping now (where exercisable)
/// and continuing through the node's aggregator.
pub fn value_family(
    op: &EvaluationOperator,
    xi: &AdaptedProcess,
    cap: &BermudanStoppingTime,
) -> Result<ValueFamily> {
    let tree = op.tree();
    if !xi.same_tree(tree) || !xi.same_tree(cap.tree()) {
        return Err(Error::SchemaMismatch);
    }
    let schedule = cap.schedule();
    let n = tree.node_count();
    let anc = cut_ancestor(tree, cap.stops());
    let mut values = vec![0.0_f64; n];
    let mut effective = vec![0.0_f64; n];
    let mut raw = vec![0.0_f64; n];
    let mut frozen = vec![false; n];
    for v in tree.backward_order() {
        raw[v] = xi.get_idx(v);
        match anc[v] {
            Some(u) => {
                let pinned = xi.get_idx(u);
                values[v] = pinned;
                effective[v] = pinned;
                frozen[v] = true;
            }
            None => {
                let children = tree.children_idx(v);
                let kid_vals: Vec<f64> = children.iter().map(|&(c, _)| values[c]).collect();
                let cont = op.aggregate_idx(v, &kid_vals)?;
                effective[v] = raw[v];
                values[v] = if schedule.exercisable_idx(v) {
                    raw[v].max(cont)
                } else {
                    cont
                };
            }
        }
    }
    Ok(ValueFamily {
        operator: op.clone(),
        cap: cap.clone(),
        values,
        effective,
        raw,
        frozen,
    })
}

/// Earliest optimal strategy: first hitting time of the region where the
/// value equals the effective payoff (within `tol`) at an exercisable node
/// or leaf. Always stops no later than the family's cap.
pub fn minimal_optimal(vf: &ValueFamily, tol: f64) -> Result<BermudanStoppingTime> {
    let tree = vf.tree();
    let schedule = vf.schedule();
    let mut region = BTreeSet::new();
    for id in tree.node_ids() {
        let idx = tree.idx(id)?;
        if !(schedule.exercisable_idx(idx) || tree.is_leaf_idx(idx)) {
            continue;
        }
        if (vf.values[idx] - vf.effective[idx]).abs() <= tol {
            region.insert(id);
        }
    }
    first_hitting(schedule, &region)
}

/// Alternative realization of the earliest optimal strategy: hit the region
/// where the value equals the raw (unfrozen) payoff, then clip at the cap
/// by pathwise minimum. Agrees with [`minimal_optimal`] because freezing
/// only rewrites payoffs at or beyond the cap.
pub fn minimal_optimal_via_raw_region(vf: &ValueFamily, tol: f64) -> Result<BermudanStoppingTime> {
    let tree = vf.tree();
    let schedule = vf.schedule();
    let mut region = BTreeSet::new();
    for id in tree.node_ids() {
        let idx = tree.idx(id)?;
        if !(schedule.exercisable_idx(idx) || tree.is_leaf_idx(idx)) {
            continue;
        }
        if (vf.values[idx] - vf.raw[idx]).abs() <= tol {
            region.insert(id);
        }
    }
    first_hitting(schedule, &region)?.meet(vf.cap())
}

/// Enumeration oracle: recomputes the capped stopping values at the stop
/// nodes of `from` as the pointwise maximum over every admissible strategy
/// at or after `from`, reading the payoff where each strategy (clipped at
/// the cap) stops. Fails with `EnumerationLimitExceeded` when more than
/// `enum_limit` strategies would be enumerated.
pub fn brute_force_value(
    op: &EvaluationOperator,
    xi: &AdaptedProcess,
    cap: &BermudanStoppingTime,
    from: &BermudanStoppingTime,
    enum_limit: usize,
) -> Result<BTreeMap<NodeId, f64>> {
    let tree = op.tree();
    if !xi.same_tree(tree) || !xi.same_tree(cap.tree()) {
        return Err(Error::SchemaMismatch);
    }
    if !from.schedule().same_as(cap.schedule()) {
        return Err(Error::SchemaMismatch);
    }
    let schedule = from.schedule();
    let all = enumerate_strategies(schedule, Some(from), enum_limit)?;
    let mut best: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut memo = vec![0.0_f64; tree.node_count()];
    for tau in &all {
        let clipped = tau.meet(cap)?;
        let anc = cut_ancestor(tree, clipped.stops());
        for v in tree.backward_order() {
            memo[v] = match anc[v] {
                Some(u) => xi.get_idx(u),
                None => {
                    let children = tree.children_idx(v);
                    let kid_vals: Vec<f64> = children.iter().map(|&(c, _)| memo[c]).collect();
                    op.aggregate_idx(v, &kid_vals)?
                }
            };
        }
        for &stop in from.stops() {
            let val = memo[tree.idx(stop)?];
            best.entry(stop)
                .and_modify(|b| *b = b.max(val))
                .or_insert(val);
        }
    }
    Ok(best)
}

/// Value family of the payoff masked to the subtrees of `at` (a subset of
/// the stop nodes of `s`): payoffs keep their value at and below `at` and
/// are zeroed elsewhere, then valued without a cap. On the atoms of `at`
/// the masked values coincide with the unmasked ones, which is what makes
/// the stopping problem localizable.
pub fn localized_value(
    op: &EvaluationOperator,
    xi: &AdaptedProcess,
    at: &BTreeSet<NodeId>,
    s: &BermudanStoppingTime,
) -> Result<ValueFamily> {
    let tree = op.tree();
    if !xi.same_tree(tree) || !xi.same_tree(s.tree()) {
        return Err(Error::SchemaMismatch);
    }
    for id in at {
        if !s.contains_stop(*id) {
            return Err(Error::NotMeasurable {
                detail: format!("node {id} is not a stop node of the localizing strategy"),
            });
        }
    }
    let anc = cut_ancestor(tree, at);
    let masked: Vec<f64> = (0..tree.node_count())
        .map(|v| if anc[v].is_some() { xi.get_idx(v) } else { 0.0 })
        .collect();
    let masked = AdaptedProcess::from_dense(tree, masked);
    let horizon = BermudanStoppingTime::horizon(s.schedule());
    value_family(op, &masked, &horizon)
}
