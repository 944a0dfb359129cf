//! Non-linear evaluation operators on event trees.
//!
//! An [`EvaluationOperator`] assigns to every interior node a local
//! aggregator that maps the values at its children to a value at the node.
//! Backward induction between two ordered stopping strategies
//! ([`EvaluationOperator::rho`]) then evaluates a family of values given at
//! the stop nodes of the later strategy down to the stop nodes of the
//! earlier one. All built-in aggregators are monotone and translation-tame,
//! which is what the solver's correctness rests on; the axiom harness in
//! [`crate::axioms`] checks those properties empirically for any operator,
//! including user-supplied custom ones.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::strategy::BermudanStoppingTime;
use crate::tree::{EventTree, NodeId, EPS_PROB};

/// Which side of a multi-prior evaluation to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Direction {
    /// Worst case: infimum over the prior set.
    Inf,
    /// Best case: supremum over the prior set.
    Sup,
}

type CustomFn = dyn Fn(NodeId, &[f64], &[f64]) -> f64 + Send + Sync;

enum OperatorKind {
    Linear,
    Entropic {
        gamma: f64,
    },
    Multiprior {
        priors: Vec<Option<Vec<Vec<f64>>>>,
        direction: Direction,
    },
    Custom {
        name: String,
        f: Box<CustomFn>,
    },
}

/// Family of node-local aggregators over one event tree. Cheap to clone.
#[derive(Clone)]
pub struct EvaluationOperator {
    tree: Arc<EventTree>,
    kind: Arc<OperatorKind>,
}

impl fmt::Debug for EvaluationOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EvaluationOperator({})", self.describe())
    }
}

/// Serializable summary of an operator's shape.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorDescription {
    pub name: String,
    pub gamma: Option<f64>,
    pub direction: Option<Direction>,
}

impl fmt::Display for OperatorDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.gamma, self.direction) {
            (Some(g), _) => write!(f, "{}(gamma={})", self.name, g),
            (_, Some(Direction::Inf)) => write!(f, "{}-inf", self.name),
            (_, Some(Direction::Sup)) => write!(f, "{}-sup", self.name),
            _ => write!(f, "{}", self.name),
        }
    }
}

impl EvaluationOperator {
    /// Probability-weighted mean at every node (classical expectation).
    pub fn linear(tree: &Arc<EventTree>) -> Self {
        EvaluationOperator {
            tree: Arc::clone(tree),
            kind: Arc::new(OperatorKind::Linear),
        }
    }

    /// Entropic certainty equivalent with risk parameter `gamma`:
    /// `(1/gamma) * ln E[exp(gamma x)]` at every node. Negative `gamma` is
    /// risk-averse, positive risk-seeking; zero is rejected (use
    /// [`EvaluationOperator::linear`] for the limit).
    pub fn entropic(tree: &Arc<EventTree>, gamma: f64) -> Result<Self> {
        if gamma == 0.0 || !gamma.is_finite() {
            return Err(Error::BadGamma { gamma });
        }
        Ok(EvaluationOperator {
            tree: Arc::clone(tree),
            kind: Arc::new(OperatorKind::Entropic { gamma }),
        })
    }

    /// Robust evaluation over a finite set of candidate child distributions
    /// per interior node: the worst (`Direction::Inf`) or best
    /// (`Direction::Sup`) weighted mean over the node's prior set.
    pub fn multiprior(
        tree: &Arc<EventTree>,
        priors: &BTreeMap<NodeId, Vec<Vec<f64>>>,
        direction: Direction,
    ) -> Result<Self> {
        for &id in priors.keys() {
            tree.idx(id)?;
        }
        let mut dense: Vec<Option<Vec<Vec<f64>>>> = vec![None; tree.node_count()];
        for id in tree.node_ids() {
            let idx = tree.idx(id)?;
            if tree.is_leaf_idx(idx) {
                continue;
            }
            let arity = tree.children_idx(idx).len();
            let set = priors.get(&id).ok_or_else(|| Error::BadPrior {
                node: id.0,
                detail: "no prior set given for interior node".to_string(),
            })?;
            if set.is_empty() {
                return Err(Error::BadPrior {
                    node: id.0,
                    detail: "prior set is empty".to_string(),
                });
            }
            for (j, q) in set.iter().enumerate() {
                if q.len() != arity {
                    return Err(Error::BadPrior {
                        node: id.0,
                        detail: format!("prior {j} has {} weights for {arity} children", q.len()),
                    });
                }
                if q.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::BadPrior {
                        node: id.0,
                        detail: format!("prior {j} has a negative or non-finite weight"),
                    });
                }
                let sum: f64 = q.iter().sum();
                if (sum - 1.0).abs() > EPS_PROB {
                    return Err(Error::BadPrior {
                        node: id.0,
                        detail: format!("prior {j} weights sum to {sum}, not 1"),
                    });
                }
            }
            dense[idx] = Some(set.clone());
        }
        Ok(EvaluationOperator {
            tree: Arc::clone(tree),
            kind: Arc::new(OperatorKind::Multiprior {
                priors: dense,
                direction,
            }),
        })
    }

    /// Arbitrary user-supplied aggregator `f(node, child_probs, child_values)`.
    /// No properties are assumed; run [`crate::axioms::axiom_check`] to test
    /// which ones hold.
    pub fn custom(
        tree: &Arc<EventTree>,
        name: impl Into<String>,
        f: impl Fn(NodeId, &[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        EvaluationOperator {
            tree: Arc::clone(tree),
            kind: Arc::new(OperatorKind::Custom {
                name: name.into(),
                f: Box::new(f),
            }),
        }
    }

    pub fn tree(&self) -> &Arc<EventTree> {
        &self.tree
    }

    pub fn describe(&self) -> OperatorDescription {
        match &*self.kind {
            OperatorKind::Linear => OperatorDescription {
                name: "linear".to_string(),
                gamma: None,
                direction: None,
            },
            OperatorKind::Entropic { gamma } => OperatorDescription {
                name: "entropic".to_string(),
                gamma: Some(*gamma),
                direction: None,
            },
            OperatorKind::Multiprior { direction, .. } => OperatorDescription {
                name: "multiprior".to_string(),
                gamma: None,
                direction: Some(*direction),
            },
            OperatorKind::Custom { name, .. } => OperatorDescription {
                name: name.clone(),
                gamma: None,
                direction: None,
            },
        }
    }

    /// Applies the local aggregator of `node` to values at its children,
    /// listed in the node's stored child order.
    pub fn aggregate(&self, node: NodeId, child_values: &[f64]) -> Result<f64> {
        let idx = self.tree.idx(node)?;
        if self.tree.children_idx(idx).len() != child_values.len() {
            return Err(Error::SchemaMismatch);
        }
        self.aggregate_idx(idx, child_values)
    }

    pub(crate) fn aggregate_idx(&self, idx: usize, child_values: &[f64]) -> Result<f64> {
        let children = self.tree.children_idx(idx);
        let value = match &*self.kind {
            OperatorKind::Linear => children
                .iter()
                .zip(child_values)
                .map(|(&(_, p), &x)| p * x)
                .sum(),
            OperatorKind::Entropic { gamma } => {
                let shifted: Vec<f64> = child_values.iter().map(|&x| gamma * x).collect();
                let m = shifted.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = children
                    .iter()
                    .zip(&shifted)
                    .map(|(&(_, p), &y)| p * (y - m).exp())
                    .sum();
                (m + sum.ln()) / gamma
            }
            OperatorKind::Multiprior { priors, direction } => {
                let set = priors[idx].as_ref().expect("interior node has priors");
                let mut best = match direction {
                    Direction::Inf => f64::INFINITY,
                    Direction::Sup => f64::NEG_INFINITY,
                };
                for q in set {
                    let mean: f64 = q.iter().zip(child_values).map(|(&w, &x)| w * x).sum();
                    best = match direction {
                        Direction::Inf => best.min(mean),
                        Direction::Sup => best.max(mean),
                    };
                }
                best
            }
            OperatorKind::Custom { f, .. } => {
                let probs: Vec<f64> = children.iter().map(|&(_, p)| p).collect();
                f(self.tree.id_of(idx), &probs, child_values)
            }
        };
        if !value.is_finite() {
            return Err(Error::NonFiniteValue {
                node: self.tree.id_of(idx).0,
            });
        }
        Ok(value)
    }

    /// Backward evaluation between ordered strategies: given values `eta` at
    /// the stop nodes of `tau`, rolls them back through the local
    /// aggregators and returns the values at the stop nodes of `s`.
    /// Requires `s` to stop no later than `tau` on every path.
    pub fn rho(
        &self,
        s: &BermudanStoppingTime,
        tau: &BermudanStoppingTime,
        eta: &BTreeMap<NodeId, f64>,
    ) -> Result<BTreeMap<NodeId, f64>> {
        if !std::sync::Arc::ptr_eq(&self.tree, s.tree()) && *self.tree != **s.tree() {
            return Err(Error::SchemaMismatch);
        }
        if !s.leq(tau)? {
            return Err(Error::OrderViolation);
        }
        for &t in tau.stops() {
            let v = eta.get(&t).ok_or(Error::MissingValues { node: t.0 })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteValue { node: t.0 });
            }
        }
        let tree = &self.tree;
        let mut memo: Vec<Option<f64>> = vec![None; tree.node_count()];
        for v in tree.backward_order() {
            let id = tree.id_of(v);
            if tau.contains_stop(id) {
                memo[v] = Some(eta[&id]);
                continue;
            }
            if tree.is_leaf_idx(v) {
                continue;
            }
            let children = tree.children_idx(v);
            if children.iter().all(|&(c, _)| memo[c].is_some()) {
                let vals: Vec<f64> = children.iter().map(|&(c, _)| memo[c].unwrap()).collect();
                memo[v] = Some(self.aggregate_idx(v, &vals)?);
            }
        }
        let mut out = BTreeMap::new();
        for &stop in s.stops() {
            let idx = tree.idx(stop)?;
            let value = memo[idx].ok_or(Error::MissingValues { node: stop.0 })?;
            out.insert(stop, value);
        }
        Ok(out)
    }
}
