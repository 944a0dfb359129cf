//! Deterministic random instance generator.
//!
//! [`generate`] builds a complete game on a full tree (every interior node
//! has exactly `branching` children) from a seed, drawing in a fixed order
//! so that a given [`GenSpec`] always produces bit-identical instances:
//! child probabilities per interior node in id order, then the four payoff
//! processes node by node on a 1/8 grid, then prior sets for both agents.
//! Payoffs are repaired to satisfy the game's order requirements (stopper
//! payoff never above waiter payoff, coincidence at the horizon). Prior
//! sets are drawn whether or not a robust operator is requested, so
//! instances with the same seed share tree and payoffs across operator
//! choices.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evaluation::{Direction, EvaluationOperator};
use crate::game::GameInstance;
use crate::strategy::ExerciseSchedule;
use crate::tree::{AdaptedProcess, EventTree, NodeId, NodeSpec};

/// Largest tree the generator will build.
const MAX_NODES: u128 = 1_000_000;

/// Operator choice for one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OperatorSpec {
    Linear,
    Entropic { gamma: f64 },
    MultipriorInf,
    MultipriorSup,
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Linear => write!(f, "linear"),
            OperatorSpec::Entropic { gamma } => write!(f, "entropic({gamma})"),
            OperatorSpec::MultipriorInf => write!(f, "multiprior-inf"),
            OperatorSpec::MultipriorSup => write!(f, "multiprior-sup"),
        }
    }
}

/// Parameters of one generated instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GenSpec {
    pub seed: u64,
    /// Number of stages after the root (0 gives a single-node tree).
    pub depth: u32,
    /// Children per interior node (at least 1).
    pub branching: u32,
    pub op1: OperatorSpec,
    pub op2: OperatorSpec,
}

/// A generated game together with the raw prior sets that were drawn for
/// it, so callers can serialize the instance in full.
#[derive(Clone, Debug)]
pub struct GeneratedInstance {
    pub instance: GameInstance,
    pub priors1: BTreeMap<NodeId, Vec<Vec<f64>>>,
    pub priors2: BTreeMap<NodeId, Vec<Vec<f64>>>,
}

fn full_tree_node_count(depth: u32, branching: u32) -> u128 {
    if branching == 1 {
        return depth as u128 + 1;
    }
    let b = branching as u128;
    let mut total: u128 = 0;
    let mut level: u128 = 1;
    for _ in 0..=depth {
        total = total.saturating_add(level);
        level = level.saturating_mul(b);
        if total > MAX_NODES {
            return total;
        }
    }
    total
}

/// Builds the instance determined by `spec`.
pub fn generate(spec: &GenSpec) -> Result<GeneratedInstance> {
    if spec.depth > 0 && spec.branching == 0 {
        return Err(Error::InvalidGenSpec {
            detail: "branching must be at least 1 for a tree of positive depth".to_string(),
        });
    }
    let branching = spec.branching.max(1);
    let total = full_tree_node_count(spec.depth, branching);
    if total > MAX_NODES {
        return Err(Error::InvalidGenSpec {
            detail: format!(
                "depth {} with branching {} needs {total} nodes, more than the limit of {MAX_NODES}",
                spec.depth, branching
            ),
        });
    }
    let total = total as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Stage boundaries of the breadth-first layout: stage k occupies ids
    // [starts[k], starts[k + 1]).
    let mut starts: Vec<u32> = Vec::with_capacity(spec.depth as usize + 2);
    let mut level: u32 = 1;
    let mut acc: u32 = 0;
    for _ in 0..=spec.depth {
        starts.push(acc);
        acc += level;
        level = level.saturating_mul(branching);
    }
    starts.push(acc);
    debug_assert_eq!(acc, total);

    let stage_of = |id: u32| -> u32 {
        (starts.iter().rposition(|&s| s <= id).unwrap() as u32).min(spec.depth)
    };

    // Child probabilities, drawn per interior node in id order.
    let interior_end = starts[spec.depth as usize];
    let mut specs: Vec<NodeSpec> = Vec::with_capacity(total as usize);
    for id in 0..total {
        let stage = stage_of(id);
        let children = if id < interior_end {
            let first = branching * id + 1;
            let raw: Vec<f64> = (0..branching).map(|_| rng.gen_range(0.1..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            (0..branching)
                .map(|j| (first + j, raw[j as usize] / sum))
                .collect()
        } else {
            Vec::new()
        };
        specs.push(NodeSpec {
            id,
            stage,
            children,
        });
    }
    let dates: Vec<f64> = (0..=spec.depth)
        .map(|i| {
            if spec.depth == 0 {
                0.0
            } else {
                i as f64 / spec.depth as f64
            }
        })
        .collect();
    let tree = EventTree::build(&specs, &dates)?;

    // Payoffs on a 1/8 grid in [-8, 8], one full process at a time.
    let draw_process = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..total)
            .map(|_| rng.gen_range(-64..=64_i32) as f64 / 8.0)
            .collect()
    };
    let x1 = draw_process(&mut rng);
    let mut y1 = draw_process(&mut rng);
    let x2 = draw_process(&mut rng);
    let mut y2 = draw_process(&mut rng);
    // Repair: waiting may never pay less than stopping, and both coincide
    // at the horizon.
    for v in 0..total as usize {
        y1[v] = y1[v].max(x1[v]);
        y2[v] = y2[v].max(x2[v]);
    }
    for &leaf in tree.leaves().iter() {
        let v = leaf.0 as usize;
        y1[v] = x1[v];
        y2[v] = x2[v];
    }

    // Prior sets: agent one first, then agent two; per interior node, two
    // or three candidate distributions.
    let draw_priors = |rng: &mut ChaCha8Rng| -> BTreeMap<NodeId, Vec<Vec<f64>>> {
        let mut priors = BTreeMap::new();
        for id in 0..interior_end {
            let count = rng.gen_range(2..=3_u32);
            let mut set = Vec::with_capacity(count as usize);
            for _ in 0..count {
                let raw: Vec<f64> = (0..branching).map(|_| rng.gen_range(0.05..1.0)).collect();
                let sum: f64 = raw.iter().sum();
                set.push(raw.into_iter().map(|w| w / sum).collect());
            }
            priors.insert(NodeId(id), set);
        }
        priors
    };
    let priors1 = draw_priors(&mut rng);
    let priors2 = draw_priors(&mut rng);

    let make_op = |spec: OperatorSpec, priors: &BTreeMap<NodeId, Vec<Vec<f64>>>| match spec {
        OperatorSpec::Linear => Ok(EvaluationOperator::linear(&tree)),
        OperatorSpec::Entropic { gamma } => EvaluationOperator::entropic(&tree, gamma),
        OperatorSpec::MultipriorInf => {
            EvaluationOperator::multiprior(&tree, priors, Direction::Inf)
        }
        OperatorSpec::MultipriorSup => {
            EvaluationOperator::multiprior(&tree, priors, Direction::Sup)
        }
    };
    let op1 = make_op(spec.op1, &priors1)?;
    let op2 = make_op(spec.op2, &priors2)?;

    let schedule = ExerciseSchedule::all_stages(&tree);
    let instance = GameInstance::new(
        &schedule,
        op1,
        op2,
        AdaptedProcess::from_dense(&tree, x1),
        AdaptedProcess::from_dense(&tree, y1),
        AdaptedProcess::from_dense(&tree, x2),
        AdaptedProcess::from_dense(&tree, y2),
    )?;
    Ok(GeneratedInstance {
        instance,
        priors1,
        priors2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{solve, SolveConfig};
    use crate::strategy::strategy_count;

    fn spec(seed: u64, depth: u32, branching: u32) -> GenSpec {
        GenSpec {
            seed,
            depth,
            branching,
            op1: OperatorSpec::Linear,
            op2: OperatorSpec::Linear,
        }
    }

    #[test]
    fn full_binary_depth_two_has_seven_nodes() {
        let g = generate(&spec(1, 2, 2)).unwrap();
        let tree = g.instance.tree();
        assert_eq!(tree.node_count(), 7);
        assert_eq!(tree.horizon(), 2);
        assert_eq!(tree.leaf_count(), 4);
        assert_eq!(tree.dates(), &[0.0, 0.5, 1.0]);
        assert_eq!(strategy_count(g.instance.schedule(), None).unwrap(), 5);
        // Breadth-first ids: children of node i are 2i+1 and 2i+2.
        let kids = tree.children_of(NodeId(1)).unwrap();
        assert_eq!(kids[0].0, NodeId(3));
        assert_eq!(kids[1].0, NodeId(4));
    }

    #[test]
    fn known_strategy_space_sizes() {
        for (depth, branching, expected) in [
            (2, 2, 5_u128),
            (2, 3, 9),
            (3, 2, 26),
            (3, 3, 730),
            (4, 2, 677),
        ] {
            let g = generate(&spec(9, depth, branching)).unwrap();
            assert_eq!(
                strategy_count(g.instance.schedule(), None).unwrap(),
                expected,
                "depth {depth} branching {branching}"
            );
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate(&spec(42, 3, 2)).unwrap();
        let b = generate(&spec(42, 3, 2)).unwrap();
        let ta = a.instance.tree();
        for id in ta.node_ids() {
            for (x, y) in [
                (
                    a.instance.stopper_payoff(crate::game::Agent::One),
                    b.instance.stopper_payoff(crate::game::Agent::One),
                ),
                (
                    a.instance.waiter_payoff(crate::game::Agent::Two),
                    b.instance.waiter_payoff(crate::game::Agent::Two),
                ),
            ] {
                assert_eq!(x.get(id).unwrap().to_bits(), y.get(id).unwrap().to_bits());
            }
            if !ta.is_leaf(id).unwrap() {
                let ka = ta.children_of(id).unwrap();
                let kb = b.instance.tree().children_of(id).unwrap();
                for (ca, cb) in ka.iter().zip(kb.iter()) {
                    assert_eq!(ca.0, cb.0);
                    assert_eq!(ca.1.to_bits(), cb.1.to_bits());
                }
            }
        }
        assert_eq!(a.priors1, b.priors1);
        assert_eq!(a.priors2, b.priors2);
        // And distinct seeds actually differ somewhere.
        let c = generate(&spec(43, 3, 2)).unwrap();
        let differs = ta.node_ids().any(|id| {
            a.instance
                .stopper_payoff(crate::game::Agent::One)
                .get(id)
                .unwrap()
                != c.instance
                    .stopper_payoff(crate::game::Agent::One)
                    .get(id)
                    .unwrap()
        });
        assert!(differs);
    }

    #[test]
    fn same_seed_shares_payoffs_across_operator_choices() {
        let base = generate(&spec(5, 2, 2)).unwrap();
        let robust = generate(&GenSpec {
            op1: OperatorSpec::MultipriorInf,
            op2: OperatorSpec::Entropic { gamma: 1.0 },
            ..spec(5, 2, 2)
        })
        .unwrap();
        let tree = base.instance.tree();
        for id in tree.node_ids() {
            assert_eq!(
                base.instance
                    .stopper_payoff(crate::game::Agent::One)
                    .get(id)
                    .unwrap()
                    .to_bits(),
                robust
                    .instance
                    .stopper_payoff(crate::game::Agent::One)
                    .get(id)
                    .unwrap()
                    .to_bits()
            );
        }
        assert_eq!(base.priors1, robust.priors1);
    }

    #[test]
    fn generated_instances_solve_within_the_iteration_bound() {
        for seed in [1, 2, 3, 4, 5] {
            for (op1, op2) in [
                (OperatorSpec::Linear, OperatorSpec::Entropic { gamma: 0.5 }),
                (OperatorSpec::MultipriorInf, OperatorSpec::Linear),
                (
                    OperatorSpec::Entropic { gamma: -1.0 },
                    OperatorSpec::MultipriorSup,
                ),
            ] {
                let g = generate(&GenSpec {
                    op1,
                    op2,
                    ..spec(seed, 3, 2)
                })
                .unwrap();
                let res = solve(&g.instance, &SolveConfig::default()).unwrap();
                assert!(res.converged);
                assert!(res.iterations <= 2 * g.instance.tree().node_count() + 4);
            }
        }
    }

    #[test]
    fn path_trees_and_single_nodes_are_supported() {
        let g = generate(&spec(7, 3, 1)).unwrap();
        let tree = g.instance.tree();
        assert_eq!(tree.node_count(), 4);
        assert_eq!(tree.leaf_count(), 1);
        // Single-child probabilities normalize to exactly one.
        for id in tree.node_ids() {
            if !tree.is_leaf(id).unwrap() {
                assert_eq!(tree.children_of(id).unwrap()[0].1, 1.0);
            }
        }
        let single = generate(&spec(7, 0, 2)).unwrap();
        assert_eq!(single.instance.tree().node_count(), 1);
        let res = solve(&single.instance, &SolveConfig::default()).unwrap();
        assert!(res.converged);
    }

    #[test]
    fn nonsense_parameters_are_rejected() {
        assert!(matches!(
            generate(&spec(1, 2, 0)),
            Err(Error::InvalidGenSpec { .. })
        ));
        assert!(matches!(
            generate(&spec(1, 40, 3)),
            Err(Error::InvalidGenSpec { .. })
        ));
        assert!(matches!(
            generate(&GenSpec {
                op1: OperatorSpec::Entropic { gamma: 0.0 },
                ..spec(1, 1, 2)
            }),
            Err(Error::BadGamma { .. })
        ));
    }
}
