//! Two-agent stopping game and its equilibrium iteration.
//!
//! Each agent holds a pair of payoff processes: `X` is collected when the
//! agent stops first (ties go to agent one) and `Y` when the opponent stops
//! first. Instances require `X <= Y` wherever stopping is possible and
//! `X = Y` at the horizon; under those conditions the alternating
//! best-response iteration below stops decreasing after finitely many steps
//! and the final pair of strategies is a Nash equilibrium in the agents'
//! (possibly non-linear) evaluations.
//!
//! [`solve`] seeds both agents at the horizon and alternates exact best
//! responses: the responding agent values the game capped at the opponent's
//! strategy, extracts the earliest optimal stop, keeps it where it strictly
//! precedes the opponent and falls back to its own previous strategy
//! elsewhere. The full trace is recorded so that every step can be
//! re-verified independently.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::evaluation::EvaluationOperator;
use crate::stopping::{minimal_optimal, value_family, ValueFamily};
use crate::strategy::{cut_ancestor, BermudanStoppingTime, ExerciseSchedule};
use crate::tree::{AdaptedProcess, EventTree, NodeId};

/// The two players.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Agent {
    One,
    Two,
}

impl Agent {
    pub fn opponent(self) -> Agent {
        match self {
            Agent::One => Agent::Two,
            Agent::Two => Agent::One,
        }
    }
}

impl fmt::Display for Agent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Agent::One => write!(f, "1"),
            Agent::Two => write!(f, "2"),
        }
    }
}

/// A complete game: schedule, one evaluation operator per agent and the
/// four payoff processes.
#[derive(Clone, Debug)]
pub struct GameInstance {
    schedule: Arc<ExerciseSchedule>,
    op1: EvaluationOperator,
    op2: EvaluationOperator,
    x1: AdaptedProcess,
    y1: AdaptedProcess,
    x2: AdaptedProcess,
    y2: AdaptedProcess,
}

impl GameInstance {
    /// Validates shape and the payoff-order requirements: at every
    /// exercisable node and leaf, the stopper's payoff may not exceed the
    /// waiter's (`X <= Y`), and at leaves the two must coincide.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        schedule: &Arc<ExerciseSchedule>,
        op1: EvaluationOperator,
        op2: EvaluationOperator,
        x1: AdaptedProcess,
        y1: AdaptedProcess,
        x2: AdaptedProcess,
        y2: AdaptedProcess,
    ) -> Result<Self> {
        let tree = schedule.tree();
        for op in [&op1, &op2] {
            if !(Arc::ptr_eq(op.tree(), tree) || **op.tree() == **tree) {
                return Err(Error::SchemaMismatch);
            }
        }
        for proc in [&x1, &y1, &x2, &y2] {
            if !proc.same_tree(tree) {
                return Err(Error::SchemaMismatch);
            }
        }
        for id in tree.node_ids() {
            let idx = tree.idx(id)?;
            let relevant = schedule.exercisable_idx(idx) || tree.is_leaf_idx(idx);
            if !relevant {
                continue;
            }
            for (x, y) in [(&x1, &y1), (&x2, &y2)] {
                let (xv, yv) = (x.get(id)?, y.get(id)?);
                if xv > yv {
                    return Err(Error::LowerExceedsUpper {
                        node: id.0,
                        x: xv,
                        y: yv,
                    });
                }
                if tree.is_leaf_idx(idx) && xv != yv {
                    return Err(Error::TerminalMismatch {
                        node: id.0,
                        x: xv,
                        y: yv,
                    });
                }
            }
        }
        Ok(GameInstance {
            schedule: Arc::clone(schedule),
            op1,
            op2,
            x1,
            y1,
            x2,
            y2,
        })
    }

    pub fn schedule(&self) -> &Arc<ExerciseSchedule> {
        &self.schedule
    }

    pub fn tree(&self) -> &Arc<EventTree> {
        self.schedule.tree()
    }

    pub fn operator(&self, agent: Agent) -> &EvaluationOperator {
        match agent {
            Agent::One => &self.op1,
            Agent::Two => &self.op2,
        }
    }

    /// Payoff the agent collects when it stops first.
    pub fn stopper_payoff(&self, agent: Agent) -> &AdaptedProcess {
        match agent {
            Agent::One => &self.x1,
            Agent::Two => &self.x2,
        }
    }

    /// Payoff the agent collects when its opponent stops first.
    pub fn waiter_payoff(&self, agent: Agent) -> &AdaptedProcess {
        match agent {
            Agent::One => &self.y1,
            Agent::Two => &self.y2,
        }
    }
}

/// Pathwise payoff of `agent` under the strategy pair, as a map from each
/// leaf to the amount collected on that path. Agent one's stop wins ties.
pub fn realized_payoff(
    instance: &GameInstance,
    agent: Agent,
    tau1: &BermudanStoppingTime,
    tau2: &BermudanStoppingTime,
) -> Result<BTreeMap<NodeId, f64>> {
    let tree = instance.tree();
    check_strategy(instance, tau1)?;
    check_strategy(instance, tau2)?;
    let mut out = BTreeMap::new();
    for leaf in tree.leaves() {
        let s1 = tau1.stop_on_path(leaf)?;
        let s2 = tau2.stop_on_path(leaf)?;
        let one_first = tree.stage_of(s1)? <= tree.stage_of(s2)?;
        let value = match (agent, one_first) {
            (Agent::One, true) => instance.x1.get(s1)?,
            (Agent::One, false) => instance.y1.get(s2)?,
            (Agent::Two, true) => instance.y2.get(s1)?,
            (Agent::Two, false) => instance.x2.get(s2)?,
        };
        out.insert(leaf, value);
    }
    Ok(out)
}

/// Time-zero worth of the strategy pair to `agent`: the realized payoff,
/// known at the earlier of the two stops, rolled back to the root through
/// the agent's evaluation operator.
pub fn assessment(
    instance: &GameInstance,
    agent: Agent,
    tau1: &BermudanStoppingTime,
    tau2: &BermudanStoppingTime,
) -> Result<f64> {
    check_strategy(instance, tau1)?;
    check_strategy(instance, tau2)?;
    let min = tau1.meet(tau2)?;
    let mut eta = BTreeMap::new();
    for &v in min.stops() {
        let one_stops = tau1.contains_stop(v);
        let value = match agent {
            Agent::One => {
                if one_stops {
                    instance.x1.get(v)?
                } else {
                    instance.y1.get(v)?
                }
            }
            Agent::Two => {
                if tau2.contains_stop(v) && !one_stops {
                    instance.x2.get(v)?
                } else {
                    instance.y2.get(v)?
                }
            }
        };
        eta.insert(v, value);
    }
    let root = BermudanStoppingTime::at_root(&instance.schedule);
    let rolled = instance.operator(agent).rho(&root, &min, &eta)?;
    Ok(rolled[&instance.tree().root()])
}

/// Payoff process faced by `agent` when responding to a fixed opponent
/// strategy: its stopper payoff strictly before the opponent stops, and the
/// waiter payoff frozen at the opponent's stop node from there on.
pub fn best_response_payoff(
    instance: &GameInstance,
    agent: Agent,
    opponent: &BermudanStoppingTime,
) -> Result<AdaptedProcess> {
    check_strategy(instance, opponent)?;
    let tree = instance.tree();
    let x = instance.stopper_payoff(agent);
    let y = instance.waiter_payoff(agent);
    let anc = cut_ancestor(tree, opponent.stops());
    let values: Vec<f64> = (0..tree.node_count())
        .map(|v| match anc[v] {
            None => x.get_idx(v),
            Some(u) => y.get_idx(u),
        })
        .collect();
    Ok(AdaptedProcess::from_dense(tree, values))
}

/// One exact best-response step.
#[derive(Clone, Debug)]
pub struct BestResponse {
    /// Earliest optimal stop against the opponent, never after it.
    pub minimal_stop: BermudanStoppingTime,
    /// Next iterate: the minimal stop where it strictly precedes the
    /// opponent, the agent's previous strategy elsewhere.
    pub iterate: BermudanStoppingTime,
    /// The backward induction backing the step.
    pub values: ValueFamily,
}

/// Computes `agent`'s exact best response to `opponent`, falling back to
/// `own_prev` on the event where the opponent stops first.
pub fn best_response(
    instance: &GameInstance,
    agent: Agent,
    opponent: &BermudanStoppingTime,
    own_prev: &BermudanStoppingTime,
    cfg: &SolveConfig,
) -> Result<BestResponse> {
    check_strategy(instance, opponent)?;
    check_strategy(instance, own_prev)?;
    let tree = instance.tree();
    let xi = best_response_payoff(instance, agent, opponent)?;
    let values = value_family(instance.operator(agent), &xi, opponent)?;
    let minimal_stop = minimal_optimal(&values, cfg.tol_eq)?;
    let clipped = minimal_stop.meet(own_prev)?;
    // The event "the clipped stop strictly precedes the opponent" is a union
    // of atoms of the clipped strategy, hence known when it stops.
    let mut strictly_before = BTreeSet::new();
    for &v in clipped.stops() {
        if !opponent.contains_stop(v) {
            for leaf in tree.leaves_under(v)? {
                strictly_before.insert(leaf);
            }
        }
    }
    let iterate = clipped.concatenate(&strictly_before, own_prev)?;
    Ok(BestResponse {
        minimal_stop,
        iterate,
        values,
    })
}

/// Solver tuning. `max_iter = None` uses `2 * node_count + 4`, which the
/// monotone decrease of the iterates makes sufficient on any tree.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    /// Tolerance for payoff/value coincidence and Nash gain comparisons.
    pub tol_eq: f64,
    /// Cap on best-response steps before giving up.
    pub max_iter: Option<usize>,
    /// Cap on strategies enumerated by verification oracles.
    pub enum_limit: usize,
    /// Seed for sampled (non-exhaustive) verification checks.
    pub sample_seed: u64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_eq: 1e-9,
            max_iter: None,
            enum_limit: 1_000_000,
            sample_seed: 0x5eed,
        }
    }
}

/// One row of the solve trace. Steps 1 and 2 seed both agents at the
/// horizon and carry no value; computed steps record the responding agent,
/// its earliest optimal stop, the resulting iterate and the root value of
/// the backing induction.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    /// 1-based step index; the strategy of step `n` responds to step `n-1`.
    pub n: usize,
    pub agent: Agent,
    pub minimal_stop: BermudanStoppingTime,
    pub iterate: BermudanStoppingTime,
    pub value0: Option<f64>,
}

/// Outcome of the alternating best-response iteration.
#[derive(Clone, Debug)]
pub struct EquilibriumResult {
    pub tau1: BermudanStoppingTime,
    pub tau2: BermudanStoppingTime,
    /// Time-zero assessment of the equilibrium pair by each agent.
    pub assessment1: f64,
    pub assessment2: f64,
    /// Number of computed best-response steps (trace rows beyond the seeds).
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
}

/// Alternating exact best responses from the horizon until two consecutive
/// rounds repeat. Agent one moves on odd steps, agent two on even steps;
/// stabilization is declared after an even step when both agents repeated
/// their previous strategy.
pub fn solve(instance: &GameInstance, cfg: &SolveConfig) -> Result<EquilibriumResult> {
    let schedule = instance.schedule();
    let horizon = BermudanStoppingTime::horizon(schedule);
    let max_iter = cfg.max_iter.unwrap_or(2 * instance.tree().node_count() + 4);

    let mut trace: Vec<IterationRecord> = vec![
        IterationRecord {
            n: 1,
            agent: Agent::One,
            minimal_stop: horizon.clone(),
            iterate: horizon.clone(),
            value0: None,
        },
        IterationRecord {
            n: 2,
            agent: Agent::Two,
            minimal_stop: horizon.clone(),
            iterate: horizon.clone(),
            value0: None,
        },
    ];

    let mut computed = 0usize;
    let mut converged = false;
    while computed < max_iter {
        let n = trace.len() + 1;
        let agent = if n % 2 == 1 { Agent::One } else { Agent::Two };
        let opponent = trace[n - 2].iterate.clone();
        let own_prev = trace[n - 3].iterate.clone();
        let step = best_response(instance, agent, &opponent, &own_prev, cfg)?;
        trace.push(IterationRecord {
            n,
            agent,
            minimal_stop: step.minimal_stop,
            iterate: step.iterate,
            value0: Some(step.values.root_value()),
        });
        computed += 1;
        if n.is_multiple_of(2) && n >= 4 {
            let same_even = trace[n - 1].iterate == trace[n - 3].iterate;
            let same_odd = trace[n - 2].iterate == trace[n - 4].iterate;
            if same_even && same_odd {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            iterations: computed,
        });
    }
    let tau2 = trace.last().unwrap().iterate.clone();
    let tau1 = trace[trace.len() - 2].iterate.clone();
    let assessment1 = assessment(instance, Agent::One, &tau1, &tau2)?;
    let assessment2 = assessment(instance, Agent::Two, &tau1, &tau2)?;
    Ok(EquilibriumResult {
        tau1,
        tau2,
        assessment1,
        assessment2,
        iterations: computed,
        converged,
        trace,
    })
}

fn check_strategy(instance: &GameInstance, tau: &BermudanStoppingTime) -> Result<()> {
    if !tau.schedule().same_as(instance.schedule()) {
        return Err(Error::SchemaMismatch);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategy::enumerate_strategies;
    use crate::tree::NodeSpec;

    /// Two-node, one-path tree: stop now or at the horizon.
    fn path_tree() -> Arc<EventTree> {
        EventTree::build(
            &[
                NodeSpec {
                    id: 0,
                    stage: 0,
                    children: vec![(1, 1.0)],
                },
                NodeSpec {
                    id: 1,
                    stage: 1,
                    children: vec![],
                },
            ],
            &[0.0, 1.0],
        )
        .unwrap()
    }

    fn path_instance() -> GameInstance {
        let tree = path_tree();
        let sched = ExerciseSchedule::all_stages(&tree);
        let proc =
            |vals: [f64; 2]| AdaptedProcess::from_fn(&tree, |id| vals[id.0 as usize]).unwrap();
        GameInstance::new(
            &sched,
            EvaluationOperator::linear(&tree),
            EvaluationOperator::linear(&tree),
            proc([1.0, 0.0]),
            proc([2.0, 0.0]),
            proc([1.0, 0.0]),
            proc([2.0, 0.0]),
        )
        .unwrap()
    }

    fn b2() -> Arc<EventTree> {
        EventTree::build(
            &[
                NodeSpec {
                    id: 0,
                    stage: 0,
                    children: vec![(1, 0.5), (2, 0.5)],
                },
                NodeSpec {
                    id: 1,
                    stage: 1,
                    children: vec![(3, 0.5), (4, 0.5)],
                },
                NodeSpec {
                    id: 2,
                    stage: 1,
                    children: vec![(5, 0.5), (6, 0.5)],
                },
                NodeSpec {
                    id: 3,
                    stage: 2,
                    children: vec![],
                },
                NodeSpec {
                    id: 4,
                    stage: 2,
                    children: vec![],
                },
                NodeSpec {
                    id: 5,
                    stage: 2,
                    children: vec![],
                },
                NodeSpec {
                    id: 6,
                    stage: 2,
                    children: vec![],
                },
            ],
            &[0.0, 0.5, 1.0],
        )
        .unwrap()
    }

    fn b2_instance() -> GameInstance {
        let tree = b2();
        let sched = ExerciseSchedule::all_stages(&tree);
        let proc =
            |vals: [f64; 7]| AdaptedProcess::from_fn(&tree, |id| vals[id.0 as usize]).unwrap();
        GameInstance::new(
            &sched,
            EvaluationOperator::linear(&tree),
            EvaluationOperator::linear(&tree),
            proc([1.1, 1.0, 2.5, 0.0, 4.0, 1.0, 3.0]),
            proc([2.0, 1.5, 2.5, 0.0, 4.0, 1.0, 3.0]),
            proc([0.5, 2.0, 1.0, 1.0, 2.0, 0.0, 1.0]),
            proc([1.0, 2.0, 1.5, 1.0, 2.0, 0.0, 1.0]),
        )
        .unwrap()
    }

    fn stops(sched: &Arc<ExerciseSchedule>, v: &[u32]) -> BermudanStoppingTime {
        BermudanStoppingTime::new(sched, v.iter().map(|&i| NodeId(i))).unwrap()
    }

    #[test]
    fn instance_validation_enforces_payoff_order() {
        let tree = path_tree();
        let sched = ExerciseSchedule::all_stages(&tree);
        let proc =
            |vals: [f64; 2]| AdaptedProcess::from_fn(&tree, |id| vals[id.0 as usize]).unwrap();
        let lin = EvaluationOperator::linear(&tree);
        // Stopper payoff above waiter payoff at the root.
        let err = GameInstance::new(
            &sched,
            lin.clone(),
            lin.clone(),
            proc([3.0, 0.0]),
            proc([2.0, 0.0]),
            proc([1.0, 0.0]),
            proc([2.0, 0.0]),
        );
        assert!(matches!(err, Err(Error::LowerExceedsUpper { node: 0, .. })));
        // Divergent payoffs at the horizon.
        let err = GameInstance::new(
            &sched,
            lin.clone(),
            lin.clone(),
            proc([1.0, 0.0]),
            proc([2.0, 0.5]),
            proc([1.0, 0.0]),
            proc([2.0, 0.0]),
        );
        assert!(matches!(err, Err(Error::TerminalMismatch { node: 1, .. })));
    }

    #[test]
    fn assessments_on_the_path_instance_match_hand_values() {
        let inst = path_instance();
        let sched = inst.schedule().clone();
        let now = stops(&sched, &[0]);
        let wait = stops(&sched, &[1]);
        let j = |agent, a: &BermudanStoppingTime, b: &BermudanStoppingTime| {
            assessment(&inst, agent, a, b).unwrap()
        };
        assert_eq!(j(Agent::One, &now, &now), 1.0);
        assert_eq!(j(Agent::One, &now, &wait), 1.0);
        assert_eq!(j(Agent::One, &wait, &now), 2.0);
        assert_eq!(j(Agent::One, &wait, &wait), 0.0);
        assert_eq!(j(Agent::Two, &now, &now), 2.0);
        assert_eq!(j(Agent::Two, &now, &wait), 2.0);
        assert_eq!(j(Agent::Two, &wait, &now), 1.0);
        assert_eq!(j(Agent::Two, &wait, &wait), 0.0);
    }

    #[test]
    fn solve_path_instance_traces_the_expected_iterates() {
        let inst = path_instance();
        let sched = inst.schedule().clone();
        let now = stops(&sched, &[0]);
        let wait = stops(&sched, &[1]);
        let res = solve(&inst, &SolveConfig::default()).unwrap();
        assert!(res.converged);
        assert_eq!(res.iterations, 4);
        assert_eq!(res.trace.len(), 6);
        // Seeds at the horizon.
        assert_eq!(res.trace[0].iterate, wait);
        assert_eq!(res.trace[1].iterate, wait);
        // Agent one grabs the root; agent two then prefers to wait.
        assert_eq!(res.trace[2].minimal_stop, now);
        assert_eq!(res.trace[2].iterate, now);
        assert_eq!(res.trace[2].value0, Some(1.0));
        assert_eq!(res.trace[3].minimal_stop, now);
        assert_eq!(res.trace[3].iterate, wait);
        assert_eq!(res.trace[3].value0, Some(2.0));
        // The next round repeats both strategies.
        assert_eq!(res.trace[4].iterate, now);
        assert_eq!(res.trace[5].iterate, wait);
        assert_eq!(res.tau1, now);
        assert_eq!(res.tau2, wait);
        assert_eq!(res.assessment1, 1.0);
        assert_eq!(res.assessment2, 2.0);
    }

    #[test]
    fn realized_payoffs_respect_tie_breaking() {
        let inst = b2_instance();
        let sched = inst.schedule().clone();
        let mid = stops(&sched, &[1, 2]);
        // Both stop mid-tree: agent one's stop wins the tie.
        let p1 = realized_payoff(&inst, Agent::One, &mid, &mid).unwrap();
        let p2 = realized_payoff(&inst, Agent::Two, &mid, &mid).unwrap();
        assert_eq!(p1[&NodeId(3)], 1.0); // X1 at node 1
        assert_eq!(p2[&NodeId(3)], 2.0); // Y2 at node 1
                                         // Agent two stops strictly first on the down branch.
        let one_late = stops(&sched, &[1, 5, 6]);
        let two_mid = stops(&sched, &[3, 4, 2]);
        let p1 = realized_payoff(&inst, Agent::One, &one_late, &two_mid).unwrap();
        let p2 = realized_payoff(&inst, Agent::Two, &one_late, &two_mid).unwrap();
        assert_eq!(p1[&NodeId(5)], 2.5); // Y1 at node 2
        assert_eq!(p2[&NodeId(5)], 1.0); // X2 at node 2
                                         // On the up branch agent one is first (stage 1 vs stage 2).
        assert_eq!(p1[&NodeId(3)], 1.0); // X1 at node 1
        assert_eq!(p2[&NodeId(3)], 2.0); // Y2 at node 1
    }

    #[test]
    fn assessment_is_the_rolled_back_realized_payoff_for_linear_operators() {
        let inst = b2_instance();
        let sched = inst.schedule().clone();
        let tree = inst.tree().clone();
        let pairs = [
            (stops(&sched, &[1, 2]), stops(&sched, &[0])),
            (stops(&sched, &[1, 5, 6]), stops(&sched, &[3, 4, 2])),
            (stops(&sched, &[3, 4, 5, 6]), stops(&sched, &[1, 2])),
        ];
        for (t1, t2) in &pairs {
            for agent in [Agent::One, Agent::Two] {
                let leafwise = realized_payoff(&inst, agent, t1, t2).unwrap();
                let expected: f64 = tree
                    .leaves()
                    .iter()
                    .map(|&l| tree.path_probability(l).unwrap() * leafwise[&l])
                    .sum();
                let j = assessment(&inst, agent, t1, t2).unwrap();
                assert!(
                    (j - expected).abs() < 1e-12,
                    "agent {agent}: {j} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn best_response_payoff_freezes_at_the_opponent_stop() {
        let inst = b2_instance();
        let sched = inst.schedule().clone();
        let opp = stops(&sched, &[1, 5, 6]);
        let xi = best_response_payoff(&inst, Agent::One, &opp).unwrap();
        // Strictly before the opponent: own stopper payoff.
        assert_eq!(xi.get(NodeId(0)).unwrap(), 1.1);
        assert_eq!(xi.get(NodeId(2)).unwrap(), 2.5);
        // At and beyond the opponent stop: waiter payoff frozen at its node.
        assert_eq!(xi.get(NodeId(1)).unwrap(), 1.5);
        assert_eq!(xi.get(NodeId(3)).unwrap(), 1.5);
        assert_eq!(xi.get(NodeId(4)).unwrap(), 1.5);
        assert_eq!(xi.get(NodeId(5)).unwrap(), 1.0);
        assert_eq!(xi.get(NodeId(6)).unwrap(), 3.0);
    }

    #[test]
    fn best_response_dominates_every_alternative() {
        let inst = b2_instance();
        let sched = inst.schedule().clone();
        let cfg = SolveConfig::default();
        let horizon = BermudanStoppingTime::horizon(&sched);
        let all = enumerate_strategies(&sched, None, 1000).unwrap();
        for opp in [
            &stops(&sched, &[1, 2]),
            &horizon,
            &stops(&sched, &[1, 5, 6]),
        ] {
            type Assess<'a> = Box<dyn Fn(&BermudanStoppingTime) -> f64 + 'a>;
            for agent in [Agent::One, Agent::Two] {
                let br = best_response(&inst, agent, opp, &horizon, &cfg).unwrap();
                let (mine, theirs): (Assess<'_>, f64) = match agent {
                    Agent::One => (
                        Box::new(|t: &BermudanStoppingTime| {
                            assessment(&inst, Agent::One, t, opp).unwrap()
                        }),
                        assessment(&inst, Agent::One, &br.iterate, opp).unwrap(),
                    ),
                    Agent::Two => (
                        Box::new(|t: &BermudanStoppingTime| {
                            assessment(&inst, Agent::Two, opp, t).unwrap()
                        }),
                        assessment(&inst, Agent::Two, opp, &br.iterate).unwrap(),
                    ),
                };
                for alt in &all {
                    assert!(
                        mine(alt) <= theirs + cfg.tol_eq,
                        "agent {agent} vs opp {:?}: alternative {:?} beats the response",
                        opp.stops(),
                        alt.stops()
                    );
                }
            }
        }
    }

    #[test]
    fn solve_b2_instance_converges_to_a_nash_pair() {
        let inst = b2_instance();
        let cfg = SolveConfig::default();
        let res = solve(&inst, &cfg).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 2 * inst.tree().node_count() + 4);
        // No unilateral deviation improves either agent.
        let all = enumerate_strategies(inst.schedule(), None, 1000).unwrap();
        for alt in &all {
            let j1 = assessment(&inst, Agent::One, alt, &res.tau2).unwrap();
            assert!(j1 <= res.assessment1 + cfg.tol_eq);
            let j2 = assessment(&inst, Agent::Two, &res.tau1, alt).unwrap();
            assert!(j2 <= res.assessment2 + cfg.tol_eq);
        }
        // Iterates of each agent only ever move earlier.
        for w in res.trace.windows(2) {
            if w[1].n >= 3 {
                let prev = &res.trace[w[1].n - 3];
                assert!(w[1].iterate.leq(&prev.iterate).unwrap());
            }
        }
    }

    #[test]
    fn solve_reports_no_convergence_when_starved_of_iterations() {
        let inst = path_instance();
        let cfg = SolveConfig {
            max_iter: Some(1),
            ..SolveConfig::default()
        };
        assert!(matches!(
            solve(&inst, &cfg),
            Err(Error::NoConvergence { iterations: 1 })
        ));
    }

    #[test]
    fn foreign_strategies_are_rejected() {
        let inst = b2_instance();
        let other_tree = path_tree();
        let other_sched = ExerciseSchedule::all_stages(&other_tree);
        let foreign = BermudanStoppingTime::horizon(&other_sched);
        let own = BermudanStoppingTime::horizon(inst.schedule());
        assert!(matches!(
            assessment(&inst, Agent::One, &foreign, &own),
            Err(Error::SchemaMismatch)
        ));
        assert!(matches!(
            realized_payoff(&inst, Agent::One, &own, &foreign),
            Err(Error::SchemaMismatch)
        ));
    }
}
