//! Independent certification of solver output.
//!
//! Nothing here reuses the solver's conclusions: [`nash_check`] re-scores
//! every unilateral deviation of a candidate pair, [`all_nash_pairs`] finds
//! every equilibrium of small games by exhaustive double enumeration, and
//! [`trace_invariants`] replays a solve trace step by step, re-deriving each
//! iterate and checking the structural laws the construction promises
//! (freezing beyond the opponent, minimality and monotonicity of the
//! iterates, agreement with brute-force enumeration, and stabilization).

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    assessment, best_response, best_response_payoff, Agent, EquilibriumResult, GameInstance,
    SolveConfig,
};
use crate::stopping::{
    brute_force_value, minimal_optimal, minimal_optimal_via_raw_region, value_family,
};
use crate::strategy::{
    enumerate_strategies, random_stopping_time, strategy_count, BermudanStoppingTime,
};

/// Strategy-space size up to which dominance is checked exhaustively;
/// larger spaces are sampled.
const EXHAUSTIVE_DOMINANCE_LIMIT: u128 = 4096;
const DOMINANCE_SAMPLES: usize = 128;

/// Result of scoring one agent's unilateral deviations.
#[derive(Clone, Debug)]
pub struct DeviationSummary {
    /// Number of alternative strategies scored.
    pub candidates: usize,
    /// Largest improvement any deviation achieves over the candidate pair.
    pub best_gain: f64,
    /// Assessment of the best deviation.
    pub best_value: f64,
    /// The deviation achieving `best_gain` (first in enumeration order).
    pub best_deviation: BermudanStoppingTime,
    /// True when no deviation improves by more than the tolerance.
    pub passed: bool,
}

/// Nash certificate for one strategy pair.
#[derive(Clone, Debug)]
pub struct NashReport {
    pub assessment1: f64,
    pub assessment2: f64,
    pub agent1: DeviationSummary,
    pub agent2: DeviationSummary,
    pub passed: bool,
}

/// Checks that `(tau1, tau2)` is a Nash equilibrium by enumerating every
/// unilateral deviation of each agent and re-scoring it from scratch.
pub fn nash_check(
    instance: &GameInstance,
    tau1: &BermudanStoppingTime,
    tau2: &BermudanStoppingTime,
    cfg: &SolveConfig,
) -> Result<NashReport> {
    let schedule = instance.schedule();
    let assessment1 = assessment(instance, Agent::One, tau1, tau2)?;
    let assessment2 = assessment(instance, Agent::Two, tau1, tau2)?;
    let alternatives = enumerate_strategies(schedule, None, cfg.enum_limit)?;

    let mut summaries = Vec::with_capacity(2);
    for agent in [Agent::One, Agent::Two] {
        let base = match agent {
            Agent::One => assessment1,
            Agent::Two => assessment2,
        };
        let mut best_gain = f64::NEG_INFINITY;
        let mut best_value = f64::NEG_INFINITY;
        let mut best_deviation: Option<&BermudanStoppingTime> = None;
        for alt in &alternatives {
            let value = match agent {
                Agent::One => assessment(instance, agent, alt, tau2)?,
                Agent::Two => assessment(instance, agent, tau1, alt)?,
            };
            let gain = value - base;
            if gain > best_gain {
                best_gain = gain;
                best_value = value;
                best_deviation = Some(alt);
            }
        }
        let best_deviation = best_deviation
            .expect("strategy space is never empty")
            .clone();
        summaries.push(DeviationSummary {
            candidates: alternatives.len(),
            best_gain,
            best_value,
            best_deviation,
            passed: best_gain <= cfg.tol_eq,
        });
    }
    let agent2 = summaries.pop().unwrap();
    let agent1 = summaries.pop().unwrap();
    let passed = agent1.passed && agent2.passed;
    Ok(NashReport {
        assessment1,
        assessment2,
        agent1,
        agent2,
        passed,
    })
}

/// Finds every Nash pair by scoring the full strategy-pair grid. Fails with
/// `EnumerationLimitExceeded` when the grid would exceed the configured
/// enumeration limit. Pairs are returned in enumeration order.
pub fn all_nash_pairs(
    instance: &GameInstance,
    cfg: &SolveConfig,
) -> Result<Vec<(BermudanStoppingTime, BermudanStoppingTime)>> {
    let schedule = instance.schedule();
    let count = strategy_count(schedule, None)?;
    if count.saturating_mul(count) > cfg.enum_limit as u128 {
        return Err(Error::EnumerationLimitExceeded {
            limit: cfg.enum_limit,
        });
    }
    let all = enumerate_strategies(schedule, None, cfg.enum_limit)?;
    let n = all.len();

    // First pass: per-column best response value for agent one, per-row for
    // agent two.
    let mut col_best1 = vec![f64::NEG_INFINITY; n];
    let mut row_best2 = vec![f64::NEG_INFINITY; n];
    for (i, t1) in all.iter().enumerate() {
        for (j, t2) in all.iter().enumerate() {
            let j1 = assessment(instance, Agent::One, t1, t2)?;
            let j2 = assessment(instance, Agent::Two, t1, t2)?;
            if j1 > col_best1[j] {
                col_best1[j] = j1;
            }
            if j2 > row_best2[i] {
                row_best2[i] = j2;
            }
        }
    }
    // Second pass: keep the cells no agent can improve on.
    let mut pairs = Vec::new();
    for (i, t1) in all.iter().enumerate() {
        for (j, t2) in all.iter().enumerate() {
            let j1 = assessment(instance, Agent::One, t1, t2)?;
            let j2 = assessment(instance, Agent::Two, t1, t2)?;
            if j1 >= col_best1[j] - cfg.tol_eq && j2 >= row_best2[i] - cfg.tol_eq {
                pairs.push((t1.clone(), t2.clone()));
            }
        }
    }
    Ok(pairs)
}

/// One structural law checked across a whole trace.
#[derive(Clone, Debug)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    /// First failure (or skip note) encountered, if any.
    pub detail: Option<String>,
}

/// Outcome of replaying a solve trace.
#[derive(Clone, Debug)]
pub struct InvariantReport {
    pub checks: Vec<InvariantCheck>,
    pub passed: bool,
}

fn fmt_stops(tau: &BermudanStoppingTime) -> String {
    let ids: Vec<String> = tau.stops().iter().map(|id| id.to_string()).collect();
    format!("{{{}}}", ids.join(","))
}

struct Failure {
    detail: String,
}

macro_rules! fail {
    ($($arg:tt)*) => {
        return Ok(Some(Failure { detail: format!($($arg)*) }))
    };
}

/// Replays every computed step of `result` against `instance` and audits
/// the structural laws of the construction. Each law yields one named
/// check; the report passes only when all of them do.
pub fn trace_invariants(
    instance: &GameInstance,
    result: &EquilibriumResult,
    cfg: &SolveConfig,
) -> Result<InvariantReport> {
    let tree = instance.tree();
    let schedule = instance.schedule();
    let trace = &result.trace;

    // Steps 1 and 2 must seed both agents at the horizon.
    let horizon = BermudanStoppingTime::horizon(schedule);
    let seeds_ok = trace.len() >= 2 && trace[0].iterate == horizon && trace[1].iterate == horizon;

    // Collect the computed steps with their inputs.
    struct Step<'a> {
        n: usize,
        agent: Agent,
        opponent: &'a BermudanStoppingTime,
        own_prev: &'a BermudanStoppingTime,
        minimal_stop: &'a BermudanStoppingTime,
        iterate: &'a BermudanStoppingTime,
        value0: f64,
    }
    let mut steps = Vec::new();
    for i in 2..trace.len() {
        let row = &trace[i];
        steps.push(Step {
            n: row.n,
            agent: row.agent,
            opponent: &trace[i - 1].iterate,
            own_prev: &trace[i - 2].iterate,
            minimal_stop: &row.minimal_stop,
            iterate: &row.iterate,
            value0: row.value0.unwrap_or(f64::NAN),
        });
    }

    let mut checks: Vec<InvariantCheck> = Vec::new();
    let mut push = |name: &str, outcome: Result<Option<Failure>>| -> Result<()> {
        let failure = outcome?;
        checks.push(InvariantCheck {
            name: name.to_string(),
            passed: failure.is_none(),
            detail: failure.map(|f| f.detail),
        });
        Ok(())
    };

    // Payoffs freeze at the opponent's stop node.
    push(
        "payoff-frozen-beyond-opponent",
        (|| {
            for st in &steps {
                let xi = best_response_payoff(instance, st.agent, st.opponent)?;
                let x = instance.stopper_payoff(st.agent);
                let y = instance.waiter_payoff(st.agent);
                for id in tree.node_ids() {
                    let expected = match st.opponent.stop_at_or_before(id)? {
                        Some(u) => y.get(u)?,
                        None => x.get(id)?,
                    };
                    if xi.get(id)? != expected {
                        fail!(
                            "step {}: response payoff at node {id} is {} instead of {expected}",
                            st.n,
                            xi.get(id)?
                        );
                    }
                }
            }
            Ok(None)
        })(),
    )?;

    // Values freeze beyond the opponent at the payoff collected there.
    push(
        "value-frozen-beyond-opponent",
        (|| {
            for st in &steps {
                let xi = best_response_payoff(instance, st.agent, st.opponent)?;
                let vf = value_family(instance.operator(st.agent), &xi, st.opponent)?;
                for id in tree.node_ids() {
                    if !vf.is_frozen(id)? {
                        continue;
                    }
                    let pin = vf.effective_payoff(id)?;
                    if vf.value(id)? != pin {
                        fail!(
                            "step {}: frozen node {id} has value {} instead of payoff {pin}",
                            st.n,
                            vf.value(id)?
                        );
                    }
                }
            }
            Ok(None)
        })(),
    )?;

    // The earliest optimal stop never outlasts the opponent.
    push(
        "minimal-stop-not-after-opponent",
        (|| {
            for st in &steps {
                if !st.minimal_stop.leq(st.opponent)? {
                    fail!(
                        "step {}: minimal stop {} is not before opponent {}",
                        st.n,
                        fmt_stops(st.minimal_stop),
                        fmt_stops(st.opponent)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // Both realizations of the earliest optimal stop coincide and match the
    // trace.
    push(
        "minimal-stop-two-realizations-agree",
        (|| {
            for st in &steps {
                let xi = best_response_payoff(instance, st.agent, st.opponent)?;
                let vf = value_family(instance.operator(st.agent), &xi, st.opponent)?;
                let by_effective = minimal_optimal(&vf, cfg.tol_eq)?;
                let by_raw = minimal_optimal_via_raw_region(&vf, cfg.tol_eq)?;
                if by_effective != by_raw {
                    fail!(
                        "step {}: effective-region stop {} disagrees with raw-region stop {}",
                        st.n,
                        fmt_stops(&by_effective),
                        fmt_stops(&by_raw)
                    );
                }
                if &by_effective != st.minimal_stop {
                    fail!(
                        "step {}: recomputed minimal stop {} but trace has {}",
                        st.n,
                        fmt_stops(&by_effective),
                        fmt_stops(st.minimal_stop)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // Each agent's earliest optimal stop precedes its previous iterate.
    push(
        "minimal-stop-dominated-by-prior-iterate",
        (|| {
            for st in &steps {
                if !st.minimal_stop.leq(st.own_prev)? {
                    fail!(
                        "step {}: minimal stop {} is not before the agent's previous iterate {}",
                        st.n,
                        fmt_stops(st.minimal_stop),
                        fmt_stops(st.own_prev)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // The iterate is exactly "minimal stop where it beats the opponent,
    // previous strategy elsewhere".
    push(
        "iterate-recursion-consistency",
        (|| {
            for st in &steps {
                let clipped = st.minimal_stop.meet(st.own_prev)?;
                let mut early = BTreeSet::new();
                for &v in clipped.stops() {
                    if !st.opponent.contains_stop(v) {
                        for leaf in tree.leaves_under(v)? {
                            early.insert(leaf);
                        }
                    }
                }
                let rebuilt = clipped.concatenate(&early, st.own_prev)?;
                if &rebuilt != st.iterate {
                    fail!(
                        "step {}: rebuilt iterate {} but trace has {}",
                        st.n,
                        fmt_stops(&rebuilt),
                        fmt_stops(st.iterate)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // The minimal stop is recovered as iterate-meet-opponent.
    push(
        "minimal-stop-meet-identity",
        (|| {
            for st in &steps {
                let meet = st.iterate.meet(st.opponent)?;
                if &meet != st.minimal_stop {
                    fail!(
                        "step {}: iterate\u{2227}opponent is {} but the minimal stop is {}",
                        st.n,
                        fmt_stops(&meet),
                        fmt_stops(st.minimal_stop)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // Consecutive iterates may only coincide at the horizon.
    push(
        "coincidence-forces-horizon",
        (|| {
            for st in &steps {
                for &v in st.iterate.stops() {
                    if st.opponent.contains_stop(v) && !tree.is_leaf(v)? {
                        fail!(
                            "step {}: iterate and opponent both stop at interior node {v}",
                            st.n
                        );
                    }
                }
            }
            Ok(None)
        })(),
    )?;

    // Each agent's iterates only move earlier.
    push(
        "iterates-monotone",
        (|| {
            for st in &steps {
                if !st.iterate.leq(st.own_prev)? {
                    fail!(
                        "step {}: iterate {} is not before the previous iterate {}",
                        st.n,
                        fmt_stops(st.iterate),
                        fmt_stops(st.own_prev)
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // Where the minimal stop stops, the value has hit the payoff.
    push(
        "value-matches-payoff-at-minimal-stop",
        (|| {
            for st in &steps {
                let xi = best_response_payoff(instance, st.agent, st.opponent)?;
                let vf = value_family(instance.operator(st.agent), &xi, st.opponent)?;
                for &v in st.minimal_stop.stops() {
                    let value = vf.value(v)?;
                    let payoff = vf.effective_payoff(v)?;
                    if (value - payoff).abs() > cfg.tol_eq {
                        fail!(
                        "step {}: at stop node {v} the value {value} misses the payoff {payoff}",
                        st.n
                    );
                    }
                }
            }
            Ok(None)
        })(),
    )?;

    // The root value of the induction is the assessment of the iterate.
    push(
        "value-equals-assessment",
        (|| {
            for st in &steps {
                let j = match st.agent {
                    Agent::One => assessment(instance, Agent::One, st.iterate, st.opponent)?,
                    Agent::Two => assessment(instance, Agent::Two, st.opponent, st.iterate)?,
                };
                if (j - st.value0).abs() > cfg.tol_eq {
                    fail!(
                        "step {}: assessment {j} differs from the induction's root value {}",
                        st.n,
                        st.value0
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // The iterate is a best response against the opponent: exhaustively for
    // small strategy spaces, sampled otherwise.
    push(
        "best-response-dominance",
        (|| {
            let space = strategy_count(schedule, None)?;
            for st in &steps {
                let mine = match st.agent {
                    Agent::One => assessment(instance, Agent::One, st.iterate, st.opponent)?,
                    Agent::Two => assessment(instance, Agent::Two, st.opponent, st.iterate)?,
                };
                let score = |alt: &BermudanStoppingTime| -> Result<f64> {
                    match st.agent {
                        Agent::One => assessment(instance, Agent::One, alt, st.opponent),
                        Agent::Two => assessment(instance, Agent::Two, st.opponent, alt),
                    }
                };
                if space <= EXHAUSTIVE_DOMINANCE_LIMIT {
                    for alt in enumerate_strategies(schedule, None, cfg.enum_limit)? {
                        let value = score(&alt)?;
                        if value > mine + cfg.tol_eq {
                            fail!(
                            "step {}: alternative {} scores {value}, beating the iterate's {mine}",
                            st.n,
                            fmt_stops(&alt)
                        );
                        }
                    }
                } else {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.sample_seed);
                    for _ in 0..DOMINANCE_SAMPLES {
                        let alt = random_stopping_time(schedule, &mut rng, None)?;
                        let value = score(&alt)?;
                        if value > mine + cfg.tol_eq {
                            fail!(
                                "step {}: sampled alternative {} scores {value}, beating {mine}",
                                st.n,
                                fmt_stops(&alt)
                            );
                        }
                    }
                }
            }
            Ok(None)
        })(),
    )?;

    // The induction's root value agrees with brute-force enumeration.
    push(
        "value-matches-enumeration",
        (|| {
            let root = BermudanStoppingTime::at_root(schedule);
            let root_id = tree.root();
            for st in &steps {
                let xi = best_response_payoff(instance, st.agent, st.opponent)?;
                let bf = match brute_force_value(
                    instance.operator(st.agent),
                    &xi,
                    st.opponent,
                    &root,
                    cfg.enum_limit,
                ) {
                    Ok(map) => map[&root_id],
                    Err(Error::EnumerationLimitExceeded { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if (bf - st.value0).abs() > cfg.tol_eq {
                    fail!(
                        "step {}: brute-force value {bf} differs from the induction's {}",
                        st.n,
                        st.value0
                    );
                }
            }
            Ok(None)
        })(),
    )?;

    // Re-running the best response reproduces the trace row.
    push(
        "iterate-reproducible",
        (|| {
            for st in &steps {
                let redo = best_response(instance, st.agent, st.opponent, st.own_prev, cfg)?;
                if &redo.minimal_stop != st.minimal_stop || &redo.iterate != st.iterate {
                    fail!(
                    "step {}: recomputed (minimal {}, iterate {}) but trace has (minimal {}, iterate {})",
                    st.n,
                    fmt_stops(&redo.minimal_stop),
                    fmt_stops(&redo.iterate),
                    fmt_stops(st.minimal_stop),
                    fmt_stops(st.iterate)
                );
                }
            }
            Ok(None)
        })(),
    )?;

    // The trace ends in a genuine fixpoint matching the reported pair.
    push(
        "converged-fixpoint",
        (|| {
            if !seeds_ok {
                fail!("trace does not start with both agents seeded at the horizon");
            }
            if !result.converged {
                fail!("result is not marked converged");
            }
            // A confirmed fixpoint needs at least one computed round (steps 3
            // and 4) that repeats the round before it; that earlier round may
            // be the horizon seeds themselves.
            let len = trace.len();
            if len < 4 || !len.is_multiple_of(2) {
                fail!("trace length {len} cannot contain a confirmed fixpoint");
            }
            let last_even = &trace[len - 1];
            let last_odd = &trace[len - 2];
            if last_even.iterate != trace[len - 3].iterate
                || last_odd.iterate != trace[len - 4].iterate
            {
                fail!("final two steps do not repeat the previous round");
            }
            if result.tau1 != last_odd.iterate || result.tau2 != last_even.iterate {
                fail!("reported pair differs from the trace's final round");
            }
            Ok(None)
        })(),
    )?;

    let passed = checks.iter().all(|c| c.passed);
    Ok(InvariantReport { checks, passed })
}

/// Names of the invariant checks, in report order.
pub fn invariant_check_names() -> Vec<&'static str> {
    vec![
        "payoff-frozen-beyond-opponent",
        "value-frozen-beyond-opponent",
        "minimal-stop-not-after-opponent",
        "minimal-stop-two-realizations-agree",
        "minimal-stop-dominated-by-prior-iterate",
        "iterate-recursion-consistency",
        "minimal-stop-meet-identity",
        "coincidence-forces-horizon",
        "iterates-monotone",
        "value-matches-payoff-at-minimal-stop",
        "value-equals-assessment",
        "best-response-dominance",
        "value-matches-enumeration",
        "iterate-reproducible",
        "converged-fixpoint",
    ]
}
