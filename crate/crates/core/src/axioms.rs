//! Randomized conformance harness for evaluation operators.
//!
//! [`axiom_check`] draws random ordered strategy pairs and value families
//! and tests the behavioural properties the solver relies on: locality of
//! the backward evaluation, identity between equal strategies, pointwise
//! monotonicity, composition across an intermediate strategy, agreement on
//! events where strategies coincide, masking by measurable events and
//! 1-Lipschitz continuity in the sup norm. Built-in operators satisfy all
//! of them; custom aggregators can be screened here before being trusted
//! inside the solver.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::evaluation::{EvaluationOperator, OperatorDescription};
use crate::strategy::{random_stopping_time, ExerciseSchedule};
use crate::tree::NodeId;
use std::sync::Arc;

/// Tolerance for the inequality-shaped checks; equality-shaped checks must
/// hold exactly because they compare identical arithmetic.
pub const TOL_AXIOM: f64 = 1e-9;

const LIPSCHITZ_DELTA: f64 = 1e-8;

/// One witnessed violation of a property.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub trial: usize,
    pub node: NodeId,
    pub violation: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of one property across all trials.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: bool,
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

/// Full conformance report for one operator.
#[derive(Clone, Debug, PartialEq)]
pub struct AxiomReport {
    pub operator: OperatorDescription,
    pub seed: u64,
    pub trials: usize,
    pub checks: Vec<AxiomCheck>,
    pub passed: bool,
}

const CHECK_NAMES: [&str; 7] = [
    "evaluation-locality",
    "knowledge-preservation",
    "monotonicity",
    "consistency",
    "strategy-agreement-locality",
    "event-masking-locality",
    "lipschitz-continuity",
];

struct CheckState {
    name: &'static str,
    counterexample: Option<Counterexample>,
}

impl CheckState {
    fn record(&mut self, ce: Counterexample) {
        if self.counterexample.is_none() {
            self.counterexample = Some(ce);
        }
    }
}

/// Runs `trials` randomized property trials of `op` over strategies from
/// `schedule`, reproducibly from `seed`.
pub fn axiom_check(
    op: &EvaluationOperator,
    schedule: &Arc<ExerciseSchedule>,
    trials: usize,
    seed: u64,
) -> Result<AxiomReport> {
    let tree = schedule.tree();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states: Vec<CheckState> = CHECK_NAMES
        .iter()
        .map(|&name| CheckState {
            name,
            counterexample: None,
        })
        .collect();

    for trial in 0..trials {
        let s = random_stopping_time(schedule, &mut rng, None)?;
        let tau = random_stopping_time(schedule, &mut rng, Some(&s))?;
        let sigma = random_stopping_time(schedule, &mut rng, Some(&tau))?;

        let mut eta_tau: BTreeMap<NodeId, f64> = BTreeMap::new();
        for &u in tau.stops() {
            eta_tau.insert(u, rng.gen_range(-8.0..8.0));
        }
        let mut eta_sigma: BTreeMap<NodeId, f64> = BTreeMap::new();
        for &u in sigma.stops() {
            eta_sigma.insert(u, rng.gen_range(-8.0..8.0));
        }

        let base = op.rho(&s, &tau, &eta_tau)?;
        let s_stops: Vec<NodeId> = s.stops().iter().copied().collect();
        let focus = s_stops[rng.gen_range(0..s_stops.len())];

        // Evaluation locality: rewriting values at stop nodes outside the
        // subtree of one stop node leaves the value there untouched.
        {
            let mut shuffled = eta_tau.clone();
            for (&u, v) in shuffled.iter_mut() {
                if !tree.is_ancestor_or_self(focus, u)? {
                    *v = rng.gen_range(-8.0..8.0);
                }
            }
            let out = op.rho(&s, &tau, &shuffled)?;
            if out[&focus] != base[&focus] {
                states[0].record(Counterexample {
                    trial,
                    node: focus,
                    violation: "value changed although inputs under the node did not".to_string(),
                    lhs: base[&focus],
                    rhs: out[&focus],
                });
            }
        }

        // Knowledge preservation: evaluating a family down to its own
        // strategy returns it unchanged.
        {
            let out = op.rho(&tau, &tau, &eta_tau)?;
            for (&u, &x) in &eta_tau {
                if out[&u] != x {
                    states[1].record(Counterexample {
                        trial,
                        node: u,
                        violation: "self-evaluation is not the identity".to_string(),
                        lhs: x,
                        rhs: out[&u],
                    });
                    break;
                }
            }
        }

        // Monotonicity: raising inputs pointwise may not lower any output.
        {
            let mut bumped = eta_tau.clone();
            for v in bumped.values_mut() {
                *v += rng.gen_range(0.0..4.0);
            }
            let out = op.rho(&s, &tau, &bumped)?;
            for &v in &s_stops {
                if out[&v] < base[&v] - TOL_AXIOM {
                    states[2].record(Counterexample {
                        trial,
                        node: v,
                        violation: format!(
                            "inputs were raised pointwise but the value fell from {} to {}",
                            base[&v], out[&v]
                        ),
                        lhs: base[&v],
                        rhs: out[&v],
                    });
                    break;
                }
            }
        }

        // Consistency: evaluating in one sweep equals evaluating through an
        // intermediate strategy, exactly.
        {
            let direct = op.rho(&s, &sigma, &eta_sigma)?;
            let inner = op.rho(&tau, &sigma, &eta_sigma)?;
            let via = op.rho(&s, &tau, &inner)?;
            for &v in &s_stops {
                if direct[&v] != via[&v] {
                    states[3].record(Counterexample {
                        trial,
                        node: v,
                        violation: "two-step evaluation disagrees with direct evaluation"
                            .to_string(),
                        lhs: direct[&v],
                        rhs: via[&v],
                    });
                    break;
                }
            }
        }

        // Strategy agreement: two strategies that coincide below a stop node
        // yield the same value there when their inputs coincide below it too.
        {
            let atom: BTreeSet<NodeId> = tree.leaves_under(focus)?.into_iter().collect();
            let alt = random_stopping_time(schedule, &mut rng, Some(&s))?;
            let tau_alt = tau.concatenate(&atom, &alt)?;
            let mut eta_alt: BTreeMap<NodeId, f64> = BTreeMap::new();
            for &u in tau_alt.stops() {
                if tree.is_ancestor_or_self(focus, u)? {
                    eta_alt.insert(u, eta_tau[&u]);
                } else {
                    eta_alt.insert(u, rng.gen_range(-8.0..8.0));
                }
            }
            let out = op.rho(&s, &tau_alt, &eta_alt)?;
            if out[&focus] != base[&focus] {
                states[4].record(Counterexample {
                    trial,
                    node: focus,
                    violation: "strategies agreeing under the node valued differently".to_string(),
                    lhs: base[&focus],
                    rhs: out[&focus],
                });
            }
        }

        // Event masking: zeroing inputs outside a union of stop-node atoms
        // does not change values inside it.
        {
            let mut selected: BTreeSet<NodeId> = s_stops
                .iter()
                .copied()
                .filter(|_| rng.gen_bool(0.5))
                .collect();
            if selected.is_empty() {
                selected.insert(focus);
            }
            let mut masked = eta_tau.clone();
            for (&u, v) in masked.iter_mut() {
                let governing = s
                    .stop_at_or_before(u)?
                    .expect("ordered strategies leave no stop node ungoverned");
                if !selected.contains(&governing) {
                    *v = 0.0;
                }
            }
            let out = op.rho(&s, &tau, &masked)?;
            for &v in &selected {
                if out[&v] != base[&v] {
                    states[5].record(Counterexample {
                        trial,
                        node: v,
                        violation: "masking values outside the event changed a value inside"
                            .to_string(),
                        lhs: base[&v],
                        rhs: out[&v],
                    });
                    break;
                }
            }
        }

        // Lipschitz continuity: shifting all inputs by delta moves every
        // output by at most 2*delta.
        {
            let mut shifted = eta_tau.clone();
            for v in shifted.values_mut() {
                *v += LIPSCHITZ_DELTA;
            }
            let out = op.rho(&s, &tau, &shifted)?;
            for &v in &s_stops {
                if (out[&v] - base[&v]).abs() > 2.0 * LIPSCHITZ_DELTA {
                    states[6].record(Counterexample {
                        trial,
                        node: v,
                        violation: format!(
                            "a uniform input shift of {LIPSCHITZ_DELTA} moved the value by {}",
                            (out[&v] - base[&v]).abs()
                        ),
                        lhs: base[&v],
                        rhs: out[&v],
                    });
                    break;
                }
            }
        }
    }

    let checks: Vec<AxiomCheck> = states
        .into_iter()
        .map(|st| AxiomCheck {
            name: st.name.to_string(),
            passed: st.counterexample.is_none(),
            trials,
            counterexample: st.counterexample,
        })
        .collect();
    let passed = checks.iter().all(|c| c.passed);
    Ok(AxiomReport {
        operator: op.describe(),
        seed,
        trials,
        checks,
        passed,
    })
}
