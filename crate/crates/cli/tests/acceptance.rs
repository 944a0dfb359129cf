//! Acceptance gate. Each criterion prints exactly one line,
//! `[acceptance] criterion N (<label>): PASS|FAIL`, and fails the build on
//! FAIL. Tolerances are pinned here, next to the checks that use them.
//!
//! Criteria 2, 3 and 4 share one seeded 200-instance sweep (depth <= 4,
//! branching <= 3, operator kinds rotating through linear, entropic with
//! gamma in {0.5, 1, 2}, and multiprior-inf, including mixed pairs) and run
//! inside a single test so the sweep is generated once.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dynkin_core::{
    all_nash_pairs, axiom_check, best_response_payoff, brute_force_value, generate,
    localized_value, nash_check, random_stopping_time, solve, strategy_count, trace_invariants,
    value_family, AdaptedProcess, Agent, BermudanStoppingTime, EvaluationOperator, EventTree,
    ExerciseSchedule, GameInstance, GenSpec, NodeId, NodeSpec, OperatorSpec, SolveConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Equality tolerance shared by the solver and the certificates.
const TOL_EQ: f64 = 1e-9;
/// Millisecond budget for the golden two-node instance.
const GOLDEN_BUDGET: Duration = Duration::from_millis(10);
/// Wall-clock budget for the 200-instance sweep (solve + Nash certificate).
const SWEEP_BUDGET: Duration = Duration::from_secs(60);
/// Exhaustive-deviation threshold the invariant harness must stay below.
const EXHAUSTIVE_LIMIT: u128 = 4096;

fn criterion(n: usize, label: &str, result: Result<(), String>) {
    match result {
        Ok(()) => println!("[acceptance] criterion {n} ({label}): PASS"),
        Err(msg) => {
            println!("[acceptance] criterion {n} ({label}): FAIL - {msg}");
            panic!("criterion {n} ({label}) failed: {msg}");
        }
    }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

/// Loads the shipped two-node fixture through the public JSON schema.
fn load_golden_fixture() -> GameInstance {
    let text = std::fs::read_to_string(fixture("d2.game")).expect("fixture readable");
    let v: serde_json::Value = serde_json::from_str(&text).expect("fixture parses");

    let specs: Vec<NodeSpec> = v["tree"]["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|n| NodeSpec {
            id: n["id"].as_u64().unwrap() as u32,
            stage: n["stage"].as_u64().unwrap() as u32,
            children: n["children"]
                .as_array()
                .map(|cs| {
                    cs.iter()
                        .map(|c| {
                            (
                                c["id"].as_u64().unwrap() as u32,
                                c["prob"].as_f64().unwrap(),
                            )
                        })
                        .collect()
                })
                .unwrap_or_default(),
        })
        .collect();
    let dates: Vec<f64> = v["tree"]["dates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_f64().unwrap())
        .collect();
    let tree = EventTree::build(&specs, &dates).expect("fixture tree valid");
    assert_eq!(v["schedule"], serde_json::json!("all-stages"));
    let schedule = ExerciseSchedule::all_stages(&tree);

    let payoff = |key: &str| -> AdaptedProcess {
        let map: std::collections::BTreeMap<NodeId, f64> = v["payoffs"][key]
            .as_object()
            .unwrap()
            .iter()
            .map(|(k, val)| (NodeId(k.parse().unwrap()), val.as_f64().unwrap()))
            .collect();
        AdaptedProcess::from_map(&tree, &map).expect("fixture payoffs valid")
    };
    for agent in ["agent1", "agent2"] {
        assert_eq!(v["operators"][agent]["kind"], serde_json::json!("linear"));
    }
    GameInstance::new(
        &schedule,
        EvaluationOperator::linear(&tree),
        EvaluationOperator::linear(&tree),
        payoff("X1"),
        payoff("Y1"),
        payoff("X2"),
        payoff("Y2"),
    )
    .expect("fixture game valid")
}

#[test]
fn criterion_1_golden_instance() {
    criterion(
        1,
        "two-node golden instance",
        (|| {
            let instance = load_golden_fixture();
            let cfg = SolveConfig::default();

            let start = Instant::now();
            let res = solve(&instance, &cfg).map_err(|e| e.to_string())?;
            let elapsed = start.elapsed();
            if elapsed >= GOLDEN_BUDGET {
                return Err(format!("solve took {elapsed:?}, budget {GOLDEN_BUDGET:?}"));
            }
            if res.iterations > 6 {
                return Err(format!(
                    "took {} best-response steps, expected <= 6",
                    res.iterations
                ));
            }

            let root: BTreeSet<NodeId> = [NodeId(0)].into();
            let leaf: BTreeSet<NodeId> = [NodeId(1)].into();
            if *res.tau1.stops() != root || *res.tau2.stops() != leaf {
                return Err(format!(
                    "equilibrium ({:?}, {:?}), expected (stop-at-root, run-to-horizon)",
                    res.tau1.stops(),
                    res.tau2.stops()
                ));
            }
            if (res.assessment1 - 1.0).abs() > TOL_EQ || (res.assessment2 - 2.0).abs() > TOL_EQ {
                return Err(format!(
                    "assessments ({}, {}), expected (1, 2)",
                    res.assessment1, res.assessment2
                ));
            }

            // Exhaustive oracle over the 2x2 strategy grid in the same run: the
            // game has exactly the two asymmetric equilibria.
            let pairs = all_nash_pairs(&instance, &cfg).map_err(|e| e.to_string())?;
            let got: Vec<(BTreeSet<NodeId>, BTreeSet<NodeId>)> = pairs
                .iter()
                .map(|(a, b)| (a.stops().clone(), b.stops().clone()))
                .collect();
            let want = vec![(root.clone(), leaf.clone()), (leaf, root)];
            if got != want {
                return Err(format!("nash set {got:?}, expected {want:?}"));
            }
            Ok(())
        })(),
    );
}

/// The shared sweep: 200 seeded instances, dimensions and operator kinds in
/// rotation, mixed operator pairs included.
fn sweep_specs() -> Vec<GenSpec> {
    let dims = [(2u32, 2u32), (2, 3), (3, 2), (3, 3), (4, 2)];
    let kinds = [
        OperatorSpec::Linear,
        OperatorSpec::Entropic { gamma: 0.5 },
        OperatorSpec::Entropic { gamma: 1.0 },
        OperatorSpec::Entropic { gamma: 2.0 },
        OperatorSpec::MultipriorInf,
    ];
    (0..200usize)
        .map(|i| {
            let (depth, branching) = dims[i % dims.len()];
            GenSpec {
                seed: 20_000 + i as u64,
                depth,
                branching,
                op1: kinds[(i / 5) % kinds.len()],
                op2: kinds[(i / 25) % kinds.len()],
            }
        })
        .collect()
}

#[test]
fn criteria_2_3_4_sweep() {
    let specs = sweep_specs();
    let cfg = SolveConfig::default();

    // Criterion 2: every instance converges within the proven bound and the
    // solved pair survives an exhaustive Nash certificate.
    let mut sweep_time = Duration::ZERO;
    let mut results = Vec::with_capacity(specs.len());
    criterion(
        2,
        "nash sweep over 200 generated instances",
        (|| {
            for (i, spec) in specs.iter().enumerate() {
                let start = Instant::now();
                let gen = generate(spec).map_err(|e| format!("instance {i}: {e}"))?;
                let res = solve(&gen.instance, &cfg).map_err(|e| format!("instance {i}: {e}"))?;
                if !res.converged {
                    return Err(format!("instance {i} did not converge"));
                }
                let bound = 2 * gen.instance.tree().node_count() + 4;
                if res.iterations > bound {
                    return Err(format!(
                        "instance {i} took {} steps, bound {bound}",
                        res.iterations
                    ));
                }
                let report = nash_check(&gen.instance, &res.tau1, &res.tau2, &cfg)
                    .map_err(|e| format!("instance {i}: {e}"))?;
                if !report.passed {
                    return Err(format!(
                        "instance {i}: deviation gains {} / {} exceed {TOL_EQ}",
                        report.agent1.best_gain, report.agent2.best_gain
                    ));
                }
                sweep_time += start.elapsed();
                results.push((gen, res));
            }
            if sweep_time >= SWEEP_BUDGET {
                return Err(format!(
                    "sweep took {sweep_time:?}, budget {SWEEP_BUDGET:?}"
                ));
            }
            println!("[acceptance]   sweep solve+certificate time: {sweep_time:?}");
            Ok(())
        })(),
    );

    // Criterion 3: at every computed step of every trace, the backward
    // induction value at the root equals the brute-force enumeration value
    // of the same capped problem.
    criterion(
        3,
        "induction equals enumeration at every iteration",
        (|| {
            let mut max_err: f64 = 0.0;
            for (i, (gen, res)) in results.iter().enumerate() {
                let schedule = gen.instance.schedule();
                let at_root = BermudanStoppingTime::at_root(schedule);
                let root = gen.instance.tree().root();
                for step in 2..res.trace.len() {
                    let row = &res.trace[step];
                    let opponent = &res.trace[step - 1].iterate;
                    let xi = best_response_payoff(&gen.instance, row.agent, opponent)
                        .map_err(|e| format!("instance {i} step {}: {e}", row.n))?;
                    let vf = value_family(gen.instance.operator(row.agent), &xi, opponent)
                        .map_err(|e| format!("instance {i} step {}: {e}", row.n))?;
                    let bf = brute_force_value(
                        gen.instance.operator(row.agent),
                        &xi,
                        opponent,
                        &at_root,
                        cfg.enum_limit,
                    )
                    .map_err(|e| format!("instance {i} step {}: {e}", row.n))?;
                    let err = (vf.root_value() - bf[&root]).abs();
                    max_err = max_err.max(err);
                    if err > TOL_EQ {
                        return Err(format!(
                            "instance {i} step {}: |induction - enumeration| = {err}",
                            row.n
                        ));
                    }
                }
            }
            if results.is_empty() {
                return Err("sweep produced no instances".to_string());
            }
            println!("[acceptance]   max |induction - enumeration| over sweep: {max_err:e}");
            Ok(())
        })(),
    );

    // Criterion 4: the full invariant suite holds on every trace, with
    // deviation checks exhaustive at these strategy-space sizes.
    criterion(
        4,
        "trace invariants across the sweep",
        (|| {
            for (i, (gen, res)) in results.iter().enumerate() {
                let count = strategy_count(gen.instance.schedule(), None)
                    .map_err(|e| format!("instance {i}: {e}"))?;
                if count > EXHAUSTIVE_LIMIT {
                    return Err(format!(
                        "instance {i} has {count} strategies; sweep must stay exhaustive"
                    ));
                }
                let report = trace_invariants(&gen.instance, res, &cfg)
                    .map_err(|e| format!("instance {i}: {e}"))?;
                if !report.passed {
                    let broken: Vec<_> = report
                        .checks
                        .iter()
                        .filter(|c| !c.passed)
                        .map(|c| format!("{}: {}", c.name, c.detail.clone().unwrap_or_default()))
                        .collect();
                    return Err(format!("instance {i}: {}", broken.join("; ")));
                }
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_5_operator_conformance() {
    criterion(
        5,
        "operator conformance harness",
        (|| {
            // Two tree shapes within depth 4; the generated instances carry
            // prior sets for the robust operator.
            let shapes = [(501u64, 4u32, 2u32), (502, 2, 3)].map(|(seed, depth, branching)| {
                generate(&GenSpec {
                    seed,
                    depth,
                    branching,
                    op1: OperatorSpec::MultipriorInf,
                    op2: OperatorSpec::Linear,
                })
                .unwrap()
            });

            for gen in &shapes {
                let tree = Arc::clone(gen.instance.tree());
                let schedule = gen.instance.schedule();
                let operators = vec![
                    EvaluationOperator::linear(&tree),
                    EvaluationOperator::entropic(&tree, 1.0).unwrap(),
                    EvaluationOperator::entropic(&tree, 2.0).unwrap(),
                    gen.instance.operator(Agent::One).clone(),
                ];
                for op in &operators {
                    for seed in [7u64, 11, 13] {
                        let report =
                            axiom_check(op, schedule, 500, seed).map_err(|e| e.to_string())?;
                        if !report.passed {
                            let broken: Vec<_> =
                                report.checks.iter().filter(|c| !c.passed).collect();
                            return Err(format!(
                                "operator {} seed {seed}: {broken:?}",
                                report.operator
                            ));
                        }
                    }
                }
            }

            // The deliberately order-reversing aggregator must be caught by the
            // monotonicity check, with a concrete counterexample.
            let gen = &shapes[1];
            let tree = Arc::clone(gen.instance.tree());
            let broken = EvaluationOperator::custom(&tree, "broken-diff", |_, _, values| {
                values[0] - values[1..].iter().sum::<f64>()
            });
            let report =
                axiom_check(&broken, gen.instance.schedule(), 500, 7).map_err(|e| e.to_string())?;
            if report.passed {
                return Err("broken aggregator passed the harness".to_string());
            }
            let mono = report
                .checks
                .iter()
                .find(|c| c.name == "monotonicity")
                .ok_or("monotonicity check missing")?;
            if mono.passed {
                return Err("broken aggregator passed monotonicity".to_string());
            }
            if mono.counterexample.is_none() {
                return Err("monotonicity failure carries no counterexample".to_string());
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_6_localization() {
    criterion(
        6,
        "localization identity",
        (|| {
            let kinds = [
                OperatorSpec::Linear,
                OperatorSpec::Entropic { gamma: 0.8 },
                OperatorSpec::Entropic { gamma: 2.0 },
                OperatorSpec::MultipriorInf,
                OperatorSpec::MultipriorSup,
            ];
            let dims = [(2u32, 2u32), (3, 2), (2, 3)];
            let mut max_err: f64 = 0.0;
            for (k, kind) in kinds.iter().enumerate() {
                for t in 0..100usize {
                    let (depth, branching) = dims[t % dims.len()];
                    let gen = generate(&GenSpec {
                        seed: 60_000 + (k * 100 + t) as u64,
                        depth,
                        branching,
                        op1: *kind,
                        op2: OperatorSpec::Linear,
                    })
                    .map_err(|e| e.to_string())?;
                    let inst = &gen.instance;
                    let schedule = Arc::clone(inst.schedule());
                    let tree = inst.tree();
                    let op = inst.operator(Agent::One);
                    let xi = inst.stopper_payoff(Agent::One);

                    let mut rng = ChaCha8Rng::seed_from_u64(90_000 + (k * 100 + t) as u64);
                    let s = random_stopping_time(&schedule, &mut rng, None)
                        .map_err(|e| e.to_string())?;
                    let mut at: BTreeSet<NodeId> = s
                        .stops()
                        .iter()
                        .copied()
                        .filter(|_| rng.gen_bool(0.5))
                        .collect();
                    if at.is_empty() {
                        at = s.stops().clone();
                    }

                    let local = localized_value(op, xi, &at, &s).map_err(|e| e.to_string())?;
                    let horizon = BermudanStoppingTime::horizon(&schedule);
                    let full = value_family(op, xi, &horizon).map_err(|e| e.to_string())?;
                    for &u in &at {
                        for v in tree.descendants(u).map_err(|e| e.to_string())? {
                            let err = (local.value(v).unwrap() - full.value(v).unwrap()).abs();
                            max_err = max_err.max(err);
                            if err > TOL_EQ {
                                return Err(format!(
                                    "operator {kind}, triple {t}, node {v}: masked and full \
                                 values differ by {err}"
                                ));
                            }
                        }
                    }
                }
            }
            println!("[acceptance]   max |masked - full| over triples: {max_err:e}");
            Ok(())
        })(),
    );
}

#[test]
fn criterion_7_byte_identical_reports() {
    criterion(
        7,
        "byte-identical reports across runs",
        (|| {
            let bin = env!("CARGO_BIN_EXE_dynkin");
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let run = |args: &[&str]| -> Result<(), String> {
                let out = Command::new(bin)
                    .args(args)
                    .output()
                    .map_err(|e| e.to_string())?;
                if !out.status.success() {
                    return Err(format!(
                        "`{}` exited {:?}: {}",
                        args.join(" "),
                        out.status.code(),
                        String::from_utf8_lossy(&out.stderr)
                    ));
                }
                Ok(())
            };
            let bytes = |p: &Path| std::fs::read(p).map_err(|e| e.to_string());

            // One generated instance and the shipped fixture, each solved and
            // verified twice.
            let game = dir.path().join("sweep.game");
            run(&[
                "gen",
                "--seed",
                "77",
                "--depth",
                "3",
                "--branching",
                "2",
                "--op1",
                "entropic",
                "--gamma1",
                "1",
                "--op2",
                "multiprior-inf",
                "--out",
                game.to_str().unwrap(),
            ])?;

            for (label, instance) in [("generated", game.clone()), ("fixture", fixture("d2.game"))]
            {
                let r1 = dir.path().join(format!("{label}-1.report"));
                let r2 = dir.path().join(format!("{label}-2.report"));
                for r in [&r1, &r2] {
                    run(&[
                        "solve",
                        "--instance",
                        instance.to_str().unwrap(),
                        "--out",
                        r.to_str().unwrap(),
                    ])?;
                }
                if bytes(&r1)? != bytes(&r2)? {
                    return Err(format!("{label}: solve reports differ between runs"));
                }

                let v1 = dir.path().join(format!("{label}-1.verify"));
                let v2 = dir.path().join(format!("{label}-2.verify"));
                for v in [&v1, &v2] {
                    run(&[
                        "verify",
                        "--equilibrium",
                        r1.to_str().unwrap(),
                        "--out",
                        v.to_str().unwrap(),
                    ])?;
                }
                if bytes(&v1)? != bytes(&v2)? {
                    return Err(format!("{label}: verify reports differ between runs"));
                }
            }
            Ok(())
        })(),
    );
}
