//! Implementations of the five subcommands. Every command returns either
//! `Outcome::Pass` (exit 0) or `Outcome::FailedChecks` (exit 2); anything
//! that prevents a verdict is an error (exit 1).

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use dynkin_core::{
    axiom_check, generate, nash_check, solve, strategy_count, trace_invariants, Agent,
    BermudanStoppingTime, EquilibriumResult, EvaluationOperator, GenSpec, IterationRecord, NodeId,
    OperatorSpec,
};

use crate::args::{
    AxiomsArgs, GenArgs, InspectArgs, KindChoice, OperatorChoice, SolveArgs, VerifyArgs,
};
use crate::instance::{
    build_instance, build_operator, instance_to_file, load_instance, LoadedInstance,
};
use crate::report::{axioms_report, solve_report, verify_report, SolveReportFile, SOLVE_FORMAT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome {
    Pass,
    FailedChecks,
}

/// Serializes `value` as pretty JSON to `out`, or to stdout when absent.
fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Outcome> {
    let loaded = load_instance(&args.instance)?;
    let result = solve(&loaded.instance, &loaded.config)?;
    let report = solve_report(&loaded.file, &loaded.config, &result);
    emit(&report, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<Outcome> {
    let text = std::fs::read_to_string(&args.equilibrium)
        .with_context(|| format!("cannot read report {}", args.equilibrium.display()))?;
    let report: SolveReportFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse report {}", args.equilibrium.display()))?;
    if report.format != SOLVE_FORMAT {
        bail!("not a solve report (format {:?})", report.format);
    }

    let loaded = build_instance(report.instance.clone()).context("embedded instance invalid")?;
    if let Some(path) = &args.instance {
        let given = load_instance(path)?;
        if given.file != report.instance {
            bail!(
                "instance file {} differs from the instance embedded in the report",
                path.display()
            );
        }
    }

    let result = reconstruct_result(&loaded, &report)?;
    let nash = nash_check(&loaded.instance, &result.tau1, &result.tau2, &loaded.config)?;
    let invariants = trace_invariants(&loaded.instance, &result, &loaded.config)?;
    let out_report = verify_report(&nash, &invariants);
    let outcome = if out_report.passed {
        Outcome::Pass
    } else {
        Outcome::FailedChecks
    };
    emit(&out_report, args.out.as_deref())?;
    Ok(outcome)
}

/// Rebuilds the solver's result object from its serialized trace so the
/// invariant harness can replay it.
fn reconstruct_result(
    loaded: &LoadedInstance,
    report: &SolveReportFile,
) -> Result<EquilibriumResult> {
    let schedule = loaded.instance.schedule();
    let strategy = |ids: &[u32]| -> Result<BermudanStoppingTime> {
        Ok(BermudanStoppingTime::new(
            schedule,
            ids.iter().map(|&v| NodeId(v)),
        )?)
    };
    let mut trace = Vec::with_capacity(report.trace.len());
    for row in &report.trace {
        trace.push(IterationRecord {
            n: row.n,
            agent: match row.agent {
                1 => Agent::One,
                2 => Agent::Two,
                other => bail!("trace step {}: unknown agent {other}", row.n),
            },
            minimal_stop: strategy(&row.minimal_stop)
                .with_context(|| format!("trace step {}: bad minimal stop", row.n))?,
            iterate: strategy(&row.iterate)
                .with_context(|| format!("trace step {}: bad iterate", row.n))?,
            value0: row.value0,
        });
    }
    Ok(EquilibriumResult {
        tau1: strategy(&report.equilibrium.tau1_star).context("bad tau1_star")?,
        tau2: strategy(&report.equilibrium.tau2_star).context("bad tau2_star")?,
        assessment1: report.equilibrium.j1,
        assessment2: report.equilibrium.j2,
        iterations: report.equilibrium.iterations,
        converged: report.equilibrium.converged,
        trace,
    })
}

pub fn cmd_axioms(args: &AxiomsArgs) -> Result<Outcome> {
    let loaded = load_instance(&args.instance)?;
    let tree = Arc::clone(loaded.instance.tree());
    let schedule = loaded.instance.schedule();

    let mut operators: Vec<EvaluationOperator> = Vec::new();
    match args.operator {
        OperatorChoice::Agent1 => operators.push(loaded.instance.operator(Agent::One).clone()),
        OperatorChoice::Agent2 => operators.push(loaded.instance.operator(Agent::Two).clone()),
        OperatorChoice::Both => {
            operators.push(loaded.instance.operator(Agent::One).clone());
            operators.push(loaded.instance.operator(Agent::Two).clone());
        }
        OperatorChoice::Linear => operators.push(EvaluationOperator::linear(&tree)),
        OperatorChoice::Entropic => {
            let gamma = args.gamma.context("--operator entropic needs --gamma")?;
            operators.push(EvaluationOperator::entropic(&tree, gamma)?);
        }
        OperatorChoice::MultipriorInf | OperatorChoice::MultipriorSup => {
            let direction = if args.operator == OperatorChoice::MultipriorInf {
                "inf"
            } else {
                "sup"
            };
            let priors = [&loaded.file.operators.agent1, &loaded.file.operators.agent2]
                .into_iter()
                .find_map(|op| op.priors.clone())
                .context("instance file carries no priors for a multiprior operator")?;
            let entry = crate::instance::OperatorFile {
                kind: "multiprior".into(),
                gamma: None,
                direction: Some(direction.into()),
                priors: Some(priors),
            };
            operators.push(build_operator(&tree, &entry)?);
        }
    }

    let mut reports = Vec::with_capacity(operators.len());
    for op in &operators {
        reports.push(axiom_check(op, schedule, args.trials, args.seed)?);
    }
    let file = axioms_report(args.trials, args.seed, &reports);
    let outcome = if file.passed {
        Outcome::Pass
    } else {
        Outcome::FailedChecks
    };
    emit(&file, args.out.as_deref())?;
    Ok(outcome)
}

pub fn cmd_gen(args: &GenArgs) -> Result<Outcome> {
    if args.depth > 8 || args.branching > 4 {
        bail!(
            "dimensions out of range: depth {} (max 8), branching {} (max 4)",
            args.depth,
            args.branching
        );
    }
    let op1 = operator_spec(args.op1, args.gamma1, "--gamma1")?;
    let op2 = operator_spec(args.op2, args.gamma2, "--gamma2")?;
    let spec = GenSpec {
        seed: args.seed,
        depth: args.depth,
        branching: args.branching,
        op1,
        op2,
    };
    let generated = generate(&spec)?;
    let file = instance_to_file(&generated, op1, op2);
    emit(&file, args.out.as_deref())?;
    Ok(Outcome::Pass)
}

fn operator_spec(choice: KindChoice, gamma: Option<f64>, flag: &str) -> Result<OperatorSpec> {
    match choice {
        KindChoice::Linear => Ok(OperatorSpec::Linear),
        KindChoice::Entropic => {
            let gamma = gamma.with_context(|| format!("entropic operator needs {flag}"))?;
            Ok(OperatorSpec::Entropic { gamma })
        }
        KindChoice::MultipriorInf => Ok(OperatorSpec::MultipriorInf),
        KindChoice::MultipriorSup => Ok(OperatorSpec::MultipriorSup),
    }
}

pub fn cmd_inspect(args: &InspectArgs) -> Result<Outcome> {
    let loaded = load_instance(&args.instance)?;
    let inst = &loaded.instance;
    let tree = inst.tree();
    let schedule = inst.schedule();

    println!("instance: {}", args.instance.display());
    println!(
        "tree: {} nodes, {} leaves, horizon stage {}",
        tree.node_count(),
        tree.leaf_count(),
        tree.horizon()
    );
    println!(
        "dates: [{}]",
        tree.dates()
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let sizes: Vec<String> = schedule
        .thetas()
        .iter()
        .map(|s| s.len().to_string())
        .collect();
    println!(
        "schedule: {} exercise dates, stop-set sizes [{}]",
        schedule.thetas().len(),
        sizes.join(", ")
    );
    println!(
        "operators: agent1 {}, agent2 {}",
        inst.operator(Agent::One).describe(),
        inst.operator(Agent::Two).describe()
    );
    println!("strategies per agent: {}", strategy_count(schedule, None)?);
    for (name, proc) in [
        ("X1", inst.stopper_payoff(Agent::One)),
        ("Y1", inst.waiter_payoff(Agent::One)),
        ("X2", inst.stopper_payoff(Agent::Two)),
        ("Y2", inst.waiter_payoff(Agent::Two)),
    ] {
        let lo = proc.iter().map(|(_, v)| v).fold(f64::INFINITY, f64::min);
        let hi = proc
            .iter()
            .map(|(_, v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        println!("payoffs {name}: range [{lo}, {hi}]");
    }
    println!(
        "config: tol_eq {}, max_iter {}, enum_limit {}",
        loaded.config.tol_eq,
        loaded
            .config
            .max_iter
            .map(|m| m.to_string())
            .unwrap_or_else(|| "auto".to_string()),
        loaded.config.enum_limit
    );
    Ok(Outcome::Pass)
}
