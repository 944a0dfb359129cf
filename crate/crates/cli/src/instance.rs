//! On-disk JSON model for game instances, and conversion to validated
//! in-memory games.
//!
//! Top-level keys: `tree` (nodes with per-child transition probabilities,
//! plus stage dates), `schedule` (the string `"all-stages"` or explicit
//! stop-node sets), `operators` (one evaluation operator per agent),
//! `payoffs` (`X1`/`Y1`/`X2`/`Y2` maps from node id to value) and an
//! optional `config` block (`tol_eq`, `max_iter`, `enum_limit`).

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use dynkin_core::{
    AdaptedProcess, Direction, EvaluationOperator, EventTree, ExerciseSchedule, GameInstance,
    GeneratedInstance, NodeId, NodeSpec, OperatorSpec, SolveConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub tree: TreeFile,
    pub schedule: ScheduleFile,
    pub operators: OperatorsFile,
    pub payoffs: PayoffsFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeFile {
    pub nodes: Vec<NodeFile>,
    pub dates: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeFile {
    pub id: u32,
    pub stage: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ChildFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChildFile {
    pub id: u32,
    pub prob: f64,
}

/// Either the name `"all-stages"` or explicit exercise-date node sets
/// `{"theta": [[ids...], ...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScheduleFile {
    Named(String),
    Explicit { theta: Vec<Vec<u32>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorsFile {
    pub agent1: OperatorFile,
    pub agent2: OperatorFile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    /// `"linear"`, `"entropic"` (needs `gamma`) or `"multiprior"` (needs
    /// `direction` and `priors`).
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// `"inf"` or `"sup"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<String>,
    /// Interior node id -> set of candidate child distributions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priors: Option<BTreeMap<u32, Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffsFile {
    #[serde(rename = "X1")]
    pub x1: BTreeMap<u32, f64>,
    #[serde(rename = "Y1")]
    pub y1: BTreeMap<u32, f64>,
    #[serde(rename = "X2")]
    pub x2: BTreeMap<u32, f64>,
    #[serde(rename = "Y2")]
    pub y2: BTreeMap<u32, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default = "default_tol_eq")]
    pub tol_eq: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default = "default_enum_limit")]
    pub enum_limit: usize,
}

fn default_tol_eq() -> f64 {
    SolveConfig::default().tol_eq
}

fn default_enum_limit() -> usize {
    SolveConfig::default().enum_limit
}

/// A parsed file together with its validated in-memory form.
pub struct LoadedInstance {
    pub file: InstanceFile,
    pub instance: GameInstance,
    pub config: SolveConfig,
}

pub fn load_instance(path: &Path) -> Result<LoadedInstance> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read instance file {}", path.display()))?;
    let file: InstanceFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse instance file {}", path.display()))?;
    build_instance(file)
}

pub fn build_instance(file: InstanceFile) -> Result<LoadedInstance> {
    let specs: Vec<NodeSpec> = file
        .tree
        .nodes
        .iter()
        .map(|n| NodeSpec {
            id: n.id,
            stage: n.stage,
            children: n.children.iter().map(|c| (c.id, c.prob)).collect(),
        })
        .collect();
    let tree = EventTree::build(&specs, &file.tree.dates).context("invalid tree")?;

    let schedule = match &file.schedule {
        ScheduleFile::Named(name) if name == "all-stages" => ExerciseSchedule::all_stages(&tree),
        ScheduleFile::Named(name) => bail!("unknown schedule name {name:?} (try \"all-stages\")"),
        ScheduleFile::Explicit { theta } => {
            let sets: Vec<_> = theta
                .iter()
                .map(|ids| ids.iter().map(|&v| NodeId(v)).collect())
                .collect();
            ExerciseSchedule::from_node_sets(&tree, &sets).context("invalid schedule")?
        }
    };

    let op1 = build_operator(&tree, &file.operators.agent1).context("invalid agent1 operator")?;
    let op2 = build_operator(&tree, &file.operators.agent2).context("invalid agent2 operator")?;

    let payoff = |name: &str, values: &BTreeMap<u32, f64>| -> Result<AdaptedProcess> {
        let map: BTreeMap<NodeId, f64> = values.iter().map(|(&k, &v)| (NodeId(k), v)).collect();
        AdaptedProcess::from_map(&tree, &map).with_context(|| format!("invalid payoffs {name}"))
    };
    let x1 = payoff("X1", &file.payoffs.x1)?;
    let y1 = payoff("Y1", &file.payoffs.y1)?;
    let x2 = payoff("X2", &file.payoffs.x2)?;
    let y2 = payoff("Y2", &file.payoffs.y2)?;

    let instance =
        GameInstance::new(&schedule, op1, op2, x1, y1, x2, y2).context("invalid game")?;

    let defaults = SolveConfig::default();
    let config = match &file.config {
        None => defaults,
        Some(c) => SolveConfig {
            tol_eq: c.tol_eq,
            max_iter: c.max_iter,
            enum_limit: c.enum_limit,
            ..defaults
        },
    };
    Ok(LoadedInstance {
        file,
        instance,
        config,
    })
}

/// Builds one agent's evaluation operator over `tree` from its file entry.
pub fn build_operator(tree: &Arc<EventTree>, op: &OperatorFile) -> Result<EvaluationOperator> {
    match op.kind.as_str() {
        "linear" => {
            if op.gamma.is_some() || op.direction.is_some() || op.priors.is_some() {
                bail!("linear operator takes no gamma, direction or priors");
            }
            Ok(EvaluationOperator::linear(tree))
        }
        "entropic" => {
            if op.direction.is_some() || op.priors.is_some() {
                bail!("entropic operator takes no direction or priors");
            }
            let gamma = op.gamma.context("entropic operator needs gamma")?;
            Ok(EvaluationOperator::entropic(tree, gamma)?)
        }
        "multiprior" => {
            if op.gamma.is_some() {
                bail!("multiprior operator takes no gamma");
            }
            let direction = match op.direction.as_deref() {
                Some("inf") => Direction::Inf,
                Some("sup") => Direction::Sup,
                Some(other) => bail!("unknown direction {other:?} (expected \"inf\" or \"sup\")"),
                None => bail!("multiprior operator needs a direction"),
            };
            let raw = op
                .priors
                .as_ref()
                .context("multiprior operator needs priors")?;
            let priors: BTreeMap<NodeId, Vec<Vec<f64>>> =
                raw.iter().map(|(&k, v)| (NodeId(k), v.clone())).collect();
            Ok(EvaluationOperator::multiprior(tree, &priors, direction)?)
        }
        other => bail!("unknown operator kind {other:?}"),
    }
}

/// Serializes a generated game back into the file model.
pub fn instance_to_file(
    generated: &GeneratedInstance,
    op1: OperatorSpec,
    op2: OperatorSpec,
) -> InstanceFile {
    let instance = &generated.instance;
    let tree = instance.tree();

    let nodes: Vec<NodeFile> = tree
        .node_ids()
        .map(|id| NodeFile {
            id: id.0,
            stage: tree.stage_of(id).unwrap(),
            children: tree
                .children_of(id)
                .unwrap()
                .into_iter()
                .map(|(c, p)| ChildFile { id: c.0, prob: p })
                .collect(),
        })
        .collect();

    let operator_file = |spec: OperatorSpec, priors: &BTreeMap<NodeId, Vec<Vec<f64>>>| match spec {
        OperatorSpec::Linear => OperatorFile {
            kind: "linear".into(),
            gamma: None,
            direction: None,
            priors: None,
        },
        OperatorSpec::Entropic { gamma } => OperatorFile {
            kind: "entropic".into(),
            gamma: Some(gamma),
            direction: None,
            priors: None,
        },
        OperatorSpec::MultipriorInf | OperatorSpec::MultipriorSup => OperatorFile {
            kind: "multiprior".into(),
            gamma: None,
            direction: Some(
                if spec == OperatorSpec::MultipriorInf {
                    "inf"
                } else {
                    "sup"
                }
                .into(),
            ),
            priors: Some(priors.iter().map(|(k, v)| (k.0, v.clone())).collect()),
        },
    };

    let payoff_map = |proc: &AdaptedProcess| proc.iter().map(|(id, v)| (id.0, v)).collect();

    InstanceFile {
        tree: TreeFile {
            nodes,
            dates: tree.dates().to_vec(),
        },
        schedule: ScheduleFile::Named("all-stages".into()),
        operators: OperatorsFile {
            agent1: operator_file(op1, &generated.priors1),
            agent2: operator_file(op2, &generated.priors2),
        },
        payoffs: PayoffsFile {
            x1: payoff_map(instance.stopper_payoff(dynkin_core::Agent::One)),
            y1: payoff_map(instance.waiter_payoff(dynkin_core::Agent::One)),
            x2: payoff_map(instance.stopper_payoff(dynkin_core::Agent::Two)),
            y2: payoff_map(instance.waiter_payoff(dynkin_core::Agent::Two)),
        },
        config: None,
    }
}
