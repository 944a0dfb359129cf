//! Machine-readable JSON reports. Solve reports embed the full instance so
//! that `verify` can re-derive every claim from the report alone; nothing
//! environment-dependent (paths, times) is ever written, so identical
//! inputs yield byte-identical reports.

use serde::{Deserialize, Serialize};

use dynkin_core::{
    Agent, AxiomReport, BermudanStoppingTime, EquilibriumResult, InvariantReport, NashReport,
    SolveConfig,
};

use crate::instance::InstanceFile;

pub const SOLVE_FORMAT: &str = "dynkin-solve-report";
pub const VERIFY_FORMAT: &str = "dynkin-verify-report";
pub const AXIOMS_FORMAT: &str = "dynkin-axioms-report";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReportFile {
    pub format: String,
    pub instance: InstanceFile,
    pub config: ConfigEcho,
    pub equilibrium: EquilibriumFile,
    pub trace: Vec<TraceRowFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub tol_eq: f64,
    pub max_iter: Option<usize>,
    pub enum_limit: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriumFile {
    pub tau1_star: Vec<u32>,
    pub tau2_star: Vec<u32>,
    pub j1: f64,
    pub j2: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRowFile {
    pub n: usize,
    pub agent: u8,
    pub minimal_stop: Vec<u32>,
    pub iterate: Vec<u32>,
    pub value0: Option<f64>,
}

fn stop_ids(tau: &BermudanStoppingTime) -> Vec<u32> {
    tau.stops().iter().map(|id| id.0).collect()
}

pub fn solve_report(
    file: &InstanceFile,
    cfg: &SolveConfig,
    result: &EquilibriumResult,
) -> SolveReportFile {
    SolveReportFile {
        format: SOLVE_FORMAT.to_string(),
        instance: file.clone(),
        config: ConfigEcho {
            tol_eq: cfg.tol_eq,
            max_iter: cfg.max_iter,
            enum_limit: cfg.enum_limit,
        },
        equilibrium: EquilibriumFile {
            tau1_star: stop_ids(&result.tau1),
            tau2_star: stop_ids(&result.tau2),
            j1: result.assessment1,
            j2: result.assessment2,
            iterations: result.iterations,
            converged: result.converged,
        },
        trace: result
            .trace
            .iter()
            .map(|row| TraceRowFile {
                n: row.n,
                agent: match row.agent {
                    Agent::One => 1,
                    Agent::Two => 2,
                },
                minimal_stop: stop_ids(&row.minimal_stop),
                iterate: stop_ids(&row.iterate),
                value0: row.value0,
            })
            .collect(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReportFile {
    pub format: String,
    pub passed: bool,
    pub nash: NashFile,
    pub invariants: InvariantsFile,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NashFile {
    pub j1: f64,
    pub j2: f64,
    pub agent1: DeviationFile,
    pub agent2: DeviationFile,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviationFile {
    pub candidates: usize,
    pub best_gain: f64,
    pub best_value: f64,
    pub best_deviation: Vec<u32>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvariantsFile {
    pub checks: Vec<CheckFile>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckFile {
    pub name: String,
    pub passed: bool,
    pub detail: Option<String>,
}

pub fn verify_report(nash: &NashReport, invariants: &InvariantReport) -> VerifyReportFile {
    let deviation = |d: &dynkin_core::DeviationSummary| DeviationFile {
        candidates: d.candidates,
        best_gain: d.best_gain,
        best_value: d.best_value,
        best_deviation: stop_ids(&d.best_deviation),
        passed: d.passed,
    };
    VerifyReportFile {
        format: VERIFY_FORMAT.to_string(),
        passed: nash.passed && invariants.passed,
        nash: NashFile {
            j1: nash.assessment1,
            j2: nash.assessment2,
            agent1: deviation(&nash.agent1),
            agent2: deviation(&nash.agent2),
            passed: nash.passed,
        },
        invariants: InvariantsFile {
            checks: invariants
                .checks
                .iter()
                .map(|c| CheckFile {
                    name: c.name.to_string(),
                    passed: c.passed,
                    detail: c.detail.clone(),
                })
                .collect(),
            passed: invariants.passed,
        },
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomsReportFile {
    pub format: String,
    pub trials: usize,
    pub seed: u64,
    pub reports: Vec<AxiomEntryFile>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomEntryFile {
    pub operator: String,
    pub checks: Vec<AxiomCheckFile>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxiomCheckFile {
    pub name: String,
    pub passed: bool,
    pub counterexample: Option<CounterexampleFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleFile {
    pub trial: usize,
    pub node: u32,
    pub violation: String,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn axioms_report(trials: usize, seed: u64, reports: &[AxiomReport]) -> AxiomsReportFile {
    AxiomsReportFile {
        format: AXIOMS_FORMAT.to_string(),
        trials,
        seed,
        reports: reports
            .iter()
            .map(|r| AxiomEntryFile {
                operator: r.operator.to_string(),
                checks: r
                    .checks
                    .iter()
                    .map(|c| AxiomCheckFile {
                        name: c.name.clone(),
                        passed: c.passed,
                        counterexample: c.counterexample.as_ref().map(|x| CounterexampleFile {
                            trial: x.trial,
                            node: x.node.0,
                            violation: x.violation.clone(),
                            lhs: x.lhs,
                            rhs: x.rhs,
                        }),
                    })
                    .collect(),
                passed: r.passed,
            })
            .collect(),
        passed: reports.iter().all(|r| r.passed),
    }
}
