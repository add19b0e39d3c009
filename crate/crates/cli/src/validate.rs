//! `validate` and `replay`.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stratnet::validation::{run_instance, summarize, CaseReport, Instance, Mutation};

use crate::CliError;

/// A failing case as written to disk: the instance and what it produced.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureRecord {
    pub instance: Instance,
    pub outcomes: Vec<RecordedOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordedOutcome {
    pub property: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn recorded(report: &CaseReport) -> Vec<RecordedOutcome> {
    report
        .outcomes
        .iter()
        .map(|o| RecordedOutcome {
            property: o.property.to_string(),
            passed: o.passed,
            detail: o.detail.clone(),
        })
        .collect()
}

pub fn run(seed: u64, cases: u64, failures: &Path, mutate: Option<&str>) -> Result<(), CliError> {
    if cases == 0 {
        return Err(CliError::Config("--cases must be at least 1".into()));
    }
    let mutation = match mutate {
        None => None,
        Some(name) => {
            Some(Mutation::parse(name).ok_or_else(|| CliError::Config(format!("unknown mutation {name:?}")))?)
        }
    };
    let results: Vec<(Instance, CaseReport)> = (0..cases)
        .into_par_iter()
        .map(|case| {
            let instance = Instance::generate(seed, case).with_mutation(mutation);
            let report = run_instance(&instance);
            (instance, report)
        })
        .collect();
    let reports: Vec<CaseReport> = results.iter().map(|(_, r)| r.clone()).collect();

    println!(
        "seed {seed}, {cases} cases{}",
        mutation.map_or(String::new(), |m| format!(", mutation {}", m.name()))
    );
    println!("{:<30} {:>5} {:>5}  result", "property", "pass", "fail");
    let summary = summarize(&reports);
    for s in &summary {
        println!(
            "{:<30} {:>5} {:>5}  {}",
            s.property,
            s.passed,
            s.failed,
            if s.failed == 0 { "PASS" } else { "FAIL" }
        );
    }
    let failed: Vec<&(Instance, CaseReport)> = results.iter().filter(|(_, r)| !r.passed()).collect();
    if failed.is_empty() {
        println!("all {cases} cases passed");
        return Ok(());
    }
    for s in summary.iter().filter(|s| s.failed > 0) {
        if let Some((case, detail)) = &s.first_failure {
            println!("{} first fails at seed {seed} case {case}: {detail}", s.property);
        }
    }
    std::fs::create_dir_all(failures)?;
    for (instance, report) in &failed {
        let path = failures.join(format!("seed-{}-case-{}.json", instance.seed, instance.case));
        let record = FailureRecord {
            instance: instance.clone(),
            outcomes: recorded(report),
        };
        std::fs::write(&path, crate::output::to_json(&record)? + "\n")?;
    }
    println!("{} failing instances written to {}", failed.len(), failures.display());
    Err(CliError::Validation(format!(
        "{} of {cases} cases failed",
        failed.len()
    )))
}

pub fn replay(path: &Path) -> Result<(), CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let record: FailureRecord =
        serde_path_to_error::deserialize(de).map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
    let report = run_instance(&record.instance);
    let outcomes = recorded(&report);
    for o in &outcomes {
        match &o.detail {
            Some(d) => println!("{:<30} FAIL  {d}", o.property),
            None => println!("{:<30} PASS", o.property),
        }
    }
    let reproduced = outcomes == record.outcomes;
    println!("reproduced: {reproduced}");
    if !reproduced {
        return Err(CliError::Validation("replay differs from the recorded outcomes".into()));
    }
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "seed {} case {} fails {} properties",
            report.seed,
            report.case,
            report.failures().count()
        )))
    }
}
