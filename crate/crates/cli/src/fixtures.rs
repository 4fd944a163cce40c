//! Scenario and parameter fixtures for the validation suite.
//!
//! The built-in set is compiled in from `fixtures/`; `--fixtures DIR` reads the
//! same layout from disk (`DIR/table.json`, `DIR/scenarios/<name>.json`).

use std::path::Path;

use chaoslink::ExpSumApprox;

use crate::{CliError, ScenarioFile};

/// Test scenarios: (name, file contents).
pub const SCENARIO_NAMES: [&str; 8] = [
    "scenario1_m1",
    "scenario1_m4",
    "scenario2_m1",
    "scenario2_m4",
    "scenario3_m1",
    "scenario3_m4",
    "scenario4_m1",
    "scenario4_m4",
];

const BUILTIN_SCENARIOS: [&str; 8] = [
    include_str!("../fixtures/scenarios/scenario1_m1.json"),
    include_str!("../fixtures/scenarios/scenario1_m4.json"),
    include_str!("../fixtures/scenarios/scenario2_m1.json"),
    include_str!("../fixtures/scenarios/scenario2_m4.json"),
    include_str!("../fixtures/scenarios/scenario3_m1.json"),
    include_str!("../fixtures/scenarios/scenario3_m4.json"),
    include_str!("../fixtures/scenarios/scenario4_m1.json"),
    include_str!("../fixtures/scenarios/scenario4_m4.json"),
];

const BUILTIN_TABLE: &str = include_str!("../fixtures/table.json");

#[derive(Debug, Clone)]
pub struct FixtureSet {
    /// Four-term approximations for `M = 32`, one per noise shape.
    pub table: Vec<ExpSumApprox>,
    pub scenarios: Vec<(String, ScenarioFile)>,
}

impl FixtureSet {
    pub fn builtin() -> Self {
        Self::from_texts(BUILTIN_TABLE, BUILTIN_SCENARIOS.iter().copied()).expect("built-in fixtures are valid")
    }

    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read fixture {}: {e}", p.display())))
        };
        let table = read(&dir.join("table.json"))?;
        let scenarios = SCENARIO_NAMES
            .iter()
            .map(|n| read(&dir.join("scenarios").join(format!("{n}.json"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_texts(&table, scenarios.iter().map(String::as_str))
    }

    fn from_texts<'a>(table: &str, scenarios: impl Iterator<Item = &'a str>) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(table);
        let table: Vec<ExpSumApprox> = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Usage(format!("fixture table.json field `{}`: {}", e.path(), e.inner())))?;
        let scenarios = SCENARIO_NAMES
            .iter()
            .zip(scenarios)
            .map(|(n, t)| {
                let f = ScenarioFile::parse(t).map_err(|e| CliError::Usage(format!("fixture {n}: {e}")))?;
                f.scenario()?;
                Ok((n.to_string(), f))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(Self { table, scenarios })
    }

    /// Table row for noise shape `a`.
    pub fn row(&self, a: f64) -> Result<&ExpSumApprox, CliError> {
        self.table
            .iter()
            .find(|r| r.noise_a() == a)
            .ok_or_else(|| CliError::Usage(format!("fixture table has no row for a = {a}")))
    }
}
