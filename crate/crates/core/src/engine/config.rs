use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::appraisal::SecConfig;
use crate::planner::PlannerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InferenceConfig {
    pub max_derivations: usize,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig { max_derivations: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeliberationConfig {
    /// Score of the global intention within its band.
    pub global_score: f64,
    /// Deliberative cycles allowed per input, the first one included.
    pub max_cycles: usize,
    /// Replans after a failed step before the intention is given up.
    pub max_replans: usize,
}

impl Default for DeliberationConfig {
    fn default() -> Self {
        DeliberationConfig { global_score: 0.5, max_cycles: 6, max_replans: 2 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    pub sec: SecConfig,
    pub planner: PlannerConfig,
    pub inference: InferenceConfig,
    pub deliberation: DeliberationConfig,
    /// Simulated executor faults: physical action name to the number of
    /// attempts that fail before it succeeds.
    pub faults: BTreeMap<String, u32>,
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<EngineConfig, serde_json::Error> {
        serde_json::from_str(text)
    }
}
