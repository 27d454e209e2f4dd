//! Scenario configuration: a TOML document with `[sim]`, `[cluster]`,
//! `[scheduler]`, `[[model_profile]]`, and `[[task]]` sections.
//!
//! All durations are seconds, lengths are tokens, memory is bytes. Unknown
//! keys are rejected. Each task expresses rollout cost either in decode
//! tokens (`rollout_tokens`, contends for pool throughput) or in wall-clock
//! seconds (`rollout_seconds`, replays a measured latency).

use serde::Deserialize;
use thiserror::Error;

use crate::cluster::{ClusterSpec, CollocationMode};
use crate::rng::derive_stream_id;
use crate::sched::{SchedulerChoice, SchedulerKind};
use crate::workload::{LatencyModel, ModelProfile, RolloutCost, TaskSpec};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("scenario validation error: {0}")]
    Validation(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimSection {
    #[serde(default)]
    name: Option<String>,
    seed: u64,
    #[serde(default)]
    horizon_seconds: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    task_id: String,
    #[serde(default)]
    submit_time: f64,
    total_steps: u64,
    batch_size: u64,
    prompt_len: u64,
    max_gen_len: u64,
    model_profile: String,
    #[serde(default)]
    tool_calls_per_episode: u32,
    #[serde(default)]
    rollout_tokens: Option<LatencyModel>,
    #[serde(default)]
    rollout_seconds: Option<LatencyModel>,
    #[serde(default)]
    tool_latency: Option<LatencyModel>,
    train_latency: LatencyModel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    sim: SimSection,
    cluster: ClusterSpec,
    scheduler: SchedulerChoice,
    #[serde(default, rename = "model_profile")]
    model_profiles: Vec<ModelProfile>,
    #[serde(default, rename = "task")]
    tasks: Vec<TaskDoc>,
}

/// A fully validated scenario ready to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub cluster: ClusterSpec,
    pub scheduler: SchedulerChoice,
    pub profiles: Vec<ModelProfile>,
    pub tasks: Vec<TaskSpec>,
    /// tasks[i] -> index into profiles.
    pub task_profile: Vec<usize>,
}

impl Scenario {
    pub fn profile_of(&self, task: usize) -> &ModelProfile {
        &self.profiles[self.task_profile[task]]
    }

    /// Effective KV budget after any scheduler override.
    pub fn kv_budget(&self) -> u64 {
        self.scheduler
            .kv_budget_override
            .unwrap_or(self.cluster.kv_budget_bytes)
    }

    /// Whether the effective layout is collocated (single shared pool).
    pub fn collocated(&self) -> bool {
        self.scheduler.kind == SchedulerKind::SingleCollocated
    }

    /// Replace the scheduler, revalidating layout consistency.
    pub fn with_scheduler(&self, choice: SchedulerChoice) -> Result<Scenario, ScenarioError> {
        let mut s = self.clone();
        s.scheduler = choice;
        s.validate()?;
        Ok(s)
    }

    pub fn with_seed(&self, seed: u64) -> Scenario {
        let mut s = self.clone();
        s.seed = seed;
        s
    }

    /// Scale the task list to exactly `n` tasks by cycling the existing
    /// tasks as templates. Replicas get distinct ids and fresh rng streams.
    pub fn with_task_count(&self, n: usize) -> Result<Scenario, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::Validation(
                "task_count sweep value must be >= 1".into(),
            ));
        }
        let mut s = self.clone();
        let templates = self.tasks.clone();
        let template_profiles = self.task_profile.clone();
        s.tasks = Vec::with_capacity(n);
        s.task_profile = Vec::with_capacity(n);
        for i in 0..n {
            let mut t = templates[i % templates.len()].clone();
            t.task_id = format!("{}_r{}", t.task_id, i);
            // Drop inherited stream ids so each replica draws independently.
            t.rollout_cost.model_mut().stream = None;
            if let Some(tool) = &mut t.tool_latency {
                tool.stream = None;
            }
            t.train_latency.stream = None;
            assign_streams(&mut t);
            s.task_profile.push(template_profiles[i % templates.len()]);
            s.tasks.push(t);
        }
        s.validate()?;
        Ok(s)
    }

    /// Scale the KV budget (used by budget sweeps).
    pub fn with_kv_budget(&self, bytes: u64) -> Result<Scenario, ScenarioError> {
        let mut s = self.clone();
        s.cluster.kv_budget_bytes = bytes;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let val = |m: String| ScenarioError::Validation(m);
        self.cluster.validate().map_err(val)?;
        self.scheduler.validate().map_err(val)?;
        if self.tasks.is_empty() {
            return Err(val("scenario must define at least one task".into()));
        }
        for p in &self.profiles {
            p.validate().map_err(val)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.tasks {
            if !seen.insert(t.task_id.clone()) {
                return Err(val(format!("duplicate task_id '{}'", t.task_id)));
            }
            t.validate().map_err(val)?;
        }
        if let Some(mode) = self.cluster.collocation_mode {
            let effective = if self.collocated() {
                CollocationMode::Collocated
            } else {
                CollocationMode::Disaggregated
            };
            if mode != effective {
                return Err(val(format!(
                    "cluster collocation_mode {mode:?} contradicts scheduler '{}'",
                    self.scheduler.kind
                )));
            }
        }
        if let Some(h) = self.horizon {
            if h <= 0.0 || !h.is_finite() {
                return Err(val("horizon_seconds must be positive and finite".into()));
            }
        }
        Ok(())
    }
}

fn assign_streams(task: &mut TaskSpec) {
    let id = task.task_id.clone();
    let m = task.rollout_cost.model_mut();
    m.stream = Some(m.stream.unwrap_or_else(|| derive_stream_id(&id, "rollout")));
    if let Some(tool) = &mut task.tool_latency {
        tool.stream = Some(tool.stream.unwrap_or_else(|| derive_stream_id(&id, "tool")));
    }
    let tr = &mut task.train_latency;
    tr.stream = Some(tr.stream.unwrap_or_else(|| derive_stream_id(&id, "train")));
}

/// Parse and validate a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDoc = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;

    let mut tasks = Vec::with_capacity(doc.tasks.len());
    let mut task_profile = Vec::with_capacity(doc.tasks.len());
    for td in doc.tasks {
        let rollout_cost = match (td.rollout_tokens, td.rollout_seconds) {
            (Some(tokens), None) => RolloutCost::Tokens(tokens),
            (None, Some(seconds)) => RolloutCost::Seconds(seconds),
            (None, None) => {
                return Err(ScenarioError::Validation(format!(
                    "task '{}': one of rollout_tokens or rollout_seconds is required",
                    td.task_id
                )))
            }
            (Some(_), Some(_)) => {
                return Err(ScenarioError::Validation(format!(
                    "task '{}': rollout_tokens and rollout_seconds are mutually exclusive",
                    td.task_id
                )))
            }
        };
        let profile_idx = doc
            .model_profiles
            .iter()
            .position(|p| p.name == td.model_profile)
            .ok_or_else(|| {
                ScenarioError::Validation(format!(
                    "task '{}': unknown model_profile '{}'",
                    td.task_id, td.model_profile
                ))
            })?;
        let mut task = TaskSpec {
            task_id: td.task_id,
            submit_time: td.submit_time,
            total_steps: td.total_steps,
            batch_size: td.batch_size,
            prompt_len: td.prompt_len,
            max_gen_len: td.max_gen_len,
            rollout_cost,
            tool_calls_per_episode: td.tool_calls_per_episode,
            tool_latency: td.tool_latency,
            train_latency: td.train_latency,
            model_profile: td.model_profile,
        };
        assign_streams(&mut task);
        task_profile.push(profile_idx);
        tasks.push(task);
    }

    let scenario = Scenario {
        name: doc.sim.name.unwrap_or_else(|| "scenario".into()),
        seed: doc.sim.seed,
        horizon: doc.sim.horizon_seconds,
        cluster: doc.cluster,
        scheduler: doc.scheduler,
        profiles: doc.model_profiles,
        tasks,
        task_profile,
    };
    scenario.validate()?;
    Ok(scenario)
}

// ---------------------------------------------------------------------------
// Bundled scenarios
// ---------------------------------------------------------------------------

pub const BUNDLED: [(&str, &str); 4] = [
    (
        "table1_heterogeneous",
        include_str!("../scenarios/table1_heterogeneous.toml"),
    ),
    (
        "table2_search10",
        include_str!("../scenarios/table2_search10.toml"),
    ),
    (
        "table4_ablation",
        include_str!("../scenarios/table4_ablation.toml"),
    ),
    ("fig6_sweep", include_str!("../scenarios/fig6_sweep.toml")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

pub fn bundled_text(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Load one of the scenarios shipped with the library.
pub fn load_bundled(name: &str) -> Result<Scenario, ScenarioError> {
    let text = bundled_text(name).ok_or_else(|| {
        ScenarioError::Validation(format!(
            "unknown bundled scenario '{name}' (available: {})",
            bundled_names().join(", ")
        ))
    })?;
    let mut s = load_scenario(text)?;
    s.name = name.to_string();
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::LatencyKind;

    const MINIMAL: &str = r#"
[sim]
seed = 7

[cluster]
rollout_devices = 6
train_devices = 2
rollout_pool_token_rate = 1000.0
kv_budget_bytes = 8589934592

[scheduler]
kind = "marlaas"

[[model_profile]]
name = "small"
num_layers = 28
num_kv_heads = 8
head_dim = 128
kv_dtype_bytes = 2
per_batch_peak_decode_rate = 800.0

[[task]]
task_id = "t1"
total_steps = 2
batch_size = 8
prompt_len = 128
max_gen_len = 512
model_profile = "small"
rollout_seconds = { kind = "deterministic", mean = 10.0 }
train_latency = { kind = "deterministic", mean = 1.0 }
"#;

    #[test]
    fn minimal_scenario_loads() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.tasks.len(), 1);
        assert_eq!(s.seed, 7);
        assert_eq!(s.scheduler.kind, SchedulerKind::Marlaas);
        // streams were auto-assigned
        assert!(s.tasks[0].rollout_cost.model().stream.is_some());
    }

    #[test]
    fn empty_task_list_rejected() {
        let text = MINIMAL.split("[[task]]").next().unwrap();
        let err = load_scenario(text).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)), "{err}");
    }

    #[test]
    fn duplicate_task_id_rejected() {
        let dup = format!(
            "{MINIMAL}
[[task]]
task_id = \"t1\"
total_steps = 1
batch_size = 1
prompt_len = 1
max_gen_len = 1
model_profile = \"small\"
rollout_seconds = {{ kind = \"deterministic\", mean = 1.0 }}
train_latency = {{ kind = \"deterministic\", mean = 1.0 }}
"
        );
        let err = load_scenario(&dup).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = MINIMAL.replace("[cluster]", "[cluster]\nbogus_key = 1");
        let err = load_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Parse(_)), "{err}");
    }

    #[test]
    fn rollout_cost_is_exclusive() {
        let text = MINIMAL.replace(
            "rollout_seconds = { kind = \"deterministic\", mean = 10.0 }",
            "rollout_seconds = { kind = \"deterministic\", mean = 10.0 }\nrollout_tokens = { kind = \"deterministic\", mean = 10.0 }",
        );
        assert!(load_scenario(&text).is_err());
    }

    #[test]
    fn bundled_scenarios_all_load() {
        for name in bundled_names() {
            let s = load_bundled(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!s.tasks.is_empty());
        }
    }

    #[test]
    fn table1_matches_measured_means() {
        let s = load_bundled("table1_heterogeneous").unwrap();
        assert_eq!(s.tasks.len(), 3);
        let means: Vec<f64> = s
            .tasks
            .iter()
            .map(|t| match t.rollout_cost.model().kind {
                LatencyKind::Deterministic { mean } => mean,
                _ => panic!("table1 uses deterministic replays"),
            })
            .collect();
        assert_eq!(means, vec![23.45, 27.98, 70.58]);
    }

    #[test]
    fn task_count_replication_renames_and_restreams() {
        let s = load_scenario(MINIMAL).unwrap();
        let s4 = s.with_task_count(4).unwrap();
        assert_eq!(s4.tasks.len(), 4);
        let ids: Vec<&str> = s4.tasks.iter().map(|t| t.task_id.as_str()).collect();
        assert_eq!(ids, vec!["t1_r0", "t1_r1", "t1_r2", "t1_r3"]);
        let streams: std::collections::BTreeSet<u64> = s4
            .tasks
            .iter()
            .map(|t| t.rollout_cost.model().stream.unwrap())
            .collect();
        assert_eq!(streams.len(), 4, "replicas must draw from distinct streams");
    }

    #[test]
    fn contradictory_collocation_mode_rejected() {
        let text = MINIMAL.replace("[cluster]", "[cluster]\ncollocation_mode = \"collocated\"");
        let err = load_scenario(&text).unwrap_err();
        assert!(matches!(err, ScenarioError::Validation(_)));
    }
}
