//! Scheduling policies: the asynchronous multi-tenant scheduler, its two
//! ablations, the three baseline regimes, and KV-cache-aware admission.

mod marlaas;
mod sequential;
mod sync_rounds;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    /// Asynchronous multi-LoRA rollout with serialized single-task training.
    Marlaas,
    /// Tasks one at a time on split rollout/train pools.
    SingleDisaggregated,
    /// Tasks one at a time on one shared pool, phases scaled to the full
    /// device count.
    SingleCollocated,
    /// Concurrent rollouts behind a global synchronization barrier.
    MultiLoraSync,
}

impl SchedulerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SchedulerKind::Marlaas => "marlaas",
            SchedulerKind::SingleDisaggregated => "single_disaggregated",
            SchedulerKind::SingleCollocated => "single_collocated",
            SchedulerKind::MultiLoraSync => "multi_lora_sync",
        }
    }

    pub const ALL: [SchedulerKind; 4] = [
        SchedulerKind::Marlaas,
        SchedulerKind::SingleDisaggregated,
        SchedulerKind::SingleCollocated,
        SchedulerKind::MultiLoraSync,
    ];
}

impl std::str::FromStr for SchedulerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "marlaas" => Ok(SchedulerKind::Marlaas),
            "single_disaggregated" => Ok(SchedulerKind::SingleDisaggregated),
            "single_collocated" => Ok(SchedulerKind::SingleCollocated),
            "multi_lora_sync" => Ok(SchedulerKind::MultiLoraSync),
            other => Err(format!(
                "unknown scheduler '{other}' (expected marlaas, single_disaggregated, \
                 single_collocated, or multi_lora_sync)"
            )),
        }
    }
}

impl std::fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scheduler selection plus ablation switches from the `[scheduler]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerChoice {
    pub kind: SchedulerKind,
    /// Reintroduce the global barrier before training (the "w/o async"
    /// ablation; behaviourally identical to `multi_lora_sync`).
    #[serde(default)]
    pub disable_async: bool,
    /// Serialize rollouts to one task at a time while keeping training
    /// asynchronous (the "w/o multi-LoRA" ablation).
    #[serde(default)]
    pub disable_multi_lora: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kv_budget_override: Option<u64>,
}

impl SchedulerChoice {
    pub fn new(kind: SchedulerKind) -> Self {
        Self {
            kind,
            disable_async: false,
            disable_multi_lora: false,
            kv_budget_override: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if (self.disable_async || self.disable_multi_lora) && self.kind != SchedulerKind::Marlaas {
            return Err("ablation flags apply only to the marlaas scheduler".into());
        }
        if self.disable_async && self.disable_multi_lora {
            return Err("disable_async and disable_multi_lora cannot be combined".into());
        }
        if let Some(b) = self.kv_budget_override {
            if b == 0 {
                return Err("kv_budget_override must be positive".into());
            }
        }
        Ok(())
    }

    /// Human-readable label including ablations, used in report rows and
    /// artifact paths.
    pub fn label(&self) -> String {
        let mut s = self.kind.as_str().to_string();
        if self.disable_async {
            s.push_str("+no_async");
        }
        if self.disable_multi_lora {
            s.push_str("+no_multi_lora");
        }
        s
    }
}

// ---------------------------------------------------------------------------
// KV-cache-aware admission
// ---------------------------------------------------------------------------

#[derive(Debug, Error, PartialEq)]
pub enum AdmissionError {
    #[error("task {task} KV footprint {footprint} exceeds budget {budget} even alone")]
    TaskTooLarge {
        task: usize,
        footprint: u64,
        budget: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdmitOutcome {
    Admitted,
    Queued,
}

/// Tracks which tasks currently hold KV-cache capacity and which wait in a
/// FIFO pending queue.
#[derive(Debug, Clone, Default)]
pub struct AdmissionState {
    admitted: Vec<usize>,
    pending: Vec<usize>,
    current_kv_usage: u64,
}

impl AdmissionState {
    pub fn admitted(&self) -> &[usize] {
        &self.admitted
    }

    pub fn pending(&self) -> &[usize] {
        &self.pending
    }

    pub fn current_kv_usage(&self) -> u64 {
        self.current_kv_usage
    }

    /// Admit `task` if its footprint fits under `budget`, otherwise queue it.
    pub fn admit(
        &mut self,
        task: usize,
        footprint: u64,
        budget: u64,
    ) -> Result<AdmitOutcome, AdmissionError> {
        if footprint > budget {
            return Err(AdmissionError::TaskTooLarge {
                task,
                footprint,
                budget,
            });
        }
        if self.current_kv_usage + footprint <= budget {
            self.admitted.push(task);
            self.current_kv_usage += footprint;
            Ok(AdmitOutcome::Admitted)
        } else {
            self.pending.push(task);
            Ok(AdmitOutcome::Queued)
        }
    }

    /// Release a completed task's capacity and rescan the pending queue in
    /// FIFO order, stopping at the first task that still does not fit.
    /// Returns the newly admitted tasks in admission order.
    pub fn release_and_rescan(
        &mut self,
        task: usize,
        footprints: &[u64],
        budget: u64,
    ) -> Vec<usize> {
        if let Some(pos) = self.admitted.iter().position(|&t| t == task) {
            self.admitted.remove(pos);
            self.current_kv_usage -= footprints[task];
        }
        let mut newly = Vec::new();
        while let Some(&head) = self.pending.first() {
            let fp = footprints[head];
            if self.current_kv_usage + fp > budget {
                break;
            }
            self.pending.remove(0);
            self.admitted.push(head);
            self.current_kv_usage += fp;
            newly.push(head);
        }
        newly
    }
}

// ---------------------------------------------------------------------------
// Scheduler dispatch
// ---------------------------------------------------------------------------

/// A scheduling policy driven by engine events. All four regimes (plus the
/// marlaas ablations) are pure state machines over the single-threaded event
/// loop.
#[derive(Debug)]
pub enum SchedulerState {
    MarlaasAsync(marlaas::AsyncSched),
    MarlaasBarrier(marlaas::BarrierSched),
    Sequential(sequential::Sequential),
    SyncRounds(sync_rounds::SyncRounds),
}

impl SchedulerState {
    pub fn new(choice: &SchedulerChoice) -> Self {
        match choice.kind {
            SchedulerKind::Marlaas => {
                if choice.disable_async {
                    SchedulerState::MarlaasBarrier(marlaas::BarrierSched::default())
                } else {
                    SchedulerState::MarlaasAsync(marlaas::AsyncSched::new(
                        !choice.disable_multi_lora,
                    ))
                }
            }
            SchedulerKind::SingleDisaggregated | SchedulerKind::SingleCollocated => {
                SchedulerState::Sequential(sequential::Sequential::default())
            }
            SchedulerKind::MultiLoraSync => {
                SchedulerState::SyncRounds(sync_rounds::SyncRounds::default())
            }
        }
    }

    pub(crate) fn on_task_submitted(
        &mut self,
        sim: &mut Sim,
        task: usize,
    ) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(s) => s.on_task_submitted(sim, task),
            SchedulerState::MarlaasBarrier(s) => s.on_task_submitted(sim, task),
            SchedulerState::Sequential(s) => s.on_task_submitted(sim, task),
            SchedulerState::SyncRounds(s) => s.on_task_submitted(sim, task),
        }
    }

    pub(crate) fn on_trajectory_ready(
        &mut self,
        sim: &mut Sim,
        task: usize,
        version: u64,
    ) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(s) => s.on_trajectory_ready(sim, task, version),
            SchedulerState::MarlaasBarrier(s) => s.on_trajectory_ready(sim, task, version),
            SchedulerState::Sequential(s) => s.on_trajectory_ready(sim, task, version),
            SchedulerState::SyncRounds(s) => s.on_trajectory_ready(sim, task, version),
        }
    }

    pub(crate) fn on_train_done(
        &mut self,
        sim: &mut Sim,
        task: usize,
        version: u64,
    ) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(s) => s.on_train_done(sim, task, version),
            SchedulerState::MarlaasBarrier(s) => s.on_train_done(sim, task, version),
            SchedulerState::Sequential(s) => s.on_train_done(sim, task, version),
            SchedulerState::SyncRounds(s) => s.on_train_done(sim, task, version),
        }
    }

    pub(crate) fn on_policy_committed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        version: u64,
    ) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(s) => s.on_policy_committed(sim, task, version),
            SchedulerState::MarlaasBarrier(s) => s.on_policy_committed(sim, task, version),
            SchedulerState::Sequential(s) => s.on_policy_committed(sim, task, version),
            SchedulerState::SyncRounds(s) => s.on_policy_committed(sim, task, version),
        }
    }

    pub(crate) fn on_task_completed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        newly_admitted: Vec<usize>,
    ) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(s) => s.on_task_completed(sim, task, newly_admitted),
            SchedulerState::MarlaasBarrier(s) => s.on_task_completed(sim, task, newly_admitted),
            SchedulerState::Sequential(s) => s.on_task_completed(sim, task, newly_admitted),
            SchedulerState::SyncRounds(s) => s.on_task_completed(sim, task, newly_admitted),
        }
    }

    pub(crate) fn on_wake(&mut self, sim: &mut Sim) -> Result<(), crate::engine::SimError> {
        match self {
            SchedulerState::MarlaasAsync(_) | SchedulerState::Sequential(_) => Ok(()),
            SchedulerState::MarlaasBarrier(s) => s.on_wake(sim),
            SchedulerState::SyncRounds(s) => s.on_wake(sim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GIB: u64 = 1 << 30;

    #[test]
    fn admit_within_budget() {
        let mut st = AdmissionState::default();
        let out = st.admit(0, 7 * GIB, 8 * GIB).unwrap();
        assert_eq!(out, AdmitOutcome::Admitted);
        assert_eq!(st.current_kv_usage(), 7 * GIB);
    }

    #[test]
    fn second_identical_task_queues() {
        let mut st = AdmissionState::default();
        st.admit(0, 7 * GIB, 8 * GIB).unwrap();
        let out = st.admit(1, 7 * GIB, 8 * GIB).unwrap();
        assert_eq!(out, AdmitOutcome::Queued);
        assert_eq!(st.pending(), &[1]);
    }

    #[test]
    fn oversized_task_rejected_outright() {
        let mut st = AdmissionState::default();
        let err = st.admit(0, 9 * GIB, 8 * GIB).unwrap_err();
        assert!(matches!(err, AdmissionError::TaskTooLarge { .. }));
    }

    #[test]
    fn release_rescans_fifo() {
        let fps = vec![5 * GIB, 4 * GIB, 3 * GIB, GIB];
        let budget = 8 * GIB;
        let mut st = AdmissionState::default();
        assert_eq!(st.admit(0, fps[0], budget).unwrap(), AdmitOutcome::Admitted);
        assert_eq!(st.admit(1, fps[1], budget).unwrap(), AdmitOutcome::Queued);
        assert_eq!(st.admit(2, fps[2], budget).unwrap(), AdmitOutcome::Admitted);
        assert_eq!(st.admit(3, fps[3], budget).unwrap(), AdmitOutcome::Queued);

        // Task 0 leaves: head of pending (task 1, 4 GiB) now fits next to
        // task 2 (3 GiB); task 3 fits after it.
        let newly = st.release_and_rescan(0, &fps, budget);
        assert_eq!(newly, vec![1, 3]);
        assert_eq!(st.current_kv_usage(), 8 * GIB);
    }

    #[test]
    fn rescan_respects_fifo_head_blocking() {
        let fps = vec![6 * GIB, 8 * GIB, GIB];
        let budget = 8 * GIB;
        let mut st = AdmissionState::default();
        st.admit(0, fps[0], budget).unwrap();
        st.admit(1, fps[1], budget).unwrap();
        st.admit(2, fps[2], budget).unwrap();
        assert_eq!(st.pending(), &[1]);
        assert_eq!(st.admitted(), &[0, 2]);

        // The 8 GiB head still does not fit beside task 2; nothing admitted.
        let newly = st.release_and_rescan(0, &fps, budget);
        assert!(newly.is_empty());
        assert_eq!(st.pending(), &[1]);
    }

    #[test]
    fn scheduler_kind_round_trips() {
        for kind in SchedulerKind::ALL {
            assert_eq!(kind.as_str().parse::<SchedulerKind>().unwrap(), kind);
        }
    }

    #[test]
    fn combined_ablations_rejected() {
        let mut c = SchedulerChoice::new(SchedulerKind::Marlaas);
        c.disable_async = true;
        c.disable_multi_lora = true;
        assert!(c.validate().is_err());
    }
}
