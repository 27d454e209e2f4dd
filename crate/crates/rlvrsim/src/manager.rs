//! Multi-task manager: per-task versioned policy records, the global FIFO
//! trajectory buffer, and the checkout/commit protocol that keeps every task
//! strictly on-policy.

use std::collections::VecDeque;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ManagerError {
    #[error("task {0} already registered")]
    DuplicateTask(usize),
    #[error("unknown task {0}")]
    UnknownTask(usize),
    #[error("stale trajectory for task {task}: batch version {batch_version} < latest {latest}")]
    StalenessViolation {
        task: usize,
        batch_version: u64,
        latest: u64,
    },
    #[error("version gap for task {task}: committing {attempted}, latest is {latest}")]
    VersionGap {
        task: usize,
        attempted: u64,
        latest: u64,
    },
    #[error("duplicate trajectory for task {task} version {version}")]
    DuplicateTrajectory { task: usize, version: u64 },
}

/// Opaque stand-in for adapter weights / optimizer state: a version-stamped
/// checksum rather than tensors, enough for tests to detect version mixing.
pub fn descriptor_checksum(task: usize, version: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in task
        .to_le_bytes()
        .into_iter()
        .chain(version.to_le_bytes())
        .chain(tag.bytes())
    {
        h ^= b as u64;
        h = h.wrapping_mul(0x1000_0000_01b3);
    }
    h
}

/// One committed policy version for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyRecord {
    pub task: usize,
    pub version: u64,
    pub theta_checksum: u64,
    pub phi_checksum: u64,
    pub committed_at: f64,
    pub consumed_by_rollout: bool,
}

/// A finished rollout batch travelling through the FIFO buffer, tagged with
/// the exact policy version that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch {
    pub task: usize,
    pub version: u64,
    pub token_count: f64,
    pub generated_at: f64,
    pub episode_structure: Vec<EpisodeMarker>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpisodeMarker {
    /// Decode segment; tokens for token-denominated tasks, seconds otherwise.
    RolloutSegment(f64),
    ToolCall(f64),
}

#[derive(Debug, Clone, Default)]
struct TaskPolicies {
    records: Vec<PolicyRecord>,
    steps_completed: u64,
    enqueued_versions: Vec<u64>,
}

/// Manager state: policy records per task plus the global trajectory FIFO.
#[derive(Debug, Clone, Default)]
pub struct ManagerState {
    tasks: Vec<Option<TaskPolicies>>,
    q_buffer: VecDeque<TrajectoryBatch>,
}

impl ManagerState {
    pub fn new(task_count: usize) -> Self {
        Self {
            tasks: vec![None; task_count],
            q_buffer: VecDeque::new(),
        }
    }

    fn slot(&self, task: usize) -> Result<&TaskPolicies, ManagerError> {
        self.tasks
            .get(task)
            .and_then(|s| s.as_ref())
            .ok_or(ManagerError::UnknownTask(task))
    }

    fn slot_mut(&mut self, task: usize) -> Result<&mut TaskPolicies, ManagerError> {
        self.tasks
            .get_mut(task)
            .and_then(|s| s.as_mut())
            .ok_or(ManagerError::UnknownTask(task))
    }

    /// Register a task, creating its version-0 policy record.
    pub fn init_task(&mut self, task: usize, now: f64) -> Result<(), ManagerError> {
        if task >= self.tasks.len() {
            self.tasks.resize(task + 1, None);
        }
        if self.tasks[task].is_some() {
            return Err(ManagerError::DuplicateTask(task));
        }
        self.tasks[task] = Some(TaskPolicies {
            records: vec![PolicyRecord {
                task,
                version: 0,
                theta_checksum: descriptor_checksum(task, 0, "theta"),
                phi_checksum: descriptor_checksum(task, 0, "phi"),
                committed_at: now,
                consumed_by_rollout: false,
            }],
            steps_completed: 0,
            enqueued_versions: Vec::new(),
        });
        Ok(())
    }

    /// Latest committed, not-yet-consumed policy, marked consumed on return.
    ///
    /// Returns `None` when the latest version has already been checked out;
    /// the rollout engine must then wait for the next commit.
    pub fn next_policy(&mut self, task: usize) -> Result<Option<PolicyRecord>, ManagerError> {
        let slot = self.slot_mut(task)?;
        let latest = slot.records.last_mut().expect("at least version 0");
        if latest.consumed_by_rollout {
            return Ok(None);
        }
        latest.consumed_by_rollout = true;
        Ok(Some(latest.clone()))
    }

    /// Latest committed version number.
    pub fn latest_version(&self, task: usize) -> Result<u64, ManagerError> {
        Ok(self.slot(task)?.records.last().expect("nonempty").version)
    }

    pub fn steps_completed(&self, task: usize) -> Result<u64, ManagerError> {
        Ok(self.slot(task)?.steps_completed)
    }

    /// Append a finished trajectory at the FIFO tail.
    pub fn enqueue_trajectory(&mut self, batch: TrajectoryBatch) -> Result<(), ManagerError> {
        let slot = self.slot(batch.task)?;
        let latest = slot.records.last().expect("nonempty");
        if batch.version < latest.version && latest.consumed_by_rollout {
            return Err(ManagerError::StalenessViolation {
                task: batch.task,
                batch_version: batch.version,
                latest: latest.version,
            });
        }
        if slot.enqueued_versions.contains(&batch.version) {
            return Err(ManagerError::DuplicateTrajectory {
                task: batch.task,
                version: batch.version,
            });
        }
        let task = batch.task;
        let version = batch.version;
        self.q_buffer.push_back(batch);
        self.slot_mut(task)?.enqueued_versions.push(version);
        Ok(())
    }

    /// Pop the FIFO head for training.
    pub fn pop_trajectory(&mut self) -> Option<TrajectoryBatch> {
        self.q_buffer.pop_front()
    }

    pub fn buffer_len(&self) -> usize {
        self.q_buffer.len()
    }

    pub fn peek_buffer(&self) -> Option<&TrajectoryBatch> {
        self.q_buffer.front()
    }

    /// Commit the next policy version after training on `trained_version`.
    pub fn commit_policy(
        &mut self,
        task: usize,
        trained_version: u64,
        now: f64,
    ) -> Result<PolicyRecord, ManagerError> {
        let slot = self.slot_mut(task)?;
        let latest = slot.records.last().expect("nonempty").version;
        let new_version = trained_version + 1;
        if new_version != latest + 1 {
            return Err(ManagerError::VersionGap {
                task,
                attempted: new_version,
                latest,
            });
        }
        let record = PolicyRecord {
            task,
            version: new_version,
            theta_checksum: descriptor_checksum(task, new_version, "theta"),
            phi_checksum: descriptor_checksum(task, new_version, "phi"),
            committed_at: now,
            consumed_by_rollout: false,
        };
        slot.records.push(record.clone());
        slot.steps_completed += 1;
        Ok(record)
    }

    pub fn records(&self, task: usize) -> Result<&[PolicyRecord], ManagerError> {
        Ok(&self.slot(task)?.records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch(task: usize, version: u64, at: f64) -> TrajectoryBatch {
        TrajectoryBatch {
            task,
            version,
            token_count: 100.0,
            generated_at: at,
            episode_structure: vec![EpisodeMarker::RolloutSegment(100.0)],
        }
    }

    #[test]
    fn init_gives_version_zero() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        let p = m.next_policy(0).unwrap().unwrap();
        assert_eq!(p.version, 0);
    }

    #[test]
    fn init_twice_is_duplicate() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        assert_eq!(m.init_task(0, 1.0), Err(ManagerError::DuplicateTask(0)));
    }

    #[test]
    fn init_records_submit_time() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 5.0).unwrap();
        assert_eq!(m.records(0).unwrap()[0].committed_at, 5.0);
    }

    #[test]
    fn next_policy_single_consumption() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        assert!(m.next_policy(0).unwrap().is_some());
        assert!(m.next_policy(0).unwrap().is_none());
    }

    #[test]
    fn next_policy_after_commit_returns_new_version() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        let v0 = m.next_policy(0).unwrap().unwrap();
        assert_eq!(v0.version, 0);
        m.commit_policy(0, 0, 1.0).unwrap();
        let v1 = m.next_policy(0).unwrap().unwrap();
        assert_eq!(v1.version, 1);
    }

    #[test]
    fn unconsumed_intermediate_version_is_skipped() {
        // Commit v1 while v0 was never checked out: next_policy returns the
        // latest (v1); v0 can never be consumed afterwards.
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        m.commit_policy(0, 0, 1.0).unwrap();
        let p = m.next_policy(0).unwrap().unwrap();
        assert_eq!(p.version, 1);
        assert!(!m.records(0).unwrap()[0].consumed_by_rollout);
        assert!(m.next_policy(0).unwrap().is_none());
    }

    #[test]
    fn unknown_task_errors() {
        let mut m = ManagerState::new(1);
        assert_eq!(m.next_policy(0), Err(ManagerError::UnknownTask(0)));
    }

    #[test]
    fn enqueue_matching_version_ok() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        m.next_policy(0).unwrap();
        m.enqueue_trajectory(batch(0, 0, 10.0)).unwrap();
        assert_eq!(m.buffer_len(), 1);
    }

    #[test]
    fn stale_version_rejected() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        m.next_policy(0).unwrap();
        m.commit_policy(0, 0, 1.0).unwrap();
        m.next_policy(0).unwrap(); // v1 checked out
        let err = m.enqueue_trajectory(batch(0, 0, 2.0)).unwrap_err();
        assert!(matches!(err, ManagerError::StalenessViolation { .. }));
    }

    #[test]
    fn fifo_order_is_enqueue_order() {
        let mut m = ManagerState::new(2);
        m.init_task(0, 0.0).unwrap();
        m.init_task(1, 0.0).unwrap();
        m.next_policy(0).unwrap();
        m.next_policy(1).unwrap();
        m.enqueue_trajectory(batch(0, 0, 10.0)).unwrap();
        m.enqueue_trajectory(batch(1, 0, 12.0)).unwrap();
        assert_eq!(m.pop_trajectory().unwrap().task, 0);
        assert_eq!(m.pop_trajectory().unwrap().task, 1);
    }

    #[test]
    fn version_gap_rejected() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        m.next_policy(0).unwrap();
        m.commit_policy(0, 0, 1.0).unwrap();
        // latest is v1; training claims it ran on v2 -> committing v3 gaps.
        let err = m.commit_policy(0, 2, 2.0).unwrap_err();
        assert!(matches!(err, ManagerError::VersionGap { .. }));
    }

    #[test]
    fn steps_completed_counts_commits() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        for v in 0..4 {
            m.next_policy(0).unwrap();
            m.commit_policy(0, v, v as f64 + 1.0).unwrap();
        }
        assert_eq!(m.steps_completed(0).unwrap(), 4);
    }

    #[test]
    fn committed_at_strictly_increases() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        for v in 0..5 {
            m.next_policy(0).unwrap();
            m.commit_policy(0, v, (v + 1) as f64).unwrap();
        }
        let times: Vec<f64> = m
            .records(0)
            .unwrap()
            .iter()
            .map(|r| r.committed_at)
            .collect();
        assert!(times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn duplicate_trajectory_per_version_rejected() {
        let mut m = ManagerState::new(1);
        m.init_task(0, 0.0).unwrap();
        m.next_policy(0).unwrap();
        m.enqueue_trajectory(batch(0, 0, 1.0)).unwrap();
        let err = m.enqueue_trajectory(batch(0, 0, 2.0)).unwrap_err();
        assert!(matches!(err, ManagerError::DuplicateTrajectory { .. }));
    }

    #[test]
    fn checksums_distinguish_versions_and_tasks() {
        let a = descriptor_checksum(0, 0, "theta");
        assert_ne!(a, descriptor_checksum(0, 1, "theta"));
        assert_ne!(a, descriptor_checksum(1, 0, "theta"));
        assert_ne!(a, descriptor_checksum(0, 0, "phi"));
    }
}
