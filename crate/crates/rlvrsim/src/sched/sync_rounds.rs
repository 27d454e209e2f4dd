//! Synchronous multi-LoRA baseline: admitted tasks roll out concurrently,
//! a global barrier waits for the slowest trajectory, training then runs
//! serially over the round's trajectories, and the next round begins once
//! every member has committed.

use crate::engine::{Sim, SimError};
use crate::sched::AdmitOutcome;

#[derive(Debug, Default)]
pub struct SyncRounds {
    /// Tasks eligible for the next round, ordered by when they became
    /// eligible (commit order within a round; admission order otherwise).
    eligible: Vec<usize>,
    round: Vec<usize>,
    ready: usize,
    committed: usize,
    round_active: bool,
    kickoff_pending: bool,
}

impl SyncRounds {
    fn became_eligible(&mut self, sim: &mut Sim, task: usize) -> Result<(), SimError> {
        if sim.completed(task) {
            return Ok(());
        }
        self.eligible.push(task);
        self.maybe_kickoff(sim)
    }

    fn maybe_kickoff(&mut self, sim: &mut Sim) -> Result<(), SimError> {
        if !self.round_active && !self.kickoff_pending && !self.eligible.is_empty() {
            self.kickoff_pending = true;
            sim.schedule_wake()?;
        }
        Ok(())
    }

    pub fn on_wake(&mut self, sim: &mut Sim) -> Result<(), SimError> {
        self.kickoff_pending = false;
        if self.round_active {
            return Ok(());
        }
        let members: Vec<usize> = std::mem::take(&mut self.eligible)
            .into_iter()
            .filter(|&t| !sim.completed(t))
            .collect();
        if members.is_empty() {
            return Ok(());
        }
        self.round = members;
        self.ready = 0;
        self.committed = 0;
        self.round_active = true;
        for i in 0..self.round.len() {
            let task = self.round[i];
            sim.start_rollout(task)?;
        }
        Ok(())
    }

    pub fn on_task_submitted(&mut self, sim: &mut Sim, task: usize) -> Result<(), SimError> {
        match sim.try_admit(task)? {
            AdmitOutcome::Admitted => self.became_eligible(sim, task),
            AdmitOutcome::Queued => Ok(()),
        }
    }

    pub fn on_trajectory_ready(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        self.ready += 1;
        if self.ready == self.round.len() {
            // Barrier release: every member delivered; drain the buffer
            // serially starting now.
            sim.start_training_head()?;
        }
        Ok(())
    }

    pub fn on_train_done(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        if sim.buffer_len() > 0 {
            sim.start_training_head()?;
        }
        Ok(())
    }

    fn round_commit(&mut self, sim: &mut Sim) -> Result<(), SimError> {
        self.committed += 1;
        if self.committed == self.round.len() {
            self.round_active = false;
            self.maybe_kickoff(sim)?;
        }
        Ok(())
    }

    pub fn on_policy_committed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        self.eligible.push(task);
        self.round_commit(sim)
    }

    pub fn on_task_completed(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        newly_admitted: Vec<usize>,
    ) -> Result<(), SimError> {
        for t in newly_admitted {
            self.eligible.push(t);
        }
        self.round_commit(sim)
    }
}
