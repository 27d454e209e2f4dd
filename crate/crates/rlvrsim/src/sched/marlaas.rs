//! The asynchronous multi-tenant scheduler and its two ablations.
//!
//! Full mode: every admitted task rolls out concurrently (multi-LoRA
//! batching); trajectories feed the global FIFO buffer; training is strictly
//! serialized to one task update at a time; a commit immediately re-arms
//! rollout for its task. No global barrier anywhere.
//!
//! `disable_multi_lora`: rollouts run one task at a time (FIFO over eligible
//! tasks) while the rollout/training overlap is kept.
//!
//! `disable_async` lives in [`BarrierSched`]: concurrent rollouts, but a
//! global barrier gates each training wave, which makes it behave exactly
//! like the synchronous multi-LoRA baseline.

use std::collections::VecDeque;

use crate::engine::{Sim, SimError};
use crate::sched::AdmitOutcome;

#[derive(Debug)]
pub struct AsyncSched {
    multi_lora: bool,
    /// FIFO of tasks waiting for the single rollout slot
    /// (`disable_multi_lora` only).
    rollout_queue: VecDeque<usize>,
    rollout_slot_busy: bool,
}

impl AsyncSched {
    pub fn new(multi_lora: bool) -> Self {
        Self {
            multi_lora,
            rollout_queue: VecDeque::new(),
            rollout_slot_busy: false,
        }
    }

    /// A task holds an unconsumed policy version and may roll out.
    fn eligible(&mut self, sim: &mut Sim, task: usize) -> Result<(), SimError> {
        if sim.completed(task) {
            return Ok(());
        }
        if self.multi_lora {
            sim.start_rollout(task)?;
        } else if self.rollout_slot_busy {
            self.rollout_queue.push_back(task);
        } else {
            self.rollout_slot_busy = true;
            sim.start_rollout(task)?;
        }
        Ok(())
    }

    pub fn on_task_submitted(&mut self, sim: &mut Sim, task: usize) -> Result<(), SimError> {
        match sim.try_admit(task)? {
            AdmitOutcome::Admitted => self.eligible(sim, task),
            AdmitOutcome::Queued => Ok(()),
        }
    }

    pub fn on_trajectory_ready(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        if !self.multi_lora {
            self.rollout_slot_busy = false;
            while let Some(next) = self.rollout_queue.pop_front() {
                if sim.completed(next) {
                    continue;
                }
                self.rollout_slot_busy = true;
                sim.start_rollout(next)?;
                break;
            }
        }
        if sim.train_idle() && sim.buffer_len() > 0 {
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

    pub fn on_policy_committed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        self.eligible(sim, task)
    }

    pub fn on_task_completed(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        newly_admitted: Vec<usize>,
    ) -> Result<(), SimError> {
        for t in newly_admitted {
            self.eligible(sim, t)?;
        }
        Ok(())
    }
}

/// The "w/o async" ablation: rollout concurrency is kept, but a global
/// barrier is inserted before training, so rollouts of round k+1 wait until
/// every task of round k has trained and committed.
#[derive(Debug, Default)]
pub struct BarrierSched {
    /// Tasks holding a fresh policy, in the order they became eligible.
    eligible: Vec<usize>,
    round: Vec<usize>,
    ready: usize,
    committed: usize,
    round_active: bool,
    kickoff_pending: bool,
}

impl BarrierSched {
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
        // The barrier: training begins only when the slowest rollout of the
        // round has delivered.
        if self.ready == self.round.len() {
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
