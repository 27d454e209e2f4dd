//! Sequential baselines: one task at a time in submit order, phases strictly
//! serial within the task. Covers both the disaggregated layout (split
//! pools, the inactive pool idles) and the collocated layout (one shared
//! pool, phase latencies scaled by the engine).

use std::collections::VecDeque;

use crate::engine::{Sim, SimError};

#[derive(Debug, Default)]
pub struct Sequential {
    queue: VecDeque<usize>,
    active: Option<usize>,
}

impl Sequential {
    fn activate_next(&mut self, sim: &mut Sim) -> Result<(), SimError> {
        while let Some(task) = self.queue.pop_front() {
            if sim.completed(task) {
                continue;
            }
            self.active = Some(task);
            sim.start_rollout(task)?;
            return Ok(());
        }
        self.active = None;
        Ok(())
    }

    pub fn on_task_submitted(&mut self, sim: &mut Sim, task: usize) -> Result<(), SimError> {
        self.queue.push_back(task);
        if self.active.is_none() {
            self.activate_next(sim)?;
        }
        Ok(())
    }

    pub fn on_trajectory_ready(
        &mut self,
        sim: &mut Sim,
        _task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        // The active task's rollout finished; its training starts at once.
        sim.start_training_head()
    }

    pub fn on_train_done(
        &mut self,
        _sim: &mut Sim,
        _task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        Ok(())
    }

    pub fn on_policy_committed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        _version: u64,
    ) -> Result<(), SimError> {
        debug_assert_eq!(self.active, Some(task));
        sim.start_rollout(task)?;
        Ok(())
    }

    pub fn on_task_completed(
        &mut self,
        sim: &mut Sim,
        task: usize,
        _newly_admitted: Vec<usize>,
    ) -> Result<(), SimError> {
        debug_assert_eq!(self.active, Some(task));
        self.activate_next(sim)
    }
}
