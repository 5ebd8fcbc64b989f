//! Bounded exhaustive checking.
//!
//! Traces are enumerated depth-first over steps. Within a step, valuations
//! follow input declaration order with each input's domain in the given
//! order, first input most significant. The reported counterexample is the
//! first failing trace prefix in that order, whatever the scheduling.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;

use crate::exec::Exec;
use crate::trace::{Trace, Valuation};

use super::domain::Domains;
use super::run::{Counterexample, Harness, HarnessError, Outcome, RunState};

/// Enough work items per parallel task split.
const MIN_TASKS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundedConfig {
    pub depth: usize,
    /// Upper limit on the number of complete traces. The explored depth is
    /// reduced up front so the limit is never crossed.
    pub max_traces: u64,
}

impl Default for BoundedConfig {
    fn default() -> Self {
        BoundedConfig {
            depth: 6,
            max_traces: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PassInfo {
    /// Complete traces covered, counting those cut short by a violated
    /// assumption.
    pub explored: u64,
    /// Trace length actually covered.
    pub depth: usize,
    pub requested_depth: usize,
    /// Whether the requested bound was covered in full.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass(PassInfo),
    Counterexample(Box<Counterexample>),
}

impl CheckOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckOutcome::Pass(_))
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            CheckOutcome::Counterexample(c) => Some(c),
            CheckOutcome::Pass(_) => None,
        }
    }
}

/// Largest `d <= depth` with `n^d <= budget`.
fn affordable_depth(n: u64, depth: usize, budget: u64) -> usize {
    let mut d = 0;
    let mut total: u64 = 1;
    while d < depth {
        match total.checked_mul(n) {
            Some(t) if t <= budget => {
                total = t;
                d += 1;
            }
            _ => break,
        }
    }
    d
}

struct Search<'a> {
    h: &'a Harness,
    vals: &'a [Valuation],
    depth: usize,
    explored: &'a AtomicU64,
}

enum Next {
    Continue,
    /// An assumption failed, so no extension can fail.
    Vacuous,
    Fail,
}

enum Found {
    Prefix(Vec<usize>),
    Error(HarnessError),
}

impl Search<'_> {
    fn leaves_below(&self, level: usize) -> u64 {
        (self.vals.len() as u64).pow((self.depth - level) as u32)
    }

    fn advance(
        &self,
        st: &mut RunState,
        level: usize,
        choice: usize,
    ) -> Result<Next, HarnessError> {
        Ok(match st.step(self.h, &self.vals[choice])? {
            Outcome::Trap(_) => Next::Fail,
            Outcome::Ok(rec) if self.h.failure_of(level, &rec.verdict).is_some() => Next::Fail,
            Outcome::Ok(rec) if rec.verdict.vacuous => Next::Vacuous,
            Outcome::Ok(_) => Next::Continue,
        })
    }

    fn dfs(&self, st: &RunState, level: usize, path: &mut Vec<usize>) -> Result<(), Found> {
        if level == self.depth {
            self.explored.fetch_add(1, Ordering::Relaxed);
            return Ok(());
        }
        for choice in 0..self.vals.len() {
            let mut child = st.clone();
            path.push(choice);
            match self
                .advance(&mut child, level, choice)
                .map_err(Found::Error)?
            {
                Next::Continue => self.dfs(&child, level + 1, path)?,
                Next::Vacuous => {
                    self.explored
                        .fetch_add(self.leaves_below(level + 1), Ordering::Relaxed);
                }
                Next::Fail => return Err(Found::Prefix(path.clone())),
            }
            path.pop();
        }
        Ok(())
    }

    /// Explores every trace starting with the prefix numbered `task`.
    fn task(&self, task: usize, split: usize) -> Result<(), Found> {
        let n = self.vals.len();
        let mut prefix = vec![0; split];
        let mut rest = task;
        for slot in prefix.iter_mut().rev() {
            *slot = rest % n;
            rest /= n;
        }
        let mut st = self.h.start();
        for (level, &choice) in prefix.iter().enumerate() {
            match self.advance(&mut st, level, choice).map_err(Found::Error)? {
                Next::Continue => {}
                Next::Vacuous => {
                    // Every task sharing this prefix stops here; the first
                    // of them counts the pruned subtree.
                    if prefix[level + 1..].iter().all(|&c| c == 0) {
                        self.explored
                            .fetch_add(self.leaves_below(level + 1), Ordering::Relaxed);
                    }
                    return Ok(());
                }
                Next::Fail => return Err(Found::Prefix(prefix[..=level].to_vec())),
            }
        }
        let mut path = prefix;
        self.dfs(&st, split, &mut path)
    }
}

pub fn check_bounded(
    h: &Harness,
    domains: &Domains,
    cfg: &BoundedConfig,
    exec: &Exec,
) -> Result<CheckOutcome, HarnessError> {
    let params = h.input_params();
    let vals = domains.valuations(&params)?;
    let n = vals.len();
    let depth = affordable_depth(n as u64, cfg.depth, cfg.max_traces);
    let explored = AtomicU64::new(0);
    let search = Search {
        h,
        vals: &vals,
        depth,
        explored: &explored,
    };
    let mut split = 0;
    let mut tasks = 1usize;
    while split < depth && tasks < MIN_TASKS {
        split += 1;
        tasks *= n;
    }
    let found = exec.find_map_first(tasks, |i| search.task(i, split).err());
    match found {
        None => Ok(CheckOutcome::Pass(PassInfo {
            explored: explored.load(Ordering::Relaxed),
            depth,
            requested_depth: cfg.depth,
            complete: depth == cfg.depth,
        })),
        Some(Found::Error(e)) => Err(e),
        Some(Found::Prefix(path)) => {
            let trace = Trace::new(path.iter().map(|&i| vals[i].clone()).collect());
            let cex = h
                .counterexample(trace)?
                .ok_or_else(|| HarnessError::Internal {
                    step: path.len().saturating_sub(1),
                    message: "failure did not reproduce".into(),
                })?;
            Ok(CheckOutcome::Counterexample(Box::new(cex)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_budget() {
        assert_eq!(affordable_depth(2, 3, 100), 3);
        assert_eq!(affordable_depth(10, 6, 1000), 3);
        assert_eq!(affordable_depth(5, 4, 4), 0);
        assert_eq!(affordable_depth(1, 7, 1), 7);
    }
}
