//! Seeded random checking with greedy shrinking.
//!
//! Trial `i` draws its trace from a ChaCha8 generator seeded with the run
//! seed on stream `i`, so any trial can be regenerated on its own and the
//! result does not depend on how trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::Exec;
use crate::observer::Param;
use crate::trace::Trace;

use super::bounded::{CheckOutcome, PassInfo};
use super::domain::Domains;
use super::run::{Failure, FailureKind, Harness, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomConfig {
    pub trials: u64,
    pub depth: usize,
    pub seed: u64,
}

/// Generator for trial `trial` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn check_random(
    h: &Harness,
    domains: &Domains,
    cfg: &RandomConfig,
    exec: &Exec,
) -> Result<CheckOutcome, HarnessError> {
    let params = h.input_params();
    domains.resolve(&params)?;
    let trials = usize::try_from(cfg.trials).unwrap_or(usize::MAX);
    let found = exec.find_map_first(trials, |i| {
        let mut rng = trial_rng(cfg.seed, i as u64);
        let trace = match domains.random_trace(&params, cfg.depth, &mut rng) {
            Ok(t) => t,
            Err(e) => return Some(Err(HarnessError::from(e))),
        };
        match h.execute(&trace) {
            Ok(ex) => ex.failure.map(|f| Ok((i as u64, trace, f))),
            Err(e) => Some(Err(e)),
        }
    });
    let Some(found) = found else {
        return Ok(CheckOutcome::Pass(PassInfo {
            explored: cfg.trials,
            depth: cfg.depth,
            requested_depth: cfg.depth,
            complete: true,
        }));
    };
    let (trial, trace, failure) = found?;
    let original = trace.len();
    let shrunk = shrink(h, domains, &params, trace, &failure)?;
    let mut cex = h
        .counterexample(shrunk)?
        .ok_or_else(|| HarnessError::Internal {
            step: failure.step,
            message: "shrunk trace no longer fails".into(),
        })?;
    cex.trial = Some(trial);
    cex.shrunk_from = Some(original);
    Ok(CheckOutcome::Counterexample(Box::new(cex)))
}

fn same_kind(a: &FailureKind, b: &FailureKind) -> bool {
    match (a, b) {
        (FailureKind::Violation { label: x }, FailureKind::Violation { label: y }) => x == y,
        (FailureKind::Trap { .. }, FailureKind::Trap { .. }) => true,
        _ => false,
    }
}

/// Greedy minimization: drop whole steps, then move each signal value
/// toward the front of its domain. Every candidate is re-executed and kept
/// only if it fails the same way; the trace is cut after its failing step.
pub fn shrink(
    h: &Harness,
    domains: &Domains,
    params: &[Param],
    trace: Trace,
    failure: &Failure,
) -> Result<Trace, HarnessError> {
    let doms = domains.resolve(params)?;
    let mut cur = trace;
    cur.steps.truncate(failure.step + 1);
    let fails = |t: &Trace| -> Result<Option<usize>, HarnessError> {
        Ok(h.execute(t)?
            .failure
            .filter(|f| same_kind(&f.kind, &failure.kind))
            .map(|f| f.step))
    };
    loop {
        let mut changed = false;
        let mut j = 0;
        while j < cur.len() && cur.len() > 1 {
            let mut cand = cur.clone();
            cand.steps.remove(j);
            if let Some(step) = fails(&cand)? {
                cand.steps.truncate(step + 1);
                cur = cand;
                changed = true;
            } else {
                j += 1;
            }
        }
        for j in 0..cur.len() {
            for (p, dom) in params.iter().zip(&doms) {
                if j >= cur.len() {
                    break;
                }
                let Some(now) = cur.steps[j].get(&p.name) else {
                    continue;
                };
                let limit = dom.iter().position(|v| v == now).unwrap_or(dom.len());
                for v in &dom[..limit] {
                    let mut cand = cur.clone();
                    cand.steps[j].insert(p.name.clone(), v.clone());
                    if let Some(step) = fails(&cand)? {
                        cand.steps.truncate(step + 1);
                        cur = cand;
                        changed = true;
                        break;
                    }
                }
            }
        }
        if !changed {
            return Ok(cur);
        }
    }
}
