//! Verification workbench: wires observers to design models, checks them
//! over bounded and random traces, and compares the compiled observer
//! against the reference evaluator.

mod binding;
mod bounded;
mod diff;
mod domain;
mod model;
mod random;
mod run;

use std::fmt::Write;

pub use binding::{
    bind, BindingViolation, HarnessBinding, InterfaceMismatch, Mismatch, MismatchKind, Severity,
    Signal, SignalId, SignalSource,
};
pub use bounded::{check_bounded, BoundedConfig, CheckOutcome, PassInfo};
pub use diff::{
    compare_trace, diff, DiffConfig, DiffError, DiffReport, Divergence, DivergenceClass,
    TraceComparison, REL_TOLERANCE,
};
pub use domain::{default_domain, default_ints, default_reals, DomainError, Domains};
pub use model::{
    builtin, CompiledModel, DesignModel, ModelError, ModelInstance, ModelLoadError, BUILTIN_MODELS,
};
pub use random::{check_random, shrink, trial_rng, RandomConfig};
pub use run::{
    Counterexample, Execution, Failure, FailureKind, Harness, HarnessError, ReplayError, RunState,
    SignalTable, StepRecord,
};

impl CheckOutcome {
    /// Human-readable summary listing each guarantee.
    pub fn render(&self, h: &Harness) -> String {
        let mut s = String::new();
        match self {
            CheckOutcome::Pass(p) => {
                let bound = if p.complete {
                    format!("depth {}", p.depth)
                } else {
                    format!(
                        "depth {} of requested {} (budget)",
                        p.depth, p.requested_depth
                    )
                };
                let _ = writeln!(s, "PASS: {} traces explored, {bound}", p.explored);
                for l in h.observer().prove_labels() {
                    let _ = writeln!(s, "  pass  \"{l}\"");
                }
            }
            CheckOutcome::Counterexample(c) => {
                let _ = writeln!(s, "COUNTEREXAMPLE");
                let failed = match &c.failure.kind {
                    FailureKind::Violation { label } => Some(label.as_str()),
                    FailureKind::Trap { .. } => None,
                };
                for l in h.observer().prove_labels() {
                    let mark = if Some(l) == failed { "FAIL" } else { "-" };
                    let _ = writeln!(s, "  {mark:<4}  \"{l}\"");
                }
                s.push_str(&c.render());
            }
        }
        for w in h.warnings() {
            let _ = writeln!(s, "{w}");
        }
        s
    }
}
