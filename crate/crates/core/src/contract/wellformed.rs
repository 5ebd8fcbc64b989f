//! Temporal well-formedness: every `pre` must sit in the right operand of some
//! enclosing `->`, and two nested `pre`s must be separated by a `->`.
//!
//! Node calls are expanded before checking, so a `pre` inside a node body is
//! judged in the context of each call site.

use thiserror::Error;

use super::{expand_calls, find_node_cycle, Contract, Expr, ExprKind, Span};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WellFormednessError {
    #[error("{0}: `pre` is not guarded by an enclosing `->`")]
    UnguardedPre(Span),
    #[error("{0}: nested `pre` without an intervening `->`")]
    NestedPreWithoutArrow(Span),
    #[error("recursive node cycle: {}", .0.join(" -> "))]
    NodeCycle(Vec<String>),
}

#[derive(Clone, Copy, PartialEq)]
enum Guard {
    Unguarded,
    Guarded,
    InsidePre,
}

pub fn check_temporal_wellformedness(c: &Contract) -> Result<(), Vec<WellFormednessError>> {
    if let Some(cycle) = find_node_cycle(c) {
        return Err(vec![WellFormednessError::NodeCycle(cycle)]);
    }
    let mut errors = Vec::new();
    for root in c.roots() {
        let expanded = expand_calls(root, c);
        visit(&expanded, Guard::Unguarded, &mut errors);
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

/// Checks a single (call-free) expression.
#[cfg(test)]
pub(crate) fn check_expr(e: &Expr) -> Result<(), Vec<WellFormednessError>> {
    let mut errors = Vec::new();
    visit(e, Guard::Unguarded, &mut errors);
    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

fn visit(e: &Expr, guard: Guard, errors: &mut Vec<WellFormednessError>) {
    match &e.kind {
        ExprKind::Pre(inner) => {
            match guard {
                Guard::Unguarded => errors.push(WellFormednessError::UnguardedPre(e.span)),
                Guard::InsidePre => errors.push(WellFormednessError::NestedPreWithoutArrow(e.span)),
                Guard::Guarded => {}
            }
            visit(inner, Guard::InsidePre, errors);
        }
        ExprKind::Arrow(lhs, rhs) => {
            visit(lhs, guard, errors);
            visit(rhs, Guard::Guarded, errors);
        }
        _ => {
            for c in e.children() {
                visit(c, guard, errors);
            }
        }
    }
}
