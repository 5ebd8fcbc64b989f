use std::collections::HashMap;

use crate::contract::{map_children, Contract, EqDecl, Expr, ExprKind, Span};

use super::{next_fresh_index, FRESH_PREFIX};

struct Hoister {
    next: usize,
    memo: HashMap<Expr, String>,
    hoisted: Vec<EqDecl>,
}

impl Hoister {
    fn hoist(&mut self, e: Expr) -> Expr {
        let ty = e.sem_type().clone();
        let name = match self.memo.get(&e) {
            Some(n) => n.clone(),
            None => {
                let name = format!("{FRESH_PREFIX}{}", self.next);
                self.next += 1;
                self.memo.insert(e.clone(), name.clone());
                self.hoisted.push(EqDecl {
                    name: name.clone(),
                    ty: ty.clone(),
                    expr: e,
                    span: Span::default(),
                });
                name
            }
        };
        Expr::ident(name, ty)
    }

    fn visit(&mut self, e: &Expr) -> Expr {
        let mut out = map_children(e, |c| self.visit(c));
        out.kind = match std::mem::replace(&mut out.kind, ExprKind::Bool(false)) {
            ExprKind::Pre(operand) if operand.contains_temporal() => {
                ExprKind::Pre(Box::new(self.hoist(*operand)))
            }
            ExprKind::Arrow(init, next) => {
                let init = self.hoist_if_arrow(*init);
                let next = self.hoist_if_arrow(*next);
                ExprKind::Arrow(Box::new(init), Box::new(next))
            }
            kind => kind,
        };
        out
    }

    fn hoist_if_arrow(&mut self, e: Expr) -> Expr {
        if e.contains_arrow() {
            self.hoist(e)
        } else {
            e
        }
    }
}

/// Names nested temporal subexpressions. A `pre` whose operand contains a
/// temporal operator gets that operand hoisted into a fresh equation, as does
/// any `->` operand that itself contains a `->`. Structurally identical
/// hoisting candidates share one equation.
///
/// Input must be call-free and temporally well-formed.
pub fn decouple_temporal(c: Contract) -> Contract {
    let mut h = Hoister {
        next: next_fresh_index(&c),
        memo: HashMap::new(),
        hoisted: Vec::new(),
    };
    let mut out = c.clone();
    for eq in &mut out.eqs {
        eq.expr = h.visit(&eq.expr);
    }
    for p in out.assumes.iter_mut().chain(out.guarantees.iter_mut()) {
        p.expr = h.visit(&p.expr);
    }
    out.eqs.extend(h.hoisted);
    out
}
