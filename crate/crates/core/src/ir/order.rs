use std::collections::{BTreeSet, HashMap};

use crate::contract::{Contract, Expr, ExprKind, Property, SemType};

use super::{
    next_fresh_index, DataflowIr, IrError, IrExpr, IrKind, Local, PreEntry, PropRef, Signal,
    FRESH_PREFIX,
};

#[derive(Default)]
struct PreTable {
    ids: HashMap<Expr, usize>,
    operands: Vec<IrExpr>,
}

impl PreTable {
    fn lower(&mut self, e: &Expr) -> IrExpr {
        let b = |t: &mut Self, x: &Expr| Box::new(t.lower(x));
        let kind = match &e.kind {
            ExprKind::Bool(v) => IrKind::Bool { value: *v },
            ExprKind::Int(v) => IrKind::Int { value: v.clone() },
            ExprKind::Real(v) => IrKind::Real { value: v.clone() },
            ExprKind::Ident(n) => IrKind::Var { name: n.clone() },
            ExprKind::Select(x, f) => IrKind::Select {
                operand: b(self, x),
                field: f.clone(),
            },
            ExprKind::Unary(op, x) => IrKind::Unary {
                operator: *op,
                operand: b(self, x),
            },
            ExprKind::Binary(op, x, y) => IrKind::Binary {
                operator: *op,
                lhs: b(self, x),
                rhs: b(self, y),
            },
            ExprKind::Arrow(x, y) => IrKind::Arrow {
                init: b(self, x),
                next: b(self, y),
            },
            ExprKind::If(c, x, y) => IrKind::If {
                cond: b(self, c),
                then: b(self, x),
                otherwise: b(self, y),
            },
            ExprKind::Pre(x) => {
                assert!(!x.contains_temporal(), "pre operand must be decoupled");
                let id = match self.ids.get(x.as_ref()) {
                    Some(id) => *id,
                    None => {
                        let id = self.operands.len();
                        let lowered = self.lower(x);
                        self.operands.push(lowered);
                        self.ids.insert(x.as_ref().clone(), id);
                        id
                    }
                };
                IrKind::PreRef { id }
            }
            ExprKind::Call(n, _) => panic!("call to `{n}` must be inlined before ordering"),
        };
        IrExpr {
            kind,
            ty: e.sem_type().clone(),
        }
    }
}

/// Builds the dataflow IR from an inlined, decoupled contract. Properties
/// that are not plain references to an equation become fresh locals. Locals
/// are topologically sorted on same-step dependencies, ties broken by
/// declaration order, and pre-table ids are assigned by first use in that
/// order.
pub fn order_dataflow(c: &Contract) -> Result<DataflowIr, IrError> {
    let mut sources: Vec<Source> = c
        .eqs
        .iter()
        .map(|e| (e.name.clone(), e.ty.clone(), &e.expr))
        .collect();
    let mut fresh = next_fresh_index(c);
    let assumes = property_locals(c, &c.assumes, &mut sources, &mut fresh);
    let guarantees = property_locals(c, &c.guarantees, &mut sources, &mut fresh);

    let mut table = PreTable::default();
    let lowered: Vec<Local> = sources
        .iter()
        .map(|(name, ty, e)| Local {
            name: name.clone(),
            ty: ty.clone(),
            expr: table.lower(e),
        })
        .collect();

    let order = topo_order(&lowered)?;
    let mut locals: Vec<Local> = order.into_iter().map(|i| lowered[i].clone()).collect();

    let mut remap: HashMap<usize, usize> = HashMap::new();
    for l in &locals {
        l.expr.walk(&mut |e| {
            if let IrKind::PreRef { id } = e.kind {
                let next = remap.len();
                remap.entry(id).or_insert(next);
            }
        });
    }
    for l in &mut locals {
        renumber(&mut l.expr, &remap);
    }
    let mut pre_table: Vec<PreEntry> = table
        .operands
        .into_iter()
        .enumerate()
        .filter_map(|(old, operand)| remap.get(&old).map(|&id| PreEntry { id, operand }))
        .collect();
    pre_table.sort_by_key(|p| p.id);

    let signal = |d: &crate::contract::IoDecl| Signal {
        name: d.name.clone(),
        ty: d.ty.clone(),
    };
    Ok(DataflowIr {
        name: c.name.clone(),
        records: c.records.iter().map(|r| r.ty.clone()).collect(),
        inputs: c.inputs.iter().map(signal).collect(),
        outputs: c.outputs.iter().map(signal).collect(),
        locals,
        assumes,
        guarantees,
        pre_table,
    })
}

type Source<'a> = (String, SemType, &'a Expr);

fn property_locals<'a>(
    c: &Contract,
    list: &'a [Property],
    sources: &mut Vec<Source<'a>>,
    fresh: &mut usize,
) -> Vec<PropRef> {
    list.iter()
        .map(|p| {
            let local = match &p.expr.kind {
                ExprKind::Ident(n) if c.eq(n).is_some() => n.clone(),
                _ => {
                    let name = format!("{FRESH_PREFIX}{fresh}");
                    *fresh += 1;
                    sources.push((name.clone(), SemType::Bool, &p.expr));
                    name
                }
            };
            PropRef {
                label: p.label.clone(),
                local,
            }
        })
        .collect()
}

fn renumber(e: &mut IrExpr, remap: &HashMap<usize, usize>) {
    match &mut e.kind {
        IrKind::PreRef { id } => *id = remap[id],
        IrKind::Bool { .. } | IrKind::Int { .. } | IrKind::Real { .. } | IrKind::Var { .. } => {}
        IrKind::Select { operand, .. } | IrKind::Unary { operand, .. } => renumber(operand, remap),
        IrKind::Binary { lhs, rhs, .. } => {
            renumber(lhs, remap);
            renumber(rhs, remap);
        }
        IrKind::Arrow { init, next } => {
            renumber(init, remap);
            renumber(next, remap);
        }
        IrKind::If {
            cond,
            then,
            otherwise,
        } => {
            renumber(cond, remap);
            renumber(then, remap);
            renumber(otherwise, remap);
        }
    }
}

/// Kahn's algorithm, always emitting the smallest ready index.
fn topo_order(locals: &[Local]) -> Result<Vec<usize>, IrError> {
    let index: HashMap<&str, usize> = locals
        .iter()
        .enumerate()
        .map(|(i, l)| (l.name.as_str(), i))
        .collect();
    let deps: Vec<BTreeSet<usize>> = locals
        .iter()
        .map(|l| {
            l.expr
                .same_step_vars()
                .into_iter()
                .filter_map(|v| index.get(v).copied())
                .collect()
        })
        .collect();
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); locals.len()];
    for (i, ds) in deps.iter().enumerate() {
        for &d in ds {
            users[d].push(i);
        }
    }
    let mut pending: Vec<usize> = deps.iter().map(|d| d.len()).collect();
    let mut ready: BTreeSet<usize> = (0..locals.len()).filter(|&i| pending[i] == 0).collect();
    let mut order = Vec::with_capacity(locals.len());
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &u in &users[i] {
            pending[u] -= 1;
            if pending[u] == 0 {
                ready.insert(u);
            }
        }
    }
    if order.len() == locals.len() {
        return Ok(order);
    }

    // Every unordered local still has an unordered dependency, so walking
    // dependencies from any of them must revisit a node.
    let start = (0..locals.len()).find(|&i| pending[i] > 0).unwrap();
    let mut path = vec![start];
    loop {
        let cur = *path.last().unwrap();
        let next = *deps[cur].iter().find(|&&d| pending[d] > 0).unwrap();
        if let Some(pos) = path.iter().position(|&p| p == next) {
            let cycle = path[pos..]
                .iter()
                .map(|&i| locals[i].name.clone())
                .collect();
            return Err(IrError::CombinationalCycle(cycle));
        }
        path.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;
    use crate::ir::normalize;

    fn names(ir: &DataflowIr) -> Vec<&str> {
        ir.locals.iter().map(|l| l.name.as_str()).collect()
    }

    #[test]
    fn dependencies_come_first() {
        let c = parse(
            "component C { input X : int;
             eq c : int = b + 1; eq b : int = a * 2; eq a : int = X; }",
        )
        .unwrap();
        assert_eq!(names(&normalize(&c).unwrap()), ["a", "b", "c"]);
    }

    #[test]
    fn ties_keep_declaration_order() {
        let c = parse(
            "component C { input X : int;
             eq q : int = X; eq p : int = X; eq r : int = 0 -> pre(r) + q; }",
        )
        .unwrap();
        assert_eq!(names(&normalize(&c).unwrap()), ["q", "p", "r"]);
    }

    #[test]
    fn combinational_cycle_is_named() {
        let c = parse("component C { eq a : int = b; eq b : int = a; }").unwrap();
        assert_eq!(
            normalize(&c).unwrap_err(),
            IrError::CombinationalCycle(vec!["a".into(), "b".into()])
        );
    }

    #[test]
    fn delayed_self_reference_is_not_a_cycle() {
        let c = parse("component C { eq n : int = 0 -> pre(n) + 1; }").unwrap();
        let ir = normalize(&c).unwrap();
        assert_eq!(ir.pre_table.len(), 1);
        assert_eq!(
            ir.pre_table[0].operand.kind,
            IrKind::Var { name: "n".into() }
        );
    }

    #[test]
    fn pre_operands_are_deduplicated_and_numbered_by_use() {
        let c = parse(
            "component C { input X : int; input Y : int;
             eq a : int = 0 -> pre(Y);
             eq b : int = 0 -> pre(X) + pre(X + 0) + pre(X);
             guarantee \"g\" : true -> pre(X) < pre(Y); }",
        )
        .unwrap();
        let ir = normalize(&c).unwrap();
        assert_eq!(ir.pre_table.len(), 3);
        let ops: Vec<String> = ir
            .pre_table
            .iter()
            .map(|p| p.operand.to_expr(&ir.pre_table).to_string())
            .collect();
        assert_eq!(ops, ["Y", "X", "X + 0"]);
    }

    #[test]
    fn properties_reuse_named_equations() {
        let c = parse(
            "component C { input X : int;
             eq ok : bool = X > 0;
             assume \"a\" : ok;
             guarantee \"g\" : X < 10; }",
        )
        .unwrap();
        let ir = normalize(&c).unwrap();
        assert_eq!(ir.assumes[0].local, "ok");
        assert_eq!(ir.guarantees[0].local, "__t1");
        assert!(ir.local("__t1").unwrap().is_synthetic());
    }
}
