use std::collections::HashMap;

use super::{Contract, Expr, ExprKind};

/// Finds a cycle in the node call graph, returned as the list of node names
/// along the cycle.
pub fn find_node_cycle(c: &Contract) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }

    fn callees(e: &Expr) -> Vec<&str> {
        let mut out = Vec::new();
        e.walk(&mut |x| {
            if let ExprKind::Call(n, _) = &x.kind {
                out.push(n.as_str());
            }
        });
        out
    }

    fn visit<'a>(
        name: &'a str,
        c: &'a Contract,
        marks: &mut HashMap<&'a str, Mark>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        match marks.get(name).copied().unwrap_or(Mark::Fresh) {
            Mark::Done => return None,
            Mark::Active => {
                let from = stack.iter().position(|n| *n == name).unwrap_or(0);
                return Some(stack[from..].iter().map(|s| s.to_string()).collect());
            }
            Mark::Fresh => {}
        }
        let node = c.node(name)?;
        marks.insert(name, Mark::Active);
        stack.push(name);
        for callee in callees(&node.body) {
            if let Some(cycle) = visit(callee, c, marks, stack) {
                return Some(cycle);
            }
        }
        stack.pop();
        marks.insert(name, Mark::Done);
        None
    }

    let mut marks = HashMap::new();
    for n in &c.nodes {
        let mut stack = Vec::new();
        if let Some(cycle) = visit(&n.name, c, &mut marks, &mut stack) {
            return Some(cycle);
        }
    }
    None
}

/// Replaces every node call in `e` by the node body with arguments
/// substituted for parameters. The call graph must be acyclic.
///
/// Node bodies may only mention their own parameters, so substitution cannot
/// capture a caller's variable.
pub fn expand_calls(e: &Expr, c: &Contract) -> Expr {
    match &e.kind {
        ExprKind::Call(name, args) => {
            let node = c.node(name).expect("call to unknown node after checking");
            let args: HashMap<&str, Expr> = node
                .params
                .iter()
                .map(|(p, _)| p.as_str())
                .zip(args.iter().map(|a| expand_calls(a, c)))
                .collect();
            let body = substitute(&node.body, &args);
            expand_calls(&body, c)
        }
        _ => map_children(e, |child| expand_calls(child, c)),
    }
}

fn substitute(e: &Expr, args: &HashMap<&str, Expr>) -> Expr {
    match &e.kind {
        ExprKind::Ident(n) => match args.get(n.as_str()) {
            Some(a) => a.clone(),
            None => e.clone(),
        },
        _ => map_children(e, |child| substitute(child, args)),
    }
}

/// Rebuilds `e` with `f` applied to each direct child.
pub(crate) fn map_children(e: &Expr, mut f: impl FnMut(&Expr) -> Expr) -> Expr {
    let b = |x: &Expr, f: &mut dyn FnMut(&Expr) -> Expr| Box::new(f(x));
    let kind = match &e.kind {
        ExprKind::Bool(_) | ExprKind::Int(_) | ExprKind::Real(_) | ExprKind::Ident(_) => {
            e.kind.clone()
        }
        ExprKind::Select(x, field) => ExprKind::Select(b(x, &mut f), field.clone()),
        ExprKind::Unary(op, x) => ExprKind::Unary(*op, b(x, &mut f)),
        ExprKind::Binary(op, x, y) => {
            let x = b(x, &mut f);
            ExprKind::Binary(*op, x, b(y, &mut f))
        }
        ExprKind::Pre(x) => ExprKind::Pre(b(x, &mut f)),
        ExprKind::Arrow(x, y) => {
            let x = b(x, &mut f);
            ExprKind::Arrow(x, b(y, &mut f))
        }
        ExprKind::If(c, x, y) => {
            let c = b(c, &mut f);
            let x = b(x, &mut f);
            ExprKind::If(c, x, b(y, &mut f))
        }
        ExprKind::Call(n, args) => ExprKind::Call(n.clone(), args.iter().map(&mut f).collect()),
    };
    Expr {
        kind,
        span: e.span,
        ty: e.ty.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contract::parse;

    #[test]
    fn detects_mutual_recursion() {
        let c = parse(
            "component C { node f(a : int) : int = g(a); node g(a : int) : int = f(a) + 1; }",
        )
        .unwrap();
        let cycle = find_node_cycle(&c).unwrap();
        assert_eq!(cycle, vec!["f".to_string(), "g".to_string()]);
    }

    #[test]
    fn nested_calls_flatten() {
        let c = parse(
            "component C { input X : int;
               node f(a : int) : int = a * 2; node g(a : int) : int = a + 1;
               eq Y : int = f(g(X)); }",
        )
        .unwrap();
        let e = expand_calls(&c.eqs[0].expr, &c);
        assert_eq!(e.to_string(), "(X + 1) * 2");
    }
}
