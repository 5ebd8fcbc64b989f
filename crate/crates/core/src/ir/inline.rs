use crate::contract::{expand_calls, find_node_cycle, Contract};

use super::IrError;

/// Replaces every node call by the node body. The returned contract has no
/// node declarations left.
pub fn inline_nodes(c: &Contract) -> Result<Contract, IrError> {
    if let Some(cycle) = find_node_cycle(c) {
        return Err(IrError::NodeCycle(cycle));
    }
    let mut out = c.clone();
    for eq in &mut out.eqs {
        eq.expr = expand_calls(&eq.expr, c);
    }
    for p in out.assumes.iter_mut().chain(out.guarantees.iter_mut()) {
        p.expr = expand_calls(&p.expr, c);
    }
    out.nodes.clear();
    Ok(out)
}
