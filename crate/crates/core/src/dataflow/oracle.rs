//! Path-enumeration reference implementations of the two analyses. They walk
//! the CFG directly and share no code with the fixpoint solver, so they can
//! be used to cross-check it on small graphs.

use std::collections::VecDeque;

use crate::cfg::{Cfg, Node, Point, Side};
use crate::gasm::{Program, Register};

use super::{Distance, Threshold};

fn start_nodes(cfg: &Cfg, point: Point) -> Vec<Node> {
    match point.side {
        Side::In => vec![Node::Instr(point.instr)],
        Side::Out => cfg.succ(Node::Instr(point.instr)).to_vec(),
    }
}

/// Enumerates every path from `point` breadth-first, up to `W` steps. The
/// answer is the largest step index at which some path first touches `reg`,
/// or `Inf` when a path gets to Exit or past `W` steps without touching it.
pub fn distance_oracle(p: &Program, cfg: &Cfg, w: Threshold, point: Point, reg: Register) -> Distance {
    let mut frontier: VecDeque<(Node, u32)> = start_nodes(cfg, point).into_iter().map(|n| (n, 1)).collect();
    let mut worst = 0;
    while let Some((node, step)) = frontier.pop_front() {
        let instr = match node {
            Node::Exit => return Distance::Inf,
            Node::Entry => unreachable!(),
            Node::Instr(id) => p.get(id),
        };
        if instr.accesses(reg) {
            worst = worst.max(step);
        } else if step == w.get() {
            return Distance::Inf;
        } else {
            frontier.extend(cfg.succ(node).iter().map(|&n| (n, step + 1)));
        }
    }
    Distance::Finite(worst)
}

/// Searches for a path from `point` that reads `reg` before any write to it.
pub fn liveness_oracle(p: &Program, cfg: &Cfg, point: Point, reg: Register) -> bool {
    let mut seen = vec![false; cfg.len()];
    let mut stack = start_nodes(cfg, point);
    while let Some(node) = stack.pop() {
        let Node::Instr(id) = node else { continue };
        if std::mem::replace(&mut seen[id.0], true) {
            continue;
        }
        let instr = p.get(id);
        if instr.register_uses().contains(&reg) {
            return true;
        }
        if !instr.register_defs().contains(&reg) {
            stack.extend_from_slice(cfg.succ(node));
        }
    }
    false
}
