//! Instruction-granular control-flow graph with synthetic Entry and Exit.

use std::collections::BTreeSet;
use std::fmt::{self, Write};

use crate::gasm::{InstrId, Program};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    Entry,
    Exit,
    Instr(InstrId),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Entry => f.write_str("Entry"),
            Node::Exit => f.write_str("Exit"),
            Node::Instr(id) => write!(f, "{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    In,
    Out,
}

/// A program point: just before (`In`) or just after (`Out`) an instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub instr: InstrId,
    pub side: Side,
}

impl Point {
    pub fn input(id: usize) -> Self {
        Self { instr: InstrId(id), side: Side::In }
    }

    pub fn output(id: usize) -> Self {
        Self { instr: InstrId(id), side: Side::Out }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.side {
            Side::In => write!(f, "IN({})", self.instr),
            Side::Out => write!(f, "OUT({})", self.instr),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CfgError {
    #[error("instruction {0} is unreachable from the entry")]
    Unreachable(InstrId),
    #[error("no path from instruction {0} reaches an exit")]
    NoPathToExit(InstrId),
    #[error("control falls off the end of the program after instruction {0}")]
    FallsOffEnd(InstrId),
    #[error("unresolved branch target `{0}`")]
    UnresolvedLabel(String),
}

#[derive(Debug, Clone)]
pub struct Cfg {
    len: usize,
    succ: Vec<Vec<Node>>,
    pred: Vec<Vec<Node>>,
}

// Entry = 0, Exit = 1, instruction i = i + 2
fn slot(n: Node) -> usize {
    match n {
        Node::Entry => 0,
        Node::Exit => 1,
        Node::Instr(id) => id.0 + 2,
    }
}

impl Cfg {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        [Node::Entry, Node::Exit].into_iter().chain((0..self.len).map(|i| Node::Instr(InstrId(i))))
    }

    pub fn succ(&self, n: Node) -> &[Node] {
        &self.succ[slot(n)]
    }

    pub fn pred(&self, n: Node) -> &[Node] {
        &self.pred[slot(n)]
    }

    pub fn program_points(&self) -> Vec<Point> {
        (0..self.len).flat_map(|i| [Point::input(i), Point::output(i)]).collect()
    }

    fn reach(&self, from: Node, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.len + 2];
        let mut stack = vec![from];
        seen[slot(from)] = true;
        while let Some(n) = stack.pop() {
            let next = if forward { self.succ(n) } else { self.pred(n) };
            for &m in next {
                if !seen[slot(m)] {
                    seen[slot(m)] = true;
                    stack.push(m);
                }
            }
        }
        seen
    }
}

/// Builds the CFG and checks that every instruction is reachable from Entry
/// and can reach Exit.
pub fn build_cfg(p: &Program) -> Result<Cfg, CfgError> {
    let len = p.len();
    let mut succ: Vec<BTreeSet<Node>> = vec![BTreeSet::new(); len + 2];
    let entry_target = if len == 0 { Node::Exit } else { Node::Instr(InstrId(0)) };
    succ[0].insert(entry_target);

    for (i, instr) in p.instructions.iter().enumerate() {
        let here = &mut succ[i + 2];
        let fallthrough = || {
            if i + 1 < len {
                Ok(Node::Instr(InstrId(i + 1)))
            } else {
                Err(CfgError::FallsOffEnd(InstrId(i)))
            }
        };
        if instr.is_exit() {
            here.insert(Node::Exit);
            if instr.guard.is_some() {
                here.insert(fallthrough()?);
            }
        } else if let Some(target) = instr.branch_target() {
            let t = p.resolve(target).ok_or_else(|| CfgError::UnresolvedLabel(target.to_string()))?;
            here.insert(Node::Instr(t));
            if instr.guard.is_some() {
                here.insert(fallthrough()?);
            }
        } else {
            here.insert(fallthrough()?);
        }
    }

    let mut pred: Vec<Vec<Node>> = vec![Vec::new(); len + 2];
    let nodes: Vec<Node> =
        [Node::Entry, Node::Exit].into_iter().chain((0..len).map(|i| Node::Instr(InstrId(i)))).collect();
    for &n in &nodes {
        for &m in &succ[slot(n)] {
            pred[slot(m)].push(n);
        }
    }
    for v in &mut pred {
        v.sort();
    }
    let cfg = Cfg { len, succ: succ.into_iter().map(|s| s.into_iter().collect()).collect(), pred };

    let fwd = cfg.reach(Node::Entry, true);
    if let Some(i) = (0..len).find(|&i| !fwd[i + 2]) {
        return Err(CfgError::Unreachable(InstrId(i)));
    }
    let bwd = cfg.reach(Node::Exit, false);
    if let Some(i) = (0..len).find(|&i| !bwd[i + 2]) {
        return Err(CfgError::NoPathToExit(InstrId(i)));
    }
    Ok(cfg)
}

/// Basic-block view used only for rendering.
fn block_leaders(p: &Program, cfg: &Cfg) -> Vec<usize> {
    let mut leaders = BTreeSet::new();
    if !p.is_empty() {
        leaders.insert(0);
    }
    for (i, instr) in p.instructions.iter().enumerate() {
        if instr.label.is_some() {
            leaders.insert(i);
        }
        let succs = cfg.succ(Node::Instr(InstrId(i)));
        if (instr.is_branch() || instr.is_exit() || succs.len() > 1) && i + 1 < p.len() {
            leaders.insert(i + 1);
        }
        for s in succs {
            if let Node::Instr(t) = s {
                if t.0 != i + 1 {
                    leaders.insert(t.0);
                }
            }
        }
    }
    leaders.into_iter().collect()
}

/// Graphviz rendering with instructions collapsed into basic blocks.
pub fn to_dot(p: &Program, cfg: &Cfg) -> String {
    let leaders = block_leaders(p, cfg);
    let block_of = |i: usize| leaders.partition_point(|&l| l <= i) - 1;
    let name = |b: usize| {
        let first = leaders[b];
        p.instructions[first].label.clone().unwrap_or_else(|| format!("I{first}"))
    };
    let mut out = String::from("digraph cfg {\n  node [shape=box];\n  Entry;\n  Exit;\n");
    for b in 0..leaders.len() {
        let end = leaders.get(b + 1).copied().unwrap_or(p.len());
        writeln!(out, "  {} [label=\"{}: {}-{}\"];", name(b), name(b), leaders[b], end - 1).unwrap();
    }
    let mut edges = BTreeSet::new();
    for n in cfg.succ(Node::Entry) {
        edges.insert(("Entry".to_string(), node_name(*n, &block_of, &name)));
    }
    for b in 0..leaders.len() {
        let end = leaders.get(b + 1).copied().unwrap_or(p.len());
        for s in cfg.succ(Node::Instr(InstrId(end - 1))) {
            edges.insert((name(b), node_name(*s, &block_of, &name)));
        }
    }
    for (a, b) in edges {
        writeln!(out, "  {a} -> {b};").unwrap();
    }
    out.push_str("}\n");
    out
}

fn node_name(n: Node, block_of: &dyn Fn(usize) -> usize, name: &dyn Fn(usize) -> String) -> String {
    match n {
        Node::Entry => "Entry".into(),
        Node::Exit => "Exit".into(),
        Node::Instr(id) => name(block_of(id.0)),
    }
}
