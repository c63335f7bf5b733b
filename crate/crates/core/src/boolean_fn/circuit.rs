//! Composition circuits over disjoint variable blocks.
//!
//! A [`Node`] tree is validated and flattened into a [`Circuit`] arena in
//! preorder, so node ids are stable and the root is always id 0. Because the
//! children of a gate read pairwise-disjoint variables, the harmonic extension
//! of a gate is the gate's own multilinear polynomial applied to the harmonic
//! extensions of its children.

use std::ops::Range;

use super::Sign;
use crate::{Error, Result};

/// User-facing description of a composition tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Var(usize),
    Const(Sign),
    Not(Box<Node>),
    Or(Vec<Node>),
    And(Vec<Node>),
    Maj3(Vec<Node>),
}

impl Node {
    pub fn var(i: usize) -> Self {
        Node::Var(i)
    }

    pub fn negate(child: Node) -> Self {
        Node::Not(Box::new(child))
    }

    /// Shifts every variable index by `offset`.
    pub fn shifted(self, offset: usize) -> Self {
        match self {
            Node::Var(i) => Node::Var(i + offset),
            Node::Const(s) => Node::Const(s),
            Node::Not(c) => Node::negate(c.shifted(offset)),
            Node::Or(cs) => Node::Or(cs.into_iter().map(|c| c.shifted(offset)).collect()),
            Node::And(cs) => Node::And(cs.into_iter().map(|c| c.shifted(offset)).collect()),
            Node::Maj3(cs) => Node::Maj3(cs.into_iter().map(|c| c.shifted(offset)).collect()),
        }
    }

    fn restricted(self, var: usize, value: Sign) -> Self {
        let rec = |cs: Vec<Node>| -> Vec<Node> {
            cs.into_iter().map(|c| c.restricted(var, value)).collect()
        };
        match self {
            Node::Var(i) if i == var => Node::Const(value),
            Node::Var(i) if i > var => Node::Var(i - 1),
            Node::Var(i) => Node::Var(i),
            Node::Const(s) => Node::Const(s),
            Node::Not(c) => Node::negate(c.restricted(var, value)),
            Node::Or(cs) => Node::Or(rec(cs)),
            Node::And(cs) => Node::And(rec(cs)),
            Node::Maj3(cs) => Node::Maj3(rec(cs)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Or,
    And,
    Maj3,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CircuitNode {
    Var(usize),
    Const(Sign),
    Gate { gate: Gate, children: Vec<usize> },
}

/// Validated, flattened composition tree.
#[derive(Clone, Debug)]
pub struct Circuit {
    nodes: Vec<CircuitNode>,
    ranges: Vec<Range<usize>>,
    n: usize,
}

impl Circuit {
    pub fn compile(root: &Node) -> Result<Self> {
        let mut builder = Builder::default();
        builder.visit(root)?;
        let n = builder.seen.len();
        if builder.seen.iter().any(|&s| !s) {
            return Err(Error::invalid(format!(
                "variables of the circuit do not cover 0..{n}"
            )));
        }
        Ok(Circuit {
            nodes: builder.nodes,
            ranges: builder.ranges,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: usize) -> &CircuitNode {
        &self.nodes[id]
    }

    /// Variables read by the subtree rooted at `id`.
    pub fn range(&self, id: usize) -> Range<usize> {
        self.ranges[id].clone()
    }

    pub fn children(&self, id: usize) -> &[usize] {
        match &self.nodes[id] {
            CircuitNode::Gate { children, .. } => children,
            _ => &[],
        }
    }

    pub fn has_negation(&self) -> bool {
        self.nodes
            .iter()
            .any(|n| matches!(n, CircuitNode::Gate { gate: Gate::Not, .. }))
    }

    /// Harmonic extension of the subtree at `id`, evaluated at `x`.
    pub fn harmonic(&self, id: usize, x: &[f64]) -> f64 {
        match &self.nodes[id] {
            CircuitNode::Var(i) => x[*i],
            CircuitNode::Const(s) => s.value(),
            CircuitNode::Gate { gate, children } => match gate {
                Gate::Not => -self.harmonic(children[0], x),
                Gate::Or => {
                    let all_false: f64 = children
                        .iter()
                        .map(|&c| 0.5 * (1.0 - self.harmonic(c, x)))
                        .product();
                    1.0 - 2.0 * all_false
                }
                Gate::And => {
                    let all_true: f64 = children
                        .iter()
                        .map(|&c| 0.5 * (1.0 + self.harmonic(c, x)))
                        .product();
                    2.0 * all_true - 1.0
                }
                Gate::Maj3 => {
                    let a = self.harmonic(children[0], x);
                    let b = self.harmonic(children[1], x);
                    let c = self.harmonic(children[2], x);
                    0.5 * (a + b + c - a * b * c)
                }
            },
        }
    }

    /// Structural determination of the subtree at `id`: the value forced by the
    /// coordinates of `x` that sit exactly at `±1`, if any.
    pub fn determined(&self, id: usize, x: &[f64]) -> Option<Sign> {
        match &self.nodes[id] {
            CircuitNode::Var(i) => Sign::from_value(x[*i]),
            CircuitNode::Const(s) => Some(*s),
            CircuitNode::Gate { gate, children } => match gate {
                Gate::Not => self.determined(children[0], x).map(Sign::flip),
                Gate::Or => self.fold_or(children, x, Sign::Plus),
                Gate::And => self.fold_or(children, x, Sign::Minus),
                Gate::Maj3 => {
                    let (mut plus, mut minus) = (0, 0);
                    for &c in children {
                        match self.determined(c, x) {
                            Some(Sign::Plus) => plus += 1,
                            Some(Sign::Minus) => minus += 1,
                            None => {}
                        }
                    }
                    if plus >= 2 {
                        Some(Sign::Plus)
                    } else if minus >= 2 {
                        Some(Sign::Minus)
                    } else {
                        None
                    }
                }
            },
        }
    }

    // OR with `absorbing = Plus`, AND with `absorbing = Minus`.
    fn fold_or(&self, children: &[usize], x: &[f64], absorbing: Sign) -> Option<Sign> {
        let mut all_other = true;
        for &c in children {
            match self.determined(c, x) {
                Some(s) if s == absorbing => return Some(absorbing),
                Some(_) => {}
                None => all_other = false,
            }
        }
        all_other.then(|| absorbing.flip())
    }

    /// Rebuilds the subtree at `id` as a [`Node`] with its variables renumbered
    /// to start at 0.
    pub fn subtree(&self, id: usize) -> Node {
        let offset = self.ranges[id].start;
        self.to_node(id, offset)
    }

    fn to_node(&self, id: usize, offset: usize) -> Node {
        match &self.nodes[id] {
            CircuitNode::Var(i) => Node::Var(i - offset),
            CircuitNode::Const(s) => Node::Const(*s),
            CircuitNode::Gate { gate, children } => {
                let cs: Vec<Node> = children.iter().map(|&c| self.to_node(c, offset)).collect();
                match gate {
                    Gate::Not => Node::Not(Box::new(cs.into_iter().next().expect("arity"))),
                    Gate::Or => Node::Or(cs),
                    Gate::And => Node::And(cs),
                    Gate::Maj3 => Node::Maj3(cs),
                }
            }
        }
    }

    pub fn restrict(&self, var: usize, value: Sign) -> Result<Circuit> {
        if var >= self.n {
            return Err(Error::invalid(format!(
                "coordinate {var} out of range for {} variables",
                self.n
            )));
        }
        Circuit::compile(&self.to_node(0, 0).restricted(var, value))
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<CircuitNode>,
    ranges: Vec<Range<usize>>,
    seen: Vec<bool>,
}

impl Builder {
    /// Returns (id, number of variables, min variable, max variable).
    fn visit(&mut self, node: &Node) -> Result<(usize, usize, usize, usize)> {
        let id = self.nodes.len();
        self.nodes.push(CircuitNode::Const(Sign::Plus));
        self.ranges.push(0..0);
        let (gate, children) = match node {
            Node::Var(i) => {
                if *i >= self.seen.len() {
                    self.seen.resize(i + 1, false);
                }
                if self.seen[*i] {
                    return Err(Error::invalid(format!(
                        "overlapping variable blocks: variable {i} used twice"
                    )));
                }
                self.seen[*i] = true;
                self.nodes[id] = CircuitNode::Var(*i);
                self.ranges[id] = *i..i + 1;
                return Ok((id, 1, *i, *i));
            }
            Node::Const(s) => {
                self.nodes[id] = CircuitNode::Const(*s);
                return Ok((id, 0, usize::MAX, 0));
            }
            Node::Not(c) => (Gate::Not, std::slice::from_ref(c.as_ref())),
            Node::Or(cs) => (Gate::Or, cs.as_slice()),
            Node::And(cs) => (Gate::And, cs.as_slice()),
            Node::Maj3(cs) => (Gate::Maj3, cs.as_slice()),
        };
        let arity_ok = match gate {
            Gate::Not => children.len() == 1,
            Gate::Or | Gate::And => children.len() >= 2,
            Gate::Maj3 => children.len() == 3,
        };
        if !arity_ok {
            return Err(Error::invalid(format!(
                "{gate:?} gate with {} children",
                children.len()
            )));
        }
        let mut ids = Vec::with_capacity(children.len());
        let (mut count, mut lo, mut hi) = (0, usize::MAX, 0);
        for child in children {
            let (cid, c, clo, chi) = self.visit(child)?;
            ids.push(cid);
            if c > 0 {
                count += c;
                lo = lo.min(clo);
                hi = hi.max(chi);
            }
        }
        if count > 0 && hi - lo + 1 != count {
            return Err(Error::invalid(format!(
                "variable block {lo}..={hi} of a {gate:?} gate is not contiguous"
            )));
        }
        self.nodes[id] = CircuitNode::Gate {
            gate,
            children: ids,
        };
        self.ranges[id] = if count > 0 { lo..hi + 1 } else { 0..0 };
        Ok((id, count, lo, hi))
    }
}
