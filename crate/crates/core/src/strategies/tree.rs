//! Strategies that walk the composition tree of a composite function.

use std::ops::Range;
use std::sync::Arc;

use super::{is_live, Decision, DecisionContext, Strategy};
use crate::boolean_fn::{BooleanFunction, Circuit, CircuitNode, Gate, Sign};
use crate::dp_solver::{self, Solution, SolveOptions};
use crate::rng::keyed_choice;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Junction {
    Or,
    And,
}

/// Input to [`or_criterion`] for one block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockState {
    /// Expected remaining cost of evaluating the block alone.
    pub cost: f64,
    /// Harmonic extension of the block at its current position.
    pub value: f64,
    pub determined: bool,
}

/// Picks the block minimising `cost / (1 + value)` under OR, or
/// `cost / (1 - value)` under AND. Determined blocks are skipped; a
/// non-positive denominator counts as `+∞`. Ties go to the lowest index.
pub fn or_criterion(blocks: &[BlockState], junction: Junction) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, b) in blocks.iter().enumerate() {
        if b.determined {
            continue;
        }
        let denom = match junction {
            Junction::Or => 1.0 + b.value,
            Junction::And => 1.0 - b.value,
        };
        let ratio = if denom > 0.0 { b.cost / denom } else { f64::INFINITY };
        if best.is_none_or(|(_, r)| ratio < r) {
            best = Some((i, ratio));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::invalid("every block is already determined"))
}

/// `n_c - ‖x_c‖²`: cost of reading every variable of the block.
fn proxy_cost(range: Range<usize>, x: &[f64]) -> f64 {
    x[range].iter().map(|v| 1.0 - v * v).sum()
}

fn circuit_of(f: &BooleanFunction) -> Result<&Circuit> {
    f.circuit()
        .ok_or_else(|| Error::invalid(format!("{} is not a composite function", f.id())))
}

fn block_state(c: &Circuit, id: usize, x: &[f64]) -> BlockState {
    BlockState {
        cost: proxy_cost(c.range(id), x),
        value: c.harmonic(id, x),
        determined: c.determined(id, x).is_some(),
    }
}

/// Chooses among undetermined children of an OR/AND junction by the proxy
/// criterion.
fn by_criterion(c: &Circuit, children: &[usize], x: &[f64], junction: Junction) -> Result<usize> {
    let states: Vec<BlockState> = children.iter().map(|&ch| block_state(c, ch, x)).collect();
    Ok(children[or_criterion(&states, junction)?])
}

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

#[derive(Clone, Copy)]
enum Walk {
    /// Random child until one is determined, then the proxy criterion.
    Heuristic,
    /// Children in a per-node random order, each read to completion.
    Baseline,
}

fn descend(c: &Circuit, mut id: usize, x: &[f64], key: u64, walk: Walk) -> Result<usize> {
    loop {
        let children = c.children(id);
        id = match c.node(id) {
            CircuitNode::Var(i) if is_live(x[*i]) => return Ok(*i),
            CircuitNode::Var(_) | CircuitNode::Const(_) => {
                return Err(Error::StrategyFault(format!(
                    "descended into determined node {id}"
                )))
            }
            CircuitNode::Gate { gate: Gate::Not, .. } => children[0],
            CircuitNode::Gate { gate, .. } => {
                let undetermined: Vec<usize> = children
                    .iter()
                    .copied()
                    .filter(|&ch| c.determined(ch, x).is_none())
                    .collect();
                if undetermined.is_empty() {
                    return Err(Error::StrategyFault(format!(
                        "node {id} has no undetermined child"
                    )));
                }
                match (walk, gate) {
                    (Walk::Baseline, Gate::Maj3) => {
                        let perm = PERMUTATIONS[keyed_choice(key, id as u64, 6)];
                        perm.iter()
                            .map(|&p| children[p])
                            .find(|ch| undetermined.contains(ch))
                            .expect("undetermined child exists")
                    }
                    (Walk::Baseline, _) => undetermined[0],
                    (Walk::Heuristic, Gate::Or) => by_criterion(c, children, x, Junction::Or)?,
                    (Walk::Heuristic, Gate::And) => by_criterion(c, children, x, Junction::And)?,
                    (Walk::Heuristic, _) => match undetermined.len() {
                        3 => children[keyed_choice(key, id as u64, 3)],
                        2 => {
                            let settled = children
                                .iter()
                                .find_map(|&ch| c.determined(ch, x))
                                .expect("one child is determined");
                            let junction = match settled {
                                Sign::Plus => Junction::Or,
                                Sign::Minus => Junction::And,
                            };
                            by_criterion(c, &undetermined, x, junction)?
                        }
                        _ => undetermined[0],
                    },
                }
            }
        };
    }
}

fn decide_on_tree(
    f: &BooleanFunction,
    x: &[f64],
    ctx: &DecisionContext<'_>,
    walk: Walk,
) -> Result<Decision> {
    let c = circuit_of(f)?;
    if c.determined(c.root(), x).is_some() {
        return Err(Error::invalid("the function is already determined"));
    }
    descend(c, c.root(), x, ctx.run_key, walk).map(Decision::Query)
}

/// Iterated-majority heuristic: a MAJ node with no settled child descends into
/// a child chosen once per run; once a child is settled the node acts as an
/// OR or AND of the other two and the proxy criterion picks between them.
#[derive(Clone, Copy, Debug, Default)]
pub struct TreeHeuristic;

impl Strategy for TreeHeuristic {
    fn id(&self) -> String {
        "itmaj".into()
    }

    fn decide(&self, f: &BooleanFunction, x: &[f64], ctx: &mut DecisionContext<'_>) -> Result<Decision> {
        decide_on_tree(f, x, ctx, Walk::Heuristic)
    }

    fn is_markov(&self) -> bool {
        false
    }
}

/// Evaluates two random children of each MAJ node, and the third only if
/// they disagree.
#[derive(Clone, Copy, Debug, Default)]
pub struct TwoSubtrees;

impl Strategy for TwoSubtrees {
    fn id(&self) -> String {
        "two_subtrees".into()
    }

    fn decide(&self, f: &BooleanFunction, x: &[f64], ctx: &mut DecisionContext<'_>) -> Result<Decision> {
        decide_on_tree(f, x, ctx, Walk::Baseline)
    }

    fn is_markov(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModel {
    /// Optimal block costs from the lattice solver.
    Exact,
    /// `n_i - ‖x_i‖²`.
    Proxy,
}

#[derive(Debug)]
struct Block {
    node: usize,
    range: Range<usize>,
    solution: Solution,
}

/// For `f = OR(g_1, g_2, ...)` (or AND) on disjoint blocks: pick the block by
/// the ratio criterion, then read a bit inside it with the block's own
/// strategy.
#[derive(Clone, Debug)]
pub struct OrHeuristic {
    model: CostModel,
    blocks: Arc<Vec<Block>>,
}

impl OrHeuristic {
    pub fn proxy() -> Self {
        OrHeuristic {
            model: CostModel::Proxy,
            blocks: Arc::new(Vec::new()),
        }
    }

    /// Solves each block on the lattice of step `2^-level`.
    pub fn exact(f: &BooleanFunction, level: u32) -> Result<Self> {
        Self::exact_with(f, level, &SolveOptions::default())
    }

    pub fn exact_with(f: &BooleanFunction, level: u32, opts: &SolveOptions) -> Result<Self> {
        let c = circuit_of(f)?;
        let root = c.root();
        junction_of(c, root)?;
        let blocks = c
            .children(root)
            .iter()
            .map(|&ch| {
                let g = BooleanFunction::composite(c.subtree(ch))?
                    .with_id(format!("{}#block{}", f.id(), ch));
                Ok(Block {
                    node: ch,
                    range: c.range(ch),
                    solution: dp_solver::solve_with(&g, level, opts)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(OrHeuristic {
            model: CostModel::Exact,
            blocks: Arc::new(blocks),
        })
    }

    pub fn model(&self) -> CostModel {
        self.model
    }
}

fn junction_of(c: &Circuit, id: usize) -> Result<Junction> {
    match c.node(id) {
        CircuitNode::Gate { gate: Gate::Or, .. } => Ok(Junction::Or),
        CircuitNode::Gate { gate: Gate::And, .. } => Ok(Junction::And),
        _ => Err(Error::invalid("the ratio heuristic needs an OR or AND at the root")),
    }
}

impl Strategy for OrHeuristic {
    fn id(&self) -> String {
        match self.model {
            CostModel::Exact => "or_heuristic:exact".into(),
            CostModel::Proxy => "or_heuristic:proxy".into(),
        }
    }

    fn decide(&self, f: &BooleanFunction, x: &[f64], ctx: &mut DecisionContext<'_>) -> Result<Decision> {
        let c = circuit_of(f)?;
        let root = c.root();
        let junction = junction_of(c, root)?;
        if c.determined(root, x).is_some() {
            return Err(Error::invalid("the function is already determined"));
        }
        if self.model == CostModel::Proxy {
            return decide_on_tree(f, x, ctx, Walk::Heuristic);
        }
        if self.blocks.len() != c.children(root).len()
            || self.blocks.iter().zip(c.children(root)).any(|(b, &ch)| b.node != ch)
        {
            return Err(Error::invalid("block solutions do not match the function"));
        }
        let states = self
            .blocks
            .iter()
            .map(|b| {
                let determined = c.determined(b.node, x).is_some();
                let cost = if determined {
                    0.0
                } else {
                    b.solution.field.value_at(&x[b.range.clone()])?
                };
                Ok(BlockState {
                    cost,
                    value: c.harmonic(b.node, x),
                    determined,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let b = &self.blocks[or_criterion(&states, junction)?];
        match b.solution.policy.direction_at(&x[b.range.clone()])? {
            Some(i) => Ok(Decision::Query(b.range.start + i)),
            None => Err(Error::StrategyFault("block policy has no direction".into())),
        }
    }
}
