//! Jump size 1: decision trees over partial assignments `{-1, *, 1}^n`.

use std::collections::HashMap;

use num_rational::Ratio;

use crate::boolean_fn::BooleanFunction;
use crate::rng::run_rng;
use crate::strategies::{Decision, DecisionContext, Strategy};
use crate::{Error, Result};

/// Largest number of variables accepted by the exact tree computations.
pub const MAX_TREE_BITS: usize = 16;

fn check_size(f: &BooleanFunction) -> Result<()> {
    if f.n() > MAX_TREE_BITS {
        return Err(Error::Resource(format!(
            "{} variables exceed the limit of {MAX_TREE_BITS} for exact tree costs",
            f.n()
        )));
    }
    Ok(())
}

/// Minimum expected number of queries of a decision tree computing `f`.
pub fn optimal_decision_tree_cost(f: &BooleanFunction) -> Result<Ratio<i64>> {
    check_size(f)?;
    let n = f.n();
    let table = f.table()?;
    let states = 3usize.pow(n as u32);
    let pow3: Vec<usize> = (0..n).map(|i| 3usize.pow(i as u32)).collect();
    // Costs scaled by 2^n are integers.
    let scale = 1i64 << n;
    let mut lo = vec![0.0f64; states];
    let mut hi = vec![0.0f64; states];
    let mut cost = vec![0i64; states];
    for s in 0..states {
        let mut first_free = None;
        let mut vertex = 0usize;
        let mut rest = s;
        for i in 0..n {
            match rest % 3 {
                1 => vertex |= 1 << i,
                2 if first_free.is_none() => first_free = Some(i),
                _ => {}
            }
            rest /= 3;
        }
        let Some(i) = first_free else {
            lo[s] = table[vertex];
            hi[s] = table[vertex];
            continue;
        };
        let (minus, plus) = (s - 2 * pow3[i], s - pow3[i]);
        lo[s] = lo[minus].min(lo[plus]);
        hi[s] = hi[minus].max(hi[plus]);
        if lo[s] == hi[s] {
            continue;
        }
        let mut best = i64::MAX;
        let mut rest = s;
        for &p in &pow3 {
            if rest % 3 == 2 {
                best = best.min(scale + (cost[s - 2 * p] + cost[s - p]) / 2);
            }
            rest /= 3;
        }
        cost[s] = best;
    }
    Ok(Ratio::new(cost[states - 1], scale))
}

/// Partial assignment: `free` marks unread bits, `plus` the bits read as `+1`.
#[derive(Clone, Copy, Hash, PartialEq, Eq)]
struct Partial {
    free: u32,
    plus: u32,
}

impl Partial {
    fn root(n: usize) -> Self {
        Partial {
            free: ((1u64 << n) - 1) as u32,
            plus: 0,
        }
    }

    fn point(self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                if self.free >> i & 1 == 1 {
                    0.0
                } else if self.plus >> i & 1 == 1 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect()
    }

    fn children(self, i: usize) -> (Partial, Partial) {
        let free = self.free & !(1 << i);
        (
            Partial {
                free,
                plus: self.plus,
            },
            Partial {
                free,
                plus: self.plus | 1 << i,
            },
        )
    }
}

/// Expected number of queries of the tree that reads `strategy`'s choice at
/// every partial assignment (unread bits presented as 0).
pub fn tree_strategy_cost(f: &BooleanFunction, strategy: &dyn Strategy) -> Result<Ratio<i64>> {
    check_size(f)?;
    let mut walker = StrategyTree {
        f,
        strategy,
        memo: HashMap::new(),
    };
    walker.cost(Partial::root(f.n()))
}

struct StrategyTree<'a> {
    f: &'a BooleanFunction,
    strategy: &'a dyn Strategy,
    memo: HashMap<Partial, Ratio<i64>>,
}

impl StrategyTree<'_> {
    fn cost(&mut self, p: Partial) -> Result<Ratio<i64>> {
        if let Some(&c) = self.memo.get(&p) {
            return Ok(c);
        }
        let x = p.point(self.f.n());
        let c = if self.f.determined(&x).is_some() {
            Ratio::from_integer(0)
        } else {
            let mut rng = run_rng(0, 0);
            let mut ctx = DecisionContext {
                time: 0,
                run_key: 0,
                rng: &mut rng,
            };
            let i = match self.strategy.decide(self.f, &x, &mut ctx)? {
                Decision::Query(i) if i < self.f.n() && p.free >> i & 1 == 1 => i,
                other => {
                    return Err(Error::StrategyFault(format!(
                        "{} returned {other:?} at partial assignment {x:?}",
                        self.strategy.id()
                    )))
                }
            };
            let (minus, plus) = p.children(i);
            Ratio::from_integer(1) + (self.cost(minus)? + self.cost(plus)?) / 2
        };
        self.memo.insert(p, c);
        Ok(c)
    }
}

/// How ties between equally influential bits are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieRule {
    LowestIndex,
    /// Average over a uniformly random choice among the tied bits.
    UniformRandom,
}

/// Expected cost of the tree that always reads a bit of maximal influence in
/// the current restriction of `f`.
pub fn influence_tree_cost(f: &BooleanFunction, rule: TieRule) -> Result<Ratio<i64>> {
    check_size(f)?;
    let table = f.table()?;
    let mut walker = InfluenceTree {
        table: &table,
        n: f.n(),
        rule,
        memo: HashMap::new(),
    };
    Ok(walker.cost(Partial::root(f.n())))
}

struct InfluenceTree<'t> {
    table: &'t [f64],
    n: usize,
    rule: TieRule,
    memo: HashMap<Partial, Ratio<i64>>,
}

impl InfluenceTree<'_> {
    /// Number of completions of the other free bits on which bit `i` is pivotal.
    fn pivotal(&self, p: Partial, i: usize) -> u64 {
        let bit = 1u32 << i;
        let others = p.free & !bit;
        let mut count = 0;
        let mut sub = others;
        loop {
            let at = (p.plus | sub) as usize;
            if self.table[at] != self.table[at | bit as usize] {
                count += 1;
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & others;
        }
        count
    }

    fn constant(&self, p: Partial) -> bool {
        let first = self.table[p.plus as usize];
        let mut sub = p.free;
        while sub != 0 {
            if self.table[(p.plus | sub) as usize] != first {
                return false;
            }
            sub = (sub - 1) & p.free;
        }
        true
    }

    fn cost(&mut self, p: Partial) -> Ratio<i64> {
        if let Some(&c) = self.memo.get(&p) {
            return c;
        }
        let c = if self.constant(p) {
            Ratio::from_integer(0)
        } else {
            let free: Vec<usize> = (0..self.n).filter(|&i| p.free >> i & 1 == 1).collect();
            let counts: Vec<u64> = free.iter().map(|&i| self.pivotal(p, i)).collect();
            let top = *counts.iter().max().expect("non-constant has a free bit");
            let tied: Vec<usize> = free
                .iter()
                .zip(&counts)
                .filter(|(_, &c)| c == top)
                .map(|(&i, _)| i)
                .collect();
            let chosen = match self.rule {
                TieRule::LowestIndex => &tied[..1],
                TieRule::UniformRandom => &tied[..],
            };
            let total: Ratio<i64> = chosen
                .iter()
                .map(|&i| {
                    let (minus, plus) = p.children(i);
                    Ratio::from_integer(1) + (self.cost(minus) + self.cost(plus)) / 2
                })
                .sum();
            total / chosen.len() as i64
        };
        self.memo.insert(p, c);
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_fn::zoo;
    use crate::strategies::SMax;

    #[test]
    fn small_optimal_trees() {
        assert_eq!(optimal_decision_tree_cost(&zoo::or(2)).unwrap(), Ratio::new(3, 2));
        assert_eq!(optimal_decision_tree_cost(&zoo::maj3()).unwrap(), Ratio::new(5, 2));
        assert_eq!(
            optimal_decision_tree_cost(&zoo::parity(4)).unwrap(),
            Ratio::from_integer(4)
        );
    }

    #[test]
    fn strategy_trees() {
        assert_eq!(tree_strategy_cost(&zoo::parity(3), &SMax).unwrap(), Ratio::from_integer(3));
        assert_eq!(tree_strategy_cost(&zoo::or(2), &SMax).unwrap(), Ratio::new(3, 2));
    }

    #[test]
    fn influence_tree_on_or() {
        for rule in [TieRule::LowestIndex, TieRule::UniformRandom] {
            assert_eq!(influence_tree_cost(&zoo::or(3), rule).unwrap(), Ratio::new(7, 4));
        }
    }
}
