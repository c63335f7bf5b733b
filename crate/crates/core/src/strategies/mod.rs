//! Direction-choosing strategies behind one interface.
//!
//! Coordinates are 0-based in this API. Ties are broken towards the lowest
//! index unless a strategy says otherwise.

mod tree;

use std::path::Path;
use std::sync::Arc;

use rand::Rng;

use crate::boolean_fn::BooleanFunction;
use crate::dp_solver::{self, Solution, SolveOptions};
use crate::rng::RunRng;
use crate::{Error, Result};

pub use tree::{or_criterion, BlockState, CostModel, Junction, OrHeuristic, TreeHeuristic, TwoSubtrees};

/// Tolerance under which two partial derivatives count as tied.
pub const DERIVATIVE_TIE_TOLERANCE: f64 = 1e-12;

pub const STRATEGY_IDS: &[&str] = &[
    "s_max",
    "max_derivative",
    "random_unread",
    "dp_policy",
    "dp_policy:<field-file>",
    "or_heuristic:exact",
    "or_heuristic:proxy",
    "itmaj",
    "two_subtrees",
    "middle",
    "order:<i>,<j>,...",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Query(usize),
    /// Lazy step: nothing moves and nothing is charged.
    Idle,
}

/// Per-call state handed to a strategy.
pub struct DecisionContext<'a> {
    pub time: u64,
    /// Fixed for a whole run; lets strategies make per-run random choices
    /// without consuming the step stream.
    pub run_key: u64,
    pub rng: &'a mut RunRng,
}

pub trait Strategy: Send + Sync {
    fn id(&self) -> String;

    fn decide(
        &self,
        f: &BooleanFunction,
        x: &[f64],
        ctx: &mut DecisionContext<'_>,
    ) -> Result<Decision>;

    /// Remarks attached to run reports, e.g. unmet assumptions.
    fn notes(&self, _f: &BooleanFunction) -> Vec<String> {
        Vec::new()
    }

    /// Whether the decision depends on the position alone.
    fn is_markov(&self) -> bool {
        true
    }
}

pub fn is_live(v: f64) -> bool {
    v > -1.0 && v < 1.0
}

fn no_live(x: &[f64]) -> Error {
    Error::invalid(format!("no live coordinate at {x:?}"))
}

/// Largest live coordinate.
pub fn s_max(x: &[f64]) -> Result<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in x.iter().enumerate() {
        if is_live(v) && best.is_none_or(|b| v > x[b]) {
            best = Some(i);
        }
    }
    best.ok_or_else(|| no_live(x))
}

/// Live coordinate with the largest partial derivative of `f`.
pub fn max_derivative(f: &BooleanFunction, x: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in x.iter().enumerate() {
        if !is_live(v) {
            continue;
        }
        let d = f.derivative_unchecked(i, x);
        if best.is_none_or(|(_, b)| d > b + DERIVATIVE_TIE_TOLERANCE) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| no_live(x))
}

pub fn random_unread<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Result<usize> {
    let live: Vec<usize> = (0..x.len()).filter(|&i| is_live(x[i])).collect();
    if live.is_empty() {
        return Err(no_live(x));
    }
    Ok(live[rng.random_range(0..live.len())])
}

/// Coordinate holding the lower median value; ties by index. Falls back to the
/// first live coordinate if the median is frozen.
pub fn middle_bit(x: &[f64]) -> Result<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    let median = order[(x.len() - 1) / 2];
    if is_live(x[median]) {
        return Ok(median);
    }
    (0..x.len()).find(|&i| is_live(x[i])).ok_or_else(|| no_live(x))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct SMax;

impl Strategy for SMax {
    fn id(&self) -> String {
        "s_max".into()
    }

    fn decide(&self, _: &BooleanFunction, x: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
        s_max(x).map(Decision::Query)
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MaxDerivative;

impl Strategy for MaxDerivative {
    fn id(&self) -> String {
        "max_derivative".into()
    }

    fn decide(&self, f: &BooleanFunction, x: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
        max_derivative(f, x).map(Decision::Query)
    }

    fn notes(&self, f: &BooleanFunction) -> Vec<String> {
        match f.is_monotone() {
            Some(true) => Vec::new(),
            Some(false) => vec!["max_derivative used on a non-monotone function".into()],
            None => vec!["monotonicity of the function was not checked".into()],
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RandomUnread;

impl Strategy for RandomUnread {
    fn id(&self) -> String {
        "random_unread".into()
    }

    fn decide(&self, _: &BooleanFunction, x: &[f64], ctx: &mut DecisionContext<'_>) -> Result<Decision> {
        random_unread(x, ctx.rng).map(Decision::Query)
    }

    fn is_markov(&self) -> bool {
        false
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct MiddleBit;

impl Strategy for MiddleBit {
    fn id(&self) -> String {
        "middle".into()
    }

    fn decide(&self, _: &BooleanFunction, x: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
        middle_bit(x).map(Decision::Query)
    }
}

/// Reads the first live coordinate in a fixed order.
#[derive(Clone, Debug)]
pub struct FixedOrder {
    order: Vec<usize>,
}

impl FixedOrder {
    pub fn new(order: Vec<usize>) -> Self {
        FixedOrder { order }
    }
}

impl Strategy for FixedOrder {
    fn id(&self) -> String {
        let order: Vec<String> = self.order.iter().map(|i| (i + 1).to_string()).collect();
        format!("order:{}", order.join(","))
    }

    fn decide(&self, _: &BooleanFunction, x: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
        self.order
            .iter()
            .copied()
            .find(|&i| x.get(i).is_some_and(|&v| is_live(v)))
            .map(Decision::Query)
            .ok_or_else(|| {
                Error::StrategyFault(format!("no coordinate of {} is live at {x:?}", self.id()))
            })
    }
}

/// Optimal Markov policy from a solved lattice.
#[derive(Clone, Debug)]
pub struct DpPolicy {
    solution: Arc<Solution>,
    source: Option<String>,
}

impl DpPolicy {
    pub fn new(solution: Arc<Solution>) -> Self {
        DpPolicy {
            solution,
            source: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let solution = dp_solver::read_field(std::io::BufReader::new(file))?;
        Ok(DpPolicy {
            solution: Arc::new(solution),
            source: Some(path.display().to_string()),
        })
    }

    pub fn solution(&self) -> &Solution {
        &self.solution
    }
}

impl Strategy for DpPolicy {
    fn id(&self) -> String {
        match &self.source {
            Some(p) => format!("dp_policy:{p}"),
            None => "dp_policy".into(),
        }
    }

    fn decide(&self, f: &BooleanFunction, x: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
        if f.n() != self.solution.policy.lattice.n() {
            return Err(Error::invalid(format!(
                "policy is for {} variables, function has {}",
                self.solution.policy.lattice.n(),
                f.n()
            )));
        }
        match self.solution.policy.direction_at(x)? {
            Some(i) => Ok(Decision::Query(i)),
            None => Err(Error::StrategyFault(format!(
                "policy has no direction at {x:?}"
            ))),
        }
    }

    fn notes(&self, f: &BooleanFunction) -> Vec<String> {
        if f.id() == self.solution.field.function_id {
            Vec::new()
        } else {
            vec![format!(
                "policy was solved for {}",
                self.solution.field.function_id
            )]
        }
    }
}

/// `-log2 ε` for a dyadic jump size.
pub fn dyadic_level(epsilon: f64) -> Result<u32> {
    let level = -epsilon.log2();
    if !(level >= 0.0 && level == level.round() && level <= 30.0) {
        return Err(Error::invalid(format!(
            "jump size {epsilon} is not of the form 2^-k"
        )));
    }
    Ok(level as u32)
}

/// Builds a strategy from its configuration id. `epsilon` is the jump size
/// of the runs it will drive; lattice-based strategies are solved at it.
pub fn from_id(id: &str, f: &BooleanFunction, epsilon: f64) -> Result<Box<dyn Strategy>> {
    from_id_with(id, f, epsilon, &SolveOptions::default())
}

/// [`from_id`] with explicit options for the lattice solves.
pub fn from_id_with(
    id: &str,
    f: &BooleanFunction,
    epsilon: f64,
    opts: &SolveOptions,
) -> Result<Box<dyn Strategy>> {
    let (head, arg) = match id.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (id, None),
    };
    let strategy: Box<dyn Strategy> = match (head, arg) {
        ("s_max", None) => Box::new(SMax),
        ("max_derivative", None) => Box::new(MaxDerivative),
        ("random_unread", None) => Box::new(RandomUnread),
        ("middle", None) => Box::new(MiddleBit),
        ("itmaj", None) => Box::new(TreeHeuristic),
        ("two_subtrees", None) => Box::new(TwoSubtrees),
        ("dp_policy", None) => {
            let s = dp_solver::solve_with(f, dyadic_level(epsilon)?, opts)?;
            Box::new(DpPolicy::new(Arc::new(s)))
        }
        ("dp_policy", Some(path)) => Box::new(DpPolicy::load(Path::new(path))?),
        ("or_heuristic", Some("proxy")) => Box::new(OrHeuristic::proxy()),
        ("or_heuristic", Some("exact")) => {
            Box::new(OrHeuristic::exact_with(f, dyadic_level(epsilon)?, opts)?)
        }
        ("order", Some(list)) => {
            let order = list
                .split(',')
                .map(|s| match s.trim().parse::<usize>() {
                    Ok(i) if (1..=f.n()).contains(&i) => Ok(i - 1),
                    _ => Err(Error::invalid(format!("bad coordinate `{s}` in `{id}`"))),
                })
                .collect::<Result<_>>()?;
            Box::new(FixedOrder::new(order))
        }
        _ => {
            return Err(Error::invalid(format!(
                "unknown strategy `{id}`; valid ids: {}",
                STRATEGY_IDS.join(", ")
            )))
        }
    };
    Ok(strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_fn::zoo;
    use crate::rng::run_rng;

    fn decide(s: &dyn Strategy, f: &BooleanFunction, x: &[f64], seed: u64) -> Decision {
        let mut rng = run_rng(seed, 0);
        let mut ctx = DecisionContext {
            time: 0,
            run_key: seed,
            rng: &mut rng,
        };
        s.decide(f, x, &mut ctx).unwrap()
    }

    #[test]
    fn s_max_examples() {
        assert_eq!(s_max(&[0.25, -0.5, 0.25]).unwrap(), 0);
        assert_eq!(s_max(&[-0.9, 0.7]).unwrap(), 1);
        assert_eq!(s_max(&[1.0, 0.2, 0.5]).unwrap(), 2);
        assert!(s_max(&[1.0, -1.0]).is_err());
    }

    #[test]
    fn max_derivative_examples() {
        let maj = zoo::maj3();
        assert_eq!(max_derivative(&maj, &[0.1, 0.2, 0.3]).unwrap(), 2);
        assert_eq!(max_derivative(&maj, &[0.0, 0.0, 0.0]).unwrap(), 0);
        assert_eq!(max_derivative(&zoo::or(2), &[0.5, -0.5]).unwrap(), 0);
    }

    #[test]
    fn random_unread_is_reproducible_and_live() {
        let f = zoo::or(3);
        let x = [1.0, 0.0, 0.0];
        let a = decide(&RandomUnread, &f, &x, 5);
        assert_eq!(a, decide(&RandomUnread, &f, &x, 5));
        assert_ne!(a, Decision::Query(0));
    }

    #[test]
    fn middle_bit_picks_median() {
        assert_eq!(middle_bit(&[0.125, 0.25, 0.375]).unwrap(), 1);
        assert_eq!(middle_bit(&[0.5, -0.25, 0.0]).unwrap(), 2);
    }

    #[test]
    fn dp_policy_for_dictator_reads_first_bit() {
        let f = zoo::dictator(2, 0).unwrap();
        let s = from_id("dp_policy", &f, 0.25).unwrap();
        for x in [[0.0, 0.0], [0.5, -0.75], [-0.25, 0.75]] {
            assert_eq!(decide(s.as_ref(), &f, &x, 0), Decision::Query(0));
        }
    }

    #[test]
    fn dp_policy_rejects_off_lattice_points() {
        let f = zoo::or(2);
        let s = from_id("dp_policy", &f, 0.25).unwrap();
        let mut rng = run_rng(0, 0);
        let mut ctx = DecisionContext {
            time: 0,
            run_key: 0,
            rng: &mut rng,
        };
        assert!(s.decide(&f, &[0.1, 0.0], &mut ctx).is_err());
    }

    #[test]
    fn diagonal_policy_is_first_bit() {
        let f = zoo::or(2);
        let s = from_id("dp_policy", &f, 1.0 / 8.0).unwrap();
        for v in [-0.75, -0.25, 0.0, 0.5, 0.875] {
            assert_eq!(decide(s.as_ref(), &f, &[v, v], 0), Decision::Query(0));
        }
    }

    #[test]
    fn unknown_ids_list_valid_ones() {
        let err = from_id("greedy", &zoo::or(2), 1.0).err().unwrap().to_string();
        assert!(err.contains("s_max") && err.contains("itmaj"));
        assert!(from_id("dp_policy", &zoo::or(2), 0.3).is_err());
    }

    #[test]
    fn non_monotone_use_is_flagged() {
        assert!(MaxDerivative.notes(&zoo::maj3()).is_empty());
        assert_eq!(MaxDerivative.notes(&zoo::parity(2)).len(), 1);
    }
}
