//! Fractional random-turn games.
//!
//! Positions live on the grid `(1/M) Z^n ∩ [-1, 1]^n`. Each turn a fair coin
//! picks a player; player I moves a live coordinate up by `1/M`, player II
//! moves one down. A coordinate that reaches `±1` is frozen, and the game ends
//! at a vertex with payoff `f(vertex)` to player I.

use num_rational::Ratio;
use num_traits::Float;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean_fn::BooleanFunction;
use crate::jump_process::{estimate, RunConfig, RunStats};
use crate::rng::{run_key, run_rng, RunRng};
use crate::stats::Estimate;
use crate::strategies::{Decision, DecisionContext, MaxDerivative, MiddleBit, Strategy};
use crate::{Error, Result};

/// Exact value of a finite double as a fraction, if its denominator fits.
fn exact_ratio(v: f64) -> Option<Ratio<i64>> {
    if !v.is_finite() {
        return None;
    }
    let (mut mantissa, mut exponent, sign) = v.integer_decode();
    if mantissa == 0 {
        return Some(Ratio::from_integer(0));
    }
    let tz = mantissa.trailing_zeros();
    mantissa >>= tz;
    exponent += tz as i16;
    let numer = i64::from(sign) * i64::try_from(mantissa).ok()?;
    if exponent >= 0 {
        return numer.checked_shl(exponent as u32).map(Ratio::from_integer);
    }
    let shift = u32::try_from(-i32::from(exponent)).ok().filter(|&s| s < 63)?;
    Some(Ratio::new(numer, 1i64 << shift))
}

/// Parses a decimal such as `-0.375` or a fraction such as `3/8` exactly.
pub fn parse_rational(s: &str) -> Result<Ratio<i64>> {
    let bad = || Error::invalid(format!("`{s}` is not a decimal or fraction"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b): (i64, i64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(a, b));
    }
    let (neg, digits) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || frac.len() > 17 {
        return Err(bad());
    }
    let all: String = format!("{int}{frac}");
    if !all.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let numer: i64 = all.parse().map_err(|_| bad())?;
    let denom = 10i64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
    let r = Ratio::new(numer, denom);
    Ok(if neg { -r } else { r })
}

/// A start point validated to lie on the `1/M` grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameStart {
    m: i64,
    grid: Vec<i64>,
}

impl GameStart {
    pub fn from_rationals(p: &[Ratio<i64>], m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("M must be a positive integer"));
        }
        let m = i64::from(m);
        let grid = p
            .iter()
            .map(|&v| {
                let scaled = v * m;
                if !scaled.is_integer() || scaled.to_integer().abs() > m {
                    return Err(Error::invalid(format!(
                        "start coordinate {v} is not a multiple of 1/{m} in [-1, 1]"
                    )));
                }
                Ok(scaled.to_integer())
            })
            .collect::<Result<_>>()?;
        Ok(GameStart { m, grid })
    }

    pub fn from_f64(p: &[f64], m: u32) -> Result<Self> {
        let exact = p
            .iter()
            .map(|&v| {
                exact_ratio(v).ok_or_else(|| {
                    Error::invalid(format!("start coordinate {v} is not on any 1/{m} grid"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rationals(&exact, m)
    }

    pub fn m(&self) -> u32 {
        self.m as u32
    }

    pub fn epsilon(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn point(&self) -> Vec<f64> {
        self.grid.iter().map(|&a| a as f64 / self.m as f64).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Player {
    #[serde(rename = "I")]
    First,
    #[serde(rename = "II")]
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Move {
    pub player: Player,
    /// 1-based coordinate.
    pub coordinate: usize,
    /// `+1` or `-1`, in units of `1/M`.
    pub direction: i8,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub start: Vec<f64>,
    #[serde(rename = "M")]
    pub m: u32,
    pub epsilon: f64,
    pub moves: Vec<Move>,
    pub terminal: Vec<f64>,
    pub payoff: f64,
}

impl GameRecord {
    /// Position after the first `turns` moves.
    pub fn position_after(&self, turns: usize) -> Vec<f64> {
        let m = f64::from(self.m);
        let mut grid: Vec<f64> = self.start.iter().map(|v| (v * m).round()).collect();
        for mv in self.moves.iter().take(turns) {
            grid[mv.coordinate - 1] += f64::from(mv.direction);
        }
        grid.iter().map(|a| a / m).collect()
    }
}

/// Turn limit; a game lasts about `n M²` turns on average.
pub fn turn_cap(n: usize, m: u32) -> u64 {
    (100 * n as u64 * u64::from(m).pow(2)).max(1_000_000)
}

pub fn play(
    f: &BooleanFunction,
    start: &GameStart,
    first: &dyn Strategy,
    second: &dyn Strategy,
    rng: &mut RunRng,
    key: u64,
) -> Result<GameRecord> {
    let n = f.n();
    if start.grid.len() != n {
        return Err(Error::invalid(format!(
            "start has {} coordinates, function has {n} variables",
            start.grid.len()
        )));
    }
    let m = start.m;
    let mut grid = start.grid.clone();
    let mut moves = Vec::new();
    let cap = turn_cap(n, start.m());
    let mut turn = 0u64;
    while grid.iter().any(|a| a.abs() < m) {
        if turn >= cap {
            return Err(Error::StepCapExceeded {
                cap,
                position: grid.iter().map(|&a| a as f64 / m as f64).collect(),
            });
        }
        let (player, strategy, direction) = if rng.random::<bool>() {
            (Player::First, first, 1i8)
        } else {
            (Player::Second, second, -1i8)
        };
        let x: Vec<f64> = grid.iter().map(|&a| a as f64 / m as f64).collect();
        let mut ctx = DecisionContext {
            time: turn,
            run_key: key,
            rng,
        };
        let i = match strategy.decide(f, &x, &mut ctx)? {
            Decision::Query(i) if i < n && grid[i].abs() < m => i,
            other => {
                return Err(Error::StrategyFault(format!(
                    "{} returned {other:?} at {x:?}; a live coordinate must be moved",
                    strategy.id()
                )))
            }
        };
        grid[i] += i64::from(direction);
        moves.push(Move {
            player,
            coordinate: i + 1,
            direction,
        });
        turn += 1;
    }
    let terminal: Vec<f64> = grid.iter().map(|&a| a.signum() as f64).collect();
    Ok(GameRecord {
        start: start.point(),
        m: start.m(),
        epsilon: start.epsilon(),
        payoff: f.harmonic_unchecked(&terminal),
        terminal,
        moves,
    })
}

/// Plays game `run` of master seed `seed`.
pub fn play_seeded(
    f: &BooleanFunction,
    start: &GameStart,
    first: &dyn Strategy,
    second: &dyn Strategy,
    seed: u64,
    run: u64,
) -> Result<GameRecord> {
    let mut rng = run_rng(seed, run);
    play(f, start, first, second, &mut rng, run_key(seed, run))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValueEstimate {
    pub function_id: String,
    pub start: Vec<f64>,
    #[serde(rename = "M")]
    pub m: u32,
    pub runs: u64,
    pub seed: u64,
    pub mean_payoff: f64,
    pub stderr: f64,
    /// Harmonic extension of `f` at the start.
    pub harmonic_value: f64,
    /// `|mean - harmonic_value| / stderr`.
    pub z: f64,
    pub mean_turns: f64,
}

/// Mean payoff when both players read a bit of maximal derivative.
pub fn game_value_estimate(
    f: &BooleanFunction,
    start: &GameStart,
    runs: u64,
    seed: u64,
) -> Result<ValueEstimate> {
    if runs == 0 {
        return Err(Error::invalid("need at least one game"));
    }
    let games: Vec<(f64, f64)> = (0..runs)
        .into_par_iter()
        .map(|r| {
            play_seeded(f, start, &MaxDerivative, &MaxDerivative, seed, r)
                .map(|g| (g.payoff, g.moves.len() as f64))
                .map_err(|e| Error::Run {
                    run: r,
                    source: Box::new(e),
                })
        })
        .collect::<Result<_>>()?;
    let payoffs: Vec<f64> = games.iter().map(|g| g.0).collect();
    let turns: Vec<f64> = games.iter().map(|g| g.1).collect();
    let est = Estimate::from_samples(&payoffs);
    let harmonic_value = f.harmonic(&start.point())?;
    Ok(ValueEstimate {
        function_id: f.id().to_string(),
        start: start.point(),
        m: start.m(),
        runs,
        seed,
        mean_payoff: est.mean,
        stderr: est.stderr,
        harmonic_value,
        z: est.z_from(harmonic_value),
        mean_turns: Estimate::from_samples(&turns).mean,
    })
}

/// Start used for the middle-bit comparison: distinct positive entries.
pub const MAJ3_COMPARISON_START: [f64; 3] = [0.125, 0.25, 0.375];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostComparison {
    pub start: Vec<f64>,
    pub epsilon: f64,
    pub middle: RunStats,
    pub max_derivative: RunStats,
    /// `cost(middle) ≤ cost(max_derivative) + 4 · combined stderr`.
    pub consistent: bool,
}

/// Single-player costs on MAJ3 of always moving the middle bit versus the
/// bit of maximal derivative, with jump size `1/M`.
pub fn cost_comparison_maj3(m: u32, runs: u64, seed: u64) -> Result<CostComparison> {
    let f = crate::boolean_fn::zoo::maj3();
    let start = GameStart::from_f64(&MAJ3_COMPARISON_START, m)?;
    let config = RunConfig::new(start.epsilon());
    let x0 = start.point();
    let middle = estimate(&f, &MiddleBit, &x0, &config, runs, seed)?;
    let maxd = estimate(&f, &MaxDerivative, &x0, &config, runs, seed)?;
    let se = (middle.stderr.powi(2) + maxd.stderr.powi(2)).sqrt();
    Ok(CostComparison {
        start: x0,
        epsilon: config.epsilon,
        consistent: middle.mean_cost <= maxd.mean_cost + 4.0 * se,
        middle,
        max_derivative: maxd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean_fn::zoo;

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("-0.375").unwrap(), Ratio::new(-3, 8));
        assert_eq!(parse_rational("3/8").unwrap(), Ratio::new(3, 8));
        assert_eq!(parse_rational("0.1").unwrap(), Ratio::new(1, 10));
        assert_eq!(parse_rational(".5").unwrap(), Ratio::new(1, 2));
        assert!(parse_rational("1e-3").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn grid_membership_is_exact() {
        let tenth = parse_rational("0.1").unwrap();
        assert!(GameStart::from_rationals(&[tenth], 10).is_ok());
        assert!(GameStart::from_f64(&[0.1], 10).is_err());
        assert!(GameStart::from_f64(&[0.25, -0.75], 4).is_ok());
        assert!(GameStart::from_f64(&[0.25], 2).is_err());
        assert!(GameStart::from_f64(&[1.5], 2).is_err());
    }

    #[test]
    fn one_bit_game_is_a_coin_flip() {
        let f = zoo::dictator(1, 0).unwrap();
        let start = GameStart::from_f64(&[0.0], 1).unwrap();
        let payoffs: Vec<f64> = (0..400)
            .map(|r| play_seeded(&f, &start, &MaxDerivative, &MaxDerivative, 1, r).unwrap())
            .map(|g| {
                assert_eq!(g.moves.len(), 1);
                g.payoff
            })
            .collect();
        let plus = payoffs.iter().filter(|&&p| p == 1.0).count();
        assert!((150..250).contains(&plus));
    }

    #[test]
    fn games_end_at_vertices_and_replay() {
        let f = zoo::maj3();
        let start = GameStart::from_f64(&[0.0; 3], 2).unwrap();
        let a = play_seeded(&f, &start, &MaxDerivative, &MaxDerivative, 4, 2).unwrap();
        let b = play_seeded(&f, &start, &MaxDerivative, &MaxDerivative, 4, 2).unwrap();
        assert_eq!(a, b);
        assert!(a.terminal.iter().all(|v| v.abs() == 1.0));
        assert_eq!(a.position_after(a.moves.len()), a.terminal);
        assert!(a.payoff.abs() == 1.0);
    }

    /// Moves coordinate 1 whether or not it is frozen.
    struct Stubborn;

    impl Strategy for Stubborn {
        fn id(&self) -> String {
            "stubborn".into()
        }

        fn decide(&self, _: &BooleanFunction, _: &[f64], _: &mut DecisionContext<'_>) -> Result<Decision> {
            Ok(Decision::Query(0))
        }
    }

    #[test]
    fn frozen_pick_is_a_fault() {
        let f = zoo::or(2);
        let start = GameStart::from_f64(&[1.0, 0.0], 2).unwrap();
        let err = play_seeded(&f, &start, &Stubborn, &Stubborn, 0, 0).unwrap_err();
        assert!(matches!(err, Error::StrategyFault(_)));
    }
}
