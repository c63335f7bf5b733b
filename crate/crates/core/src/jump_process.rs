//! Axis-aligned jump processes and Monte-Carlo cost estimation.
//!
//! A step moves one live coordinate `x` to `a` or `b` with probabilities
//! `(b - x) / 2ε` and `(x - a) / 2ε`, where `[a, b] = [x - ε, x + ε]` in the
//! interior and the interval is clamped to `[1 - 2ε, 1]` or `[-1, -1 + 2ε]`
//! when it would leave the cube. Either way the step is a martingale.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boolean_fn::{BooleanFunction, Sign};
use crate::rng::{run_key, run_rng, RunRng};
use crate::stats::Estimate;
use crate::strategies::{Decision, DecisionContext, Strategy};
use crate::{Error, Result};

pub const DEFAULT_STEP_CAP: u64 = 10_000_000;

/// Samples per run used to estimate the L² error of a truncated run.
pub const DEFAULT_COMPLETIONS: usize = 16;

/// The two reachable values of a stepped coordinate and their probabilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub low: f64,
    pub high: f64,
    pub p_low: f64,
    pub p_high: f64,
}

impl Transition {
    pub fn mean(&self) -> f64 {
        self.p_low * self.low + self.p_high * self.high
    }
}

pub fn transition(x: f64, epsilon: f64) -> Result<Transition> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::invalid(format!("jump size {epsilon} outside (0, 1]")));
    }
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::StrategyFault(format!(
            "cannot step a coordinate at {x}; it must lie in (-1, 1)"
        )));
    }
    let (low, high) = if x + epsilon > 1.0 {
        (1.0 - 2.0 * epsilon, 1.0)
    } else if x - epsilon < -1.0 {
        (-1.0, -1.0 + 2.0 * epsilon)
    } else {
        (x - epsilon, x + epsilon)
    };
    Ok(Transition {
        low,
        high,
        p_low: (high - x) / (2.0 * epsilon),
        p_high: (x - low) / (2.0 * epsilon),
    })
}

/// One recorded jump of a trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub t: u64,
    pub coordinate: usize,
    pub old: f64,
    pub new: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessState {
    pub position: Vec<f64>,
    pub step_count: u64,
    pub accumulated_cost: f64,
}

impl ProcessState {
    pub fn new(start: Vec<f64>) -> Self {
        ProcessState {
            position: start,
            step_count: 0,
            accumulated_cost: 0.0,
        }
    }

    /// Jumps coordinate `i` and charges the squared jump.
    pub fn step<R: Rng + ?Sized>(&mut self, i: usize, epsilon: f64, rng: &mut R) -> Result<Jump> {
        let old = *self.position.get(i).ok_or_else(|| {
            Error::StrategyFault(format!("coordinate {i} out of range"))
        })?;
        let tr = transition(old, epsilon)?;
        let new = if rng.random::<f64>() < tr.p_low {
            tr.low
        } else {
            tr.high
        };
        self.position[i] = new;
        self.accumulated_cost += (new - old) * (new - old);
        let jump = Jump {
            t: self.step_count,
            coordinate: i,
            old,
            new,
        };
        self.step_count += 1;
        Ok(jump)
    }

    /// A lazy step: time advances, nothing moves, nothing is charged.
    pub fn idle(&mut self) {
        self.step_count += 1;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub epsilon: f64,
    pub step_cap: u64,
    /// Stop after this many steps even if `f` is not determined yet.
    pub horizon: Option<u64>,
    pub record_jumps: bool,
    /// Completions of the final point sampled to estimate the L² error of a
    /// truncated run; 0 disables the estimate.
    pub completions: usize,
}

impl RunConfig {
    pub fn new(epsilon: f64) -> Self {
        RunConfig {
            epsilon,
            step_cap: DEFAULT_STEP_CAP,
            horizon: None,
            record_jumps: false,
            completions: 0,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self.completions = DEFAULT_COMPLETIONS;
        self
    }

    pub fn recording(mut self) -> Self {
        self.record_jumps = true;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub start: Vec<f64>,
    pub final_position: Vec<f64>,
    /// Number of steps taken (the stopping time).
    pub tau: u64,
    /// Sum of squared jumps.
    pub cost: f64,
    /// `(X_i(τ) - X_i(0))²` per coordinate.
    pub squared_displacement: Vec<f64>,
    /// Value of `f` forced at the final point, if any.
    pub outcome: Option<Sign>,
    /// Harmonic extension at the final point.
    pub output: f64,
    /// Mean of `(f(Z) - f(X(τ)))²` over sampled completions `Z` of the final
    /// point.
    pub l2_error_sq: Option<f64>,
    pub jumps: Vec<Jump>,
}

impl Trajectory {
    /// Total revealment `Σ_i (X_i(τ) - X_i(0))²`.
    pub fn revealment(&self) -> f64 {
        self.squared_displacement.iter().sum()
    }

    /// CSV rows `t,coordinate,old,new` with 1-based coordinates.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,coordinate,old,new")?;
        for j in &self.jumps {
            writeln!(w, "{},{},{:.16e},{:.16e}", j.t, j.coordinate + 1, j.old, j.new)?;
        }
        Ok(())
    }
}

fn check_start(f: &BooleanFunction, x0: &[f64]) -> Result<()> {
    if x0.len() != f.n() {
        return Err(Error::invalid(format!(
            "start point has {} coordinates, function has {} variables",
            x0.len(),
            f.n()
        )));
    }
    if x0.iter().any(|v| !(-1.0..=1.0).contains(v)) {
        return Err(Error::invalid("start point outside [-1, 1]^n"));
    }
    Ok(())
}

/// Draws a vertex whose coordinates have means `x`.
pub fn sample_completion<R: Rng + ?Sized>(x: &[f64], rng: &mut R) -> Vec<f64> {
    x.iter()
        .map(|&xi| {
            if rng.random::<f64>() < 0.5 * (1.0 + xi) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Runs one trajectory with run index `run` of master seed `seed`.
pub fn run(
    f: &BooleanFunction,
    strategy: &dyn Strategy,
    x0: &[f64],
    config: &RunConfig,
    seed: u64,
    run: u64,
) -> Result<Trajectory> {
    let mut rng = run_rng(seed, run);
    run_with_rng(f, strategy, x0, config, &mut rng, run_key(seed, run))
}

pub fn run_with_rng(
    f: &BooleanFunction,
    strategy: &dyn Strategy,
    x0: &[f64],
    config: &RunConfig,
    rng: &mut RunRng,
    key: u64,
) -> Result<Trajectory> {
    check_start(f, x0)?;
    if !(config.epsilon > 0.0 && config.epsilon <= 1.0) {
        return Err(Error::invalid(format!(
            "jump size {} outside (0, 1]",
            config.epsilon
        )));
    }
    let mut state = ProcessState::new(x0.to_vec());
    let mut jumps = Vec::new();
    let outcome = loop {
        if let Some(s) = f.determined(&state.position) {
            break Some(s);
        }
        if config.horizon.is_some_and(|h| state.step_count >= h) {
            break None;
        }
        if state.step_count >= config.step_cap {
            return Err(Error::StepCapExceeded {
                cap: config.step_cap,
                position: state.position,
            });
        }
        let mut ctx = DecisionContext {
            time: state.step_count,
            run_key: key,
            rng,
        };
        match strategy.decide(f, &state.position, &mut ctx)? {
            Decision::Idle => state.idle(),
            Decision::Query(i) => {
                let live = state.position.get(i).is_some_and(|v| v.abs() < 1.0);
                if !live {
                    return Err(Error::StrategyFault(format!(
                        "{} chose coordinate {} which is not live at {:?}",
                        strategy.id(),
                        i + 1,
                        state.position
                    )));
                }
                let jump = state.step(i, config.epsilon, rng)?;
                if config.record_jumps {
                    jumps.push(jump);
                }
            }
        }
    };
    let output = f.harmonic_unchecked(&state.position);
    let l2_error_sq = (config.completions > 0).then(|| {
        let total: f64 = (0..config.completions)
            .map(|_| {
                let z = sample_completion(&state.position, rng);
                let d = f.harmonic_unchecked(&z) - output;
                d * d
            })
            .sum();
        total / config.completions as f64
    });
    let squared_displacement = state
        .position
        .iter()
        .zip(x0)
        .map(|(x, s)| (x - s) * (x - s))
        .collect();
    Ok(Trajectory {
        start: x0.to_vec(),
        final_position: state.position,
        tau: state.step_count,
        cost: state.accumulated_cost,
        squared_displacement,
        outcome,
        output,
        l2_error_sq,
        jumps,
    })
}

/// Aggregate of independent runs. Serialises to the JSON run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub function_id: String,
    pub strategy_id: String,
    pub epsilon: f64,
    pub runs: u64,
    pub seed: u64,
    pub x0: Vec<f64>,
    pub horizon: Option<u64>,
    /// Mean of `Σ_i (X_i(τ) - X_i(0))²`.
    pub mean_cost: f64,
    pub stderr: f64,
    /// Revealment `δ_i = E[(X_i(τ) - X_i(0))²]`.
    pub delta: Vec<f64>,
    pub delta_stderr: Vec<f64>,
    /// Mean sum of squared jumps.
    pub mean_qv: f64,
    pub qv_stderr: f64,
    /// `E[f(X(τ))²]` with `f` the harmonic extension.
    pub mean_output_sq: f64,
    pub output_sq_stderr: f64,
    /// `E[(f(X(∞)) - f(X(τ)))²]`, only for truncated runs.
    pub l2_error_sq: Option<f64>,
    pub l2_error_sq_stderr: Option<f64>,
    /// Fraction of runs that stopped with `f` determined.
    pub determined_fraction: f64,
    pub mean_steps: f64,
    pub notes: Vec<String>,
}

impl RunStats {
    pub fn cost(&self) -> Estimate {
        Estimate {
            mean: self.mean_cost,
            stderr: self.stderr,
        }
    }

    pub fn quadratic_variation(&self) -> Estimate {
        Estimate {
            mean: self.mean_qv,
            stderr: self.qv_stderr,
        }
    }

    pub fn delta_estimate(&self, i: usize) -> Estimate {
        Estimate {
            mean: self.delta[i],
            stderr: self.delta_stderr[i],
        }
    }

    pub fn output_sq(&self) -> Estimate {
        Estimate {
            mean: self.mean_output_sq,
            stderr: self.output_sq_stderr,
        }
    }

    pub fn l2_error(&self) -> Option<Estimate> {
        Some(Estimate {
            mean: self.l2_error_sq?,
            stderr: self.l2_error_sq_stderr?,
        })
    }

    /// True when every run stopped because `f` was determined.
    pub fn zero_error(&self) -> bool {
        self.determined_fraction == 1.0
    }
}

struct RunSummary {
    revealment: f64,
    displacement: Vec<f64>,
    qv: f64,
    output_sq: f64,
    l2: Option<f64>,
    determined: bool,
    steps: u64,
}

/// Runs `runs` independent trajectories and aggregates them. Run `r` uses the
/// stream `(seed, r)`, so the result does not depend on scheduling.
pub fn estimate(
    f: &BooleanFunction,
    strategy: &dyn Strategy,
    x0: &[f64],
    config: &RunConfig,
    runs: u64,
    seed: u64,
) -> Result<RunStats> {
    if runs == 0 {
        return Err(Error::invalid("need at least one run"));
    }
    check_start(f, x0)?;
    let mut config = config.clone();
    config.record_jumps = false;
    let summaries: Vec<RunSummary> = (0..runs)
        .into_par_iter()
        .map(|r| {
            let t = run(f, strategy, x0, &config, seed, r).map_err(|e| Error::Run {
                run: r,
                source: Box::new(e),
            })?;
            Ok(RunSummary {
                revealment: t.revealment(),
                qv: t.cost,
                output_sq: t.output * t.output,
                l2: t.l2_error_sq,
                determined: t.outcome.is_some(),
                steps: t.tau,
                displacement: t.squared_displacement,
            })
        })
        .collect::<Result<_>>()?;

    let column = |get: &dyn Fn(&RunSummary) -> f64| -> Estimate {
        let xs: Vec<f64> = summaries.iter().map(get).collect();
        Estimate::from_samples(&xs)
    };
    let cost = column(&|s| s.revealment);
    let qv = column(&|s| s.qv);
    let out = column(&|s| s.output_sq);
    let steps = column(&|s| s.steps as f64);
    let deltas: Vec<Estimate> = (0..f.n())
        .map(|i| column(&|s: &RunSummary| s.displacement[i]))
        .collect();
    let l2 = config
        .completions
        .gt(&0)
        .then(|| column(&|s| s.l2.unwrap_or(0.0)));
    let determined = summaries.iter().filter(|s| s.determined).count();

    Ok(RunStats {
        function_id: f.id().to_string(),
        strategy_id: strategy.id(),
        epsilon: config.epsilon,
        runs,
        seed,
        x0: x0.to_vec(),
        horizon: config.horizon,
        mean_cost: cost.mean,
        stderr: cost.stderr,
        delta: deltas.iter().map(|e| e.mean).collect(),
        delta_stderr: deltas.iter().map(|e| e.stderr).collect(),
        mean_qv: qv.mean,
        qv_stderr: qv.stderr,
        mean_output_sq: out.mean,
        output_sq_stderr: out.stderr,
        l2_error_sq: l2.map(|e| e.mean),
        l2_error_sq_stderr: l2.map(|e| e.stderr),
        determined_fraction: determined as f64 / runs as f64,
        mean_steps: steps.mean,
        notes: strategy.notes(f),
    })
}
