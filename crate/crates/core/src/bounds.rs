//! Numeric checks of the revealment inequalities against simulated runs.
//!
//! Monte-Carlo quantities enter each inequality on the side that makes a
//! violation harder to report: revealments, `E f(X(τ))²` and the L² error
//! are replaced by their upper confidence bounds (mean + 3 stderr). All
//! checks assume the process started at the origin, i.e. from the uniform
//! measure.

use std::fmt::Write;

use serde::Serialize;

use crate::boolean_fn::BooleanFunction;
use crate::jump_process::RunStats;
use crate::stats::Estimate;
use crate::{Error, Result};

/// Width of the one-sided confidence bound, in standard errors.
pub const CONFIDENCE_Z: f64 = 3.0;
/// Absolute slack tolerated for floating-point rounding.
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCheck {
    pub k: usize,
    /// `W_k = Σ_{|S|=k} f̂(S)²`.
    pub weight: f64,
    pub bound: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OsssCheck {
    pub variance: f64,
    pub degree: usize,
    /// `d Σ_i δ_i ‖∂_i f‖²`.
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BswCheck {
    /// `√(Var f / 2n)`.
    pub lower_bound: f64,
    pub observed_delta_max: f64,
    pub delta_max_upper: f64,
    pub slack: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub function_id: String,
    pub strategy_id: String,
    pub epsilon_jump: f64,
    pub runs: u64,
    pub delta: Vec<Estimate>,
    pub zero_error: bool,
    /// L² distance between `f(X(∞))` and `f(X(τ))`, upper bound.
    pub l2_error: f64,
    pub per_level: Vec<LevelCheck>,
    pub osss: Option<OsssCheck>,
    pub bsw: Option<BswCheck>,
    pub pass: bool,
}

fn check_origin(stats: &RunStats, f: &BooleanFunction) -> Result<()> {
    if stats.delta.len() != f.n() {
        return Err(Error::invalid(format!(
            "statistics cover {} coordinates, function has {}",
            stats.delta.len(),
            f.n()
        )));
    }
    if stats.x0.iter().any(|&v| v != 0.0) {
        return Err(Error::invalid(
            "revealment bounds need runs started at the origin",
        ));
    }
    Ok(())
}

fn delta_upper(stats: &RunStats) -> f64 {
    (0..stats.delta.len())
        .map(|i| stats.delta_estimate(i).upper(CONFIDENCE_Z))
        .fold(0.0, f64::max)
}

/// Upper confidence bound on the L² error recorded in `stats`, 0 when the
/// runs were not truncated.
pub fn l2_error_bound(stats: &RunStats) -> f64 {
    stats
        .l2_error()
        .map_or(0.0, |e| e.upper(CONFIDENCE_Z).max(0.0).sqrt())
}

/// `W_k ≤ (√(E f(X(τ))²) √(kδ) + l2_error)²` for every level `k`, with
/// `δ = max_i δ_i`.
pub fn ss_check(f: &BooleanFunction, stats: &RunStats, l2_error: f64) -> Result<Vec<LevelCheck>> {
    check_origin(stats, f)?;
    let fourier = f.fourier()?;
    let delta = delta_upper(stats);
    let out_sq = stats.output_sq().upper(CONFIDENCE_Z).max(0.0);
    Ok((1..=f.n())
        .map(|k| {
            let weight = fourier.level_weight(k);
            let core = out_sq * k as f64 * delta;
            let bound = core + 2.0 * l2_error * core.sqrt() + l2_error * l2_error;
            let slack = bound - weight;
            LevelCheck {
                k,
                weight,
                bound,
                slack,
                pass: slack >= -ROUNDING,
            }
        })
        .collect())
}

/// `Var f ≤ d Σ_i δ_i ‖∂_i f‖²` with `d` the degree of `f`.
pub fn osss_check(f: &BooleanFunction, stats: &RunStats) -> Result<OsssCheck> {
    check_origin(stats, f)?;
    let fourier = f.fourier()?;
    let degree = fourier.degree();
    let sum: f64 = (0..f.n())
        .map(|i| stats.delta_estimate(i).upper(CONFIDENCE_Z) * fourier.derivative_weight(i))
        .sum();
    let variance = fourier.variance();
    let rhs = degree as f64 * sum;
    Ok(OsssCheck {
        variance,
        degree,
        rhs,
        slack: rhs - variance,
        pass: rhs - variance >= -ROUNDING,
    })
}

/// `max_i δ_i ≥ √(Var f / 2n)`.
pub fn bsw_check(f: &BooleanFunction, stats: &RunStats) -> Result<BswCheck> {
    check_origin(stats, f)?;
    let variance = f.fourier()?.variance();
    let lower_bound = (variance / (2.0 * f.n() as f64)).sqrt();
    let observed = stats.delta.iter().copied().fold(0.0, f64::max);
    let upper = delta_upper(stats);
    Ok(BswCheck {
        lower_bound,
        observed_delta_max: observed,
        delta_max_upper: upper,
        slack: upper - lower_bound,
        pass: upper - lower_bound >= -ROUNDING,
    })
}

/// Whether the coordinates of `final_position` at `±1` force the value of `f`.
pub fn certificate_verify(f: &BooleanFunction, final_position: &[f64]) -> bool {
    final_position.len() == f.n() && f.determined(final_position).is_some()
}

/// All applicable checks. The degree and revealment-lower-bound checks are
/// only meaningful for zero-error runs and are skipped otherwise.
pub fn report(f: &BooleanFunction, stats: &RunStats) -> Result<BoundReport> {
    let zero_error = stats.zero_error();
    let l2_error = if zero_error { 0.0 } else { l2_error_bound(stats) };
    if !zero_error && stats.l2_error().is_none() {
        return Err(Error::invalid(
            "runs stopped early but carry no L² error estimate",
        ));
    }
    let per_level = ss_check(f, stats, l2_error)?;
    let (osss, bsw) = if zero_error {
        (Some(osss_check(f, stats)?), Some(bsw_check(f, stats)?))
    } else {
        (None, None)
    };
    let pass = per_level.iter().all(|c| c.pass)
        && osss.as_ref().is_none_or(|c| c.pass)
        && bsw.as_ref().is_none_or(|c| c.pass);
    Ok(BoundReport {
        function_id: stats.function_id.clone(),
        strategy_id: stats.strategy_id.clone(),
        epsilon_jump: stats.epsilon,
        runs: stats.runs,
        delta: (0..f.n()).map(|i| stats.delta_estimate(i)).collect(),
        zero_error,
        l2_error,
        per_level,
        osss,
        bsw,
        pass,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "ok"
    } else {
        "VIOLATED"
    }
}

impl BoundReport {
    /// Human-readable table with the slack of each inequality.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} / {}  (jump {}, {} runs, l2 error {:.4e})",
            self.function_id, self.strategy_id, self.epsilon_jump, self.runs, self.l2_error
        );
        let _ = writeln!(s, "{:>4} {:>14} {:>14} {:>14}  verdict", "k", "W_k", "bound", "slack");
        for c in &self.per_level {
            let _ = writeln!(
                s,
                "{:>4} {:>14.6e} {:>14.6e} {:>14.6e}  {}",
                c.k,
                c.weight,
                c.bound,
                c.slack,
                verdict(c.pass)
            );
        }
        if let Some(o) = &self.osss {
            let _ = writeln!(
                s,
                "degree: Var {:.6e} <= {:.6e} (d = {}, slack {:.6e})  {}",
                o.variance,
                o.rhs,
                o.degree,
                o.slack,
                verdict(o.pass)
            );
        }
        if let Some(b) = &self.bsw {
            let _ = writeln!(
                s,
                "revealment: max delta {:.6e} (upper {:.6e}) >= {:.6e} (slack {:.6e})  {}",
                b.observed_delta_max,
                b.delta_max_upper,
                b.lower_bound,
                b.slack,
                verdict(b.pass)
            );
        }
        let _ = writeln!(s, "overall: {}", verdict(self.pass));
        s
    }
}
