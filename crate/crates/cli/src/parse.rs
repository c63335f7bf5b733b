//! Parsing of flag values.

use fracquery::dp_solver::{Method, SolveOptions, DEFAULT_MEMORY_BUDGET};
use fracquery::random_turn::parse_rational;
use num_rational::Ratio;
use thiserror::Error;

use crate::{Jump, SolverMethod, MEMORY_BUDGET_ENV};

#[derive(Debug, Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

pub fn config(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// `2^-k`, `2^k` or a decimal.
pub fn epsilon(s: &str) -> anyhow::Result<f64> {
    let s = s.trim();
    let value = if let Some(exp) = s.strip_prefix("2^") {
        let exp = exp.trim_start_matches('(').trim_end_matches(')');
        let k: i32 = exp
            .parse()
            .map_err(|_| config(format!("bad exponent in jump size `{s}`")))?;
        2f64.powi(k)
    } else {
        s.parse::<f64>()
            .map_err(|_| config(format!("jump size `{s}` is neither `2^-k` nor a number")))?
    };
    if !(value > 0.0 && value <= 1.0) {
        return Err(config(format!("jump size {s} outside (0, 1]")));
    }
    Ok(value)
}

impl Jump {
    pub fn resolve(&self, default: Option<f64>) -> anyhow::Result<f64> {
        match (&self.epsilon, self.k) {
            (Some(e), _) => epsilon(e),
            (None, Some(k)) if k <= 30 => Ok(2f64.powi(-(k as i32))),
            (None, Some(k)) => Err(config(format!("level {k} is too fine"))),
            (None, None) => default.ok_or_else(|| config("one of --epsilon or --k is required")),
        }
    }

    pub fn level(&self) -> anyhow::Result<u32> {
        Ok(fracquery::strategies::dyadic_level(self.resolve(None)?)?)
    }
}

pub fn point(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| config(format!("coordinate `{v}` in `{s}` is not a number")))
        })
        .collect()
}

pub fn rational_point(s: &str) -> anyhow::Result<Vec<Ratio<i64>>> {
    s.split(',')
        .map(|v| parse_rational(v).map_err(|e| config(e.to_string())))
        .collect()
}

pub fn memory_budget() -> anyhow::Result<usize> {
    let Ok(raw) = std::env::var(MEMORY_BUDGET_ENV) else {
        return Ok(DEFAULT_MEMORY_BUDGET);
    };
    let raw = raw.trim();
    let (digits, scale) = match raw.chars().last().map(|c| c.to_ascii_uppercase()) {
        Some('K') => (&raw[..raw.len() - 1], 1usize << 10),
        Some('M') => (&raw[..raw.len() - 1], 1 << 20),
        Some('G') => (&raw[..raw.len() - 1], 1 << 30),
        _ => (raw, 1),
    };
    digits
        .parse::<usize>()
        .ok()
        .and_then(|d| d.checked_mul(scale))
        .ok_or_else(|| config(format!("{MEMORY_BUDGET_ENV}=`{raw}` is not a byte count")))
}

pub fn solve_options(method: SolverMethod) -> anyhow::Result<SolveOptions> {
    Ok(SolveOptions {
        method: match method {
            SolverMethod::Policy => Method::PolicyIteration,
            SolverMethod::Value => Method::ValueIteration,
        },
        memory_budget: memory_budget()?,
        ..SolveOptions::default()
    })
}
