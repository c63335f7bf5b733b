//! Closed form of the limiting cost `u` for the 2-bit OR.
//!
//! On the diagonal `u(x, x) = g(x) = 2(1 - x)² ln(2 / (1 - x))`. Off the
//! diagonal the optimal process moves the larger coordinate until it either
//! hits `1` or meets the smaller one, which gives
//!
//! ```text
//! u(x1, x2) = (x2 - x1)/(1 - x1) · (1 - x2)² + (1 - x2)/(1 - x1) · (g(x1) + (x2 - x1)²)
//! ```
//!
//! for `x2 > x1`, and `u` is symmetric.

use rand::Rng;
use serde::Serialize;

use crate::rng::run_rng;
use crate::{Error, Result};

/// Accepted `|min second difference + 2|` for the finite-difference check.
pub const PDE_TOLERANCE: f64 = 1e-3;
/// Accepted ODE residual on the diagonal.
pub const ODE_TOLERANCE: f64 = 1e-8;
/// Finite-difference step.
pub const RESIDUAL_STEP: f64 = 1e-3;
/// Sample points closer than this to the diagonal are skipped; `u` has a kink there.
pub const DIAGONAL_GAP: f64 = 0.05;

/// Diagonal cost `g(x)`; `g(1) = 0` as a limit.
pub fn g_diag(x: f64) -> Result<f64> {
    check_unit("x", x)?;
    if x == 1.0 {
        return Ok(0.0);
    }
    let s = 1.0 - x;
    Ok(2.0 * s * s * (2.0 / s).ln())
}

/// `g′(x) = -4(1 - x) ln(2 / (1 - x)) + 2(1 - x)`.
pub fn g_diag_derivative(x: f64) -> Result<f64> {
    check_unit("x", x)?;
    if x == 1.0 {
        return Ok(0.0);
    }
    let s = 1.0 - x;
    Ok(-4.0 * s * (2.0 / s).ln() + 2.0 * s)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [-1, 1]")))
    }
}

/// Limiting optimal cost of OR on two bits at `(x1, x2)`.
pub fn u_or2(x1: f64, x2: f64) -> Result<f64> {
    check_unit("x1", x1)?;
    check_unit("x2", x2)?;
    let (lo, hi) = if x1 <= x2 { (x1, x2) } else { (x2, x1) };
    if lo == hi {
        return g_diag(lo);
    }
    if hi == 1.0 {
        return Ok(0.0);
    }
    let span = 1.0 - lo;
    let d = hi - lo;
    Ok(d / span * (1.0 - hi).powi(2) + (1.0 - hi) / span * (g_diag(lo)? + d * d))
}

/// `g′ + 2g/(1 - x) - 2(1 - x)`, zero for the exact diagonal cost.
pub fn ode_residual(x: f64) -> Result<f64> {
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::invalid(format!("x = {x} must lie in (-1, 1)")));
    }
    Ok(g_diag_derivative(x)? + 2.0 * g_diag(x)? / (1.0 - x) - 2.0 * (1.0 - x))
}

/// Smaller of the two second central differences of `u_or2` with step `h`,
/// plus 2. Vanishes where `u` satisfies `min_i ∂²u/∂x_i² = -2`.
pub fn laplacian_residual(x1: f64, x2: f64, h: f64) -> Result<f64> {
    if h.is_nan() || h <= 0.0 {
        return Err(Error::invalid(format!("step {h} must be positive")));
    }
    for v in [x1, x2] {
        if !(v - h >= -1.0 && v + h <= 1.0) {
            return Err(Error::invalid(format!(
                "stencil around {v} with step {h} leaves the cube"
            )));
        }
    }
    let c = u_or2(x1, x2)?;
    let d1 = (u_or2(x1 + h, x2)? - 2.0 * c + u_or2(x1 - h, x2)?) / (h * h);
    let d2 = (u_or2(x1, x2 + h)? - 2.0 * c + u_or2(x1, x2 - h)?) / (h * h);
    Ok(d1.min(d2) + 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub u: f64,
}

/// `u_or2` on an `m × m` grid spanning `[-1, 1]²`.
pub fn grid(m: usize) -> Result<Vec<GridPoint>> {
    if m < 2 {
        return Err(Error::invalid("grid needs at least 2 points per axis"));
    }
    let at = |j: usize| -1.0 + 2.0 * j as f64 / (m - 1) as f64;
    let mut out = Vec::with_capacity(m * m);
    for b in 0..m {
        for a in 0..m {
            let (x1, x2) = (at(a), at(b));
            out.push(GridPoint {
                x1,
                x2,
                u: u_or2(x1, x2)?,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualReport {
    pub seed: u64,
    pub step: f64,
    pub pde_points: usize,
    pub pde_max: f64,
    pub ode_points: usize,
    pub ode_max: f64,
    pub pass: bool,
}

/// Largest finite-difference residual at `pde_points` random interior points
/// off the diagonal, and largest ODE residual at `ode_points` equispaced
/// points of `(-1, 1)`.
pub fn residual_report(pde_points: usize, ode_points: usize, seed: u64) -> Result<ResidualReport> {
    if ode_points < 2 {
        return Err(Error::invalid("need at least 2 ODE points"));
    }
    let mut rng = run_rng(seed, 0);
    let edge = 1.0 - 10.0 * RESIDUAL_STEP;
    let mut pde_max = 0.0f64;
    let mut taken = 0;
    while taken < pde_points {
        let (a, b) = (rng.random_range(-edge..edge), rng.random_range(-edge..edge));
        if (a - b).abs() < DIAGONAL_GAP {
            continue;
        }
        pde_max = pde_max.max(laplacian_residual(a, b, RESIDUAL_STEP)?.abs());
        taken += 1;
    }
    let mut ode_max = 0.0f64;
    for i in 0..ode_points {
        let x = -0.999 + 1.998 * i as f64 / (ode_points - 1) as f64;
        ode_max = ode_max.max(ode_residual(x)?.abs());
    }
    Ok(ResidualReport {
        seed,
        step: RESIDUAL_STEP,
        pde_points,
        pde_max,
        ode_points,
        ode_max,
        pass: pde_max <= PDE_TOLERANCE && ode_max <= ODE_TOLERANCE,
    })
}
