//! Optimal expected cost `u_ε` of fractional query algorithms on the dyadic
//! lattice, together with an optimal Markov policy.
//!
//! `u_ε` solves
//!
//! ```text
//! u(x) = min_i ½ (u(x + εe_i) + u(x - εe_i)) + ε²
//! ```
//!
//! over live coordinates `i`, with `u = 0` wherever `f` is determined. The
//! cube is split into faces (fix some coordinates at `±1`, let the rest range
//! over the open interval). A face only sees itself and lower-dimensional
//! faces, so faces are solved in order of dimension; each solved face is the
//! exit cost of the faces above it.

mod io;
mod tree;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use crate::boolean_fn::BooleanFunction;
use crate::{Error, Result};

pub use io::{read_field, write_field};
pub use tree::{
    influence_tree_cost, optimal_decision_tree_cost, tree_strategy_cost, TieRule,
};

pub const DEFAULT_MEMORY_BUDGET: usize = 2 << 30;
/// Stop sweeping once no value moves by more than this.
pub const SWEEP_TOLERANCE: f64 = 1e-12;
/// Acceptable fixed-point residual of a converged field.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Directions whose one-step value is within this of the minimum count as
/// optimal; the lowest index among them is stored.
pub const TIE_TOLERANCE: f64 = 1e-11;
pub const DEFAULT_SWEEP_CAP: usize = 1_000_000;
const POLICY_ITERATION_CAP: usize = 1_000;
const IMPROVEMENT_THRESHOLD: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Howard policy iteration with sparse LU solves, then Jacobi sweeps.
    PolicyIteration,
    /// Jacobi sweeps from the read-everything cost `Σ (1 - x_i²)`.
    ValueIteration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions {
    pub method: Method,
    pub memory_budget: usize,
    pub sweep_cap: usize,
    pub tolerance: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            method: Method::PolicyIteration,
            memory_budget: DEFAULT_MEMORY_BUDGET,
            sweep_cap: DEFAULT_SWEEP_CAP,
            tolerance: SWEEP_TOLERANCE,
        }
    }
}

/// The grid `[-1, 1]^n ∩ εZ^n` with `ε = 2^-level`, flattened in mixed radix
/// with coordinate 0 varying fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    n: usize,
    level: u32,
    side: usize,
    len: usize,
}

impl Lattice {
    pub fn new(n: usize, level: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("lattice needs at least one dimension"));
        }
        if level > 30 {
            return Err(Error::invalid(format!("dyadic level {level} too fine")));
        }
        let side = (1usize << (level + 1)) + 1;
        let len = u32::try_from(n)
            .ok()
            .and_then(|e| side.checked_pow(e))
            .ok_or_else(|| {
                Error::Resource(format!("lattice {side}^{n} does not fit in memory"))
            })?;
        Ok(Lattice {
            n,
            level,
            side,
            len,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn epsilon(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    /// Points per axis, `2^(level+1) + 1`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.side.pow(axis as u32)
    }

    pub fn coordinate(&self, digit: usize) -> f64 {
        -1.0 + digit as f64 * self.epsilon()
    }

    pub fn digits(&self, mut idx: usize) -> Vec<usize> {
        (0..self.n)
            .map(|_| {
                let d = idx % self.side;
                idx /= self.side;
                d
            })
            .collect()
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.digits(idx)
            .into_iter()
            .map(|d| self.coordinate(d))
            .collect()
    }

    /// Index of `x` if it is a lattice point.
    pub fn index_of(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.n {
            return None;
        }
        let scale = (self.level as f64).exp2();
        let mut idx = 0;
        for &xi in x.iter().rev() {
            let t = (xi + 1.0) * scale;
            if !(t >= 0.0 && t <= (self.side - 1) as f64 && t == t.round()) {
                return None;
            }
            idx = idx * self.side + t as usize;
        }
        Some(idx)
    }
}

/// `u_ε` on every lattice point.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    pub lattice: Lattice,
    pub function_id: String,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(lattice: Lattice, function_id: String, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::invalid(format!(
                "field has {} values, lattice has {} points",
                values.len(),
                lattice.len()
            )));
        }
        Ok(LatticeField {
            lattice,
            function_id,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let idx = self
            .lattice
            .index_of(x)
            .ok_or_else(|| off_lattice(x, &self.lattice))?;
        Ok(self.values[idx])
    }

    pub fn at_origin(&self) -> f64 {
        self.value_at(&vec![0.0; self.lattice.n])
            .expect("origin is a lattice point")
    }
}

fn off_lattice(x: &[f64], lattice: &Lattice) -> Error {
    Error::invalid(format!(
        "point {x:?} is not on the {}-dimensional lattice with step {}",
        lattice.n,
        lattice.epsilon()
    ))
}

/// Optimal direction per lattice point; `None` where nothing needs reading.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub lattice: Lattice,
    directions: Vec<u8>,
}

pub const NO_DIRECTION: u8 = u8::MAX;

impl Policy {
    pub fn new(lattice: Lattice, directions: Vec<u8>) -> Result<Self> {
        if directions.len() != lattice.len() {
            return Err(Error::invalid("policy length does not match lattice"));
        }
        Ok(Policy {
            lattice,
            directions,
        })
    }

    pub fn direction(&self, idx: usize) -> Option<usize> {
        let d = self.directions[idx];
        (d != NO_DIRECTION).then_some(d as usize)
    }

    pub fn direction_at(&self, x: &[f64]) -> Result<Option<usize>> {
        let idx = self
            .lattice
            .index_of(x)
            .ok_or_else(|| off_lattice(x, &self.lattice))?;
        Ok(self.direction(idx))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolveReport {
    pub faces: usize,
    pub policy_iterations: usize,
    pub sweeps: usize,
    /// Largest `|u - Tu|` over points with a live coordinate.
    pub max_residual: f64,
    /// Largest increase of any value in a single sweep (value iteration only).
    pub max_increase: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub field: LatticeField,
    pub policy: Policy,
    pub report: SolveReport,
}

pub fn solve(f: &BooleanFunction, level: u32) -> Result<Solution> {
    solve_with(f, level, &SolveOptions::default())
}

pub fn solve_with(f: &BooleanFunction, level: u32, opts: &SolveOptions) -> Result<Solution> {
    let lattice = Lattice::new(f.n(), level)?;
    let bytes = lattice
        .len()
        .checked_mul(8 * f.n())
        .filter(|&b| b <= opts.memory_budget)
        .ok_or_else(|| {
            Error::Resource(format!(
                "lattice with {} points in {} dimensions exceeds the memory budget of {} bytes",
                lattice.len(),
                f.n(),
                opts.memory_budget
            ))
        })?;
    let _ = bytes;

    // The coarser policy is a good first guess and saves most improvement
    // rounds.
    let coarse = match opts.method {
        Method::PolicyIteration if level >= 2 && f.n() >= 2 => {
            Some(solve_with(f, level - 1, opts)?.policy)
        }
        _ => None,
    };
    let mut solver = Solver {
        lattice,
        eps: lattice.epsilon(),
        values: vec![0.0; lattice.len()],
        report: SolveReport::default(),
        opts,
        coarse,
    };
    let strides: Vec<usize> = (0..f.n()).map(|a| lattice.stride(a)).collect();
    let mut faces = enumerate_faces(f, &lattice);
    faces.sort_by_key(|face| face.live.len());
    for face in &faces {
        if face.determined || face.live.is_empty() {
            continue;
        }
        solver.solve_face(face, &strides)?;
        solver.report.faces += 1;
    }
    let directions = solver.extract_policy(&faces, &strides);
    if solver.report.max_residual > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence {
            sweeps: solver.report.sweeps,
            residual: solver.report.max_residual,
        });
    }
    Ok(Solution {
        field: LatticeField::new(lattice, f.id().to_string(), solver.values)?,
        policy: Policy::new(lattice, directions)?,
        report: solver.report,
    })
}

/// Points whose `±1` coordinates are fixed by a sign pattern and whose other
/// coordinates are strictly inside.
struct Face {
    live: Vec<usize>,
    /// Global index of the face point with every live digit at 0.
    base: usize,
    determined: bool,
}

fn enumerate_faces(f: &BooleanFunction, lattice: &Lattice) -> Vec<Face> {
    let n = lattice.n;
    let count = 3usize.pow(n as u32);
    let top = lattice.side - 1;
    (0..count)
        .map(|mut code| {
            let mut live = Vec::new();
            let mut base = 0;
            let mut probe = vec![0.0; n];
            for (axis, p) in probe.iter_mut().enumerate() {
                match code % 3 {
                    0 => *p = -1.0,
                    1 => {
                        *p = 1.0;
                        base += top * lattice.stride(axis);
                    }
                    _ => live.push(axis),
                }
                code /= 3;
            }
            Face {
                determined: f.determined(&probe).is_some(),
                live,
                base,
            }
        })
        .collect()
}

enum Neighbour {
    Inner(usize),
    Outer(usize),
}

/// Local view of one face: the interior grid `(side - 2)^d` over its live axes.
struct FaceGrid<'a> {
    live: &'a [usize],
    inner: usize,
    len: usize,
    global: Vec<usize>,
    local_strides: Vec<usize>,
    strides: Vec<usize>,
}

impl<'a> FaceGrid<'a> {
    fn new(face: &'a Face, lattice: &Lattice, strides: &[usize]) -> Self {
        let inner = lattice.side - 2;
        let d = face.live.len();
        let len = inner.pow(d as u32);
        let local_strides: Vec<usize> = (0..d).map(|j| inner.pow(j as u32)).collect();
        let strides: Vec<usize> = face.live.iter().map(|&a| strides[a]).collect();
        let global = (0..len)
            .map(|l| {
                (0..d)
                    .map(|j| ((l / local_strides[j]) % inner + 1) * strides[j])
                    .sum::<usize>()
                    + face.base
            })
            .collect();
        FaceGrid {
            live: &face.live,
            inner,
            len,
            global,
            local_strides,
            strides,
        }
    }

    fn neighbours(&self, l: usize, j: usize) -> [Neighbour; 2] {
        let digit = (l / self.local_strides[j]) % self.inner;
        let g = self.global[l];
        let down = if digit == 0 {
            Neighbour::Outer(g - self.strides[j])
        } else {
            Neighbour::Inner(l - self.local_strides[j])
        };
        let up = if digit + 1 == self.inner {
            Neighbour::Outer(g + self.strides[j])
        } else {
            Neighbour::Inner(l + self.local_strides[j])
        };
        [down, up]
    }

    /// `½ (u(x - εe_j) + u(x + εe_j))` reading inner values from `cur`.
    fn average(&self, l: usize, j: usize, cur: &[f64], values: &[f64]) -> f64 {
        let [a, b] = self.neighbours(l, j);
        let read = |nb: Neighbour| match nb {
            Neighbour::Inner(i) => cur[i],
            Neighbour::Outer(g) => values[g],
        };
        0.5 * (read(a) + read(b))
    }

    fn best(&self, l: usize, cur: &[f64], values: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for j in 0..self.live.len() {
            let q = self.average(l, j, cur, values);
            if q < best.1 {
                best = (j, q);
            }
        }
        best
    }
}

struct Solver<'o> {
    lattice: Lattice,
    eps: f64,
    values: Vec<f64>,
    report: SolveReport,
    opts: &'o SolveOptions,
    coarse: Option<Policy>,
}

impl Solver<'_> {
    /// Direction of the nearest interior point of the same face one level
    /// coarser, as an index into the face's live axes.
    fn initial_direction(&self, grid: &FaceGrid, l: usize) -> usize {
        let Some(coarse) = &self.coarse else {
            return 0;
        };
        let top = coarse.lattice.side() - 1;
        let digits = self.lattice.digits(grid.global[l]);
        let idx = digits
            .iter()
            .rev()
            .fold(0, |acc, &d| {
                let c = if d == 0 || d == self.lattice.side() - 1 {
                    d / 2
                } else {
                    (d / 2).clamp(1, top - 1)
                };
                acc * coarse.lattice.side() + c
            });
        coarse
            .direction(idx)
            .and_then(|axis| grid.live.iter().position(|&a| a == axis))
            .unwrap_or(0)
    }

    fn solve_face(&mut self, face: &Face, strides: &[usize]) -> Result<()> {
        let grid = FaceGrid::new(face, &self.lattice, strides);
        let cur = match self.opts.method {
            Method::PolicyIteration if grid.live.len() == 1 => self.segment(&grid),
            Method::PolicyIteration => {
                let cur = self.policy_iteration(&grid)?;
                self.jacobi(&grid, cur)?
            }
            Method::ValueIteration => {
                let start = grid
                    .global
                    .iter()
                    .map(|&g| {
                        let x = self.lattice.point(g);
                        x.iter().map(|v| 1.0 - v * v).sum()
                    })
                    .collect();
                self.jacobi(&grid, start)?
            }
        };
        for (l, &g) in grid.global.iter().enumerate() {
            self.values[g] = cur[l];
        }
        Ok(())
    }

    /// One live axis: `u = 1 - x² + A(1 - x)/2 + B(1 + x)/2` for end values `A`, `B`.
    fn segment(&self, grid: &FaceGrid) -> Vec<f64> {
        let stride = grid.strides[0];
        let first = grid.global[0] - stride;
        let a = self.values[first];
        let b = self.values[first + (self.lattice.side - 1) * stride];
        (0..grid.len)
            .map(|l| {
                let x = self.lattice.coordinate(l + 1);
                1.0 - x * x + 0.5 * a * (1.0 - x) + 0.5 * b * (1.0 + x)
            })
            .collect()
    }

    fn policy_iteration(&mut self, grid: &FaceGrid) -> Result<Vec<f64>> {
        let n = grid.len;
        let eps2 = self.eps * self.eps;
        let mut policy: Vec<usize> = (0..n).map(|l| self.initial_direction(grid, l)).collect();
        let mut triplets = Vec::with_capacity(3 * n);
        for _ in 0..POLICY_ITERATION_CAP {
            self.report.policy_iterations += 1;
            triplets.clear();
            let mut rhs = vec![eps2; n];
            for l in 0..n {
                triplets.push(Triplet::new(l, l, 1.0));
                for nb in grid.neighbours(l, policy[l]) {
                    match nb {
                        Neighbour::Inner(m) => triplets.push(Triplet::new(l, m, -0.5)),
                        Neighbour::Outer(g) => rhs[l] += 0.5 * self.values[g],
                    }
                }
            }
            let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            let lu = matrix
                .sp_lu()
                .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
            let sol = lu.solve(Col::from_fn(n, |i| rhs[i]));
            let cur: Vec<f64> = (0..n).map(|i| sol[i]).collect();

            let mut changed = false;
            for (l, p) in policy.iter_mut().enumerate() {
                let (j, q) = grid.best(l, &cur, &self.values);
                if q < grid.average(l, *p, &cur, &self.values) - IMPROVEMENT_THRESHOLD {
                    *p = j;
                    changed = true;
                }
            }
            if !changed {
                return Ok(cur);
            }
        }
        Err(Error::NoConvergence {
            sweeps: POLICY_ITERATION_CAP,
            residual: f64::NAN,
        })
    }

    fn jacobi(&mut self, grid: &FaceGrid, mut cur: Vec<f64>) -> Result<Vec<f64>> {
        let eps2 = self.eps * self.eps;
        let mut next = vec![0.0; grid.len];
        let mut change = f64::INFINITY;
        for _ in 0..self.opts.sweep_cap {
            self.report.sweeps += 1;
            change = 0.0;
            for (l, slot) in next.iter_mut().enumerate() {
                let v = grid.best(l, &cur, &self.values).1 + eps2;
                let delta = v - cur[l];
                change = f64::max(change, delta.abs());
                self.report.max_increase = f64::max(self.report.max_increase, delta);
                *slot = v;
            }
            std::mem::swap(&mut cur, &mut next);
            if change < self.opts.tolerance {
                return Ok(cur);
            }
        }
        Err(Error::NoConvergence {
            sweeps: self.opts.sweep_cap,
            residual: change,
        })
    }

    fn extract_policy(&mut self, faces: &[Face], strides: &[usize]) -> Vec<u8> {
        let eps2 = self.eps * self.eps;
        let mut directions = vec![NO_DIRECTION; self.lattice.len()];
        for face in faces {
            if face.determined || face.live.is_empty() {
                continue;
            }
            let grid = FaceGrid::new(face, &self.lattice, strides);
            for &g in &grid.global {
                let qs: Vec<f64> = (0..face.live.len())
                    .map(|j| {
                        let s = grid.strides[j];
                        0.5 * (self.values[g - s] + self.values[g + s])
                    })
                    .collect();
                let min = qs.iter().copied().fold(f64::INFINITY, f64::min);
                let j = qs
                    .iter()
                    .position(|&q| q <= min + TIE_TOLERANCE)
                    .expect("face has a live axis");
                directions[g] = face.live[j] as u8;
                let r = (self.values[g] - min - eps2).abs();
                self.report.max_residual = self.report.max_residual.max(r);
            }
        }
        directions
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: u32,
    pub epsilon: f64,
    pub value: f64,
    /// Previous row's value minus this one.
    pub decrease: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub function_id: String,
    pub rows: Vec<ConvergenceRow>,
    /// Whether the values are non-increasing in the level, up to solver
    /// tolerance.
    pub monotone: bool,
    /// First-order Richardson extrapolation `2 u_fine - u_coarse` of the two
    /// finest levels. An estimate only.
    pub extrapolated: Option<f64>,
}

/// `u_{2^-k}(0)` for each level `k`.
pub fn convergence_study(
    f: &BooleanFunction,
    levels: &[u32],
    opts: &SolveOptions,
) -> Result<ConvergenceStudy> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &level in levels {
        let value = solve_with(f, level, opts)?.field.at_origin();
        rows.push(ConvergenceRow {
            level,
            epsilon: (-(level as f64)).exp2(),
            value,
            decrease: rows.last().map(|r| r.value - value),
        });
    }
    let monotone = rows
        .iter()
        .filter_map(|r| r.decrease)
        .all(|d| d >= -RESIDUAL_TOLERANCE);
    let extrapolated = match rows.as_slice() {
        [.., a, b] if b.level == a.level + 1 => Some(2.0 * b.value - a.value),
        _ => None,
    };
    Ok(ConvergenceStudy {
        function_id: f.id().to_string(),
        rows,
        monotone,
        extrapolated,
    })
}
