//! Boolean functions `f: {-1,1}^n → ℝ` and their analysis.
//!
//! Dense tables use the index encoding in which bit `i` of the index is 0 for
//! `x_i = -1` and 1 for `x_i = +1`. Composite functions are circuits of
//! OR/AND/MAJ3/NOT gates over disjoint variable blocks and never need a table
//! unless one is asked for.

mod circuit;
mod fourier;
pub mod zoo;

use std::borrow::Cow;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use circuit::{Circuit, CircuitNode, Gate, Node};
pub use fourier::FourierTable;

use crate::{Error, Result};

/// Default cap on the number of variables for which a dense table is built.
pub const DEFAULT_DENSE_CAP: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Minus => -1.0,
            Sign::Plus => 1.0,
        }
    }

    /// `Some` exactly when `v` is `±1`.
    pub fn from_value(v: f64) -> Option<Sign> {
        if v == 1.0 {
            Some(Sign::Plus)
        } else if v == -1.0 {
            Some(Sign::Minus)
        } else {
            None
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

#[derive(Clone)]
enum Repr {
    Dense(Arc<[f64]>),
    Composite(Arc<Circuit>),
}

/// A real-valued function on the hypercube. Cheap to clone.
#[derive(Clone)]
pub struct BooleanFunction {
    id: String,
    n: usize,
    repr: Repr,
    dense_cap: usize,
    fourier: Arc<OnceLock<FourierTable>>,
}

impl fmt::Debug for BooleanFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.repr {
            Repr::Dense(_) => "dense",
            Repr::Composite(_) => "composite",
        };
        f.debug_struct("BooleanFunction")
            .field("id", &self.id)
            .field("n", &self.n)
            .field("repr", &kind)
            .finish()
    }
}

fn vertex_bits(x: &[f64]) -> Option<usize> {
    let mut idx = 0;
    for (i, &xi) in x.iter().enumerate() {
        match Sign::from_value(xi)? {
            Sign::Plus => idx |= 1 << i,
            Sign::Minus => {}
        }
    }
    Some(idx)
}

/// The `±1` point with index `idx` in the table encoding.
pub fn vertex(n: usize, idx: usize) -> Vec<f64> {
    (0..n)
        .map(|i| if idx >> i & 1 == 1 { 1.0 } else { -1.0 })
        .collect()
}

impl BooleanFunction {
    pub fn dense(n: usize, table: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("a dense function needs at least one variable"));
        }
        Self::dense_unchecked_arity(n, table)
    }

    fn dense_unchecked_arity(n: usize, table: Vec<f64>) -> Result<Self> {
        if n >= usize::BITS as usize || table.len() != 1usize << n {
            return Err(Error::invalid(format!(
                "table of length {} does not match 2^{n}",
                table.len()
            )));
        }
        Ok(BooleanFunction {
            id: format!("dense:{n}"),
            n,
            repr: Repr::Dense(table.into()),
            dense_cap: DEFAULT_DENSE_CAP,
            fourier: Arc::default(),
        })
    }

    pub fn composite(root: Node) -> Result<Self> {
        let circuit = Circuit::compile(&root)?;
        Ok(Self::from_circuit(circuit))
    }

    fn from_circuit(circuit: Circuit) -> Self {
        BooleanFunction {
            id: "composite".into(),
            n: circuit.n(),
            repr: Repr::Composite(Arc::new(circuit)),
            dense_cap: DEFAULT_DENSE_CAP,
            fourier: Arc::default(),
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Sets the largest `n` for which a dense table may be materialised.
    pub fn with_dense_cap(mut self, cap: usize) -> Self {
        self.dense_cap = cap;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn circuit(&self) -> Option<&Circuit> {
        match &self.repr {
            Repr::Composite(c) => Some(c),
            Repr::Dense(_) => None,
        }
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.repr, Repr::Dense(_))
    }

    /// Truth table, materialised for composites when `n` is within the cap.
    pub fn table(&self) -> Result<Cow<'_, [f64]>> {
        match &self.repr {
            Repr::Dense(t) => Ok(Cow::Borrowed(t)),
            Repr::Composite(c) => {
                if self.n > self.dense_cap {
                    return Err(Error::Resource(format!(
                        "densifying {} variables exceeds the cap of {}",
                        self.n, self.dense_cap
                    )));
                }
                let mut x = vec![0.0; self.n];
                let table = (0..1usize << self.n)
                    .map(|idx| {
                        for (i, xi) in x.iter_mut().enumerate() {
                            *xi = if idx >> i & 1 == 1 { 1.0 } else { -1.0 };
                        }
                        c.harmonic(c.root(), &x)
                    })
                    .collect();
                Ok(Cow::Owned(table))
            }
        }
    }

    /// Dense copy of this function.
    pub fn to_dense(&self) -> Result<BooleanFunction> {
        let table = self.table()?.into_owned();
        Ok(Self::dense_unchecked_arity(self.n, table)?
            .with_id(self.id.clone())
            .with_dense_cap(self.dense_cap))
    }

    /// Value at the vertex with table index `idx`.
    pub fn value_at(&self, idx: usize) -> f64 {
        match &self.repr {
            Repr::Dense(t) => t[idx],
            Repr::Composite(c) => c.harmonic(c.root(), &vertex(self.n, idx)),
        }
    }

    pub fn is_boolean_valued(&self) -> Result<bool> {
        Ok(match &self.repr {
            Repr::Composite(_) => true,
            Repr::Dense(t) => t.iter().all(|&v| v == 1.0 || v == -1.0),
        })
    }

    pub fn fourier(&self) -> Result<&FourierTable> {
        if let Some(t) = self.fourier.get() {
            return Ok(t);
        }
        let table = FourierTable::from_values(self.n, &self.table()?);
        Ok(self.fourier.get_or_init(|| table))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::invalid(format!(
                "point has {} coordinates, function has {} variables",
                x.len(),
                self.n
            )));
        }
        if let Some(v) = x.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::invalid(format!("coordinate {v} outside [-1, 1]")));
        }
        Ok(())
    }

    /// Multilinear (harmonic) extension at `x ∈ [-1, 1]^n`.
    pub fn harmonic(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.harmonic_unchecked(x))
    }

    /// [`harmonic`](Self::harmonic) without validating `x`.
    pub fn harmonic_unchecked(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Repr::Composite(c) => c.harmonic(c.root(), x),
            Repr::Dense(t) => {
                if let Some(idx) = vertex_bits(x) {
                    return t[idx];
                }
                // Contract one coordinate at a time, highest bit first.
                let mut buf = t.to_vec();
                for i in (0..self.n).rev() {
                    let half = 1usize << i;
                    let (wm, wp) = (0.5 * (1.0 - x[i]), 0.5 * (1.0 + x[i]));
                    for j in 0..half {
                        buf[j] = wm * buf[j] + wp * buf[j + half];
                    }
                }
                buf[0]
            }
        }
    }

    /// `∂_i f(x) = (f(x^{i→1}) - f(x^{i→-1})) / 2`.
    pub fn derivative(&self, i: usize, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        if i >= self.n {
            return Err(Error::invalid(format!(
                "coordinate {i} out of range for {} variables",
                self.n
            )));
        }
        Ok(self.derivative_unchecked(i, x))
    }

    pub fn derivative_unchecked(&self, i: usize, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        y[i] = 1.0;
        let up = self.harmonic_unchecked(&y);
        y[i] = -1.0;
        let down = self.harmonic_unchecked(&y);
        0.5 * (up - down)
    }

    /// Fraction of inputs whose value changes when bit `i` flips.
    pub fn influence(&self, i: usize) -> Result<f64> {
        if i >= self.n {
            return Err(Error::invalid(format!(
                "coordinate {i} out of range for {} variables",
                self.n
            )));
        }
        if !self.is_boolean_valued()? {
            return Err(Error::invalid("influence needs a ±1-valued function"));
        }
        let t = self.table()?;
        let bit = 1usize << i;
        let flips = (0..t.len())
            .filter(|&x| x & bit == 0 && t[x] != t[x | bit])
            .count();
        Ok((2 * flips) as f64 / t.len() as f64)
    }

    pub fn variance(&self) -> Result<f64> {
        Ok(self.fourier()?.variance())
    }

    pub fn level_weight(&self, k: usize) -> Result<f64> {
        Ok(self.fourier()?.level_weight(k))
    }

    /// Restriction `x_i = b`, a function of the remaining `n - 1` variables.
    pub fn restrict(&self, i: usize, b: Sign) -> Result<BooleanFunction> {
        if i >= self.n {
            return Err(Error::invalid(format!(
                "coordinate {i} out of range for {} variables",
                self.n
            )));
        }
        let id = format!("{}|x{}={}", self.id, i + 1, b.value());
        let restricted = match &self.repr {
            Repr::Composite(c) => Self::from_circuit(c.restrict(i, b)?),
            Repr::Dense(t) => {
                let low = (1usize << i) - 1;
                let fixed = if b == Sign::Plus { 1usize << i } else { 0 };
                let table = (0..1usize << (self.n - 1))
                    .map(|j| t[(j & low) | fixed | ((j & !low) << 1)])
                    .collect();
                Self::dense_unchecked_arity(self.n - 1, table)?
            }
        };
        Ok(restricted.with_id(id).with_dense_cap(self.dense_cap))
    }

    /// `±1` when the coordinates of `x` at `±1` force the value of `f`.
    ///
    /// Decided structurally (constancy of the restriction), never by comparing
    /// the harmonic extension to `±1`.
    pub fn determined(&self, x: &[f64]) -> Option<Sign> {
        match &self.repr {
            Repr::Composite(c) => c.determined(c.root(), x),
            Repr::Dense(t) => {
                let (mut fixed, mut free) = (0usize, 0usize);
                for (i, &xi) in x.iter().enumerate() {
                    match Sign::from_value(xi) {
                        Some(Sign::Plus) => fixed |= 1 << i,
                        Some(Sign::Minus) => {}
                        None => free |= 1 << i,
                    }
                }
                let first = t[fixed];
                let mut sub = free;
                while sub != 0 {
                    if t[fixed | sub] != first {
                        return None;
                    }
                    sub = (sub - 1) & free;
                }
                Sign::from_value(first)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.determined(&vec![0.0; self.n]).is_some()
    }

    /// Fourier table of `y ↦ f(√(1 - x²) y + x)`; its empty coefficient is
    /// `f(x)`.
    pub fn interpolate(&self, x: &[f64]) -> Result<FourierTable> {
        self.check_point(x)?;
        Ok(self.fourier()?.substitute(x))
    }

    /// Coordinate-wise monotonicity. `None` when it cannot be decided within
    /// the dense cap.
    pub fn is_monotone(&self) -> Option<bool> {
        if let Some(c) = self.circuit() {
            if !c.has_negation() {
                return Some(true);
            }
        }
        let t = self.table().ok()?;
        Some((0..self.n).all(|i| {
            let bit = 1usize << i;
            (0..t.len()).all(|x| x & bit != 0 || t[x] <= t[x | bit])
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::zoo;
    use super::*;

    #[test]
    fn dense_rejects_bad_length() {
        assert!(BooleanFunction::dense(2, vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn dictator_table_reads_back() {
        let f = BooleanFunction::dense(1, vec![-1.0, 1.0]).unwrap();
        assert_eq!(f.harmonic(&[1.0]).unwrap(), 1.0);
        assert_eq!(f.harmonic(&[-1.0]).unwrap(), -1.0);
    }

    #[test]
    fn or2_table_order() {
        let f = BooleanFunction::dense(2, vec![-1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.harmonic(&[-1.0, -1.0]).unwrap(), -1.0);
        assert_eq!(f.harmonic(&[0.0, 0.0]).unwrap(), 0.5);
    }

    #[test]
    fn harmonic_rejects_points_outside_cube() {
        assert!(zoo::maj3().harmonic(&[0.0, 1.5, 0.0]).is_err());
    }

    #[test]
    fn maj3_harmonic_value() {
        let v = zoo::maj3().harmonic(&[0.25, -0.25, 0.5]).unwrap();
        assert!((v - 0.265625).abs() < 1e-15);
    }

    #[test]
    fn parity_at_origin_is_zero() {
        assert_eq!(zoo::parity(4).harmonic(&[0.0; 4]).unwrap(), 0.0);
    }

    #[test]
    fn derivative_examples() {
        let d = zoo::maj3().derivative(2, &[0.1, 0.2, 0.3]).unwrap();
        assert!((d - 0.49).abs() < 1e-15);
        assert_eq!(zoo::or(2).derivative(0, &[0.3, 1.0]).unwrap(), 0.0);
        let p = zoo::parity(2).derivative(0, &[0.7, 0.3]).unwrap();
        assert!((p - 0.3).abs() < 1e-15);
        assert!(zoo::maj3().derivative(3, &[0.0; 3]).is_err());
    }

    #[test]
    fn influence_examples() {
        for i in 0..3 {
            assert_eq!(zoo::maj3().influence(i).unwrap(), 0.5);
            assert_eq!(zoo::parity(3).influence(i).unwrap(), 1.0);
        }
        assert_eq!(zoo::dictator(2, 0).unwrap().influence(1).unwrap(), 0.0);
        let real = BooleanFunction::dense(1, vec![0.5, 1.0]).unwrap();
        assert!(real.influence(0).is_err());
    }

    #[test]
    fn variance_and_levels() {
        assert_eq!(zoo::or(2).variance().unwrap(), 0.75);
        assert_eq!(zoo::maj3().level_weight(1).unwrap(), 0.75);
        assert_eq!(zoo::maj3().level_weight(3).unwrap(), 0.25);
        assert_eq!(zoo::parity(5).level_weight(5).unwrap(), 1.0);
    }

    #[test]
    fn maj3_coefficients() {
        let f = zoo::maj3();
        let t = f.fourier().unwrap();
        assert_eq!(t.coefficient(0b001), 0.5);
        assert_eq!(t.coefficient(0b010), 0.5);
        assert_eq!(t.coefficient(0b100), 0.5);
        assert_eq!(t.coefficient(0b111), -0.5);
        assert_eq!(t.coefficient(0b011), 0.0);
        assert_eq!(t.coefficient(0), 0.0);
    }

    #[test]
    fn parity_has_single_top_coefficient() {
        let t = zoo::parity(4).fourier().unwrap().clone();
        assert_eq!(t.coefficient(0b1111), 1.0);
        assert_eq!(t.total_weight(), 1.0);
    }

    #[test]
    fn restrictions() {
        let or2 = zoo::or(2);
        let r = or2.restrict(0, Sign::Minus).unwrap();
        assert_eq!(r.table().unwrap().as_ref(), &[-1.0, 1.0]);
        let r = or2.restrict(0, Sign::Plus).unwrap();
        assert!(r.is_constant());
        assert_eq!(r.determined(&[0.0]), Some(Sign::Plus));
        let p = zoo::parity(3).restrict(1, Sign::Minus).unwrap();
        assert_eq!(p.table().unwrap().as_ref(), &[-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn dense_restriction_matches_composite_restriction() {
        let f = zoo::itmaj(2);
        let d = f.to_dense().unwrap();
        for i in [0, 4, 8] {
            for b in [Sign::Minus, Sign::Plus] {
                let a = f.restrict(i, b).unwrap();
                let c = d.restrict(i, b).unwrap();
                assert_eq!(a.table().unwrap(), c.table().unwrap());
            }
        }
    }

    #[test]
    fn determination_examples() {
        let or3 = zoo::or(3);
        assert_eq!(or3.determined(&[1.0, 0.2, -0.4]), Some(Sign::Plus));
        assert_eq!(or3.determined(&[-1.0, -1.0, 0.99]), None);
        assert_eq!(zoo::parity(2).determined(&[1.0, -1.0]), Some(Sign::Minus));
        let dense_or3 = or3.to_dense().unwrap();
        assert_eq!(dense_or3.determined(&[1.0, 0.2, -0.4]), Some(Sign::Plus));
        assert_eq!(dense_or3.determined(&[-1.0, -1.0, 0.99]), None);
    }

    #[test]
    fn interpolation_examples() {
        let or2 = zoo::or(2);
        let at_origin = or2.interpolate(&[0.0, 0.0]).unwrap();
        assert_eq!(&at_origin, or2.fourier().unwrap());
        let at_vertex = or2.interpolate(&[-1.0, 1.0]).unwrap();
        assert_eq!(at_vertex.coefficients(), &[1.0, 0.0, 0.0, 0.0]);
        let t = or2.interpolate(&[0.5, 0.0]).unwrap();
        assert!((t.mean() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn monotonicity() {
        assert_eq!(zoo::maj3().is_monotone(), Some(true));
        assert_eq!(zoo::parity(3).is_monotone(), Some(false));
        let not_or = BooleanFunction::composite(Node::negate(Node::Or(vec![Node::Var(0), Node::Var(1)])))
            .unwrap();
        assert_eq!(not_or.is_monotone(), Some(false));
    }
}
