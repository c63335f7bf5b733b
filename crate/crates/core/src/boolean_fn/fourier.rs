//! Walsh–Hadamard transform in the `{-1, 1}` convention.
//!
//! Table index bit `i` is 0 for `x_i = -1` and 1 for `x_i = +1`. A coefficient
//! index is the bitmask of the subset `S`.

use serde::Serialize;

/// Fourier coefficients `f̂(S)` indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierTable {
    n: usize,
    coefficients: Vec<f64>,
}

impl FourierTable {
    /// Forward transform of a truth table of length `2^n`, `O(n 2^n)`.
    pub fn from_values(n: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), 1usize << n, "table length must be 2^n");
        let mut c = values.to_vec();
        for i in 0..n {
            let bit = 1usize << i;
            for j in 0..c.len() {
                if j & bit == 0 {
                    let lo = c[j];
                    let hi = c[j | bit];
                    c[j] = 0.5 * (lo + hi);
                    c[j | bit] = 0.5 * (hi - lo);
                }
            }
        }
        FourierTable { n, coefficients: c }
    }

    pub fn from_coefficients(n: usize, coefficients: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), 1usize << n);
        FourierTable { n, coefficients }
    }

    /// Inverse transform back to a truth table.
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = self.coefficients.clone();
        for i in 0..self.n {
            let bit = 1usize << i;
            for j in 0..v.len() {
                if j & bit == 0 {
                    let c0 = v[j];
                    let c1 = v[j | bit];
                    v[j] = c0 - c1;
                    v[j | bit] = c0 + c1;
                }
            }
        }
        v
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coefficient(&self, subset: usize) -> f64 {
        self.coefficients[subset]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn mean(&self) -> f64 {
        self.coefficients[0]
    }

    /// `Σ_S f̂(S)²`, which equals `E[f²]` by Parseval.
    pub fn total_weight(&self) -> f64 {
        self.coefficients.iter().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.coefficients[1..].iter().map(|c| c * c).sum()
    }

    /// `W_k = Σ_{|S| = k} f̂(S)²`.
    pub fn level_weight(&self, k: usize) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(s, _)| s.count_ones() as usize == k)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Largest `|S|` with a nonzero coefficient (exact comparison).
    pub fn degree(&self) -> usize {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(s, _)| s.count_ones() as usize)
            .max()
            .unwrap_or(0)
    }

    /// `‖∂_i f‖₂² = Σ_{S ∋ i} f̂(S)²`.
    pub fn derivative_weight(&self, i: usize) -> f64 {
        let bit = 1usize << i;
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(s, _)| s & bit != 0)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Multilinear polynomial evaluated at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(s, &c)| {
                (0..self.n)
                    .filter(|i| s >> i & 1 == 1)
                    .map(|i| x[i])
                    .product::<f64>()
                    * c
            })
            .sum()
    }

    /// Coefficients of `y ↦ f(√(1 - x²) y + x)` (coordinate-wise substitution).
    pub fn substitute(&self, x: &[f64]) -> FourierTable {
        let mut c = self.coefficients.clone();
        for (i, &xi) in x.iter().enumerate().take(self.n) {
            let bit = 1usize << i;
            let scale = (1.0 - xi * xi).max(0.0).sqrt();
            for j in 0..c.len() {
                if j & bit == 0 {
                    let with_i = c[j | bit];
                    c[j] += xi * with_i;
                    c[j | bit] = scale * with_i;
                }
            }
        }
        FourierTable {
            n: self.n,
            coefficients: c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute force `f̂(S) = 2^{-n} Σ_x f(x) Π_{i∈S} x_i`.
    fn brute(n: usize, values: &[f64]) -> Vec<f64> {
        (0..1usize << n)
            .map(|s| {
                let total: f64 = (0..1usize << n)
                    .map(|x| {
                        let chi: f64 = (0..n)
                            .filter(|i| s >> i & 1 == 1)
                            .map(|i| if x >> i & 1 == 1 { 1.0 } else { -1.0 })
                            .product();
                        values[x] * chi
                    })
                    .sum();
                total / (1usize << n) as f64
            })
            .collect()
    }

    #[test]
    fn or2_matches_brute_force() {
        let or2 = [-1.0, 1.0, 1.0, 1.0];
        let t = FourierTable::from_values(2, &or2);
        assert_eq!(t.coefficients(), brute(2, &or2).as_slice());
        assert_eq!(t.coefficients(), &[0.5, 0.5, 0.5, -0.5]);
    }

    #[test]
    fn round_trip_is_exact_on_boolean_tables() {
        let v: Vec<f64> = (0..32).map(|i| if (i * 7 + 3) % 5 < 2 { 1.0 } else { -1.0 }).collect();
        let t = FourierTable::from_values(5, &v);
        assert_eq!(t.to_values(), v);
    }

    #[test]
    fn substitution_at_origin_is_identity() {
        let t = FourierTable::from_values(2, &[-1.0, 1.0, 1.0, 1.0]);
        assert_eq!(t.substitute(&[0.0, 0.0]), t);
    }
}
