//! Square edge matrices shared by the diffusion processes and the decoder.
//!
//! All three types store a dense row-major `n × n` buffer and keep the two
//! triangles mirrored; writers go through methods that touch both `(i, j)`
//! and `(j, i)`.

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Iterator over the undirected pairs `(i, j)` with `i < j`, in lexicographic order.
pub fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// Symmetric binary adjacency matrix with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EdgeMatrix {
    n: usize,
    bits: Vec<u8>,
}

impl EdgeMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, bits: vec![0; n * n] }
    }

    /// Builds a matrix from row-major entries, checking binarity, symmetry and the diagonal.
    pub fn from_entries(n: usize, entries: Vec<u8>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                entries.len()
            )));
        }
        for i in 0..n {
            if entries[i * n + i] != 0 {
                return Err(invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if v > 1 {
                    return Err(invalid(format!("non-binary entry {v} at ({i}, {j})")));
                }
                if v != entries[j * n + i] {
                    return Err(invalid(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, bits: entries })
    }

    /// Builds a matrix from a predicate evaluated on the upper triangle.
    pub fn from_fn(n: usize, mut active: impl FnMut(usize, usize) -> bool) -> Self {
        let mut m = Self::zeros(n);
        for (i, j) in upper_pairs(n) {
            m.set(i, j, active(i, j));
        }
        m
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j] != 0
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> u8 {
        self.bits[i * self.n + j]
    }

    /// Sets the undirected edge `{i, j}`. Panics on a diagonal index.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, on: bool) {
        assert_ne!(i, j, "self-loops are not representable");
        let v = u8::from(on);
        self.bits[i * self.n + j] = v;
        self.bits[j * self.n + i] = v;
    }

    pub fn entries(&self) -> &[u8] {
        &self.bits
    }

    /// Number of active undirected edges.
    pub fn active_edges(&self) -> usize {
        upper_pairs(self.n).filter(|&(i, j)| self.get(i, j)).count()
    }

    /// Number of nonzero entries, counting both triangles.
    pub fn nnz(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn row_sum(&self, i: usize) -> usize {
        self.bits[i * self.n..(i + 1) * self.n]
            .iter()
            .map(|&b| b as usize)
            .sum()
    }

    /// Active undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        upper_pairs(self.n).filter(move |&(i, j)| self.get(i, j))
    }

    /// Element-wise `self <= other`.
    pub fn is_subset_of(&self, other: &EdgeMatrix) -> bool {
        self.n == other.n && self.bits.iter().zip(&other.bits).all(|(a, b)| a <= b)
    }

    /// Element-wise maximum.
    pub fn union(&self, other: &EdgeMatrix) -> EdgeMatrix {
        assert_eq!(self.n, other.n);
        EdgeMatrix {
            n: self.n,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    /// First entry violating `self <= upper`, if any.
    pub(crate) fn first_excess(&self, upper: &EdgeMatrix) -> Option<(usize, usize)> {
        upper_pairs(self.n).find(|&(i, j)| self.get(i, j) && !upper.get(i, j))
    }
}

/// Symmetric matrix of edge-inclusion probabilities with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbHeatmap<F> {
    n: usize,
    values: Vec<F>,
}

impl<F: Scalar> ProbHeatmap<F> {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![F::zero(); n * n] }
    }

    pub fn from_entries(n: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for i in 0..n {
            if values[i * n + i] != F::zero() {
                return Err(invalid(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !(v >= F::zero() && v <= F::one()) {
                    return Err(invalid(format!("probability {v} at ({i}, {j}) outside [0, 1]")));
                }
                if v != values[j * n + i] {
                    return Err(invalid(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { n, values })
    }

    /// Evaluates `p` on the upper triangle, clamps into `[0, 1]` and mirrors.
    pub fn from_fn(n: usize, mut p: impl FnMut(usize, usize) -> F) -> Self {
        let mut m = Self::zeros(n);
        for (i, j) in upper_pairs(n) {
            m.set(i, j, p(i, j));
        }
        m
    }

    pub fn from_edges(x: &EdgeMatrix) -> Self {
        Self::from_fn(x.n(), |i, j| if x.get(i, j) { F::one() } else { F::zero() })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[i * self.n + j]
    }

    /// Sets the probability for `{i, j}`, clamped into `[0, 1]`. NaN becomes 0.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, p: F) {
        assert_ne!(i, j, "self-loops are not representable");
        let p = if p.is_nan() { F::zero() } else { p.max(F::zero()).min(F::one()) };
        self.values[i * self.n + j] = p;
        self.values[j * self.n + i] = p;
    }

    pub fn entries(&self) -> &[F] {
        &self.values
    }

    /// Edges whose probability is at least `threshold`.
    pub fn threshold(&self, threshold: F) -> EdgeMatrix {
        EdgeMatrix::from_fn(self.n, |i, j| self.get(i, j) >= threshold)
    }
}

/// Symmetric matrix of predicted per-edge rates `E[Δx]`, every consumed entry in `(0, 1]`.
///
/// The diagonal is ignored by every consumer and stored as the lower clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix<F> {
    n: usize,
    values: Vec<F>,
}

impl<F: Scalar> RateMatrix<F> {
    /// Validates raw rates. Off-diagonal entries must lie in `(0, 1]`.
    pub fn from_entries(n: usize, values: Vec<F>) -> Result<Self> {
        if values.len() != n * n {
            return Err(invalid(format!(
                "expected {} entries for n = {n}, got {}",
                n * n,
                values.len()
            )));
        }
        for (i, j) in upper_pairs(n) {
            let v = values[i * n + j];
            if !(v > F::zero() && v <= F::one()) {
                return Err(Error::InvalidRate { i, j, value: v.as_f64() });
            }
            if v != values[j * n + i] {
                let w = values[j * n + i];
                if !(w > F::zero() && w <= F::one()) {
                    return Err(Error::InvalidRate { i: j, j: i, value: w.as_f64() });
                }
                return Err(invalid(format!("asymmetric rate at ({i}, {j})")));
            }
        }
        Ok(Self { n, values })
    }

    /// Evaluates `y` on the upper triangle and clamps each value into `[floor, 1]`.
    pub fn clamped(n: usize, floor: F, mut y: impl FnMut(usize, usize) -> F) -> Self {
        let mut values = vec![floor; n * n];
        for (i, j) in upper_pairs(n) {
            let v = y(i, j);
            let v = if v.is_nan() { floor } else { v.max(floor).min(F::one()) };
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
        Self { n, values }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.values[i * self.n + j]
    }

    pub fn entries(&self) -> &[F] {
        &self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_matrix_rejects_bad_entries() {
        assert!(EdgeMatrix::from_entries(2, vec![1, 0, 0, 0]).is_err());
        assert!(EdgeMatrix::from_entries(2, vec![0, 1, 0, 0]).is_err());
        assert!(EdgeMatrix::from_entries(2, vec![0, 2, 2, 0]).is_err());
        assert!(EdgeMatrix::from_entries(2, vec![0, 1, 1, 0]).is_ok());
    }

    #[test]
    fn set_mirrors() {
        let mut m = EdgeMatrix::zeros(4);
        m.set(3, 1, true);
        assert!(m.get(1, 3) && m.get(3, 1));
        assert_eq!(m.active_edges(), 1);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.edges().collect::<Vec<_>>(), vec![(1, 3)]);
    }

    #[test]
    fn rate_matrix_reports_nonpositive_entries() {
        let err = RateMatrix::from_entries(2, vec![0.0, 0.0, 0.0, 0.0_f64]).unwrap_err();
        assert!(matches!(err, Error::InvalidRate { i: 0, j: 1, .. }));
        let err = RateMatrix::from_entries(2, vec![0.0, 1.5, 1.5, 0.0_f64]).unwrap_err();
        assert!(matches!(err, Error::InvalidRate { .. }));
        let r = RateMatrix::clamped(3, 1e-9_f64, |_, _| -3.0);
        assert_eq!(r.get(0, 2), 1e-9);
    }

    #[test]
    fn heatmap_clamps_and_validates() {
        let h = ProbHeatmap::<f64>::from_fn(3, |i, j| (i + j) as f64 - 1.0);
        assert_eq!(h.get(0, 1), 0.0);
        assert_eq!(h.get(1, 2), 1.0);
        assert!(ProbHeatmap::from_entries(2, vec![0.0, 0.3, 0.4, 0.0]).is_err());
    }
}
