//! Bordered squared-distance matrix and everything derived from its
//! determinant: the squared volume of a simplex and the analytic partial
//! derivative of the determinant in a single distance.
//!
//! For a simplex on `n + 1` vertices the bordered matrix is `(n+2) x (n+2)`:
//! a top row and left column `(0, 1, ..., 1)` around the matrix of squared
//! pairwise distances. Its determinant gives the squared volume as
//! `vol^2 = (-1)^(n-1) / (2^n (n!)^2) * det`.

use crate::geometry::DistanceMatrix;
use crate::mat;
use crate::{Error, Result};

/// Scale factor of the rounding guard for slightly negative squared volumes:
/// the guard is `1e-9 * (2 p / n)^(2n)`, the natural magnitude of the
/// determinant's terms, so it stays correct under uniform rescaling.
const NEGATIVE_GUARD: f64 = 1e-9;

/// The bordered squared-distance matrix of a simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct HatMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl HatMatrix {
    /// Builds the bordered matrix: entry (0,0) is 0, the rest of row 0 and
    /// column 0 are 1, and inner entry (i+1, j+1) is `d_ij^2`.
    pub fn from_distances(d: &DistanceMatrix) -> Self {
        let n = d.dim();
        let m = n + 2;
        let mut entries = vec![1.0; m * m];
        entries[0] = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let dist = d.get(i, j);
                entries[(i + 1) * m + (j + 1)] = dist * dist;
            }
        }
        Self { dim: n, entries }
    }

    /// Simplex dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Matrix order, `n + 2`.
    pub fn size(&self) -> usize {
        self.dim + 2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.size() + j]
    }

    /// Determinant by row-pivoted elimination; deterministic for identical
    /// inputs.
    pub fn determinant(&self) -> f64 {
        let mut a = self.entries.clone();
        mat::determinant_in_place(&mut a, self.size())
    }
}

/// Squared volume of the simplex with distance matrix `d`.
///
/// Slightly negative values (within `1e-9 * (2p/n)^(2n)` of zero) are rounding
/// artifacts of nearly degenerate simplices and clamp to 0. Values negative
/// beyond that guard mean the distances cannot come from points in `R^n`.
pub fn squared_volume(d: &DistanceMatrix) -> Result<f64> {
    let n = d.dim();
    let det = HatMatrix::from_distances(d).determinant();
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let value = sign * det / (2f64.powi(n as i32) * mat::factorial(n).powi(2));
    if value >= 0.0 {
        return Ok(value);
    }
    let p = d.half_perimeter();
    let guard = NEGATIVE_GUARD * (2.0 * p / n as f64).powi(2 * n as i32);
    if -value <= guard {
        Ok(0.0)
    } else {
        Err(Error::InvalidMetric {
            dim: n,
            value,
            guard,
        })
    }
}

/// Analytic partial derivative of the bordered-matrix determinant with
/// respect to the unsquared distance `d_ij`.
///
/// `d_ij^2` occupies the two symmetric cells (i+1, j+1) and (j+1, i+1), whose
/// cofactors agree by symmetry, so the derivative is `4 d_ij` times the
/// cofactor at (i+1, j+1).
pub fn hat_partial_derivative(d: &DistanceMatrix, i: usize, j: usize) -> Result<f64> {
    let n = d.dim();
    if i == j || i > n || j > n {
        return Err(Error::InvalidArgument(format!(
            "derivative needs two distinct vertex indices in 0..={n}, got ({i}, {j})"
        )));
    }
    let hat = HatMatrix::from_distances(d);
    let m = hat.size();
    let mut minor = Vec::with_capacity((m - 1) * (m - 1));
    for r in 0..m {
        if r == i + 1 {
            continue;
        }
        for c in 0..m {
            if c == j + 1 {
                continue;
            }
            minor.push(hat.get(r, c));
        }
    }
    let minor_det = mat::determinant_in_place(&mut minor, m - 1);
    let cof_sign = if (i + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    Ok(4.0 * d.get(i, j) * cof_sign * minor_det)
}
