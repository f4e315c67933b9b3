//! Core simplex representation: ordered vertices, pairwise distances,
//! half-perimeter, and the orientation sign.
//!
//! A simplex in dimension `n` is `n + 1` ordered points of `R^n`. It may be
//! degenerate (vertices in a common hyperplane); the orientation sign is 0
//! there and the edge-matrix determinant vanishes.

use crate::mat;
use crate::{Error, Result};

/// Default relative tolerance of the orientation degeneracy test: the sign is
/// declared 0 when `|det| <= tol * product of edge-column norms`. The test is
/// scale-invariant, so large coordinates do not need a different threshold.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Relative slack used when validating symmetry of distance matrices read
/// from files.
const SYMMETRY_TOL: f64 = 1e-12;

/// `n + 1` ordered points in `R^n`, all coordinates finite.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloudSimplex {
    dim: usize,
    vertices: Vec<Vec<f64>>,
}

impl PointCloudSimplex {
    /// Builds a simplex from `n + 1` vertices of length `n` each.
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a simplex needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        let dim = vertices.len() - 1;
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "vertex {i} has {} coordinates, expected {dim} for {} vertices",
                    v.len(),
                    vertices.len()
                )));
            }
            for (j, &x) in v.iter().enumerate() {
                if !x.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "vertex {i} coordinate {j} is not finite ({x})"
                    )));
                }
            }
        }
        Ok(Self { dim, vertices })
    }

    /// Ambient (and simplex) dimension `n`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    /// Matrix of all pairwise Euclidean distances.
    pub fn pairwise_distances(&self) -> DistanceMatrix {
        let m = self.dim + 1;
        let mut d = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                let dist = euclidean(&self.vertices[i], &self.vertices[j]);
                d[i * m + j] = dist;
                d[j * m + i] = dist;
            }
        }
        DistanceMatrix { dim: self.dim, d }
    }

    /// Determinant of the `n x n` matrix whose columns are `p_i - p_0`;
    /// equals `n!` times the signed volume.
    pub fn edge_matrix_det(&self) -> f64 {
        let (det, _) = self.edge_det_and_scale();
        det
    }

    /// Sign of the edge-matrix determinant in `{-1, 0, +1}`.
    ///
    /// Returns 0 when `|det| <= tol * product of edge-column norms`, or when
    /// any edge column has zero norm. [`DEGENERACY_TOL`] is the default
    /// choice of `tol`.
    pub fn orientation_sign(&self, tol: f64) -> i8 {
        let (det, scale) = self.edge_det_and_scale();
        if scale == 0.0 || det.abs() <= tol * scale {
            0
        } else if det > 0.0 {
            1
        } else {
            -1
        }
    }

    /// Edge-matrix determinant together with the product of edge-column
    /// norms (the Hadamard scale of the determinant).
    pub(crate) fn edge_det_and_scale(&self) -> (f64, f64) {
        let n = self.dim;
        let mut m = vec![0.0; n * n];
        let mut scale = 1.0;
        for col in 1..=n {
            let mut norm_sq = 0.0;
            for row in 0..n {
                let e = self.vertices[col][row] - self.vertices[0][row];
                m[row * n + (col - 1)] = e;
                norm_sq += e * e;
            }
            scale *= norm_sq.sqrt();
        }
        if scale == 0.0 {
            return (0.0, 0.0);
        }
        (mat::determinant_in_place(&mut m, n), scale)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Symmetric `(n+1) x (n+1)` matrix of pairwise distances with zero diagonal.
///
/// Distances are stored unsquared; squaring happens only when the bordered
/// squared-distance matrix is built.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dim: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a distance matrix from full rows, validating shape, finiteness,
    /// non-negativity, a zero diagonal, and symmetry (within a 1e-12 relative
    /// slack). The stored matrix is exactly symmetric: the upper triangle wins.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = rows.len();
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "a distance matrix needs at least 2 rows, got {m}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInput(format!(
                    "distance matrix row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
        }
        let mut d = vec![0.0; m * m];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "distance ({i}, {j}) must be finite and non-negative, got {v}"
                    )));
                }
                if i == j && v != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "diagonal entry ({i}, {i}) must be 0, got {v}"
                    )));
                }
            }
        }
        for i in 0..m {
            for j in i + 1..m {
                let a = rows[i][j];
                let b = rows[j][i];
                if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()) {
                    return Err(Error::InvalidInput(format!(
                        "distance matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                d[i * m + j] = a;
                d[j * m + i] = a;
            }
        }
        Ok(Self { dim: m - 1, d })
    }

    /// Distance matrix of a triangle with sides `a = d01`, `b = d02`, `c = d12`.
    pub fn triangle(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::from_rows(vec![vec![0.0, a, b], vec![a, 0.0, c], vec![b, c, 0.0]])
    }

    /// Distance matrix of a segment of length `d`.
    pub fn segment(d: f64) -> Result<Self> {
        Self::from_rows(vec![vec![0.0, d], vec![d, 0.0]])
    }

    /// Simplex dimension `n` (the matrix is `(n+1) x (n+1)`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices, `n + 1`.
    pub fn size(&self) -> usize {
        self.dim + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.size() + j]
    }

    /// Half the sum of the distances over unordered vertex pairs. For a
    /// triangle with sides a, b, c this is the classical (a + b + c) / 2;
    /// for a segment of length d it is d / 2.
    pub fn half_perimeter(&self) -> f64 {
        let m = self.size();
        let mut sum = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                sum += self.d[i * m + j];
            }
        }
        0.5 * sum
    }

    /// Copy with the symmetric pair `(i, j)` replaced by `value`.
    pub fn with_distance(&self, i: usize, j: usize, value: f64) -> Result<Self> {
        if i == j || i > self.dim || j > self.dim {
            return Err(Error::InvalidArgument(format!(
                "distance index pair ({i}, {j}) is out of range for dimension {}",
                self.dim
            )));
        }
        if !value.is_finite() || value < 0.0 {
            return Err(Error::InvalidInput(format!(
                "distance ({i}, {j}) must be finite and non-negative, got {value}"
            )));
        }
        let m = self.size();
        let mut d = self.d.clone();
        d[i * m + j] = value;
        d[j * m + i] = value;
        Ok(Self { dim: self.dim, d })
    }
}
