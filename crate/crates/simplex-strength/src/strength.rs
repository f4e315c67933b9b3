//! The strength invariant: `sigma = vol^2 / p^(2n-1)` with `p` the
//! half-perimeter, the signed variant `s = sign * sigma`, and the closed
//! triangle forms (Heron and the normalized parameterization).
//!
//! Unlike the volume, the strength stays Lipschitz continuous under vertex
//! perturbations while still vanishing exactly on degenerate simplices, and
//! the signed variant distinguishes mirror images.

use crate::cayley_menger::squared_volume;
use crate::geometry::{DistanceMatrix, PointCloudSimplex, DEGENERACY_TOL};
use crate::{Error, Result};

/// Relative slack on triangle-inequality checks in the Heron path.
const TRIANGLE_SLACK: f64 = 1e-12;

/// Slack on the boundary checks of the normalized-triangle region.
const DOMAIN_SLACK: f64 = 1e-12;

/// Strength of a simplex together with the quantities it is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrengthResult {
    /// Strength `sigma >= 0`, in the length units of the input.
    pub sigma: f64,
    /// Orientation sign in `{-1, 0, +1}`.
    pub sign: i8,
    /// Signed strength `sign * sigma`.
    pub signed: f64,
    /// Squared volume (clamped at 0 within the rounding guard).
    pub volume_squared: f64,
    /// Half the sum of pairwise vertex distances.
    pub half_perimeter: f64,
}

/// Strength from a distance matrix: `vol^2 / p^(2n-1)`.
///
/// When all vertices coincide (`p = 0`) the strength is defined as 0, the
/// continuous extension along the coincident limit.
pub fn strength_from_distances(d: &DistanceMatrix) -> Result<f64> {
    let p = d.half_perimeter();
    if p == 0.0 {
        return Ok(0.0);
    }
    let n = d.dim() as i32;
    Ok(squared_volume(d)? / p.powi(2 * n - 1))
}

/// Full strength record of a coordinate simplex; the orientation sign uses
/// the shared degeneracy tolerance [`DEGENERACY_TOL`].
pub fn signed_strength(s: &PointCloudSimplex) -> Result<StrengthResult> {
    let d = s.pairwise_distances();
    let half_perimeter = d.half_perimeter();
    let (volume_squared, sigma) = if half_perimeter == 0.0 {
        (0.0, 0.0)
    } else {
        let v = squared_volume(&d)?;
        let n = d.dim() as i32;
        (v, v / half_perimeter.powi(2 * n - 1))
    };
    let sign = s.orientation_sign(DEGENERACY_TOL);
    Ok(StrengthResult {
        sigma,
        sign,
        signed: f64::from(sign) * sigma,
        volume_squared,
        half_perimeter,
    })
}

/// Triangle strength in the stable factored form
/// `(p - a)(p - b)(p - c) / p^2`, which avoids the cancellation the
/// area-then-square route suffers on needle triangles.
///
/// Sides must satisfy the triangle inequalities within a 1e-12 relative
/// slack; boundary-degenerate triples give exactly 0.
pub fn triangle_strength_heron(a: f64, b: f64, c: f64) -> Result<f64> {
    for (name, v) in [("a", a), ("b", b), ("c", c)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidInput(format!(
                "triangle side {name} must be finite and non-negative, got {v}"
            )));
        }
    }
    let p = 0.5 * (a + b + c);
    if p == 0.0 {
        return Ok(0.0);
    }
    let slack = TRIANGLE_SLACK * p;
    let mut product = 1.0;
    for (side, v) in [(a, p - a), (b, p - b), (c, p - c)] {
        if v < -slack {
            return Err(Error::InvalidInput(format!(
                "triangle inequality violated: side {side} exceeds the sum of the others \
                 (sides {a}, {b}, {c})"
            )));
        }
        product *= v.max(0.0);
    }
    Ok(product / (p * p))
}

/// Strength of a normalized triangle with sides `a <= b <= c = 1`,
/// parameterized by `x = a/c` and `y = 1 - b/c` over the region
/// `{x in [0, 1], 0 <= y <= x, x + y <= 1}`:
/// `(2 - x - y)(x^2 - y^2) / (2 (2 + x - y)^2)`.
pub fn normalized_triangle_strength(x: f64, y: f64) -> Result<f64> {
    let inside = x.is_finite()
        && y.is_finite()
        && (-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x)
        && y >= -DOMAIN_SLACK
        && x - y >= -DOMAIN_SLACK
        && 1.0 - x - y >= -DOMAIN_SLACK;
    if !inside {
        return Err(Error::OutOfDomain { x, y });
    }
    let denom = 2.0 + x - y;
    let value = (2.0 - x - y) * (x * x - y * y) / (2.0 * denom * denom);
    // Boundary points admitted by the slack can land a rounding error below 0.
    Ok(value.max(0.0))
}

/// Strength along the `y = 0` edge of the normalized-triangle region
/// (isosceles triangles with the two larger sides equal, `b = c`):
/// `(2 - x) x^2 / (2 (2 + x)^2)` for `x` in `[0, 1]`.
pub fn section_b_eq_c(x: f64) -> f64 {
    (2.0 - x) * x * x / (2.0 * (2.0 + x) * (2.0 + x))
}

/// Strength along the `x + y = 1` edge of the normalized-triangle region
/// (isosceles triangles with the two smaller sides equal, `a = b`):
/// `(2x - 1) / (2 (2x + 1)^2)` for `x` in `[1/2, 1]`.
pub fn section_a_eq_b(x: f64) -> f64 {
    (2.0 * x - 1.0) / (2.0 * (2.0 * x + 1.0) * (2.0 * x + 1.0))
}
