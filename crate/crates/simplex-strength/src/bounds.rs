//! The per-dimension constant ladder: rencontre (derangement) numbers, the
//! Lipschitz constants of the strength, the intermediate proof constant
//! `c_n`, and the three determinant/edge bounds the verification suites
//! check empirically.

use serde::Serialize;

use crate::mat::factorial;
use crate::{Error, Result};

/// Largest `n` whose rencontre number fits in 128 bits (`r_35` overflows).
pub const MAX_RENCONTRE_N: u32 = 34;

/// Exact count of fixed-point-free permutations of `n` elements, by the
/// integer recurrence `r_n = n r_(n-1) + (-1)^n`.
///
/// The alternating-sum formula loses exactness in floating point, and the
/// bound tables multiply these counts by tiny factors where relative error
/// matters, so the computation stays in integers.
pub fn rencontre(n: u32) -> Result<u128> {
    let mut r: u128 = 1; // r_0
    for k in 1..=n {
        let prod = u128::from(k).checked_mul(r).ok_or(Error::Overflow(n))?;
        r = if k % 2 == 0 {
            prod.checked_add(1).ok_or(Error::Overflow(n))?
        } else {
            prod - 1 // k * r_(k-1) >= 1 whenever k is odd
        };
    }
    Ok(r)
}

/// Per-dimension Lipschitz constant of the strength under the perturbation
/// model where every vertex moves within an epsilon-ball: 2 for n = 1,
/// sqrt(3) for n = 2, and `b_n = 2^(n+0.5) / (n! n^(2n-4))` for n >= 3.
pub fn lambda_bound(n: usize) -> f64 {
    assert!(n >= 1, "dimension must be at least 1");
    match n {
        1 => 2.0,
        2 => 3f64.sqrt(),
        _ => b_n(n),
    }
}

fn b_n(n: usize) -> f64 {
    2f64.powf(n as f64 + 0.5) / (factorial(n) * (n as f64).powi(2 * n as i32 - 4))
}

/// The sharper constant from which `b_n` is derived:
/// `(2 r_n + 2 r_(n+1) + r_(n+2)) * 2^(n-0.5) sqrt(n+1) / ((n!)^2 n^(2n-1.5))`,
/// defined for n >= 3 and always strictly below `b_n`.
pub fn c_n_bound(n: usize) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "c_n is defined for n >= 3, got {n}"
        )));
    }
    let nu = n as u32;
    let r0 = rencontre(nu)? as f64;
    let r1 = rencontre(nu + 1)? as f64;
    let r2 = rencontre(nu + 2)? as f64;
    let nf = n as f64;
    Ok(
        (2.0 * r0 + 2.0 * r1 + r2) * 2f64.powf(nf - 0.5) * (nf + 1.0).sqrt()
            / (factorial(n).powi(2) * nf.powf(2.0 * nf - 1.5)),
    )
}

/// Per-dimension record of all bound constants.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundTable {
    /// Simplex dimension `n`.
    pub dim: usize,
    /// `r_(n+2)`, the number of nonzero terms in the bordered determinant.
    pub rencontre_n_plus_2: u128,
    /// Lipschitz constant (2, sqrt(3), or `b_n`).
    pub lambda_n: f64,
    /// Sharper proof constant, present for n >= 3.
    pub c_n: Option<f64>,
    /// `b_n` formula value, present for n >= 3 (equals `lambda_n` there).
    pub b_n: Option<f64>,
    /// Edge-to-half-perimeter bound `2 / n`: every `d_ij / p <= 2/n`.
    pub edge_ratio_bound: f64,
    /// `|det| / p^(2n) <= r_(n+2) (2/n)^(2n)`.
    pub det_ratio_bound: f64,
    /// `|d det / d d_ij| / p^(2n-1) <= 4 (r_n + r_(n+1)) (2/n)^(2n-1)`.
    pub det_derivative_bound: f64,
}

/// Fully populated bound table for dimension `n >= 1`.
///
/// Errors only when the rencontre numbers overflow (n > 32).
pub fn lemma_bounds(n: usize) -> Result<BoundTable> {
    assert!(n >= 1, "dimension must be at least 1");
    let nu = n as u32;
    let r_n = rencontre(nu)? as f64;
    let r_n1 = rencontre(nu + 1)? as f64;
    let r_n2 = rencontre(nu + 2)?;
    let ratio = 2.0 / n as f64;
    let (c, b) = if n >= 3 {
        (Some(c_n_bound(n)?), Some(b_n(n)))
    } else {
        (None, None)
    };
    Ok(BoundTable {
        dim: n,
        rencontre_n_plus_2: r_n2,
        lambda_n: lambda_bound(n),
        c_n: c,
        b_n: b,
        edge_ratio_bound: ratio,
        det_ratio_bound: r_n2 as f64 * ratio.powi(2 * n as i32),
        det_derivative_bound: 4.0 * (r_n + r_n1) * ratio.powi(2 * n as i32 - 1),
    })
}
