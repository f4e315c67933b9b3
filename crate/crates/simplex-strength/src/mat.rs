//! Internal dense-matrix kernels: determinants of small row-major matrices.
//!
//! Orders 1..=3 use closed forms, which stay exact for the simple integer-like
//! matrices that show up in the one-dimensional bound checks. Larger orders
//! use O(n^3) row elimination with partial pivoting.

/// Determinant of a row-major `n x n` matrix. The buffer is clobbered.
pub(crate) fn determinant_in_place(a: &mut [f64], n: usize) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    match n {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => eliminate(a, n),
    }
}

/// Row elimination with partial pivoting; deterministic for identical inputs
/// (ties pick the first row of maximal magnitude).
fn eliminate(a: &mut [f64], n: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                pivot = row;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for k in col..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        let p = a[col * n + col];
        det *= p;
        for row in col + 1..n {
            let m = a[row * n + col] / p;
            if m != 0.0 {
                for k in col + 1..n {
                    a[row * n + k] -= m * a[col * n + k];
                }
            }
        }
    }
    det
}

/// `n!` as an f64 (exact for n <= 20, which covers every dimension we handle
/// before the rencontre numbers overflow anyway).
pub(crate) fn factorial(n: usize) -> f64 {
    (2..=n).fold(1.0, |acc, k| acc * k as f64)
}
