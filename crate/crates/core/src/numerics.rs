//! Small numerical kernels shared by the solvers.

use crate::error::{ModelError, Result};

/// Pivots below this magnitude are treated as singular.
pub const PIVOT_FLOOR: f64 = 1e-14;

/// Tridiagonal system `A x = rhs`, stored by diagonals.
///
/// Row `i` reads `lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1] = rhs[i]`;
/// `lower[0]` and `upper[n-1]` are ignored.
#[derive(Debug, Clone)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl Tridiagonal {
    pub fn with_len(n: usize) -> Self {
        Tridiagonal {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Thomas elimination without pivoting. Valid for strictly diagonally
    /// dominant systems; reports `SingularSystem` when a pivot collapses.
    pub fn solve(&self) -> Result<Vec<f64>> {
        let n = self.len();
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.abs() < PIVOT_FLOOR || !pivot.is_finite() {
            return Err(ModelError::SingularSystem { row: 0, pivot });
        }
        c_prime[0] = self.upper[0] / pivot;
        d_prime[0] = self.rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c_prime[i - 1];
            if pivot.abs() < PIVOT_FLOOR || !pivot.is_finite() {
                return Err(ModelError::SingularSystem { row: i, pivot });
            }
            c_prime[i] = if i + 1 < n {
                self.upper[i] / pivot
            } else {
                0.0
            };
            d_prime[i] = (self.rhs[i] - self.lower[i] * d_prime[i - 1]) / pivot;
        }
        let mut x = d_prime;
        for i in (0..n.saturating_sub(1)).rev() {
            x[i] -= c_prime[i] * x[i + 1];
        }
        Ok(x)
    }

    /// `A x - rhs`, row by row.
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut r = self.diag[i] * x[i] - self.rhs[i];
                if i > 0 {
                    r += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    r += self.upper[i] * x[i + 1];
                }
                r
            })
            .collect()
    }
}

/// Largest `x` in `[lo, hi]` with `pred(x)` true, assuming `pred(lo)` holds
/// and the true set is an interval starting at `lo`.
///
/// Returns `hi` directly when `pred(hi)` holds.
pub fn bisect_last_true<F>(mut lo: f64, mut hi: f64, tol: f64, mut pred: F) -> f64
where
    F: FnMut(f64) -> bool,
{
    if pred(hi) {
        return hi;
    }
    // 200 halvings exhaust f64 resolution on any finite bracket.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Maximiser of a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F>(mut lo: f64, mut hi: f64, tol: f64, f: F) -> f64
where
    F: Fn(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    while hi - lo > tol {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        }
        if hi - lo <= f64::EPSILON * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solution() {
        // [2 -1 0; -1 2 -1; 0 -1 2] x = [1 0 1] has x = [1 1 1].
        let sys = Tridiagonal {
            lower: vec![0.0, -1.0, -1.0],
            diag: vec![2.0, 2.0, 2.0],
            upper: vec![-1.0, -1.0, 0.0],
            rhs: vec![1.0, 0.0, 1.0],
        };
        let x = sys.solve().unwrap();
        for v in &x {
            assert!((v - 1.0).abs() < 1e-15);
        }
        assert!(sys.residual(&x).iter().all(|r| r.abs() < 1e-15));
    }

    #[test]
    fn thomas_single_row() {
        let sys = Tridiagonal {
            lower: vec![0.0],
            diag: vec![4.0],
            upper: vec![0.0],
            rhs: vec![2.0],
        };
        assert_eq!(sys.solve().unwrap(), vec![0.5]);
    }

    #[test]
    fn thomas_flags_singular_pivot() {
        let sys = Tridiagonal {
            lower: vec![0.0, 1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0, 0.0],
            rhs: vec![1.0, 1.0],
        };
        assert!(matches!(
            sys.solve(),
            Err(ModelError::SingularSystem { row: 1, .. })
        ));
    }

    #[test]
    fn bisection_finds_interval_end() {
        let x = bisect_last_true(0.0, 10.0, 1e-12, |x| x * x <= 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-11);
        assert_eq!(bisect_last_true(0.0, 1.0, 1e-12, |_| true), 1.0);
    }

    #[test]
    fn golden_section_on_parabola() {
        let x = golden_section_max(-3.0, 5.0, 1e-12, |x| -(x - 1.25) * (x - 1.25));
        assert!((x - 1.25).abs() < 1e-7);
    }
}
