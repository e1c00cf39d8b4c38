//! Dense primal simplex for `max c.x  s.t.  A x <= b` with `b >= 0` and `x` free.
//!
//! The origin is feasible whenever `b >= 0`, so the slack basis is a valid
//! starting point and no phase-one is needed. Bland's rule prevents cycling.

use nalgebra::{DMatrix, DVector};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal(f64),
    Unbounded,
}

pub(crate) fn maximize(c: &DVector<f64>, a: &DMatrix<f64>, b: &DVector<f64>) -> LpOutcome {
    let m = a.nrows();
    let n = a.ncols();
    debug_assert!(b.iter().all(|v| *v >= 0.0));
    let cols = 2 * n + m;
    // Row 0..m are constraints, row m is the objective; last column is the rhs.
    let mut t = DMatrix::<f64>::zeros(m + 1, cols + 1);
    for i in 0..m {
        for j in 0..n {
            t[(i, j)] = a[(i, j)];
            t[(i, n + j)] = -a[(i, j)];
        }
        t[(i, 2 * n + i)] = 1.0;
        t[(i, cols)] = b[i];
    }
    for j in 0..n {
        t[(m, j)] = -c[j];
        t[(m, n + j)] = c[j];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| 2 * n + i).collect();

    let max_iter = 50 * (m + cols) + 100;
    for _ in 0..max_iter {
        let Some(enter) = (0..cols).find(|&j| t[(m, j)] < -PIVOT_EPS) else {
            return LpOutcome::Optimal(t[(m, cols)]);
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let coef = t[(i, enter)];
            if coef > PIVOT_EPS {
                let ratio = t[(i, cols)] / coef;
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-14 || (ratio <= lr + 1e-14 && basis[i] < basis[li]) {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((row, _)) = leave else {
            return LpOutcome::Unbounded;
        };
        let pivot = t[(row, enter)];
        for j in 0..=cols {
            t[(row, j)] /= pivot;
        }
        for i in 0..=m {
            if i != row {
                let factor = t[(i, enter)];
                if factor != 0.0 {
                    for j in 0..=cols {
                        let v = t[(row, j)];
                        t[(i, j)] -= factor * v;
                    }
                }
            }
        }
        basis[row] = enter;
    }
    // Bland's rule terminates; reaching here means numerical trouble.
    LpOutcome::Optimal(t[(m, cols)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_support() {
        // |x| <= 1, |y| <= 2 ; maximize x + y = 3
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, -1.0, 0.0, 0.0, 0.5, 0.0, -0.5]);
        let b = DVector::from_element(4, 1.0);
        let c = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(maximize(&c, &a, &b), LpOutcome::Optimal(3.0));
        let c = DVector::from_vec(vec![-2.0, 1.0]);
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal(v) => assert!((v - 4.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn detects_unbounded() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let b = DVector::from_element(2, 1.0);
        let c = DVector::from_vec(vec![0.0, 1.0]);
        assert_eq!(maximize(&c, &a, &b), LpOutcome::Unbounded);
    }
}
