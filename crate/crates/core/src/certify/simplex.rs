//! Dense simplex for `max cᵀx` subject to `Ax ≤ b`, `x ≥ 0` with `b ≥ 0`.
//!
//! The tableau is kept in condensed (dictionary) form: one row per basic variable, one
//! column per nonbasic variable, so slacks never appear as explicit columns. Bland's
//! rule makes the method terminate on degenerate problems.

const TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
}

/// Solve `max cᵀx, Ax ≤ b, x ≥ 0`; `a` is row-major with `c.len()` columns. Requires `b ≥ 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let m = c.len();
    let p = a.len();
    assert_eq!(b.len(), p, "one bound per row");
    assert!(b.iter().all(|&v| v >= 0.0), "origin must be feasible");
    // basic_i = rhs_i - Σ_k t[i][k] · nonbasic_k ;  z = z0 + Σ_k d_k · nonbasic_k
    let mut t: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    let mut d = c.to_vec();
    let mut z0 = 0.0;
    // Labels: 0..m structural, m..m+p slacks.
    let mut nonbasic: Vec<usize> = (0..m).collect();
    let mut basic: Vec<usize> = (m..m + p).collect();
    loop {
        let entering = (0..m).filter(|&k| d[k] > TOL).min_by_key(|&k| nonbasic[k]);
        let Some(j) = entering else {
            let mut x = vec![0.0; m];
            for (i, &lab) in basic.iter().enumerate() {
                if lab < m {
                    x[lab] = rhs[i];
                }
            }
            return LpOutcome::Optimal { value: z0, x };
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..p {
            if t[i][j] > TOL {
                let ratio = rhs[i] / t[i][j];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((r, best)) => {
                        if ratio < best - TOL || (ratio <= best + TOL && basic[i] < basic[r]) {
                            Some((i, ratio))
                        } else {
                            Some((r, best))
                        }
                    }
                };
            }
        }
        let Some((r, _)) = leave else {
            return LpOutcome::Unbounded;
        };
        let piv = t[r][j];
        let row_r: Vec<f64> = t[r].iter().map(|v| v / piv).collect();
        let rhs_r = rhs[r] / piv;
        for i in 0..p {
            if i == r {
                continue;
            }
            let f = t[i][j];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                t[i][k] -= f * row_r[k];
            }
            t[i][j] = -f / piv;
            rhs[i] -= f * rhs_r;
            if rhs[i] < 0.0 && rhs[i] > -1e-10 {
                rhs[i] = 0.0;
            }
        }
        let f = d[j];
        for k in 0..m {
            d[k] -= f * row_r[k];
        }
        d[j] = -f / piv;
        z0 += f * rhs_r;
        t[r] = row_r;
        t[r][j] = 1.0 / piv;
        rhs[r] = rhs_r;
        std::mem::swap(&mut basic[r], &mut nonbasic[j]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let r = maximize(&[3.0, 5.0], &[vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]], &[4.0, 12.0, 18.0]);
        match r {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 36.0).abs() < 1e-12);
                assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
            }
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn detects_unbounded() {
        assert_eq!(maximize(&[1.0, 1.0], &[vec![1.0, -1.0]], &[1.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Many constraints through the origin.
        let a = vec![vec![1.0, -1.0], vec![-1.0, 1.0], vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let r = maximize(&[1.0, 1.0], &a, &[0.0, 0.0, 2.0, 1.0, 1.0]);
        assert!(matches!(r, LpOutcome::Optimal { value, .. } if (value - 2.0).abs() < 1e-12));
    }
}
