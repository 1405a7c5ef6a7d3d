//! Dense two-phase simplex for the tiny linear programs that polytope bodies need
//! (gauge evaluation, origin membership). Bland's rule keeps it cycle-free.

const EPS: f64 = 1e-11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    // rows x (cols + 1); last column is the right-hand side
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let p = self.data[pr * w + pc];
        for c in 0..w {
            self.data[pr * w + c] /= p;
        }
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for c in 0..w {
                    self.data[r * w + c] -= f * self.data[pr * w + c];
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations minimizing `cost` over columns `allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> LpOutcome {
        loop {
            // reduced costs: c_j - c_B^T B^{-1} a_j
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut rc = cost[j];
                for r in 0..self.rows {
                    rc -= cost[self.basis[r]] * self.at(r, j);
                }
                if rc < -EPS {
                    entering = Some(j);
                    break;
                }
            }
            let Some(pc) = entering else {
                let value = (0..self.rows)
                    .map(|r| cost[self.basis[r]] * self.rhs(r))
                    .sum();
                return LpOutcome::Optimal(value);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > EPS {
                    let ratio = self.rhs(r) / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - EPS
                                || (ratio <= lratio + EPS && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            match leave {
                None => return LpOutcome::Unbounded,
                Some((pr, _)) => self.pivot(pr, pc),
            }
        }
    }
}

/// Minimizes `c·x` subject to `A x = b`, `x ≥ 0`. `a` is row-major `m × n`.
pub(crate) fn minimize(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    let cols = n + m;
    let mut data = vec![0.0; m * (cols + 1)];
    for r in 0..m {
        let sign = if b[r] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            data[r * (cols + 1) + j] = sign * a[r][j];
        }
        data[r * (cols + 1) + n + r] = 1.0;
        data[r * (cols + 1) + cols] = sign * b[r];
    }
    let mut t = Tableau {
        rows: m,
        cols,
        data,
        basis: (n..n + m).collect(),
    };

    let mut phase1 = vec![0.0; cols];
    for v in phase1.iter_mut().skip(n) {
        *v = 1.0;
    }
    match t.optimize(&phase1, cols) {
        LpOutcome::Optimal(v) if v <= 1e-9 * (1.0 + b.iter().map(|x| x.abs()).sum::<f64>()) => {}
        _ => return LpOutcome::Infeasible,
    }
    // drive remaining artificials out of the basis where possible
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(j) = (0..n).find(|&j| !t.basis.contains(&j) && t.at(r, j).abs() > EPS) {
                t.pivot(r, j);
            }
        }
    }
    let mut phase2 = vec![0.0; cols];
    phase2[..n].copy_from_slice(c);
    // artificials left in the basis sit on all-zero rows and stay at zero
    t.optimize(&phase2, n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_min() {
        // min x + y s.t. x + 2y = 2 -> y = 1, value 1
        let out = minimize(&[vec![1.0, 2.0]], &[2.0], &[1.0, 1.0]);
        assert_eq!(out, LpOutcome::Optimal(1.0));
    }

    #[test]
    fn infeasible() {
        // x = -1 with x >= 0
        let out = minimize(&[vec![1.0]], &[-1.0], &[1.0]);
        assert_eq!(out, LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded() {
        // min -x s.t. x - y = 0
        let out = minimize(&[vec![1.0, -1.0]], &[0.0], &[-1.0, 0.0]);
        assert_eq!(out, LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let out = minimize(
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            &[1.0, 2.0],
            &[1.0, 3.0],
        );
        assert_eq!(out, LpOutcome::Optimal(1.0));
    }
}
