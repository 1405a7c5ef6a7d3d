//! Derivative-free local minimization (Nelder–Mead with dimension-adaptive
//! coefficients) used by the multistart rate search.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop once `f_max − f_min` over the simplex falls below this.
    pub ftol: f64,
    /// ... and the simplex diameter falls below this.
    pub xtol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            max_iter: 2000,
            ftol: 1e-10,
            xtol: 1e-9,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iters: usize,
    pub evals: usize,
    pub converged: bool,
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
) -> NelderMeadResult {
    let n = x0.len();
    let eval = |x: &[f64]| finite_or_inf(f(x));
    if n == 0 {
        return NelderMeadResult {
            x: Vec::new(),
            f: eval(x0),
            iters: 0,
            evals: 1,
            converged: true,
        };
    }
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let (alpha, gamma, rho, sigma) = if n == 1 {
        (1.0, 2.0, 0.5, 0.5)
    } else {
        (alpha, gamma, rho, sigma)
    };

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut evals = n + 1;
    let mut iters = 0;
    let mut converged = false;

    while iters < opts.max_iter {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread.abs() <= opts.ftol && diameter <= opts.xtol {
            converged = true;
            break;
        }
        iters += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|v| v[k]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(alpha);
        let fr = eval(&xr);
        evals += 1;
        if fr < values[0] {
            let xe = along(alpha * gamma);
            let fe = eval(&xe);
            evals += 1;
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(alpha * rho);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc);
            (xc, fc)
        };
        evals += 1;
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[i]
                .iter()
                .zip(&simplex[0])
                .map(|(v, b)| b + sigma * (v - b))
                .collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
        evals += n;
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    NelderMeadResult {
        x: simplex[best].clone(),
        f: values[best],
        iters,
        evals,
        converged,
    }
}

/// Nelder–Mead followed by restarts from the incumbent with a shrinking simplex,
/// until a restart no longer improves the value.
pub fn minimize_with_restarts<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    opts: &NelderMeadOptions,
    restarts: usize,
) -> NelderMeadResult {
    let mut best = nelder_mead(&f, x0, opts);
    let mut step = opts.initial_step;
    for _ in 0..restarts {
        step *= 0.1;
        let o = NelderMeadOptions {
            initial_step: step.max(1e-7),
            ..*opts
        };
        let next = nelder_mead(&f, &best.x, &o);
        let improved = best.f - next.f;
        let evals = best.evals + next.evals;
        let iters = best.iters + next.iters;
        if next.f <= best.f {
            best = NelderMeadResult {
                evals,
                iters,
                converged: next.converged,
                ..next
            };
        } else {
            best.evals = evals;
            best.iters = iters;
        }
        if improved <= 1e-15 {
            break;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize_with_restarts(
            f,
            &[-1.2, 1.0],
            &NelderMeadOptions {
                max_iter: 5000,
                ftol: 1e-14,
                xtol: 1e-10,
                initial_step: 0.5,
            },
            3,
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn nonsmooth_max() {
        // minimum of max(|x|, |y - 1|) sits on the kink
        let f = |x: &[f64]| x[0].abs().max((x[1] - 1.0).abs());
        let r = minimize_with_restarts(f, &[3.0, -2.0], &NelderMeadOptions::default(), 4);
        assert!(r.f < 1e-8, "{}", r.f);
    }

    #[test]
    fn one_dimensional() {
        let r = nelder_mead(|x: &[f64]| (x[0] - 0.3).powi(2), &[2.0], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.3).abs() < 1e-8);
    }

    #[test]
    fn nan_treated_as_infinite() {
        let r = nelder_mead(
            |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 1.0).powi(2) },
            &[0.1],
            &NelderMeadOptions::default(),
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6);
    }
}
