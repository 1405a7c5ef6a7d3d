//! The reference-number suite: every reproduced value and structural check, with
//! observed versus expected values and a pass/fail verdict per check.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::approx::{dn_series, fit_geometric_rate, truncate_to_body, cheb_coeffs, lobatto_points, FunctionSpec};
use crate::convex_body::{conjugate_exponent, dim_match_scale, ConvexBody};
use crate::error::Result;
use crate::extremal::{ComplexVector, ProductExtremal, ProductSet};
use crate::fekete::{approx_fekete, build_mesh, interp_error, interp_error_series};
use crate::rate::{closed_form_rate, find_crossover, minimize_rate, scaled_rate, RateFamily, RateOptions, RateProblem, SingularSetQuadric};

pub const CRITERIA: [(u8, &str); 9] = [
    (1, "closed-form rates"),
    (2, "published decimals"),
    (3, "crossover radius"),
    (4, "real-pole rates"),
    (5, "diagonal-pole rates"),
    (6, "empirical vs predicted exponent"),
    (7, "dense sheet sweep"),
    (8, "Fekete suite"),
    (9, "structural properties"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub label: String,
    pub observed: f64,
    pub expected: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionSummary {
    pub criterion: u8,
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub criteria: Vec<CriterionSummary>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<3} {:<52} {:>20}  {:<28} {}\n", "id", "check", "observed", "expected", "result");
        for c in &self.checks {
            s.push_str(&format!(
                "{:<3} {:<52} {:>20.12}  {:<28} {}\n",
                c.criterion,
                c.label,
                c.observed,
                c.expected,
                if c.passed { "PASS" } else { "FAIL" }
            ));
        }
        for c in &self.criteria {
            s.push_str(&format!(
                "criterion {} ({}): {} in {:.1}s\n",
                c.criterion,
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.seconds
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteOptions {
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { seed: 0 }
    }
}

struct Checks {
    id: u8,
    out: Vec<Check>,
}

impl Checks {
    fn new(id: u8) -> Self {
        Checks { id, out: Vec::new() }
    }

    fn push(&mut self, label: String, observed: f64, expected: String, passed: bool) {
        self.out.push(Check {
            criterion: self.id,
            label,
            observed,
            expected,
            passed,
        });
    }

    fn abs(&mut self, label: String, observed: f64, expected: f64, tol: f64) {
        let ok = (observed - expected).abs() <= tol;
        self.push(label, observed, format!("{expected} ± {tol:e}"), ok);
    }

    fn rel(&mut self, label: String, observed: f64, expected: f64, tol: f64) {
        let ok = (observed - expected).abs() <= tol * expected.abs();
        self.push(label, observed, format!("{expected:.6} ± {tol:e} rel"), ok);
    }

    fn at_most(&mut self, label: String, observed: f64, bound: f64) {
        self.push(label, observed, format!("<= {bound}"), observed <= bound);
    }

    fn truth(&mut self, label: String, observed: f64, ok: bool, expected: &str) {
        self.push(label, observed, expected.to_string(), ok);
    }
}

fn cube(d: usize) -> Result<ProductSet> {
    ProductSet::cube(d)
}

fn q_label(q: f64) -> String {
    if q.is_infinite() {
        "inf".into()
    } else {
        format!("{q}")
    }
}

fn criterion_1(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(1);
    let ropts = RateOptions {
        seed: opts.seed,
        ..RateOptions::default()
    };
    for (q, dims) in [(1.0, vec![2, 3]), (f64::INFINITY, vec![2, 3]), (2.0, vec![2])] {
        for d in dims {
            for r in [0.25, 1.0, 2.0] {
                let t = Instant::now();
                let rep = minimize_rate(&ConvexBody::lq(q, d)?, &cube(d)?, &SingularSetQuadric::origin(d, r)?, &ropts)?;
                let secs = t.elapsed().as_secs_f64();
                let want = closed_form_rate(q, RateFamily::OriginQuadric { r, dim: d })?;
                c.rel(format!("R(P_{}, d={d}, r={r})", q_label(q)), rep.rate, want, 1e-4);
                c.at_most(format!("  runtime s (q={}, d={d}, r={r})", q_label(q)), secs, 5.0);
            }
        }
    }
    Ok(c.out)
}

fn criterion_2(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(2);
    let ropts = RateOptions {
        seed: opts.seed,
        ..RateOptions::default()
    };
    let s = SingularSetQuadric::origin(2, 0.25)?;
    let r1 = minimize_rate(&ConvexBody::simplex(2)?, &cube(2)?, &s, &ropts)?;
    c.abs("R(P_1, r=0.25)".into(), r1.rate, 1.19228, 5e-5);
    let r2 = minimize_rate(&ConvexBody::lq(2.0, 2)?, &cube(2)?, &s, &ropts)?;
    let c2 = dim_match_scale(2.0, 2)?;
    c.abs("c(2)".into(), c2, (2.0 / std::f64::consts::PI).sqrt(), 1e-12);
    c.abs("R(P_2, r=0.25)^c(2)".into(), scaled_rate(r2.rate, c2)?, 1.2182, 5e-4);
    Ok(c.out)
}

fn criterion_3(_: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(3);
    c.abs("crossover r".into(), find_crossover(2)?, 2.1090, 1e-3);
    Ok(c.out)
}

fn criterion_4(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(4);
    let ropts = RateOptions {
        seed: opts.seed,
        ..RateOptions::default()
    };
    for alpha in [1.25, 1.5, 2.0] {
        let s = SingularSetQuadric::real_pole(alpha)?;
        let r1 = minimize_rate(&ConvexBody::simplex(2)?, &cube(2)?, &s, &ropts)?;
        c.abs(format!("R(P_1, alpha={alpha})"), r1.rate, alpha, 1e-4);
        let ri = minimize_rate(&ConvexBody::cube(2)?, &cube(2)?, &s, &ropts)?;
        let e = alpha - 1.0;
        c.abs(format!("R(P_inf, alpha={alpha})"), ri.rate, e + (e * e + 1.0).sqrt(), 1e-4);
    }
    Ok(c.out)
}

fn criterion_5(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(5);
    let ropts = RateOptions {
        seed: opts.seed,
        ..RateOptions::default()
    };
    let s = SingularSetQuadric::diagonal_pole(1.25)?;
    let r2 = minimize_rate(&ConvexBody::lq(2.0, 2)?, &cube(2)?, &s, &ropts)?;
    let ri = minimize_rate(&ConvexBody::cube(2)?, &cube(2)?, &s, &ropts)?;
    c.abs("R(P_2, alpha=5/4)".into(), r2.rate, 2.0518, 1e-3);
    c.abs("R(P_inf, alpha=5/4)".into(), ri.rate, 2.1531, 1e-3);
    c.truth("R(P_inf) - R(P_2)".into(), ri.rate - r2.rate, ri.rate > r2.rate, "> 0");
    Ok(c.out)
}

fn criterion_6(_: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(6);
    let t = Instant::now();
    let f = FunctionSpec::runge(2, 1.0)?;
    let ns: Vec<usize> = (4..=24).collect();
    let mut fitted = Vec::new();
    for (name, body, want) in [
        ("P_1", ConvexBody::simplex(2)?, (1.0 + 3f64.sqrt()) / 2f64.sqrt()),
        ("P_2", ConvexBody::lq(2.0, 2)?, 1.0 + 2f64.sqrt()),
        ("P_inf", ConvexBody::cube(2)?, 1.0 + 2f64.sqrt()),
    ] {
        let s = dn_series(&f, &body, &ns, 201)?;
        let r = s.fitted_rate.unwrap_or(f64::NAN);
        c.rel(format!("fitted R({name})"), r, want, 0.10);
        fitted.push(r);
    }
    c.truth("R(P_2) - R(P_1)".into(), fitted[1] - fitted[0], fitted[1] > fitted[0], "> 0");
    let gap = (fitted[1] / fitted[2] - 1.0).abs();
    c.at_most("|R(P_2)/R(P_inf) - 1|".into(), gap, 0.03);
    c.at_most("runtime s".into(), t.elapsed().as_secs_f64(), 60.0);
    Ok(c.out)
}

/// Brute-force minima of `V` over a `points × points` grid of `u ∈ [−3,3]²` on
/// both sheets: `plain` is the grid minimum, `refined` re-sweeps the same grid
/// size around the best few grid-local minima of each sheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepResult {
    pub plain: f64,
    pub refined: f64,
}

/// Number of grid-local minima per sheet that get a refinement sweep.
pub const SWEEP_REFINE_CANDIDATES: usize = 6;

fn grid_values(problem: &RateProblem, sheet: f64, lo: [f64; 2], h: [f64; 2], points: usize) -> Vec<f64> {
    use rayon::prelude::*;
    (0..points * points)
        .into_par_iter()
        .map(|lin| {
            let (i, j) = (lin / points, lin % points);
            let u = [lo[0] + h[0] * i as f64, lo[1] + h[1] * j as f64];
            problem.objective_on_sheet(&u, sheet).unwrap_or(f64::INFINITY)
        })
        .collect()
}

pub fn sheet_sweep(problem: &RateProblem, points: usize) -> Result<SweepResult> {
    if points < 3 {
        return Err(crate::Error::Domain(format!("sweep needs >= 3 points per axis, got {points}")));
    }
    let h = 6.0 / (points - 1) as f64;
    let mut plain = f64::INFINITY;
    let mut refined = f64::INFINITY;
    for sheet in [1.0, -1.0] {
        let v = grid_values(problem, sheet, [-3.0, -3.0], [h, h], points);
        plain = v.iter().copied().fold(plain, f64::min);
        let at = |i: isize, j: isize| -> f64 {
            if i < 0 || j < 0 || i >= points as isize || j >= points as isize {
                f64::INFINITY
            } else {
                v[i as usize * points + j as usize]
            }
        };
        let mut minima: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..points as isize {
            for j in 0..points as isize {
                let c = at(i, j);
                let local = (-1..=1)
                    .flat_map(|di| (-1..=1).map(move |dj| (di, dj)))
                    .filter(|&d| d != (0, 0))
                    .all(|(di, dj)| c <= at(i + di, j + dj));
                if local && c.is_finite() {
                    minima.push((c, i as usize, j as usize));
                }
            }
        }
        minima.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(_, i, j) in minima.iter().take(SWEEP_REFINE_CANDIDATES) {
            let lo = [-3.0 + h * (i as f64 - 2.0), -3.0 + h * (j as f64 - 2.0)];
            let hh = 4.0 * h / (points - 1) as f64;
            let w = grid_values(problem, sheet, lo, [hh, hh], points);
            refined = w.iter().copied().fold(refined, f64::min);
        }
    }
    Ok(SweepResult {
        plain,
        refined: refined.min(plain),
    })
}

fn criterion_7(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(7);
    let ropts = RateOptions {
        seed: opts.seed,
        ..RateOptions::default()
    };
    let k = cube(2)?;
    let bodies = [
        ("P_1", ConvexBody::simplex(2)?),
        ("P_2", ConvexBody::lq(2.0, 2)?),
        ("P_inf", ConvexBody::cube(2)?),
    ];
    let families = [
        ("r=1", SingularSetQuadric::origin(2, 1.0)?),
        ("alpha=1.5", SingularSetQuadric::real_pole(1.5)?),
        ("diag alpha=5/4", SingularSetQuadric::diagonal_pole(1.25)?),
    ];
    for (fname, s) in &families {
        for (bname, body) in &bodies {
            let prob = RateProblem::new(body, &k, s)?;
            let nm = prob.minimize(&ropts)?;
            let sweep = sheet_sweep(&prob, 401)?;
            c.abs(format!("refined sweep R({bname}, {fname})"), sweep.refined.exp(), nm.rate, 1e-3);
            let under = nm.log_rate - sweep.plain;
            c.at_most(format!("  plain sweep undercut ({bname}, {fname})"), under, 1e-9);
        }
    }
    Ok(c.out)
}

fn vandermonde_log_det_1d(points: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            s += (points[i] - points[j]).abs().ln();
        }
    }
    s
}

fn best_subset_1d(xs: &[f64], k: usize) -> f64 {
    fn rec(xs: &[f64], k: usize, start: usize, cur: &mut Vec<f64>, best: &mut f64) {
        if cur.len() == k {
            *best = best.max(vandermonde_log_det_1d(cur));
            return;
        }
        for i in start..=xs.len() - (k - cur.len()) {
            cur.push(xs[i]);
            rec(xs, k, i + 1, cur, best);
            cur.pop();
        }
    }
    let mut best = f64::NEG_INFINITY;
    rec(xs, k, 0, &mut Vec::new(), &mut best);
    best
}

fn criterion_8(_: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(8);
    let t = Instant::now();
    let k1 = cube(1)?;
    let mesh1 = build_mesh(&k1, 41)?;
    let xs: Vec<f64> = mesh1.points.iter().map(|p| p[0].re).collect();
    for n in 1..=4 {
        let fs = approx_fekete(&mesh1, &ConvexBody::simplex(1)?, &k1, n)?;
        let nodes: Vec<f64> = fs.nodes.iter().map(|p| p[0].re).collect();
        let got = vandermonde_log_det_1d(&nodes);
        let best = best_subset_1d(&xs, n + 1);
        c.abs(format!("d=1 log|VDM| vs exhaustive, n={n}"), got, best, 1e-9);
    }

    let k2 = cube(2)?;
    let mesh = build_mesh(&k2, 60)?;
    let eval = build_mesh(&k2, 101)?;
    let p1 = ConvexBody::simplex(2)?;
    for (name, body) in [("P_1", p1.clone()), ("P_2", ConvexBody::lq(2.0, 2)?), ("P_inf", ConvexBody::cube(2)?)] {
        let fs = approx_fekete(&mesh, &body, &k2, 6)?;
        c.at_most(format!("Kronecker residual {name}, n=6"), fs.kronecker_residual, 1e-8);
        c.at_most(format!("mesh max psi {name}, n=6"), fs.max_psi_on_mesh, 1.0 + 1e-8);
        let idx = fs.index_set.clone();
        let poly = FunctionSpec::custom("sum of kept monomials", 2, move |t| {
            idx.indices
                .iter()
                .enumerate()
                .map(|(i, j)| (1.0 + i as f64).recip() * t[0].powi(j[0] as i32) * t[1].powi(j[1] as i32))
                .sum()
        });
        c.at_most(format!("Poly(nP) reproduction {name}, n=6"), interp_error(&fs, &poly, &eval)?, 1e-9);
    }
    let f = FunctionSpec::runge(2, 1.0)?;
    let ns: Vec<usize> = (2..=10).collect();
    let series = interp_error_series(&mesh, &p1, &k2, &f, &ns, &eval)?;
    let rate = fit_geometric_rate(&series)?;
    c.rel("interpolation rate P_1, n=2..10".into(), rate, (1.0 + 3f64.sqrt()) / 2f64.sqrt(), 0.25);
    c.at_most("runtime s".into(), t.elapsed().as_secs_f64(), 120.0);
    Ok(c.out)
}

/// 41 points of the closed disk of radius 2 on a golden-angle spiral.
pub fn spiral_disk_points(count: usize, radius: f64) -> Vec<Complex64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|s| {
            let rho = radius * (s as f64 / (count - 1).max(1) as f64).sqrt();
            Complex64::from_polar(rho, golden * s as f64)
        })
        .collect()
}

fn criterion_9(opts: &SuiteOptions) -> Result<Vec<Check>> {
    let mut c = Checks::new(9);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5eed);
    let poly = ConvexBody::polytope(2, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.5]])?;
    let bodies = [
        ("P_1", ConvexBody::simplex(2)?),
        ("P_2", ConvexBody::lq(2.0, 2)?),
        ("P_inf", ConvexBody::cube(2)?),
        ("polytope", poly),
    ];

    for (name, body) in &bodies {
        let sets: Vec<_> = (0..=12).map(|n| body.enumerate_index_set(n)).collect();
        let mut failures = 0usize;
        for n in 0..=6 {
            for m in 0..=6 {
                for a in &sets[n].indices {
                    for b in &sets[m].indices {
                        let s = [a[0] + b[0], a[1] + b[1]];
                        if !sets[n + m].contains(&s) {
                            failures += 1;
                        }
                    }
                }
            }
        }
        c.truth(format!("ring closure failures {name}"), failures as f64, failures == 0, "0");
        let n = 64;
        let ratio = body.enumerate_index_set(n).d_n() as f64 / (n * n) as f64;
        c.rel(format!("d_n/n^2 at n=64 {name}"), ratio, body.volume(), 0.10);
    }

    // Bernstein-Walsh on truncated Runge polynomials
    let k = cube(2)?;
    let f = FunctionSpec::runge(2, 1.0)?;
    let coeffs = cheb_coeffs(&f, 2, 32)?;
    let disk = spiral_disk_points(41, 2.0);
    let grid = lobatto_points(200);
    for (name, body) in bodies.iter().take(3) {
        let n = 8;
        let p = truncate_to_body(&coeffs, body, n)?;
        let mut sup = 0.0_f64;
        for &x in &grid {
            for &y in &grid {
                sup = sup.max(p.eval(&[x, y]).abs());
            }
        }
        let ext = ProductExtremal::new(body, &k)?;
        let mut worst = 0.0_f64;
        for &z1 in &disk {
            for &z2 in &disk {
                let z = [z1, z2];
                let bound = sup * (n as f64 * ext.value(&z)).exp();
                worst = worst.max(p.eval_complex(&z).norm() / bound);
            }
        }
        c.at_most(format!("Bernstein-Walsh ratio {name}, n=8"), worst, 1.0 + 1e-8);
    }

    // monotonicity in q
    let qs = [1.0, 2.0, 3.0, 7.0, f64::INFINITY];
    let exts = qs
        .iter()
        .map(|&q| ProductExtremal::new(&ConvexBody::lq(q, 2)?, &k))
        .collect::<Result<Vec<_>>>()?;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let z: ComplexVector = (0..2)
            .map(|_| loop {
                let w = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                if w.norm() <= 3.0 {
                    break w;
                }
            })
            .collect();
        let v: Vec<f64> = exts.iter().map(|e| e.value(&z)).collect();
        for w in v.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    c.at_most("max V_q - V_q' for q < q'".into(), worst, 1e-12);

    // homogeneity and duality against boundary samples
    let mut hom = 0.0_f64;
    let mut dual = 0.0_f64;
    for q in [1.5, 2.0, 3.0, 7.0] {
        let body = ConvexBody::lq(q, 2)?;
        let samples: Vec<[f64; 2]> = (0..10_000)
            .map(|i| {
                let th = std::f64::consts::FRAC_PI_2 * i as f64 / 9_999.0;
                let (cx, sy) = (th.cos(), th.sin());
                let norm = (cx.powf(q) + sy.powf(q)).powf(1.0 / q);
                [cx / norm, sy / norm]
            })
            .collect();
        for _ in 0..20 {
            let x = [rng.gen_range(0.0..3.0), rng.gen_range(0.0..3.0)];
            let t = rng.gen_range(0.0..5.0);
            let a = body.minkowski_degree_norm(&[t * x[0], t * x[1]])?;
            let b = t * body.minkowski_degree_norm(&x)?;
            hom = hom.max((a - b).abs() / b.max(1.0));
            let brute = samples
                .iter()
                .map(|y| x[0] * y[0] + x[1] * y[1])
                .fold(f64::NEG_INFINITY, f64::max);
            let qp = conjugate_exponent(q);
            let exact = (x[0].powf(qp) + x[1].powf(qp)).powf(1.0 / qp);
            let sv = body.support_value(&x)?;
            dual = dual.max((sv - exact).abs() / exact).max((brute - sv) / sv);
        }
    }
    c.at_most("homogeneity defect".into(), hom, 1e-12);
    c.at_most("duality defect".into(), dual, 1e-9);
    Ok(c.out)
}

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> Result<Vec<Check>> {
    match id {
        1 => criterion_1(opts),
        2 => criterion_2(opts),
        3 => criterion_3(opts),
        4 => criterion_4(opts),
        5 => criterion_5(opts),
        6 => criterion_6(opts),
        7 => criterion_7(opts),
        8 => criterion_8(opts),
        9 => criterion_9(opts),
        other => Err(crate::Error::Domain(format!("no criterion {other}"))),
    }
}

/// Runs the listed criteria (all when `ids` is empty). Numeric errors inside a
/// criterion are recorded as a failed check.
pub fn run_suite(ids: &[u8], opts: &SuiteOptions) -> SuiteReport {
    let mut checks = Vec::new();
    let mut criteria = Vec::new();
    for (id, name) in CRITERIA {
        if !ids.is_empty() && !ids.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let rows = run_criterion(id, opts).unwrap_or_else(|e| {
            vec![Check {
                criterion: id,
                label: format!("error: {e}"),
                observed: f64::NAN,
                expected: "no error".into(),
                passed: false,
            }]
        });
        let passed = rows.iter().all(|r| r.passed);
        checks.extend(rows);
        criteria.push(CriterionSummary {
            criterion: id,
            name: name.to_string(),
            passed,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    SuiteReport { checks, criteria }
}
