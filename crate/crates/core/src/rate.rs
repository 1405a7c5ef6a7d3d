//! Predicted geometric convergence rates `R(P,K) = exp(min_{z∈S} V_{P,K}(z))`
//! for singular sets on the quadric family `Σ_j (z_j − a_j)² + r² = 0`.
//!
//! The minimization eliminates one coordinate through the constraint (two
//! sheets), and separately searches every face where a subset of coordinates is
//! pinned to its real interval factor. Each restricted problem is solved by
//! multistart Nelder–Mead from seeded random and structured starts.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex_body::{conjugate_exponent, dim_match_scale, parse_f64, ConvexBody};
use crate::error::{Error, Result};
use crate::extremal::{ComplexVector, ProductExtremal, ProductSet, UnivariateSet};
use crate::optim::{minimize_with_restarts, NelderMeadOptions};

/// The variety `{z ∈ ℂ^d : Σ_j (z_j − a_j)² + r² = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSetQuadric {
    pub center: Vec<f64>,
    pub offset: f64,
}

impl SingularSetQuadric {
    pub fn new(center: Vec<f64>, offset: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("quadric center must be a finite nonempty vector".into()));
        }
        if !(offset >= 0.0) || !offset.is_finite() {
            return Err(Error::Domain(format!("quadric offset must be >= 0, got {offset}")));
        }
        Ok(SingularSetQuadric { center, offset })
    }

    /// `z² = −r²` (multivariate Runge function).
    pub fn origin(dim: usize, r: f64) -> Result<Self> {
        Self::new(vec![0.0; dim], r)
    }

    /// `z₂ = ±i(z₁ − α)`: the real pole at `(α, 0)`.
    pub fn real_pole(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha, 0.0], 0.0)
    }

    /// `(z₁ − α)² + (z₂ − α)² = 0`: the real pole at `(α, α)`.
    pub fn diagonal_pole(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha, alpha], 0.0)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `Σ_j (z_j − a_j)² + r²`; its real and imaginary parts are the two real constraints.
    pub fn residual(&self, z: &[Complex64]) -> Complex64 {
        z.iter()
            .zip(&self.center)
            .map(|(zj, a)| (zj - a) * (zj - a))
            .sum::<Complex64>()
            + self.offset * self.offset
    }
}

impl FromStr for SingularSetQuadric {
    type Err = Error;

    /// `quadric:a=<a1>,<a2>,...;r=<float>`.
    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .trim()
            .strip_prefix("quadric:")
            .ok_or_else(|| Error::Parse(format!("expected quadric:a=...;r=..., got `{s}`")))?;
        let mut center = None;
        let mut offset = None;
        for part in rest.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            match k.trim() {
                "a" => center = Some(v.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?),
                "r" => offset = Some(parse_f64(v)?),
                other => return Err(Error::Parse(format!("unknown quadric key `{other}`"))),
            }
        }
        SingularSetQuadric::new(
            center.ok_or_else(|| Error::Parse("quadric needs a=...".into()))?,
            offset.unwrap_or(0.0),
        )
    }
}

impl fmt::Display for SingularSetQuadric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let a: Vec<String> = self.center.iter().map(|v| v.to_string()).collect();
        write!(f, "quadric:a={};r={}", a.join(","), self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    /// Interior critical point of a smooth objective; `kkt_spread` measured.
    InteriorCritical,
    /// Some coordinate lies on its factor `E_j`.
    Boundary,
    /// Interior point of a nonsmooth objective (max-type body), where the
    /// minimizer sits on a kink shared by several coordinates.
    SymmetricCandidate,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::InteriorCritical => "interior-critical",
            Classification::Boundary => "boundary",
            Classification::SymmetricCandidate => "symmetric-candidate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateOptions {
    /// Random starts per restricted problem.
    pub starts: usize,
    pub max_iter: usize,
    pub ftol: f64,
    pub seed: u64,
    /// Random starts are drawn in `‖u‖ ≤ start_radius`.
    pub start_radius: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        RateOptions {
            starts: 64,
            max_iter: 2000,
            ftol: 1e-10,
            seed: 0,
            start_radius: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub rate: f64,
    pub log_rate: f64,
    pub minimizer: ComplexVector,
    pub kkt_spread: f64,
    pub classification: Classification,
    pub starts_used: usize,
    pub converged_starts: usize,
    pub seed: u64,
    /// `|Σ (z_j − a_j)² + r²|` at the minimizer.
    pub constraint_residual: f64,
}

/// A restricted search space on `S`: coordinates in `pinned` are real points of
/// their interval factor, `eliminated` is solved from the constraint on `sheet`,
/// and the remaining free coordinates are searched as complex offsets.
#[derive(Debug, Clone)]
struct Face {
    pinned: Vec<usize>,
    free: Vec<usize>,
    eliminated: usize,
    sheet: f64,
}

impl Face {
    fn param_dim(&self) -> usize {
        self.pinned.len() + 2 * self.free.len()
    }
}

/// `V_{P,K}` restricted to a quadric singular set.
#[derive(Debug, Clone)]
pub struct RateProblem {
    extremal: ProductExtremal,
    quadric: SingularSetQuadric,
}

impl RateProblem {
    pub fn new(body: &ConvexBody, set: &ProductSet, quadric: &SingularSetQuadric) -> Result<Self> {
        let extremal = ProductExtremal::new(body, set)?;
        if quadric.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: quadric.dim(),
            });
        }
        Ok(RateProblem {
            extremal,
            quadric: quadric.clone(),
        })
    }

    pub fn extremal(&self) -> &ProductExtremal {
        &self.extremal
    }

    pub fn quadric(&self) -> &SingularSetQuadric {
        &self.quadric
    }

    fn dim(&self) -> usize {
        self.quadric.dim()
    }

    /// Point of `S` with `z_j = a_j + (x_j + i y_j)` for `j < d` and `z_d` solved
    /// on the given sheet.
    pub fn point_on_sheet(&self, u: &[f64], sheet: f64) -> Result<ComplexVector> {
        let d = self.dim();
        if u.len() != 2 * (d - 1) {
            return Err(Error::DimensionMismatch {
                expected: 2 * (d - 1),
                got: u.len(),
            });
        }
        let face = Face {
            pinned: Vec::new(),
            free: (0..d - 1).collect(),
            eliminated: d - 1,
            sheet: sheet.signum(),
        };
        let mut z = vec![Complex64::new(0.0, 0.0); d];
        self.fill_point(&face, u, &mut z);
        Ok(z)
    }

    /// `V_{P,K}` at [`point_on_sheet`](Self::point_on_sheet).
    pub fn objective_on_sheet(&self, u: &[f64], sheet: f64) -> Result<f64> {
        let z = self.point_on_sheet(u, sheet)?;
        Ok(self.extremal.value(&z))
    }

    fn fill_point(&self, face: &Face, params: &[f64], z: &mut [Complex64]) {
        let a = &self.quadric.center;
        let mut acc = Complex64::new(self.quadric.offset * self.quadric.offset, 0.0);
        for (i, &j) in face.pinned.iter().enumerate() {
            let t = match self.extremal.set().factors[j] {
                UnivariateSet::Interval { a: lo, b: hi } => {
                    0.5 * (lo + hi) + 0.5 * (hi - lo) * params[i].sin()
                }
                UnivariateSet::Disk { .. } => unreachable!("only interval factors are pinned"),
            };
            z[j] = Complex64::new(t, 0.0);
            acc += (t - a[j]) * (t - a[j]);
        }
        let off = face.pinned.len();
        for (i, &j) in face.free.iter().enumerate() {
            let w = Complex64::new(params[off + 2 * i], params[off + 2 * i + 1]);
            z[j] = a[j] + w;
            acc += w * w;
        }
        let e = face.eliminated;
        z[e] = a[e] + Complex64::new(0.0, face.sheet) * acc.sqrt();
    }

    fn params_from_point(&self, face: &Face, z: &[Complex64]) -> Vec<f64> {
        let a = &self.quadric.center;
        let mut p = Vec::with_capacity(face.param_dim());
        for &j in &face.pinned {
            if let UnivariateSet::Interval { a: lo, b: hi } = self.extremal.set().factors[j] {
                let t = ((z[j].re - 0.5 * (lo + hi)) / (0.5 * (hi - lo))).clamp(-1.0, 1.0);
                p.push(t.asin());
            }
        }
        for &j in &face.free {
            p.push(z[j].re - a[j]);
            p.push(z[j].im);
        }
        p
    }

    fn faces(&self) -> Vec<Face> {
        let d = self.dim();
        let factors = &self.extremal.set().factors;
        let mut faces = Vec::new();
        for mask in 0u32..(1 << d) {
            let pinned: Vec<usize> = (0..d).filter(|j| mask & (1 << j) != 0).collect();
            if pinned.len() == d
                || pinned
                    .iter()
                    .any(|&j| !matches!(factors[j], UnivariateSet::Interval { .. }))
            {
                continue;
            }
            let rest: Vec<usize> = (0..d).filter(|j| mask & (1 << j) == 0).collect();
            for &e in &rest {
                for sheet in [1.0, -1.0] {
                    faces.push(Face {
                        pinned: pinned.clone(),
                        free: rest.iter().copied().filter(|&j| j != e).collect(),
                        eliminated: e,
                        sheet,
                    });
                }
            }
        }
        faces
    }

    fn structured_seeds(&self) -> Vec<ComplexVector> {
        let d = self.dim();
        let a = &self.quadric.center;
        let r = self.quadric.offset;
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let mut seeds = Vec::new();
        // symmetric points a_j ± i r/√d
        let s = r / (d as f64).sqrt();
        for signs in 0u32..(1 << d.min(6)) {
            seeds.push(
                (0..d)
                    .map(|j| {
                        let sg = if signs & (1 << j) != 0 { -1.0 } else { 1.0 };
                        c(a[j], sg * s)
                    })
                    .collect(),
            );
        }
        // per-axis points and the pole itself
        seeds.push(a.iter().map(|&v| c(v, 0.0)).collect());
        for j in 0..d {
            let mut z: ComplexVector = a.iter().map(|&v| c(v, 0.0)).collect();
            z[j] = c(a[j], r);
            seeds.push(z);
        }
        // boundary seeds with one real coordinate in [−1, 1]
        for j in 0..d {
            for t in [-1.0, -0.5, 0.0, 0.5, 1.0] {
                let rho = (r * r + (t - a[j]) * (t - a[j])).sqrt();
                let others = if d > 1 { rho / ((d - 1) as f64).sqrt() } else { 0.0 };
                let z = (0..d)
                    .map(|k| if k == j { c(t, 0.0) } else { c(a[k], others) })
                    .collect();
                seeds.push(z);
            }
        }
        seeds
    }

    fn random_start(&self, face: &Face, rng: &mut ChaCha8Rng, radius: f64) -> Vec<f64> {
        let mut p = Vec::with_capacity(face.param_dim());
        for _ in &face.pinned {
            p.push(rng.gen_range(-std::f64::consts::FRAC_PI_2..std::f64::consts::FRAC_PI_2));
        }
        let m = 2 * face.free.len();
        if m > 0 {
            let gauss: Vec<f64> = (0..m)
                .map(|_| {
                    let (u1, u2): (f64, f64) = (rng.gen_range(1e-300..1.0), rng.gen());
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
                })
                .collect();
            let norm = gauss.iter().map(|g| g * g).sum::<f64>().sqrt().max(1e-300);
            let rad = radius * rng.gen::<f64>().powf(1.0 / m as f64);
            p.extend(gauss.iter().map(|g| g / norm * rad));
        }
        p
    }

    /// Multistart minimization of `V_{P,K}` over `S`.
    pub fn minimize(&self, opts: &RateOptions) -> Result<RateReport> {
        let d = self.dim();
        let faces = self.faces();
        let seeds = self.structured_seeds();
        let nm = NelderMeadOptions {
            max_iter: opts.max_iter,
            ftol: opts.ftol,
            xtol: 1e-9,
            initial_step: 0.25,
        };

        let mut jobs: Vec<(usize, Vec<f64>)> = Vec::new();
        for (fi, face) in faces.iter().enumerate() {
            for z in &seeds {
                jobs.push((fi, self.params_from_point(face, z)));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.seed ^ 0x9E37_79B9_7F4A_7C15u64.wrapping_mul(fi as u64 + 1),
            );
            for _ in 0..opts.starts {
                jobs.push((fi, self.random_start(face, &mut rng, opts.start_radius)));
            }
        }

        let runs: Vec<(usize, Vec<f64>, f64, bool)> = jobs
            .par_iter()
            .map(|(fi, x0)| {
                let face = &faces[*fi];
                let mut z = vec![Complex64::new(0.0, 0.0); d];
                let f = |p: &[f64]| {
                    let mut z = z.clone();
                    self.fill_point(face, p, &mut z);
                    self.extremal.value(&z)
                };
                let r = minimize_with_restarts(f, x0, &nm, 2);
                self.fill_point(face, &r.x, &mut z);
                (*fi, r.x, r.f, r.converged)
            })
            .collect();

        let converged_starts = runs.iter().filter(|r| r.3).count();
        let point_of = |fi: usize, p: &[f64]| {
            let mut z = vec![Complex64::new(0.0, 0.0); d];
            self.fill_point(&faces[fi], p, &mut z);
            z
        };
        let lex = |z: &ComplexVector| -> Vec<f64> { z.iter().flat_map(|c| [c.re, c.im]).collect() };
        let fmin = runs
            .iter()
            .map(|r| r.2)
            .filter(|f| f.is_finite())
            .fold(f64::INFINITY, f64::min);
        // near-ties go to the face with the most pinned coordinates
        let tie = 1e-9 * (1.0 + fmin.abs());
        let best = runs
            .iter()
            .filter(|r| r.2 <= fmin + tie)
            .min_by(|x, y| {
                faces[y.0]
                    .pinned
                    .len()
                    .cmp(&faces[x.0].pinned.len())
                    .then(x.2.total_cmp(&y.2))
                    .then_with(|| {
                        let (zx, zy) = (lex(&point_of(x.0, &x.1)), lex(&point_of(y.0, &y.1)));
                        zx.partial_cmp(&zy).unwrap_or(std::cmp::Ordering::Equal)
                    })
            })
            .ok_or(Error::NoConvergence {
                best_value: f64::INFINITY,
                best_point: Vec::new(),
            })?;

        if converged_starts == 0 {
            let z = point_of(best.0, &best.1);
            return Err(Error::NoConvergence {
                best_value: best.2,
                best_point: z.iter().map(|c| (c.re, c.im)).collect(),
            });
        }

        // final polish of the incumbent
        let polish = NelderMeadOptions {
            max_iter: 20 * opts.max_iter,
            ftol: 1e-16,
            xtol: 1e-13,
            initial_step: 1e-3,
        };
        let f = |p: &[f64]| self.extremal.value(&point_of(best.0, p));
        let refined = minimize_with_restarts(f, &best.1, &polish, 4);
        let params = if refined.f <= best.2 { refined.x } else { best.1.clone() };
        let z = point_of(best.0, &params);

        let eval = self.extremal.eval(&z)?;
        let classification = self.classify(&eval.per_factor);
        let kkt_spread = match classification {
            Classification::InteriorCritical => {
                let p = conjugate_exponent(self.extremal.body().lq_exponent().unwrap_or(1.0));
                kkt_spread(&self.extremal, &self.quadric, &z, p)?
            }
            _ => 0.0,
        };
        Ok(RateReport {
            rate: eval.value.exp(),
            log_rate: eval.value,
            constraint_residual: self.quadric.residual(&z).norm(),
            minimizer: z,
            kkt_spread,
            classification,
            starts_used: runs.len(),
            converged_starts,
            seed: opts.seed,
        })
    }

    fn classify(&self, per_factor: &[f64]) -> Classification {
        if per_factor.iter().any(|g| *g <= 1e-8) {
            return Classification::Boundary;
        }
        match self.extremal.body().lq_exponent() {
            Some(q) if q > 1.0 => Classification::InteriorCritical,
            _ => Classification::SymmetricCandidate,
        }
    }
}

/// One-shot [`RateProblem::minimize`].
pub fn minimize_rate(
    body: &ConvexBody,
    set: &ProductSet,
    quadric: &SingularSetQuadric,
    opts: &RateOptions,
) -> Result<RateReport> {
    RateProblem::new(body, set, quadric)?.minimize(opts)
}

/// Lagrange multiplier spread `max_{j,j'} |m(z_j) − m(z_{j'})|` on a general
/// quadric and product set, with
/// `m(z_j) = V_{E_j}(z_j)^{p−1} · (log h_j)'(z_j) / (z_j − a_j)`.
pub fn kkt_spread(
    extremal: &ProductExtremal,
    quadric: &SingularSetQuadric,
    z: &[Complex64],
    p: f64,
) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::Domain(format!("Lagrange condition needs finite p >= 1, got {p}")));
    }
    let mut ms = Vec::with_capacity(z.len());
    for ((set, zj), a) in extremal.set().factors.iter().zip(z).zip(&quadric.center) {
        let g = set.green(*zj);
        if g <= 1e-12 {
            return Err(Error::Singular(
                "boundary point: Lagrange condition inapplicable".into(),
            ));
        }
        ms.push(g.powf(p - 1.0) * set.green_log_derivative(*zj) / (zj - a));
    }
    let mut spread = 0.0_f64;
    for i in 0..ms.len() {
        for k in i + 1..ms.len() {
            spread = spread.max((ms[i] - ms[k]).norm());
        }
    }
    Ok(spread)
}

/// `max_{j,j'} |m(z_j) − m(z_{j'})|` for `K = [−1,1]^d` and `z² = −r²`, with
/// `m(ζ) = (log|ζ + √(ζ²−1)|)^{p−1} / (ζ √(ζ²−1))`.
pub fn kkt_residual(z: &[Complex64], p: f64) -> Result<f64> {
    let d = z.len();
    let body = ConvexBody::simplex(d)?;
    let extremal = ProductExtremal::new(&body, &ProductSet::cube(d)?)?;
    kkt_spread(&extremal, &SingularSetQuadric::origin(d, 0.0)?, z, p)
}

/// Singular-set families with known rates on `[−1,1]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RateFamily {
    /// `z² = −r²` in dimension `d`.
    OriginQuadric { r: f64, dim: usize },
    /// `(z₁ − α)² + z₂² = 0`, `α > 1`.
    RealPole { alpha: f64 },
}

/// Closed-form `R(P_q, [−1,1]^d)` where one is known.
pub fn closed_form_rate(q: f64, family: RateFamily) -> Result<f64> {
    match family {
        RateFamily::OriginQuadric { r, dim } => {
            if !(r > 0.0) || dim == 0 {
                return Err(Error::Domain("origin quadric needs r > 0 and d >= 1".into()));
            }
            let d = dim as f64;
            if q == 1.0 {
                Ok((r + (r * r + d).sqrt()) / d.sqrt())
            } else if q.is_infinite() || dim == 1 || (dim == 2 && q >= 2.0) {
                Ok(r + (r * r + 1.0).sqrt())
            } else {
                Err(Error::NoClosedForm(format!(
                    "origin quadric with q = {q}, d = {dim}"
                )))
            }
        }
        RateFamily::RealPole { alpha } => {
            if !(alpha > 1.0) {
                return Err(Error::Domain(format!("real pole needs alpha > 1, got {alpha}")));
            }
            if q == 1.0 {
                Ok(alpha)
            } else if q.is_infinite() {
                let e = alpha - 1.0;
                Ok(e + (e * e + 1.0).sqrt())
            } else {
                Err(Error::NoClosedForm(format!("real pole with q = {q}")))
            }
        }
    }
}

/// Recognizes a closed-form case for the given problem (scaled ℓq ball, cube,
/// covered family) and returns `R(cP_q, K) = R(P_q, K)^c`.
pub fn closed_form_for(body: &ConvexBody, set: &ProductSet, quadric: &SingularSetQuadric) -> Option<f64> {
    let q = body.lq_exponent()?;
    if !set.is_standard_cube() || quadric.dim() != set.dim() {
        return None;
    }
    let d = quadric.dim();
    let family = if quadric.center.iter().all(|a| *a == 0.0) && quadric.offset > 0.0 {
        RateFamily::OriginQuadric {
            r: quadric.offset,
            dim: d,
        }
    } else if d == 2 && quadric.offset == 0.0 && quadric.center[1] == 0.0 && quadric.center[0].abs() > 1.0 {
        RateFamily::RealPole {
            alpha: quadric.center[0].abs(),
        }
    } else {
        return None;
    };
    closed_form_rate(q, family)
        .ok()
        .map(|r| r.powf(body.scale()))
}

/// `R(cP, K) = R(P, K)^c`.
pub fn scaled_rate(rate: f64, c: f64) -> Result<f64> {
    if !(rate > 1.0) || !(c > 0.0) {
        return Err(Error::Domain(format!(
            "scaled rate needs R > 1 and c > 0, got R = {rate}, c = {c}"
        )));
    }
    Ok(rate.powf(c))
}

/// Radius `r` at which total degree overtakes volume-normalized Euclidean degree:
/// the root of `log R(P₁) − c(2)·log R(P₂)` for `z² = −r²` in `d = 2`.
pub fn find_crossover(dim: usize) -> Result<f64> {
    if dim != 2 {
        return Err(Error::NoClosedForm(format!(
            "crossover uses the d = 2 Euclidean closed form, got d = {dim}"
        )));
    }
    let c = dim_match_scale(2.0, 2)?;
    let g = |r: f64| -> Result<f64> {
        let fam = RateFamily::OriginQuadric { r, dim: 2 };
        Ok(closed_form_rate(1.0, fam)?.ln() - c * closed_form_rate(2.0, fam)?.ln())
    };
    let (mut lo, mut hi) = (0.1, 10.0);
    let (mut glo, ghi) = (g(lo)?, g(hi)?);
    if glo.signum() == ghi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid)?;
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Dimension-normalized crossover function `log R(P₁) − c(2)·log R(P₂)` at `r`.
pub fn crossover_gap(r: f64) -> Result<f64> {
    let c = dim_match_scale(2.0, 2)?;
    let fam = RateFamily::OriginQuadric { r, dim: 2 };
    Ok(closed_form_rate(1.0, fam)?.ln() - c * closed_form_rate(2.0, fam)?.ln())
}
