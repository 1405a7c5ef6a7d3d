//! Approximation numbers `D_n(f,P,K)` on `K = [−1,1]^d`, estimated by tensor
//! Chebyshev analysis followed by truncation onto `nP ∩ ℤ₊^d`, and fitted
//! geometric rates.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex_body::{parse_f64, ConvexBody, IndexSet, MultiIndex};
use crate::error::{Error, Result};

/// Rows whose estimate sits below this are treated as round-off.
pub const ERROR_FLOOR: f64 = 1e-13;
/// Leading rows dropped by the default fit.
pub const FIT_SKIP: usize = 4;

/// Minimum of `Σ (t_j − a_j)² + r²` over the box that still counts as pole-free.
const POLE_GAP: f64 = 1e-12;

type RealFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A function real-analytic on a neighbourhood of `[−1,1]^d`.
#[derive(Clone)]
pub enum FunctionSpec {
    /// `f(t) = 1 / (Σ_j (t_j − a_j)² + r²)`.
    QuadricRunge { center: Vec<f64>, offset: f64 },
    Custom {
        name: String,
        dim: usize,
        f: Arc<RealFn>,
    },
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FunctionSpec({self})")
    }
}

impl FunctionSpec {
    pub fn quadric_runge(center: Vec<f64>, offset: f64) -> Result<Self> {
        if center.is_empty() || center.iter().any(|a| !a.is_finite()) {
            return Err(Error::Domain("runge center must be a finite nonempty vector".into()));
        }
        if !(offset >= 0.0) || !offset.is_finite() {
            return Err(Error::Domain(format!("runge offset must be >= 0, got {offset}")));
        }
        // the quadratic is separable, so its box minimum clamps each coordinate
        let gap: f64 = center
            .iter()
            .map(|a| (a.clamp(-1.0, 1.0) - a).powi(2))
            .sum::<f64>()
            + offset * offset;
        if gap <= POLE_GAP {
            return Err(Error::Domain(format!(
                "singular set meets [-1,1]^{}: min of the denominator is {gap:e}",
                center.len()
            )));
        }
        Ok(FunctionSpec::QuadricRunge { center, offset })
    }

    /// `1/(r² + |t|²)` in dimension `d`.
    pub fn runge(dim: usize, r: f64) -> Result<Self> {
        Self::quadric_runge(vec![0.0; dim], r)
    }

    pub fn custom(name: &str, dim: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FunctionSpec::Custom {
            name: name.to_string(),
            dim,
            f: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FunctionSpec::QuadricRunge { center, .. } => center.len(),
            FunctionSpec::Custom { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        match self {
            FunctionSpec::QuadricRunge { center, offset } => {
                let s: f64 = t.iter().zip(center).map(|(x, a)| (x - a) * (x - a)).sum();
                1.0 / (s + offset * offset)
            }
            FunctionSpec::Custom { f, .. } => f(t),
        }
    }
}

impl FromStr for FunctionSpec {
    type Err = Error;

    /// `runge:a=<a1>,<a2>,...;r=<float>`.
    fn from_str(s: &str) -> Result<Self> {
        let rest = s
            .trim()
            .strip_prefix("runge:")
            .ok_or_else(|| Error::Parse(format!("expected runge:a=...;r=..., got `{s}`")))?;
        let mut center = None;
        let mut offset = 0.0;
        for part in rest.split(';') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{part}`")))?;
            match k.trim() {
                "a" => center = Some(v.split(',').map(parse_f64).collect::<Result<Vec<_>>>()?),
                "r" => offset = parse_f64(v)?,
                other => return Err(Error::Parse(format!("unknown runge key `{other}`"))),
            }
        }
        FunctionSpec::quadric_runge(
            center.ok_or_else(|| Error::Parse("runge needs a=...".into()))?,
            offset,
        )
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::QuadricRunge { center, offset } => {
                let a: Vec<String> = center.iter().map(|v| v.to_string()).collect();
                write!(f, "runge:a={};r={}", a.join(","), offset)
            }
            FunctionSpec::Custom { name, dim, .. } => write!(f, "custom:{name};d={dim}"),
        }
    }
}

/// Chebyshev–Lobatto points `cos(πk/m)`, `k = 0..=m`, in ascending order.
pub fn lobatto_points(m: usize) -> Vec<f64> {
    if m == 0 {
        return vec![0.0];
    }
    (0..=m)
        .map(|k| -(std::f64::consts::PI * k as f64 / m as f64).cos())
        .collect()
}

/// `T_0(x), ..., T_m(x)`.
pub fn chebyshev_values(x: f64, m: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(m + 1);
    t.push(1.0);
    if m >= 1 {
        t.push(x);
    }
    for j in 2..=m {
        t.push(2.0 * x * t[j - 1] - t[j - 2]);
    }
    t
}

pub fn chebyshev_values_complex(z: Complex64, m: usize) -> Vec<Complex64> {
    let mut t = Vec::with_capacity(m + 1);
    t.push(Complex64::new(1.0, 0.0));
    if m >= 1 {
        t.push(z);
    }
    for j in 2..=m {
        t.push(2.0 * z * t[j - 1] - t[j - 2]);
    }
    t
}

/// Tensor Chebyshev coefficients `c_J`, `max_k J_k ≤ m`, stored row-major
/// (axis 0 slowest).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoeffTensor {
    pub dim: usize,
    pub m: usize,
    pub coeffs: Vec<f64>,
}

impl CoeffTensor {
    fn offset(&self, j: &[usize]) -> usize {
        j.iter().fold(0, |acc, &jk| acc * (self.m + 1) + jk)
    }

    pub fn get(&self, j: &[usize]) -> f64 {
        if j.len() != self.dim || j.iter().any(|&jk| jk > self.m) {
            return 0.0;
        }
        self.coeffs[self.offset(j)]
    }

    /// `Σ_J c_J T_J(t)` over the full tensor.
    pub fn eval(&self, t: &[f64]) -> f64 {
        let tables: Vec<Vec<f64>> = t.iter().map(|&x| chebyshev_values(x, self.m)).collect();
        let mut j = vec![0usize; self.dim];
        let mut total = 0.0;
        for &c in &self.coeffs {
            total += c * j.iter().enumerate().map(|(k, &jk)| tables[k][jk]).product::<f64>();
            for k in (0..self.dim).rev() {
                j[k] += 1;
                if j[k] <= self.m {
                    break;
                }
                j[k] = 0;
            }
        }
        total
    }
}

/// Interpolating tensor Chebyshev expansion of `f` on the `(m+1)^d` Lobatto grid.
pub fn cheb_coeffs(f: &FunctionSpec, dim: usize, m: usize) -> Result<CoeffTensor> {
    if f.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: f.dim(),
        });
    }
    let x = lobatto_points(m);
    let side = m + 1;
    let total = side.pow(dim as u32);
    let mut values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut lin| {
            let mut t = vec![0.0; dim];
            for k in (0..dim).rev() {
                t[k] = x[lin % side];
                lin /= side;
            }
            f.eval(&t)
        })
        .collect();
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        let mut lin = bad;
        let mut t = vec![0.0; dim];
        for k in (0..dim).rev() {
            t[k] = x[lin % side];
            lin /= side;
        }
        return Err(Error::NonFinite(t));
    }
    if m == 0 {
        return Ok(CoeffTensor { dim, m, coeffs: values });
    }

    // DCT-I along each axis; ascending nodes carry the sign (−1)^j
    let mf = m as f64;
    let transform: Vec<f64> = (0..=m)
        .flat_map(|j| {
            (0..=m).map(move |k| {
                let wk = if k == 0 || k == m { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == m { 0.5 } else { 1.0 };
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * wj * wk * (2.0 / mf) * (std::f64::consts::PI * (j * k) as f64 / mf).cos()
            })
        })
        .collect();
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        let mut out = vec![0.0; total];
        out.par_chunks_mut(block)
            .zip(values.par_chunks(block))
            .for_each(|(o, v)| {
                for inner in 0..stride {
                    for j in 0..side {
                        let row = &transform[j * side..(j + 1) * side];
                        o[j * stride + inner] =
                            row.iter().enumerate().map(|(k, w)| w * v[k * stride + inner]).sum();
                    }
                }
            });
        values = out;
    }
    Ok(CoeffTensor {
        dim,
        m,
        coeffs: values,
    })
}

/// A real-coefficient polynomial in the tensor Chebyshev basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChebPoly {
    pub dim: usize,
    pub indices: Vec<MultiIndex>,
    pub coeffs: Vec<f64>,
}

impl ChebPoly {
    fn max_degree(&self) -> usize {
        self.indices
            .iter()
            .flat_map(|j| j.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, t: &[f64]) -> f64 {
        let m = self.max_degree();
        let tables: Vec<Vec<f64>> = t.iter().map(|&x| chebyshev_values(x, m)).collect();
        self.eval_with(&tables)
    }

    fn eval_with(&self, tables: &[Vec<f64>]) -> f64 {
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| c * j.iter().enumerate().map(|(k, &jk)| tables[k][jk]).product::<f64>())
            .sum()
    }

    pub fn eval_complex(&self, z: &[Complex64]) -> Complex64 {
        let m = self.max_degree();
        let tables: Vec<Vec<Complex64>> = z.iter().map(|&w| chebyshev_values_complex(w, m)).collect();
        self.indices
            .iter()
            .zip(&self.coeffs)
            .map(|(j, c)| {
                *c * j
                    .iter()
                    .enumerate()
                    .map(|(k, &jk)| tables[k][jk])
                    .product::<Complex64>()
            })
            .sum()
    }
}

/// Per-axis analysis degree `max(2n·⌈max_k φ_P(e_k)⌉, 32)`.
pub fn analysis_degree(body: &ConvexBody, n: usize) -> usize {
    let reach = (0..body.dim())
        .map(|k| body.max_coordinate(k))
        .fold(0.0_f64, f64::max)
        .ceil() as usize;
    (2 * n * reach.max(1)).max(32)
}

fn required_degree(set: &IndexSet) -> usize {
    set.max_per_axis().into_iter().max().unwrap_or(0)
}

fn truncate_set(coeffs: &CoeffTensor, set: &IndexSet) -> Result<ChebPoly> {
    let needed = required_degree(set);
    if coeffs.m < needed {
        return Err(Error::AnalysisDegreeTooSmall { m: coeffs.m, needed });
    }
    Ok(ChebPoly {
        dim: coeffs.dim,
        indices: set.indices.clone(),
        coeffs: set.indices.iter().map(|j| coeffs.get(j)).collect(),
    })
}

/// The Chebyshev truncation `p_n ∈ Poly(nP)` keeping exactly the `c_J` with `J ∈ nP`.
pub fn truncate_to_body(coeffs: &CoeffTensor, body: &ConvexBody, n: usize) -> Result<ChebPoly> {
    if body.dim() != coeffs.dim {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim,
            got: body.dim(),
        });
    }
    truncate_set(coeffs, &body.enumerate_index_set(n))
}

/// Evaluation-grid size: 201 per axis for `d ≤ 2`, 65 for `d = 3`, 25 beyond.
pub fn default_eval_grid(dim: usize) -> usize {
    match dim {
        0..=2 => 201,
        3 => 65,
        _ => 25,
    }
}

/// Samples of `f` and per-axis Chebyshev tables on a tensor Lobatto grid.
struct EvalGrid {
    dim: usize,
    side: usize,
    values: Vec<f64>,
    tables: Vec<Vec<f64>>,
}

impl EvalGrid {
    fn new(f: &FunctionSpec, dim: usize, side: usize, m: usize) -> Result<Self> {
        if side < 2 {
            return Err(Error::Domain(format!("evaluation grid needs >= 2 points per axis, got {side}")));
        }
        let x = lobatto_points(side - 1);
        let tables: Vec<Vec<f64>> = x.iter().map(|&t| chebyshev_values(t, m)).collect();
        let total = side.pow(dim as u32);
        let values: Vec<f64> = (0..total)
            .into_par_iter()
            .map(|lin| {
                let t: Vec<f64> = Self::coords(lin, dim, side).iter().map(|&i| x[i]).collect();
                f.eval(&t)
            })
            .collect();
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            let t = Self::coords(bad, dim, side).iter().map(|&i| x[i]).collect();
            return Err(Error::NonFinite(t));
        }
        Ok(EvalGrid {
            dim,
            side,
            values,
            tables,
        })
    }

    fn coords(mut lin: usize, dim: usize, side: usize) -> Vec<usize> {
        let mut c = vec![0; dim];
        for k in (0..dim).rev() {
            c[k] = lin % side;
            lin /= side;
        }
        c
    }

    fn sup_error(&self, p: &ChebPoly) -> f64 {
        (0..self.values.len())
            .into_par_iter()
            .map(|lin| {
                let c = Self::coords(lin, self.dim, self.side);
                let v: f64 = p
                    .indices
                    .iter()
                    .zip(&p.coeffs)
                    .map(|(j, a)| {
                        a * j
                            .iter()
                            .zip(&c)
                            .map(|(&jk, &ik)| self.tables[ik][jk])
                            .product::<f64>()
                    })
                    .sum();
                (self.values[lin] - v).abs()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Grid sup of `|f − p_n|` for the Chebyshev truncation `p_n` onto `nP`; an
/// upper estimate of `D_n(f,P,[−1,1]^d)`.
pub fn dn_estimate(f: &FunctionSpec, body: &ConvexBody, n: usize, eval_grid: usize) -> Result<f64> {
    let d = body.dim();
    let m = analysis_degree(body, n);
    let coeffs = cheb_coeffs(f, d, m)?;
    let p = truncate_to_body(&coeffs, body, n)?;
    let grid = EvalGrid::new(f, d, eval_grid, required_degree(&body.enumerate_index_set(n)))?;
    Ok(grid.sup_error(&p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub n: usize,
    pub d_n: usize,
    pub d_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxSeries {
    pub rows: Vec<SeriesRow>,
    /// `None` when fewer than three rows survive the default fit filter.
    pub fitted_rate: Option<f64>,
    pub fit_range: Option<(usize, usize)>,
}

impl ApproxSeries {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,d_n,D_hat\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{:.12e}\n", r.n, r.d_n, r.d_hat));
        }
        s
    }
}

/// `D̂_n` for every `n` in `ns`, sharing one analysis at the largest degree.
pub fn dn_series(
    f: &FunctionSpec,
    body: &ConvexBody,
    ns: &[usize],
    eval_grid: usize,
) -> Result<ApproxSeries> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("n range must be nonempty and increasing".into()));
    }
    let d = body.dim();
    let n_max = *ns.last().unwrap();
    let m = analysis_degree(body, n_max);
    let coeffs = cheb_coeffs(f, d, m)?;
    let sets: Vec<IndexSet> = ns.iter().map(|&n| body.enumerate_index_set(n)).collect();
    let reach = sets.iter().map(required_degree).max().unwrap_or(0);
    let grid = EvalGrid::new(f, d, eval_grid, reach)?;
    let rows = sets
        .iter()
        .map(|set| {
            let p = truncate_set(&coeffs, set)?;
            Ok(SeriesRow {
                n: set.n,
                d_n: set.d_n(),
                d_hat: grid.sup_error(&p),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut series = ApproxSeries {
        rows,
        fitted_rate: None,
        fit_range: None,
    };
    if let Ok((rate, range)) = fit_default(&series) {
        series.fitted_rate = Some(rate);
        series.fit_range = Some(range);
    }
    Ok(series)
}

fn least_squares_rate(rows: &[SeriesRow]) -> Result<f64> {
    if rows.len() < 3 {
        return Err(Error::TooFewRows { usable: rows.len() });
    }
    let k = rows.len() as f64;
    let mx = rows.iter().map(|r| r.n as f64).sum::<f64>() / k;
    let my = rows.iter().map(|r| r.d_hat.ln()).sum::<f64>() / k;
    let sxy: f64 = rows.iter().map(|r| (r.n as f64 - mx) * (r.d_hat.ln() - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r.n as f64 - mx).powi(2)).sum();
    Ok((-sxy / sxx).exp())
}

fn fit_default(series: &ApproxSeries) -> Result<(f64, (usize, usize))> {
    let usable: Vec<SeriesRow> = series
        .rows
        .iter()
        .skip(FIT_SKIP)
        .filter(|r| r.d_hat >= 100.0 * ERROR_FLOOR)
        .copied()
        .collect();
    let rate = least_squares_rate(&usable)?;
    Ok((rate, (usable[0].n, usable[usable.len() - 1].n)))
}

/// `R̂ = exp(−slope)` of the least-squares line through `(n, log D̂_n)`.
///
/// With `fit_range = Some((lo, hi))` the rows with `lo ≤ n ≤ hi` above
/// [`ERROR_FLOOR`] are used; with `None`, the first [`FIT_SKIP`] rows and any
/// row within 100× of the floor are dropped.
pub fn fit_rate(series: &ApproxSeries, fit_range: Option<(usize, usize)>) -> Result<f64> {
    match fit_range {
        None => fit_default(series).map(|(r, _)| r),
        Some((lo, hi)) => {
            let usable: Vec<SeriesRow> = series
                .rows
                .iter()
                .filter(|r| r.n >= lo && r.n <= hi && r.d_hat >= ERROR_FLOOR)
                .copied()
                .collect();
            least_squares_rate(&usable)
        }
    }
}

/// `R̂ = exp(−slope)` for arbitrary `(n, error)` pairs, skipping rows below the floor.
pub fn fit_geometric_rate(points: &[(usize, f64)]) -> Result<f64> {
    let rows: Vec<SeriesRow> = points
        .iter()
        .filter(|(_, e)| *e >= ERROR_FLOOR)
        .map(|&(n, e)| SeriesRow { n, d_n: 0, d_hat: e })
        .collect();
    least_squares_rate(&rows)
}
