//! Convex bodies `P ⊂ (ℝ₊)^d` and the degree notions they induce.
//!
//! A body is either the positive part of an ℓq ball (`q ∈ [1, ∞]`) or the hull of a
//! finite set of nonnegative vertices, optionally dilated by a scale `c`. From it we
//! get the Minkowski functional `‖x‖_P` (the P-degree of a monomial `z^x`), the
//! support function `φ_P` (the dual norm used by the product formula), and the
//! lattice slices `nP ∩ ℤ₊^d` that index `Poly(nP)`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::{hull, lp};

/// Relative tolerance for `‖J‖_P ≤ n` lattice membership.
pub const LATTICE_TOL: f64 = 1e-9;

/// Depth of the finite lower-set check run before the product formula is used.
pub const LOWER_SET_DEPTH: usize = 20;

/// Largest supported dimension.
pub const MAX_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Shape {
    /// `{x ≥ 0 : ‖x‖_q ≤ 1}`; `q = f64::INFINITY` is the unit cube.
    LqBall { q: f64 },
    /// Convex hull of nonnegative vertices.
    Polytope { vertices: Vec<Vec<f64>> },
}

/// An immutable convex body `c·P₀`.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
    scale: f64,
    containment: (u32, u32),
    lower_set: OnceLock<bool>,
}

impl PartialEq for ConvexBody {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.shape == other.shape && self.scale == other.scale
    }
}

fn lq_norm(x: &[f64], q: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return m;
    }
    if q == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    m * x.iter().map(|v| (v.abs() / m).powf(q)).sum::<f64>().powf(1.0 / q)
}

/// Conjugate exponent `q'` with `1/q + 1/q' = 1`.
pub fn conjugate_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

fn check_nonnegative(x: &[f64]) -> Result<()> {
    if let Some(v) = x.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!(
            "expected a nonnegative vector, found component {v}"
        )));
    }
    Ok(())
}

impl ConvexBody {
    /// Positive part of the unit ℓq ball in ℝ^d.
    pub fn lq(q: f64, dim: usize) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::InvalidBody(format!("q must be >= 1, got {q}")));
        }
        Self::build(dim, Shape::LqBall { q }, 1.0)
    }

    /// The standard simplex Σ (total degree).
    pub fn simplex(dim: usize) -> Result<Self> {
        Self::lq(1.0, dim)
    }

    /// The unit cube (max degree).
    pub fn cube(dim: usize) -> Result<Self> {
        Self::lq(f64::INFINITY, dim)
    }

    /// Convex hull of the given vertices. The hull must be full-dimensional and
    /// satisfy `Σ ⊂ kP` for some integer `k` (in particular it contains the origin).
    pub fn polytope(dim: usize, vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidBody(format!(
                "every vertex must have {dim} coordinates"
            )));
        }
        for v in &vertices {
            check_nonnegative(v).map_err(|e| Error::InvalidBody(e.to_string()))?;
        }
        if dim == 0 || hull::affine_rank(&vertices) < dim {
            return Err(Error::InvalidBody(
                "vertex hull has empty interior (need d+1 affinely independent vertices)".into(),
            ));
        }
        Self::build(dim, Shape::Polytope { vertices }, 1.0)
    }

    /// The dilation `c·self`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidBody(format!("scale must be positive, got {c}")));
        }
        Self::build(self.dim, self.shape.clone(), self.scale * c)
    }

    fn build(dim: usize, shape: Shape, scale: f64) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidBody(format!(
                "dimension must be in 1..={MAX_DIM}, got {dim}"
            )));
        }
        if let Shape::Polytope { vertices } = &shape {
            // origin membership: Σ μ_i v_i = 0, Σ μ_i = 1, μ ≥ 0
            let mut rows: Vec<Vec<f64>> = (0..dim)
                .map(|k| vertices.iter().map(|v| v[k]).collect())
                .collect();
            rows.push(vec![1.0; vertices.len()]);
            let mut rhs = vec![0.0; dim];
            rhs.push(1.0);
            if !matches!(
                lp::minimize(&rows, &rhs, &vec![0.0; vertices.len()]),
                lp::LpOutcome::Optimal(_)
            ) {
                return Err(Error::InvalidBody(
                    "origin is not in the body, so no k with Σ ⊂ kP exists".into(),
                ));
            }
        }
        let mut body = ConvexBody {
            dim,
            shape,
            scale,
            containment: (1, 1),
            lower_set: OnceLock::new(),
        };
        let a = body.support_unchecked(&vec![1.0; dim]);
        let mut k = 0.0_f64;
        for i in 0..dim {
            let mut e = vec![0.0; dim];
            e[i] = 1.0;
            let g = body.gauge_unchecked(&e);
            if !g.is_finite() {
                return Err(Error::InvalidBody(format!(
                    "unit vector e_{} is not in any dilate of the body (Σ ⊂ kP fails)",
                    i + 1
                )));
            }
            k = k.max(g);
        }
        let ceil = |v: f64| ((v - 1e-9 * v.max(1.0)).ceil() as u32).max(1);
        body.containment = (ceil(a), ceil(k));
        Ok(body)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `q` when the body is a (scaled) ℓq ball.
    pub fn lq_exponent(&self) -> Option<f64> {
        match self.shape {
            Shape::LqBall { q } => Some(q),
            Shape::Polytope { .. } => None,
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        check_nonnegative(x)
    }

    fn gauge_unchecked(&self, x: &[f64]) -> f64 {
        if x.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let base = match &self.shape {
            Shape::LqBall { q } => lq_norm(x, *q),
            Shape::Polytope { vertices } => {
                // min Σ μ_i  s.t.  Σ μ_i v_i = x, μ ≥ 0; the origin lies in the hull
                let rows: Vec<Vec<f64>> = (0..self.dim)
                    .map(|k| vertices.iter().map(|v| v[k]).collect())
                    .collect();
                match lp::minimize(&rows, x, &vec![1.0; vertices.len()]) {
                    lp::LpOutcome::Optimal(v) => v,
                    _ => f64::INFINITY,
                }
            }
        };
        base / self.scale
    }

    pub(crate) fn support_unchecked(&self, x: &[f64]) -> f64 {
        let base = match &self.shape {
            Shape::LqBall { q } => lq_norm(x, conjugate_exponent(*q)),
            Shape::Polytope { vertices } => vertices
                .iter()
                .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .fold(0.0, f64::max),
        };
        base * self.scale
    }

    /// Minkowski functional `‖x‖_P = inf{λ > 0 : x ∈ λP}` for `x ≥ 0`.
    pub fn minkowski_degree_norm(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.gauge_unchecked(x))
    }

    /// Support function `φ_P(x) = sup_{y ∈ P} x·y` for `x ≥ 0`.
    pub fn support_value(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.support_unchecked(x))
    }

    /// `sup_{y ∈ P} x·y` for an arbitrary real vector. For ℓq balls only the
    /// positive part of `x` contributes; for polytopes the maximum sits at a
    /// vertex or at the origin.
    pub fn linear_sup(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let positive: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
        Ok(match &self.shape {
            Shape::LqBall { .. } => self.support_unchecked(&positive),
            Shape::Polytope { vertices } => {
                vertices
                    .iter()
                    .map(|v| {
                        v.iter()
                            .zip(x)
                            .map(|(a, b)| if *a == 0.0 { 0.0 } else { a * b })
                            .sum::<f64>()
                    })
                    .fold(0.0, f64::max)
                    * self.scale
            }
        })
    }

    /// `max_{y ∈ P} y_k`, the largest exponent of `z_k` that `Poly(P)` reaches.
    pub fn max_coordinate(&self, k: usize) -> f64 {
        let mut e = vec![0.0; self.dim];
        e[k] = 1.0;
        self.support_unchecked(&e)
    }

    /// Lattice slice `nP ∩ ℤ₊^d`, graded-lexicographically sorted.
    pub fn enumerate_index_set(&self, n: usize) -> IndexSet {
        let bounds: Vec<usize> = (0..self.dim)
            .map(|k| {
                let m = n as f64 * self.max_coordinate(k);
                (m * (1.0 + LATTICE_TOL) + LATTICE_TOL).floor() as usize
            })
            .collect();
        let limit = n as f64 * (1.0 + LATTICE_TOL);
        let mut indices = Vec::new();
        let mut j = vec![0usize; self.dim];
        let mut x = vec![0.0; self.dim];
        loop {
            x.iter_mut().zip(&j).for_each(|(a, b)| *a = *b as f64);
            if self.gauge_unchecked(&x) <= limit {
                indices.push(MultiIndex(j.clone()));
            }
            // odometer over the bounding box
            let mut axis = 0;
            loop {
                if axis == self.dim {
                    indices.sort_by(graded_lex);
                    return IndexSet {
                        n,
                        dim: self.dim,
                        indices,
                    };
                }
                if j[axis] < bounds[axis] {
                    j[axis] += 1;
                    break;
                }
                j[axis] = 0;
                axis += 1;
            }
        }
    }

    /// Exhaustive downward-closure check of `nP ∩ ℤ₊^d` for `n = 1..=n_max`.
    pub fn is_lower_set(&self, n_max: usize) -> bool {
        self.first_lower_set_violation(n_max).is_none()
    }

    pub(crate) fn first_lower_set_violation(&self, n_max: usize) -> Option<(usize, Vec<usize>)> {
        for n in 1..=n_max {
            let set = self.enumerate_index_set(n);
            for j in &set.indices {
                for k in 0..self.dim {
                    if j.0[k] > 0 {
                        let mut lower = j.0.clone();
                        lower[k] -= 1;
                        if !set.contains(&lower) {
                            return Some((n, j.0.clone()));
                        }
                    }
                }
            }
        }
        None
    }

    /// Lower-set check to [`LOWER_SET_DEPTH`], computed once per body.
    pub fn check_lower_set(&self) -> Result<()> {
        let ok = *self
            .lower_set
            .get_or_init(|| self.is_lower_set(LOWER_SET_DEPTH));
        if ok {
            Ok(())
        } else {
            let (n, index) = self
                .first_lower_set_violation(LOWER_SET_DEPTH)
                .expect("cached violation");
            Err(Error::NotLowerSet { n, index })
        }
    }

    /// d-dimensional volume.
    pub fn volume(&self) -> f64 {
        let d = self.dim as f64;
        let base = match &self.shape {
            Shape::LqBall { q } if q.is_infinite() => 1.0,
            Shape::LqBall { q } => (d * ln_gamma(1.0 + 1.0 / q) - ln_gamma(1.0 + d / q)).exp(),
            Shape::Polytope { vertices } => hull::volume(vertices),
        };
        base * self.scale.powf(d)
    }

    /// `(A, k)`: minimal integers with `P ⊂ AΣ` and `Σ ⊂ kP`.
    pub fn containment_constants(&self) -> (u32, u32) {
        self.containment
    }

    /// `deg_P` of a polynomial with the given exponent support.
    pub fn poly_degree(&self, support: &[MultiIndex]) -> Result<f64> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        let mut best = 0.0_f64;
        for j in support {
            best = best.max(self.minkowski_degree_norm(&j.as_f64())?);
        }
        Ok(best)
    }
}

/// Scale `c(q)` with `vol(c·P_q) = vol(P₁)` in dimension `d`.
pub fn dim_match_scale(q: f64, dim: usize) -> Result<f64> {
    let p1 = ConvexBody::simplex(dim)?;
    let pq = ConvexBody::lq(q, dim)?;
    Ok((p1.volume() / pq.volume()).powf(1.0 / dim as f64))
}

/// Exponent vector `J = (j₁, …, j_d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn total_degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

impl std::ops::Deref for MultiIndex {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

fn graded_lex(a: &MultiIndex, b: &MultiIndex) -> Ordering {
    a.total_degree()
        .cmp(&b.total_degree())
        .then_with(|| b.0.cmp(&a.0))
}

fn graded_lex_raw(a: &[usize], b: &[usize]) -> Ordering {
    let (sa, sb): (usize, usize) = (a.iter().sum(), b.iter().sum());
    sa.cmp(&sb).then_with(|| b.cmp(a))
}

/// The lattice slice `nP ∩ ℤ₊^d`; `d_n` is its cardinality.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexSet {
    pub n: usize,
    pub dim: usize,
    pub indices: Vec<MultiIndex>,
}

impl IndexSet {
    pub fn d_n(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, j: &[usize]) -> bool {
        self.position(j).is_some()
    }

    pub fn position(&self, j: &[usize]) -> Option<usize> {
        self.indices
            .binary_search_by(|probe| graded_lex_raw(&probe.0, j))
            .ok()
    }

    /// Largest entry per axis.
    pub fn max_per_axis(&self) -> Vec<usize> {
        (0..self.dim)
            .map(|k| self.indices.iter().map(|j| j.0[k]).max().unwrap_or(0))
            .collect()
    }

    /// One `j1,...,jd` line per index.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in &self.indices {
            let row: Vec<String> = j.0.iter().map(|v| v.to_string()).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Splits on commas outside brackets/parentheses.
pub(crate) fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out.into_iter().filter(|t| !t.is_empty()).collect()
}

pub(crate) fn parse_f64(token: &str) -> Result<f64> {
    match token.trim() {
        "inf" | "infinity" | "Inf" | "∞" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("not a number: `{t}`"))),
    }
}

fn key_values(body: &str) -> Result<Vec<(&str, &str)>> {
    split_top_level(body, ',')
        .into_iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

fn parse_vertices(s: &str) -> Result<Vec<Vec<f64>>> {
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("vertex list must be bracketed: `{s}`")))?;
    split_top_level(inner, ',')
        .into_iter()
        .map(|v| {
            let coords = v
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| Error::Parse(format!("vertex must be parenthesized: `{v}`")))?;
            coords.split(',').map(parse_f64).collect()
        })
        .collect()
}

impl FromStr for ConvexBody {
    type Err = Error;

    /// `lq:q=<float>,d=<int>[,scale=<float>]` or `poly:d=<int>,verts=[(..),(..)][,scale=..]`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("missing body kind in `{s}`")))?;
        let mut q = None;
        let mut d = None;
        let mut scale = 1.0;
        let mut verts = None;
        for (k, v) in key_values(rest)? {
            match k {
                "q" => q = Some(parse_f64(v)?),
                "d" => {
                    d = Some(
                        v.parse::<usize>()
                            .map_err(|_| Error::Parse(format!("bad dimension `{v}`")))?,
                    )
                }
                "scale" => scale = parse_f64(v)?,
                "verts" => verts = Some(parse_vertices(v)?),
                other => return Err(Error::Parse(format!("unknown body key `{other}`"))),
            }
        }
        let d = d.ok_or_else(|| Error::Parse("body spec needs d=<int>".into()))?;
        let body = match kind.trim() {
            "lq" => ConvexBody::lq(
                q.ok_or_else(|| Error::Parse("lq body needs q=<float>".into()))?,
                d,
            )?,
            "poly" => ConvexBody::polytope(
                d,
                verts.ok_or_else(|| Error::Parse("poly body needs verts=[...]".into()))?,
            )?,
            other => return Err(Error::Parse(format!("unknown body kind `{other}`"))),
        };
        if scale == 1.0 {
            Ok(body)
        } else {
            body.scaled(scale)
        }
    }
}

impl fmt::Display for ConvexBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.shape {
            Shape::LqBall { q } => {
                let q = if q.is_infinite() {
                    "inf".to_string()
                } else {
                    q.to_string()
                };
                write!(f, "lq:q={q},d={},scale={}", self.dim, self.scale)
            }
            Shape::Polytope { vertices } => {
                let vs: Vec<String> = vertices
                    .iter()
                    .map(|v| {
                        let c: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                        format!("({})", c.join(","))
                    })
                    .collect();
                write!(
                    f,
                    "poly:d={},verts=[{}],scale={}",
                    self.dim,
                    vs.join(","),
                    self.scale
                )
            }
        }
    }
}
