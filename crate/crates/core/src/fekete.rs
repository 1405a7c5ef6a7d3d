//! Approximate Fekete arrays for `Poly(nP)` on meshed product sets, their
//! fundamental Lagrange polynomials, and the interpolation diagnostics built on
//! them (`ψ_n`, the sets `D_R`, and the `Φ_n` bracket).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::{chebyshev_values_complex, FunctionSpec};
use crate::approx::lobatto_points;
use crate::convex_body::{ConvexBody, IndexSet};
use crate::error::{Error, Result};
use crate::extremal::{ComplexVector, ProductExtremal, ProductSet, UnivariateSet};

/// A swap is taken when some `|l_j(z)|` on the mesh exceeds `1 + SWAP_TOL`.
pub const SWAP_TOL: f64 = 1e-10;
/// Kronecker residual that triggers the conditioning warning.
pub const CONDITIONING_TOL: f64 = 1e-6;
/// Mesh points required per basis function.
pub const MESH_OVERSAMPLING: usize = 4;

const MAX_SWAPS: usize = 100_000;
const REFRESH_EVERY: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh {
    pub dim: usize,
    pub points: Vec<ComplexVector>,
    pub description: String,
    pub resolution: usize,
}

impl Mesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.points.iter().all(|p| p.iter().all(|z| z.im == 0.0))
    }

    /// `x1,...,xd` per point, or `re1,im1,...` when some point is complex.
    pub fn to_csv(&self) -> String {
        points_csv(&self.points)
    }
}

pub(crate) fn points_csv(points: &[ComplexVector]) -> String {
    let real = points.iter().all(|p| p.iter().all(|z| z.im == 0.0));
    let mut out = String::new();
    for p in points {
        let cols: Vec<String> = if real {
            p.iter().map(|z| format!("{:.12e}", z.re)).collect()
        } else {
            p.iter()
                .flat_map(|z| [format!("{:.12e}", z.re), format!("{:.12e}", z.im)])
                .collect()
        };
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

fn factor_points(set: &UnivariateSet, resolution: usize) -> Vec<Complex64> {
    match *set {
        UnivariateSet::Interval { a, b } => lobatto_points(resolution - 1)
            .into_iter()
            .map(|t| Complex64::new(0.5 * (a + b) + 0.5 * (b - a) * t, 0.0))
            .collect(),
        UnivariateSet::Disk { center, radius } => {
            let c = Complex64::new(center.0, center.1);
            let rings = resolution - 1;
            let mut pts = vec![c];
            for k in 1..=rings {
                let rho = radius * k as f64 / rings as f64;
                let count = ((std::f64::consts::TAU * k as f64).ceil() as usize).max(6);
                for i in 0..count {
                    let theta = std::f64::consts::TAU * i as f64 / count as f64;
                    pts.push(c + Complex64::from_polar(rho, theta));
                }
            }
            pts
        }
    }
}

/// Tensor mesh of `K`: Chebyshev–Lobatto points on interval factors, the centre
/// plus concentric rings on disk factors. Axis 0 varies slowest.
pub fn build_mesh(set: &ProductSet, resolution: usize) -> Result<Mesh> {
    if resolution < 2 {
        return Err(Error::Domain(format!("mesh resolution must be >= 2, got {resolution}")));
    }
    let axes: Vec<Vec<Complex64>> = set
        .factors
        .iter()
        .map(|f| factor_points(f, resolution))
        .collect();
    let mut points: Vec<ComplexVector> = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |z| {
                    let mut q = p.clone();
                    q.push(*z);
                    q
                })
            })
            .collect();
    }
    Ok(Mesh {
        dim: set.dim(),
        points,
        description: format!("tensor mesh of {set}, resolution {resolution}"),
        resolution,
    })
}

/// Per-factor basis: `T_j` of the normalized coordinate on intervals,
/// `((z − c)/ρ)^j` on disks.
fn factor_basis(set: &UnivariateSet, z: Complex64, m: usize) -> Vec<Complex64> {
    let u = set.normalize(z);
    match set {
        UnivariateSet::Interval { .. } => chebyshev_values_complex(u, m),
        UnivariateSet::Disk { .. } => {
            let mut v = Vec::with_capacity(m + 1);
            let mut p = Complex64::new(1.0, 0.0);
            for _ in 0..=m {
                v.push(p);
                p *= u;
            }
            v
        }
    }
}

fn basis_row(set: &ProductSet, indices: &IndexSet, max_deg: &[usize], z: &[Complex64]) -> Vec<Complex64> {
    let tables: Vec<Vec<Complex64>> = set
        .factors
        .iter()
        .zip(z)
        .zip(max_deg)
        .map(|((f, zk), &m)| factor_basis(f, *zk, m))
        .collect();
    indices
        .indices
        .iter()
        .map(|j| {
            j.iter()
                .enumerate()
                .map(|(k, &jk)| tables[k][jk])
                .product::<Complex64>()
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FeketeSet {
    pub n: usize,
    pub body: ConvexBody,
    pub set: ProductSet,
    pub index_set: IndexSet,
    pub nodes: Vec<ComplexVector>,
    /// Positions of the nodes in the mesh used for extraction.
    pub node_mesh_indices: Vec<usize>,
    /// Column `j` holds the basis coefficients of `l_j`.
    pub lagrange_coeffs: DMatrix<Complex64>,
    /// `log |det|` of the node Vandermonde in the product basis.
    pub vdm_log_abs: f64,
    pub greedy_vdm_log_abs: f64,
    pub swaps_performed: usize,
    pub max_psi_on_mesh: f64,
    /// `max |l_j(a_k) − δ_jk|`.
    pub kronecker_residual: f64,
    pub conditioning_warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeketeReport {
    pub n: usize,
    pub d_n: usize,
    pub vdm_log_abs: f64,
    pub greedy_vdm_log_abs: f64,
    pub max_psi_on_mesh: f64,
    pub swaps_performed: usize,
    pub kronecker_residual: f64,
    pub conditioning_warning: bool,
}

fn log_abs_det(m: &DMatrix<Complex64>) -> f64 {
    let lu = m.clone().full_piv_lu();
    let u = lu.u();
    (0..u.nrows()).map(|i| u[(i, i)].norm().ln()).sum()
}

fn inverse(m: &DMatrix<Complex64>, column_hint: usize) -> Result<DMatrix<Complex64>> {
    m.clone()
        .full_piv_lu()
        .try_inverse()
        .ok_or(Error::RankDeficient { column: column_hint })
}

fn argmax_abs(l: &DMatrix<Complex64>) -> (usize, usize, f64) {
    let nrows = l.nrows();
    (0..l.ncols())
        .into_par_iter()
        .map(|j| {
            let col = l.column(j);
            let (i, v) = (0..nrows)
                .map(|i| (i, col[i].norm()))
                .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
            (i, j, v)
        })
        .reduce(
            || (0, 0, f64::NEG_INFINITY),
            |a, b| {
                if b.2 > a.2 || (b.2 == a.2 && (b.1, b.0) < (a.1, a.0)) {
                    b
                } else {
                    a
                }
            },
        )
}

/// Greedy determinant growth on the mesh Vandermonde (row-pivoted Gram–Schmidt),
/// then swap refinement to local optimality.
pub fn approx_fekete(mesh: &Mesh, body: &ConvexBody, set: &ProductSet, n: usize) -> Result<FeketeSet> {
    if mesh.dim != set.dim() || body.dim() != set.dim() {
        return Err(Error::DimensionMismatch {
            expected: set.dim(),
            got: if mesh.dim != set.dim() { mesh.dim } else { body.dim() },
        });
    }
    body.check_lower_set()?;
    let index_set = body.enumerate_index_set(n);
    let dn = index_set.d_n();
    if mesh.len() < MESH_OVERSAMPLING * dn {
        return Err(Error::MeshTooCoarse {
            points: mesh.len(),
            needed: MESH_OVERSAMPLING * dn,
        });
    }
    let max_deg = index_set.max_per_axis();
    let rows: Vec<Vec<Complex64>> = mesh
        .points
        .par_iter()
        .map(|z| basis_row(set, &index_set, &max_deg, z))
        .collect();

    // greedy selection
    let mut resid = rows.clone();
    let scale = rows
        .iter()
        .map(|r| r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut chosen: Vec<usize> = Vec::with_capacity(dn);
    let mut taken = vec![false; rows.len()];
    for step in 0..dn {
        let (best, norm) = resid
            .par_iter()
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, r)| (i, r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()))
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) { b } else { a },
            );
        if best == usize::MAX || norm <= 1e-12 * scale.max(1.0) {
            return Err(Error::RankDeficient { column: step });
        }
        taken[best] = true;
        chosen.push(best);
        let q: Vec<Complex64> = resid[best].iter().map(|v| v / norm).collect();
        resid.par_iter_mut().enumerate().for_each(|(i, r)| {
            if taken[i] {
                return;
            }
            let proj: Complex64 = q.iter().zip(r.iter()).map(|(a, b)| a.conj() * b).sum();
            r.iter_mut().zip(&q).for_each(|(v, a)| *v -= proj * a);
        });
    }
    drop(resid);

    let vmesh = DMatrix::from_fn(rows.len(), dn, |i, b| rows[i][b]);
    let node_matrix = |nodes: &[usize]| DMatrix::from_fn(dn, dn, |k, b| rows[nodes[k]][b]);
    let greedy_vdm_log_abs = log_abs_det(&node_matrix(&chosen));

    let mut swaps = 0;
    let (coeffs, lmesh) = loop {
        let coeffs = inverse(&node_matrix(&chosen), dn)?;
        let mut lmesh = &vmesh * &coeffs;
        let mut c = coeffs;
        let mut local = 0;
        while local < REFRESH_EVERY && swaps < MAX_SWAPS {
            let (i, j, v) = argmax_abs(&lmesh);
            if v <= 1.0 + SWAP_TOL {
                break;
            }
            let s = lmesh[(i, j)];
            let zrow: Vec<Complex64> = lmesh.row(i).iter().copied().collect();
            // l'_j = l_j / l_j(z*), l'_k = l_k − l_k(z*) l'_j
            lmesh.column_mut(j).iter_mut().for_each(|v| *v /= s);
            c.column_mut(j).iter_mut().for_each(|v| *v /= s);
            let lj = lmesh.column(j).clone_owned();
            let cj = c.column(j).clone_owned();
            for k in 0..dn {
                if k != j {
                    let f = zrow[k];
                    lmesh.column_mut(k).axpy(-f, &lj, Complex64::new(1.0, 0.0));
                    c.column_mut(k).axpy(-f, &cj, Complex64::new(1.0, 0.0));
                }
            }
            chosen[j] = i;
            swaps += 1;
            local += 1;
        }
        if local == 0 || swaps >= MAX_SWAPS {
            break (c, lmesh);
        }
    };

    let vn = node_matrix(&chosen);
    let kron = &vn * &coeffs;
    let kronecker_residual = (0..dn)
        .flat_map(|k| (0..dn).map(move |j| (k, j)))
        .map(|(k, j)| {
            let want = if k == j { 1.0 } else { 0.0 };
            (kron[(k, j)] - want).norm()
        })
        .fold(0.0, f64::max);
    let max_psi_on_mesh = argmax_abs(&lmesh).2;
    Ok(FeketeSet {
        n,
        body: body.clone(),
        set: set.clone(),
        nodes: chosen.iter().map(|&i| mesh.points[i].clone()).collect(),
        node_mesh_indices: chosen,
        lagrange_coeffs: coeffs,
        vdm_log_abs: log_abs_det(&vn),
        greedy_vdm_log_abs,
        swaps_performed: swaps,
        max_psi_on_mesh,
        conditioning_warning: kronecker_residual >= CONDITIONING_TOL,
        kronecker_residual,
        index_set,
    })
}

impl FeketeSet {
    pub fn d_n(&self) -> usize {
        self.index_set.d_n()
    }

    pub fn report(&self) -> FeketeReport {
        FeketeReport {
            n: self.n,
            d_n: self.d_n(),
            vdm_log_abs: self.vdm_log_abs,
            greedy_vdm_log_abs: self.greedy_vdm_log_abs,
            max_psi_on_mesh: self.max_psi_on_mesh,
            swaps_performed: self.swaps_performed,
            kronecker_residual: self.kronecker_residual,
            conditioning_warning: self.conditioning_warning,
        }
    }

    /// Basis values `e_b(z)` in index-set order.
    pub fn basis_values(&self, z: &[Complex64]) -> Vec<Complex64> {
        basis_row(&self.set, &self.index_set, &self.index_set.max_per_axis(), z)
    }

    /// `l_1(z), ..., l_{d_n}(z)`.
    pub fn lagrange_values(&self, z: &[Complex64]) -> Vec<Complex64> {
        let e = self.basis_values(z);
        (0..self.d_n())
            .map(|j| {
                self.lagrange_coeffs
                    .column(j)
                    .iter()
                    .zip(&e)
                    .map(|(c, b)| c * b)
                    .sum()
            })
            .collect()
    }

    /// `ψ_n(z) = max_j |l_j(z)|`.
    pub fn psi_n(&self, z: &[Complex64]) -> f64 {
        self.lagrange_values(z)
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn nodes_csv(&self) -> String {
        points_csv(&self.nodes)
    }
}

/// `ψ_n(z)` for a Fekete set.
pub fn psi_n(fs: &FeketeSet, z: &[Complex64]) -> f64 {
    fs.psi_n(z)
}

/// `L_n(f)` expressed in the product basis of its Fekete set.
#[derive(Debug, Clone)]
pub struct FeketeInterpolant {
    set: ProductSet,
    index_set: IndexSet,
    pub coeffs: Vec<Complex64>,
}

impl FeketeInterpolant {
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        basis_row(&self.set, &self.index_set, &self.index_set.max_per_axis(), z)
            .iter()
            .zip(&self.coeffs)
            .map(|(e, c)| e * c)
            .sum()
    }

    pub fn eval_real(&self, t: &[f64]) -> f64 {
        let z: ComplexVector = t.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.eval(&z).re
    }
}

fn real_point(z: &[Complex64]) -> Result<Vec<f64>> {
    if z.iter().any(|v| v.im != 0.0) {
        return Err(Error::Domain(
            "real-valued function evaluated at a complex point".into(),
        ));
    }
    Ok(z.iter().map(|v| v.re).collect())
}

/// `L_n(f) = Σ_j f(a_j) l_j`.
pub fn interpolate(fs: &FeketeSet, f: &FunctionSpec) -> Result<FeketeInterpolant> {
    if f.dim() != fs.set.dim() {
        return Err(Error::DimensionMismatch {
            expected: fs.set.dim(),
            got: f.dim(),
        });
    }
    let mut values = Vec::with_capacity(fs.d_n());
    for a in &fs.nodes {
        let t = real_point(a)?;
        let v = f.eval(&t);
        if !v.is_finite() {
            return Err(Error::NonFinite(t));
        }
        values.push(Complex64::new(v, 0.0));
    }
    let coeffs = (0..fs.d_n())
        .map(|b| {
            (0..fs.d_n())
                .map(|j| fs.lagrange_coeffs[(b, j)] * values[j])
                .sum()
        })
        .collect();
    Ok(FeketeInterpolant {
        set: fs.set.clone(),
        index_set: fs.index_set.clone(),
        coeffs,
    })
}

/// Sup of `|f − L_n(f)|` over the points of `eval_mesh`.
pub fn interp_error(fs: &FeketeSet, f: &FunctionSpec, eval_mesh: &Mesh) -> Result<f64> {
    let l = interpolate(fs, f)?;
    let pts = eval_mesh
        .points
        .iter()
        .map(|z| real_point(z))
        .collect::<Result<Vec<_>>>()?;
    Ok(pts
        .par_iter()
        .zip(eval_mesh.points.par_iter())
        .map(|(t, z)| (f.eval(t) - l.eval(z).re).abs())
        .reduce(|| 0.0, f64::max))
}

/// `(n, ‖f − L_n f‖)` for each `n`, with a fresh Fekete set per degree.
pub fn interp_error_series(
    mesh: &Mesh,
    body: &ConvexBody,
    set: &ProductSet,
    f: &FunctionSpec,
    ns: &[usize],
    eval_mesh: &Mesh,
) -> Result<Vec<(usize, f64)>> {
    ns.iter()
        .map(|&n| {
            let fs = approx_fekete(mesh, body, set, n)?;
            Ok((n, interp_error(&fs, f, eval_mesh)?))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionReport {
    pub n: usize,
    pub r1: f64,
    pub r: f64,
    pub checked: usize,
    /// Samples with `ψ_n(z) < R₁^n` but `V_{P,K}(z) > log R`.
    pub violations: Vec<usize>,
}

fn check_radii(r1: f64, r: f64) -> Result<()> {
    if !(r1 > 1.0) || !(r > r1) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "inclusion check needs R > R1 > 1, got R1 = {r1}, R = {r}"
        )));
    }
    Ok(())
}

/// Tests `ψ_n(z) < R₁^n ⇒ V_{P,K}(z) ≤ log R` on every sample.
pub fn dr_inclusion_check(fs: &FeketeSet, r1: f64, r: f64, samples: &[ComplexVector]) -> Result<InclusionReport> {
    check_radii(r1, r)?;
    let ext = ProductExtremal::new(&fs.body, &fs.set)?;
    let threshold = fs.n as f64 * r1.ln();
    let flags: Vec<bool> = samples
        .par_iter()
        .map(|z| fs.psi_n(z).ln() < threshold && ext.value(z) > r.ln())
        .collect();
    Ok(InclusionReport {
        n: fs.n,
        r1,
        r,
        checked: samples.len(),
        violations: flags
            .iter()
            .enumerate()
            .filter(|(_, v)| **v)
            .map(|(i, _)| i)
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InclusionScan {
    pub reports: Vec<InclusionReport>,
    /// Smallest listed `n` from which every listed degree is violation-free.
    pub n0: Option<usize>,
}

pub fn dr_inclusion_scan(
    mesh: &Mesh,
    body: &ConvexBody,
    set: &ProductSet,
    ns: &[usize],
    r1: f64,
    r: f64,
    samples: &[ComplexVector],
) -> Result<InclusionScan> {
    check_radii(r1, r)?;
    let reports = ns
        .iter()
        .map(|&n| dr_inclusion_check(&approx_fekete(mesh, body, set, n)?, r1, r, samples))
        .collect::<Result<Vec<_>>>()?;
    let mut n0 = None;
    for rep in reports.iter().rev() {
        if !rep.violations.is_empty() {
            break;
        }
        n0 = Some(rep.n);
    }
    Ok(InclusionScan { reports, n0 })
}

/// `[(1/n) log ψ_n(z), (1/n)(log d_n + log ψ_n(z))]`, which contains `(1/n) log Φ_n(z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiBracket {
    pub lo: f64,
    pub hi: f64,
}

impl PhiBracket {
    /// `lo − δ ≤ v ≤ hi + δ`.
    pub fn contains(&self, v: f64, delta: f64) -> bool {
        v >= self.lo - delta && v <= self.hi + delta
    }
}

pub fn phi_bracket(fs: &FeketeSet, z: &[Complex64]) -> Result<PhiBracket> {
    if fs.n == 0 {
        return Err(Error::Domain("the bracket needs n >= 1".into()));
    }
    let n = fs.n as f64;
    let lp = fs.psi_n(z).ln();
    Ok(PhiBracket {
        lo: lp / n,
        hi: ((fs.d_n() as f64).ln() + lp) / n,
    })
}
