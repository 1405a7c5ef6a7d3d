//! Brute-force facet enumeration and exact volumes for small vertex polytopes.

/// Outward facet `normal · y ≤ offset` with unit normal.
#[derive(Debug, Clone)]
pub(crate) struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            d = -d;
        }
        d *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    d
}

/// Normal to the hyperplane spanned by `d - 1` difference vectors in ℝ^d.
fn cross(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    (0..d)
        .map(|k| {
            let minor: Vec<Vec<f64>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != k)
                        .map(|(_, v)| *v)
                        .collect()
                })
                .collect();
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            s * det(minor)
        })
        .collect()
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn tolerance(points: &[Vec<f64>]) -> f64 {
    let scale = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    1e-9 * (1.0 + scale)
}

/// Affine rank of a point cloud.
pub(crate) fn affine_rank(points: &[Vec<f64>]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let tol = tolerance(points);
    let mut rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    let d = points[0].len();
    let mut rank = 0;
    for c in 0..d {
        let Some(p) = (rank..rows.len())
            .filter(|&r| rows[r][c].abs() > tol)
            .max_by(|&a, &b| rows[a][c].abs().total_cmp(&rows[b][c].abs()))
        else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank {
                let f = rows[r][c] / rows[rank][c];
                for k in 0..d {
                    rows[r][k] -= f * rows[rank][k];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// All facets of the hull of `points` (which must be full-dimensional in ℝ^d, d ≥ 2).
pub(crate) fn facets(points: &[Vec<f64>]) -> Vec<Facet> {
    let d = points[0].len();
    let tol = tolerance(points);
    let mut out: Vec<Facet> = Vec::new();
    combinations(points.len(), d, |sel| {
        let p0 = &points[sel[0]];
        let rows: Vec<Vec<f64>> = sel[1..]
            .iter()
            .map(|&i| points[i].iter().zip(p0).map(|(a, b)| a - b).collect())
            .collect();
        let mut n = cross(&rows, d);
        let norm = dot(&n, &n).sqrt();
        if norm <= tol {
            return;
        }
        n.iter_mut().for_each(|v| *v /= norm);
        let mut b = dot(&n, p0);
        let (mut above, mut below) = (false, false);
        for p in points {
            let s = dot(&n, p) - b;
            if s > tol {
                above = true;
            } else if s < -tol {
                below = true;
            }
        }
        if above && below {
            return;
        }
        if above {
            n.iter_mut().for_each(|v| *v = -*v);
            b = -b;
        }
        let dup = out.iter().any(|f| {
            (f.offset - b).abs() <= tol
                && f.normal.iter().zip(&n).all(|(x, y)| (x - y).abs() <= 1e-9)
        });
        if !dup {
            out.push(Facet {
                normal: n,
                offset: b,
            });
        }
    });
    out
}

/// Exact d-volume of the convex hull of `points` in ℝ^d.
pub(crate) fn volume(points: &[Vec<f64>]) -> f64 {
    let d = points[0].len();
    if d == 1 {
        let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
        return hi - lo;
    }
    if affine_rank(points) < d {
        return 0.0;
    }
    let tol = tolerance(points);
    let centre: Vec<f64> = (0..d)
        .map(|k| points.iter().map(|p| p[k]).sum::<f64>() / points.len() as f64)
        .collect();
    facets(points)
        .iter()
        .map(|f| {
            let on: Vec<&Vec<f64>> = points
                .iter()
                .filter(|p| (dot(&f.normal, p) - f.offset).abs() <= tol)
                .collect();
            let height = f.offset - dot(&f.normal, &centre);
            let basis = hyperplane_basis(&f.normal);
            let projected: Vec<Vec<f64>> = on
                .iter()
                .map(|p| basis.iter().map(|e| dot(e, p)).collect())
                .collect();
            height * volume(&projected) / d as f64
        })
        .sum()
}

/// Orthonormal basis of the hyperplane orthogonal to the unit vector `n`.
fn hyperplane_basis(n: &[f64]) -> Vec<Vec<f64>> {
    let d = n.len();
    let mut basis: Vec<Vec<f64>> = vec![n.to_vec()];
    for k in 0..d {
        let mut v = vec![0.0; d];
        v[k] = 1.0;
        for b in &basis {
            let c = dot(&v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}
