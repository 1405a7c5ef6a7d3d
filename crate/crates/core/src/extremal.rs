//! Green functions of planar compacta and the product-set extremal function
//! `V_{P,K}(z) = φ_P(V_{E₁}(z₁), …, V_{E_d}(z_d))`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::convex_body::{parse_f64, split_top_level, ConvexBody, MAX_DIM};
use crate::error::{Error, Result};

pub type ComplexVector = Vec<Complex64>;

/// Square root `w` of `z² − 1` on the branch with `|z + w| ≥ 1`.
pub fn joukowski_root(z: Complex64) -> Complex64 {
    let w = (z * z - 1.0).sqrt();
    if (z + w).norm_sqr() >= (z - w).norm_sqr() {
        w
    } else {
        -w
    }
}

/// `log|z + √(z² − 1)|`, the Green function of `[−1, 1]` with pole at infinity.
pub fn green_interval(z: Complex64) -> f64 {
    if z.im == 0.0 && z.re.abs() <= 1.0 {
        return 0.0;
    }
    (z + joukowski_root(z)).norm().ln().max(0.0)
}

fn distance_to_segment(z: Complex64) -> f64 {
    if z.re.abs() <= 1.0 {
        z.im.abs()
    } else {
        (z - Complex64::new(z.re.signum(), 0.0)).norm()
    }
}

/// Real gradient `(∂/∂x, ∂/∂y)` of [`green_interval`] at `z = x + iy`.
pub fn green_gradient(z: Complex64) -> Result<[f64; 2]> {
    if distance_to_segment(z) <= 1e-12 {
        return Err(Error::Singular(format!(
            "green gradient is singular on [-1,1] (z = {z})"
        )));
    }
    let g = joukowski_root(z).inv();
    Ok([g.re, -g.im])
}

/// A nonpolar compact subset of ℂ with an explicit Green function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum UnivariateSet {
    Interval { a: f64, b: f64 },
    Disk { center: (f64, f64), radius: f64 },
}

impl UnivariateSet {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("degenerate interval [{a}, {b}]")));
        }
        Ok(UnivariateSet::Interval { a, b })
    }

    pub fn disk(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("disk radius must be positive, got {radius}")));
        }
        Ok(UnivariateSet::Disk {
            center: (center.re, center.im),
            radius,
        })
    }

    pub fn unit_interval() -> Self {
        UnivariateSet::Interval { a: -1.0, b: 1.0 }
    }

    /// Affine image of `z` in the normalized frame (`[−1,1]` or the unit disk).
    pub fn normalize(&self, z: Complex64) -> Complex64 {
        match *self {
            UnivariateSet::Interval { a, b } => (2.0 * z - (a + b)) / (b - a),
            UnivariateSet::Disk { center, radius } => {
                (z - Complex64::new(center.0, center.1)) / radius
            }
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        match *self {
            UnivariateSet::Interval { a, b } => z.im == 0.0 && z.re >= a && z.re <= b,
            UnivariateSet::Disk { center, radius } => {
                (z - Complex64::new(center.0, center.1)).norm() <= radius
            }
        }
    }

    /// `V_E(z)`, zero exactly on `E`.
    pub fn green(&self, z: Complex64) -> f64 {
        match self {
            UnivariateSet::Interval { .. } => green_interval(self.normalize(z)),
            UnivariateSet::Disk { .. } => self.normalize(z).norm().ln().max(0.0),
        }
    }

    /// Holomorphic derivative `d/dz log h(z)` of the complex Green function
    /// (`V_E = log|h|` off `E`).
    pub fn green_log_derivative(&self, z: Complex64) -> Complex64 {
        match *self {
            UnivariateSet::Interval { a, b } => {
                let t = self.normalize(z);
                Complex64::new(2.0 / (b - a), 0.0) / joukowski_root(t)
            }
            UnivariateSet::Disk { center, .. } => (z - Complex64::new(center.0, center.1)).inv(),
        }
    }
}

/// Green function of a single factor.
pub fn green_univariate(set: &UnivariateSet, z: Complex64) -> f64 {
    set.green(z)
}

/// `K = E₁ × ⋯ × E_d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSet {
    pub factors: Vec<UnivariateSet>,
}

impl ProductSet {
    pub fn new(factors: Vec<UnivariateSet>) -> Result<Self> {
        if factors.is_empty() || factors.len() > MAX_DIM {
            return Err(Error::Domain(format!(
                "product set needs 1..={MAX_DIM} factors, got {}",
                factors.len()
            )));
        }
        Ok(ProductSet { factors })
    }

    /// `[−1, 1]^d`.
    pub fn cube(dim: usize) -> Result<Self> {
        Self::new(vec![UnivariateSet::unit_interval(); dim])
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn is_standard_cube(&self) -> bool {
        self.factors
            .iter()
            .all(|f| *f == UnivariateSet::unit_interval())
    }

    pub fn is_real(&self) -> bool {
        self.factors
            .iter()
            .all(|f| matches!(f, UnivariateSet::Interval { .. }))
    }

    pub fn contains(&self, z: &[Complex64]) -> bool {
        z.len() == self.dim() && self.factors.iter().zip(z).all(|(f, zj)| f.contains(*zj))
    }
}

impl FromStr for ProductSet {
    type Err = Error;

    /// `cube:d=<int>` or `prod:interval(a,b);disk(re,im,r);...`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("cube:") {
            let d = rest
                .trim()
                .strip_prefix("d=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| Error::Parse(format!("expected cube:d=<int>, got `{s}`")))?;
            return ProductSet::cube(d);
        }
        let rest = s
            .strip_prefix("prod:")
            .ok_or_else(|| Error::Parse(format!("unknown set spec `{s}`")))?;
        let mut factors = Vec::new();
        for f in split_top_level(rest, ';') {
            let (kind, args) = f
                .split_once('(')
                .and_then(|(k, a)| a.strip_suffix(')').map(|a| (k.trim(), a)))
                .ok_or_else(|| Error::Parse(format!("bad factor `{f}`")))?;
            let nums: Vec<f64> = args.split(',').map(parse_f64).collect::<Result<_>>()?;
            factors.push(match (kind, nums.as_slice()) {
                ("interval", [a, b]) => UnivariateSet::interval(*a, *b)?,
                ("disk", [re, im, r]) => UnivariateSet::disk(Complex64::new(*re, *im), *r)?,
                _ => return Err(Error::Parse(format!("bad factor `{f}`"))),
            });
        }
        ProductSet::new(factors)
    }
}

impl fmt::Display for ProductSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_standard_cube() {
            return write!(f, "cube:d={}", self.dim());
        }
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|u| match u {
                UnivariateSet::Interval { a, b } => format!("interval({a},{b})"),
                UnivariateSet::Disk { center, radius } => {
                    format!("disk({},{},{radius})", center.0, center.1)
                }
            })
            .collect();
        write!(f, "prod:{}", parts.join(";"))
    }
}

/// `V_{P,K}(z)` together with the factor Green values it was composed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremalValue {
    pub value: f64,
    pub per_factor: Vec<f64>,
}

/// The extremal function of a lower-set body on a product set, validated once.
#[derive(Debug, Clone)]
pub struct ProductExtremal {
    body: ConvexBody,
    set: ProductSet,
}

impl ProductExtremal {
    pub fn new(body: &ConvexBody, set: &ProductSet) -> Result<Self> {
        if body.dim() != set.dim() {
            return Err(Error::DimensionMismatch {
                expected: body.dim(),
                got: set.dim(),
            });
        }
        body.check_lower_set()?;
        Ok(ProductExtremal {
            body: body.clone(),
            set: set.clone(),
        })
    }

    pub fn body(&self) -> &ConvexBody {
        &self.body
    }

    pub fn set(&self) -> &ProductSet {
        &self.set
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    fn check(&self, z: &[Complex64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<ExtremalValue> {
        self.check(z)?;
        let per_factor: Vec<f64> = self
            .set
            .factors
            .iter()
            .zip(z)
            .map(|(f, zj)| f.green(*zj))
            .collect();
        let value = self.body.support_value(&per_factor)?;
        Ok(ExtremalValue { value, per_factor })
    }

    /// Allocation-free `V_{P,K}(z)`; `z` must have the right length.
    pub fn value(&self, z: &[Complex64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim());
        let mut greens = [0.0; MAX_DIM];
        for (g, (f, zj)) in greens.iter_mut().zip(self.set.factors.iter().zip(z)) {
            *g = f.green(*zj);
        }
        self.body.support_unchecked(&greens[..self.dim()])
    }

    /// `z ∈ Ω_R = {V_{P,K} < log R}`.
    pub fn sublevel_member(&self, z: &[Complex64], r: f64) -> Result<bool> {
        if !(r > 1.0) {
            return Err(Error::Domain(format!("sublevel radius must exceed 1, got {r}")));
        }
        Ok(self.eval(z)?.value < r.ln())
    }
}

/// One-shot `V_{P,K}(z)`.
pub fn v_p_product(body: &ConvexBody, set: &ProductSet, z: &[Complex64]) -> Result<ExtremalValue> {
    ProductExtremal::new(body, set)?.eval(z)
}

/// One-shot sublevel membership test.
pub fn sublevel_member(body: &ConvexBody, set: &ProductSet, z: &[Complex64], r: f64) -> Result<bool> {
    ProductExtremal::new(body, set)?.sublevel_member(z, r)
}

/// `H_P(z) = sup_{J ∈ P} log|z^J|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HpValue {
    pub value: f64,
    /// Some `|z_j| < 1`: the value came from direct maximization of the linear
    /// form rather than from the dual norm of a nonnegative vector.
    pub direct_max: bool,
}

pub fn h_p(body: &ConvexBody, z: &[Complex64]) -> Result<HpValue> {
    let logs: Vec<f64> = z
        .iter()
        .map(|zj| {
            let m = zj.norm();
            if m == 0.0 {
                f64::NEG_INFINITY
            } else {
                m.ln()
            }
        })
        .collect();
    if logs.iter().all(|l| *l >= 0.0) {
        return Ok(HpValue {
            value: body.support_value(&logs)?,
            direct_max: false,
        });
    }
    Ok(HpValue {
        value: body.linear_sup(&logs)?,
        direct_max: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_interval_examples() {
        assert_eq!(green_interval(c(0.5, 0.0)), 0.0);
        assert_eq!(green_interval(c(-1.0, 0.0)), 0.0);
        for r in [0.1, 0.5, 1.0, 3.0] {
            assert_relative_eq!(
                green_interval(c(0.0, r)),
                (r + (r * r + 1.0).sqrt()).ln(),
                epsilon = 1e-14
            );
        }
        let v = green_interval(c(2.0, 0.0));
        assert_relative_eq!(v, (2.0 + 3f64.sqrt()).ln(), epsilon = 1e-14);
        // semi-major axis of the level ellipse through 2 is 2
        let rho = v.exp();
        assert_relative_eq!((rho + 1.0 / rho) / 2.0, 2.0, epsilon = 1e-14);
        assert_relative_eq!(green_interval(c(-2.0, 0.0)), v, epsilon = 1e-14);
    }

    #[test]
    fn level_sets_are_ellipses() {
        let rho: f64 = 1.7;
        let (a, b) = ((rho + 1.0 / rho) / 2.0, (rho - 1.0 / rho) / 2.0);
        for k in 0..32 {
            let t = k as f64 * std::f64::consts::TAU / 32.0;
            assert_relative_eq!(green_interval(c(a * t.cos(), b * t.sin())), rho.ln(), epsilon = 1e-12);
        }
    }

    #[test]
    fn univariate_examples() {
        let i = UnivariateSet::unit_interval();
        assert_eq!(green_univariate(&i, c(0.3, 0.0)), 0.0);
        let d = UnivariateSet::disk(c(0.0, 0.0), 1.0).unwrap();
        assert_relative_eq!(green_univariate(&d, c(2.0, 0.0)), 2f64.ln());
        assert_eq!(green_univariate(&d, c(0.3, 0.4)), 0.0);
        let shifted = UnivariateSet::interval(0.0, 2.0).unwrap();
        let r: f64 = 0.7;
        assert_relative_eq!(
            green_univariate(&shifted, c(1.0, r)),
            (r + (r * r + 1.0).sqrt()).ln(),
            epsilon = 1e-14
        );
        assert!(UnivariateSet::interval(1.0, 1.0).is_err());
        assert!(UnivariateSet::disk(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = green_gradient(c(2.0, 0.0)).unwrap();
        assert_relative_eq!(g[0], 1.0 / 3f64.sqrt(), epsilon = 1e-14);
        assert_eq!(g[1], 0.0);
        let r: f64 = 1.3;
        let g = green_gradient(c(0.0, r)).unwrap();
        assert!(g[0].abs() < 1e-15);
        assert_relative_eq!(g[1], 1.0 / (r * r + 1.0).sqrt(), epsilon = 1e-14);
        assert!(green_gradient(c(0.2, 0.0)).is_err());
        let z = c(0.4, 0.9);
        let (g, gc) = (green_gradient(z).unwrap(), green_gradient(z.conj()).unwrap());
        assert_relative_eq!(g[0], gc[0], epsilon = 1e-14);
        assert_relative_eq!(g[1], -gc[1], epsilon = 1e-14);
    }

    #[test]
    fn product_examples() {
        let k = ProductSet::cube(2).unwrap();
        let p2 = ConvexBody::lq(2.0, 2).unwrap();
        let p1 = ConvexBody::simplex(2).unwrap();
        let v = v_p_product(&p2, &k, &[c(0.2, 0.0), c(-0.9, 0.0)]).unwrap();
        assert_eq!(v.value, 0.0);
        let r: f64 = 1.5;
        let s = r / 2f64.sqrt();
        let z = [c(0.0, s), c(0.0, s)];
        let level = (s + (r * r / 2.0 + 1.0).sqrt()).ln();
        assert_relative_eq!(v_p_product(&p2, &k, &z).unwrap().value, 2f64.sqrt() * level, epsilon = 1e-14);
        assert_relative_eq!(v_p_product(&p1, &k, &z).unwrap().value, level, epsilon = 1e-14);
        assert!(matches!(
            v_p_product(&p2, &ProductSet::cube(3).unwrap(), &z),
            Err(Error::DimensionMismatch { .. })
        ));
        let skew = ConvexBody::polytope(
            2,
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 2.0], vec![0.0, 0.5]],
        )
        .unwrap();
        assert!(matches!(v_p_product(&skew, &k, &z), Err(Error::NotLowerSet { .. })));
    }

    #[test]
    fn h_p_examples() {
        let p2 = ConvexBody::lq(2.0, 2).unwrap();
        let torus = [Complex64::from_polar(1.0, 0.3), Complex64::from_polar(1.0, 2.0)];
        assert!(h_p(&p2, &torus).unwrap().value.abs() < 1e-15);
        let s = ConvexBody::simplex(2).unwrap();
        assert_relative_eq!(h_p(&s, &[c(2.0, 0.0), c(1.0, 0.0)]).unwrap().value, 2f64.ln());
        let e = std::f64::consts::E;
        assert_relative_eq!(h_p(&p2, &[c(e, 0.0), c(e, 0.0)]).unwrap().value, 2f64.sqrt(), epsilon = 1e-14);
        let inside = h_p(&s, &[c(3.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(inside.direct_max);
        assert_relative_eq!(inside.value, 3f64.ln());
    }

    #[test]
    fn sublevel_examples() {
        let k = ProductSet::cube(2).unwrap();
        let p1 = ConvexBody::simplex(2).unwrap();
        let z = [c(0.0, 1.0), c(0.0, 0.0)];
        assert!(sublevel_member(&p1, &k, &[c(0.1, 0.0), c(1.0, 0.0)], 1.01).unwrap());
        // V = log(1 + √2) exactly; the level set itself is excluded
        let v = v_p_product(&p1, &k, &z).unwrap().value;
        assert_relative_eq!(v, (1.0 + 2f64.sqrt()).ln(), epsilon = 1e-15);
        assert!(!sublevel_member(&p1, &k, &z, v.exp()).unwrap());
        assert!(sublevel_member(&p1, &k, &z, 2.5).unwrap());
        assert!(sublevel_member(&p1, &k, &z, 1.0).is_err());
    }

    #[test]
    fn set_parsing() {
        let k: ProductSet = "cube:d=3".parse().unwrap();
        assert_eq!(k, ProductSet::cube(3).unwrap());
        let m: ProductSet = "prod:interval(0,2);disk(0,0,1)".parse().unwrap();
        assert_eq!(m.dim(), 2);
        assert!(!m.is_real());
        assert_eq!(m.to_string().parse::<ProductSet>().unwrap(), m);
        assert!("prod:interval(1,0)".parse::<ProductSet>().is_err());
    }
}
