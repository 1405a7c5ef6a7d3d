use polybody::ConvexBody;
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn q_strategy() -> impl Strategy<Value = f64> {
    prop_oneof![Just(1.0), Just(f64::INFINITY), 1.0f64..8.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn homogeneity(q in q_strategy(), x in prop::collection::vec(0.0f64..5.0, 3), t in 0.0f64..10.0) {
        let body = ConvexBody::lq(q, 3).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let a = body.minkowski_degree_norm(&tx).unwrap();
        let b = t * body.minkowski_degree_norm(&x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn scaling(q in q_strategy(), x in prop::collection::vec(0.0f64..5.0, 2), c in 0.2f64..5.0) {
        let body = ConvexBody::lq(q, 2).unwrap();
        let scaled = body.scaled(c).unwrap();
        let a = scaled.minkowski_degree_norm(&x).unwrap();
        let b = body.minkowski_degree_norm(&x).unwrap() / c;
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        let s = scaled.support_value(&x).unwrap();
        prop_assert!((s - c * body.support_value(&x).unwrap()).abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn polytope_gauge_scales(x in prop::collection::vec(0.0f64..3.0, 2), t in 0.0f64..4.0) {
        let body = ConvexBody::polytope(2, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.5]]).unwrap();
        let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
        let a = body.minkowski_degree_norm(&tx).unwrap();
        let b = t * body.minkowski_degree_norm(&x).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
    }

    #[test]
    fn duality_against_boundary_samples(q in 1.05f64..8.0, x in prop::collection::vec(0.0f64..3.0, 2)) {
        let body = ConvexBody::lq(q, 2).unwrap();
        let qp = q / (q - 1.0);
        let exact = (x[0].powf(qp) + x[1].powf(qp)).powf(1.0 / qp);
        let sv = body.support_value(&x).unwrap();
        prop_assert!((sv - exact).abs() <= 1e-9 * exact.max(1e-300));
        // sup over 10^4 boundary points never beats the support value
        let mut brute = 0.0_f64;
        for i in 0..10_000 {
            let th = std::f64::consts::FRAC_PI_2 * i as f64 / 9_999.0;
            let (a, b) = (th.cos(), th.sin());
            let s = (a.powf(q) + b.powf(q)).powf(1.0 / q);
            brute = brute.max((a * x[0] + b * x[1]) / s);
        }
        prop_assert!(brute <= sv * (1.0 + 1e-12) + 1e-300);
        prop_assert!(brute >= sv * (1.0 - 1e-4));
    }
}

#[test]
fn ring_closure() {
    let bodies = [
        ConvexBody::simplex(2).unwrap(),
        ConvexBody::lq(2.0, 2).unwrap(),
        ConvexBody::cube(2).unwrap(),
        ConvexBody::polytope(2, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.5]]).unwrap(),
    ];
    for body in &bodies {
        let sets: Vec<_> = (0..=12).map(|n| body.enumerate_index_set(n)).collect();
        for n in 0..=6 {
            for m in 0..=6 {
                for a in &sets[n].indices {
                    for b in &sets[m].indices {
                        assert!(sets[n + m].contains(&[a[0] + b[0], a[1] + b[1]]), "{body:?} {a:?} {b:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn dimension_growth_and_binomial_bound() {
    for (body, vol) in [
        (ConvexBody::simplex(2).unwrap(), 0.5),
        (ConvexBody::lq(2.0, 2).unwrap(), std::f64::consts::FRAC_PI_4),
        (ConvexBody::cube(2).unwrap(), 1.0),
        (ConvexBody::lq(3.0, 2).unwrap(), {
            let g = |x: f64| statrs::function::gamma::gamma(x);
            g(1.0 + 1.0 / 3.0).powi(2) / g(1.0 + 2.0 / 3.0)
        }),
    ] {
        let d64 = body.enumerate_index_set(64).d_n() as f64;
        assert!((d64 / 4096.0 - vol).abs() <= 0.10 * vol, "{body:?}: {}", d64 / 4096.0);
        assert!((body.volume() - vol).abs() < 1e-12);
        let (a, _) = body.containment_constants();
        for n in 0..=30 {
            let dn = body.enumerate_index_set(n).d_n() as f64;
            assert!(dn <= binomial(a as usize * n + 2, 2), "{body:?} n={n}");
        }
    }
    let p3 = ConvexBody::lq(2.0, 3).unwrap();
    let (a, _) = p3.containment_constants();
    for n in 0..=12 {
        let dn = p3.enumerate_index_set(n).d_n() as f64;
        assert!(dn <= binomial(a as usize * n + 3, 3));
    }
}

#[test]
fn brute_force_index_count() {
    // count lattice points of nP₂ by direct test
    for n in 0..=20usize {
        let mut count = 0;
        for i in 0..=n {
            for j in 0..=n {
                if ((i * i + j * j) as f64).sqrt() <= n as f64 * (1.0 + 1e-9) {
                    count += 1;
                }
            }
        }
        assert_eq!(ConvexBody::lq(2.0, 2).unwrap().enumerate_index_set(n).d_n(), count, "n={n}");
    }
}
