use num_complex::Complex64;
use polybody::fekete::{approx_fekete, build_mesh, dr_inclusion_scan, phi_bracket, psi_n};
use polybody::{ComplexVector, ConvexBody, ProductExtremal, ProductSet};
use rand::{Rng, SeedableRng};

fn polydisk_samples(count: usize, radius: f64, seed: u64) -> Vec<ComplexVector> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..2)
                .map(|_| Complex64::from_polar(radius * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU)))
                .collect()
        })
        .collect()
}

#[test]
fn growth_bound_off_k() {
    let k = ProductSet::cube(2).unwrap();
    let mesh = build_mesh(&k, 60).unwrap();
    let samples = polydisk_samples(100, 2.0, 11);
    for body in [ConvexBody::simplex(2).unwrap(), ConvexBody::lq(2.0, 2).unwrap(), ConvexBody::cube(2).unwrap()] {
        let n = 8;
        let fs = approx_fekete(&mesh, &body, &k, n).unwrap();
        let ext = ProductExtremal::new(&body, &k).unwrap();
        for z in &samples {
            let lhs = psi_n(&fs, z).powf(1.0 / n as f64);
            assert!(lhs <= ext.value(z).exp() * 1.05, "{body:?} {z:?}");
        }
    }
}

#[test]
fn psi_bound_at_imaginary_point() {
    let k = ProductSet::cube(2).unwrap();
    let mesh = build_mesh(&k, 40).unwrap();
    let body = ConvexBody::simplex(2).unwrap();
    let fs = approx_fekete(&mesh, &body, &k, 6).unwrap();
    let z = [Complex64::new(0.0, 2.0), Complex64::new(0.0, 0.0)];
    let v = ProductExtremal::new(&body, &k).unwrap().value(&z);
    assert!(psi_n(&fs, &z) <= (6.0 * v).exp());
}

#[test]
fn phi_bracket_contains_extremal_value() {
    let k = ProductSet::cube(2).unwrap();
    let mesh = build_mesh(&k, 60).unwrap();
    let body = ConvexBody::simplex(2).unwrap();
    let fs = approx_fekete(&mesh, &body, &k, 10).unwrap();
    let ext = ProductExtremal::new(&body, &k).unwrap();
    for z in polydisk_samples(100, 2.0, 5) {
        let b = phi_bracket(&fs, &z).unwrap();
        assert!(b.contains(ext.value(&z), 0.1), "{z:?}: {b:?} vs {}", ext.value(&z));
    }
}

#[test]
fn inclusion_violations_vanish() {
    let k = ProductSet::cube(2).unwrap();
    let mesh = build_mesh(&k, 50).unwrap();
    let samples = polydisk_samples(200, 2.0, 8);
    let ns: Vec<usize> = (1..=10).collect();
    let scan = dr_inclusion_scan(&mesh, &ConvexBody::simplex(2).unwrap(), &k, &ns, 1.5, 2.0, &samples).unwrap();
    assert!(scan.n0.is_some(), "{:?}", scan.reports.iter().map(|r| r.violations.len()).collect::<Vec<_>>());
    // points of K are never violations
    let fs = approx_fekete(&mesh, &ConvexBody::simplex(2).unwrap(), &k, 3).unwrap();
    let on_k: Vec<ComplexVector> = mesh.points.iter().step_by(7).cloned().collect();
    let rep = polybody::fekete::dr_inclusion_check(&fs, 1.5, 2.0, &on_k).unwrap();
    assert!(rep.violations.is_empty());
}

#[test]
fn refinement_never_lowers_the_determinant() {
    let k = ProductSet::cube(2).unwrap();
    for res in [12usize, 20, 33] {
        let mesh = build_mesh(&k, res).unwrap();
        for n in 1..=4 {
            let fs = approx_fekete(&mesh, &ConvexBody::lq(2.0, 2).unwrap(), &k, n).unwrap();
            assert!(fs.vdm_log_abs >= fs.greedy_vdm_log_abs - 1e-10);
            if fs.swaps_performed > 0 {
                assert!(fs.vdm_log_abs > fs.greedy_vdm_log_abs);
            }
            assert!(fs.max_psi_on_mesh <= 1.0 + 1e-8);
        }
    }
}

#[test]
fn three_dimensional_extraction() {
    let k = ProductSet::cube(3).unwrap();
    let mesh = build_mesh(&k, 12).unwrap();
    let fs = approx_fekete(&mesh, &ConvexBody::simplex(3).unwrap(), &k, 4).unwrap();
    assert_eq!(fs.d_n(), 35);
    assert!(fs.kronecker_residual < 1e-8);
    assert!(fs.max_psi_on_mesh <= 1.0 + 1e-8);
}
