use std::f64::consts::PI;
use std::path::PathBuf;

use proptest::prelude::*;
use quadcert::certificate::compute_terms;
use quadcert::linalg::{inf_norm_induced, DenseMatrix};
use quadcert::powerflow::{
    build_model, epfl_system, injection_params, kappa, kappa_prime, picard_solve, read_case, zeta,
    PowerFlowModel,
};
use quadcert::quadform::make_nominal;
use quadcert::scan::{direction_scan, random_directions, rotation_scan, write_csv};
use quadcert::C;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn model(name: &str) -> PowerFlowModel<f64> {
    build_model(&read_case(data(name)).unwrap()).unwrap()
}

const CASES: [&str; 2] = ["case2.m", "case18.m"];

/// Exact loadability of a slack bus (V0 = 1) feeding one bus over a lossless
/// line of reactance `x`, along the injection direction `e^{i phi}`.
///
/// With `V = a + ib`, the flow equations reduce to `b = x P` and
/// `a^2 - a + x^2 P^2 - x Q = 0`, solvable iff `1 + 4 x Q - 4 x^2 P^2 >= 0`.
/// Along `t e^{i phi}` this is a quadratic inequality in `t`.
fn two_bus_limit(x: f64, phi: f64) -> f64 {
    let (p, q) = (phi.cos(), phi.sin());
    let a = 4.0 * x * x * p * p;
    let b = -4.0 * x * q;
    if a < 1e-15 {
        return if b > 0.0 { 1.0 / b } else { f64::INFINITY };
    }
    (-b + (b * b + 4.0 * a).sqrt()) / (2.0 * a)
}

#[test]
fn two_bus_certificate_against_exact_loadability() {
    let m = model("case2.m");
    for k in 0..64 {
        let phi = 2.0 * PI * k as f64 / 64.0;
        let dir = C::from_polar(1.0, phi);
        let t_cert = 1.0 / kappa(&m, &[dir]).unwrap();
        let t_true = two_bus_limit(0.1, phi);
        assert!((t_cert - 2.5).abs() < 1e-12);
        assert!(
            t_cert <= t_true * (1.0 + 1e-12),
            "phi {phi}: {t_cert} > {t_true}"
        );
        if t_true.is_finite() {
            let inside = picard_solve(&m, &[dir * (0.9 * t_true)], 1e-10, 2000).unwrap();
            assert!(
                inside.converged(),
                "phi {phi}: no convergence at 0.9 of the limit"
            );
            let beyond = picard_solve(&m, &[dir * (1.05 * t_true)], 1e-10, 2000).unwrap();
            assert!(!beyond.converged(), "phi {phi}: converged past the limit");
        }
    }
    // the certificate is exact for reactive consumption
    assert!((two_bus_limit(0.1, -PI / 2.0) - 2.5).abs() < 1e-12);
    assert!((two_bus_limit(0.1, 0.0) - 5.0).abs() < 1e-12);
}

#[test]
fn model_consistency_on_bundled_cases() {
    for name in CASES {
        let m = model(name);
        let n = m.n();
        let yz = m.y().mul_mat(m.z()).unwrap();
        assert!(
            yz.sub(&DenseMatrix::identity(n)).unwrap().max_abs() < 1e-8,
            "{name}: Y Z != I"
        );
        let mut r = m.y().mul_vec(m.w()).unwrap();
        for (a, &b) in r.iter_mut().zip(m.y0()) {
            *a += b * m.v0();
        }
        assert!(
            r.iter().all(|z| z.norm() < 1e-10),
            "{name}: Y w + Y0 V0 != 0"
        );
        assert!(m.w().iter().all(|z| z.norm() > 0.0));
    }
    let m18 = model("case18.m");
    assert_eq!(m18.n(), 17);
    assert_eq!(m18.slack_id(), 51);
    assert!((m18.v0() - C::new(1.05, 0.0)).norm() < 1e-15);
    let summary = m18.summary();
    assert!(summary.min_abs_w > 1.0 && summary.z_inf_norm > 0.0);
}

#[test]
fn kappa_is_dominated_by_the_prior_condition() {
    for name in CASES {
        let m = model(name);
        for d in random_directions::<f64>(m.n(), 1000, 5) {
            let (k, kp) = (
                kappa(&m, &d.s_hat).unwrap(),
                kappa_prime(&m, &d.s_hat).unwrap(),
            );
            assert!(
                k <= kp * (1.0 + 1e-14),
                "{name} direction {}: {k} > {kp}",
                d.id
            );
        }
    }
}

#[test]
fn picard_converges_inside_the_certified_region() {
    for name in CASES {
        let m = model(name);
        for d in random_directions::<f64>(m.n(), 200, 17) {
            let t = 1.0 / kappa(&m, &d.s_hat).unwrap();
            let s: Vec<C<f64>> = d.s_hat.iter().map(|z| z * (0.99 * t)).collect();
            let out = picard_solve(&m, &s, 1e-10, 200).unwrap();
            let v = out
                .voltage()
                .unwrap_or_else(|| panic!("{name} direction {} diverged", d.id));
            let mismatch = m
                .injections(v)
                .unwrap()
                .iter()
                .zip(&s)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(
                mismatch < 1e-8,
                "{name} direction {}: mismatch {mismatch}",
                d.id
            );
        }
    }
}

#[test]
fn general_certificate_reproduces_the_kappa_terms() {
    // At gamma = 1, u = 0 the Jacobian is the identity, so e and h of the
    // quadratic-system certificate are |zeta 1| and |zeta| exactly.
    let m = model("case18.m");
    let (sys, g, u0) = epfl_system(&m);
    let nominal = make_nominal(&sys, &g, &u0).unwrap();
    for d in random_directions::<f64>(m.n(), 20, 3) {
        let s: Vec<C<f64>> = d.s_hat.iter().map(|z| z * 0.3).collect();
        let terms = compute_terms(&nominal, &sys, &injection_params(&s)).unwrap();
        let z = zeta(&m, &s).unwrap();
        let a = (0..z.rows())
            .map(|i| z.row(i).iter().sum::<C<f64>>().norm())
            .fold(0.0, f64::max);
        let b = inf_norm_induced(&z);
        assert!((terms.e - a).abs() < 1e-12 * a.max(1.0));
        assert!((terms.h - b).abs() < 1e-12 * b.max(1.0));
        let k = 2.0 * terms.e + 2.0 * (terms.e * terms.h).sqrt();
        assert!((k - kappa(&m, &s).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn scan_csv_is_byte_reproducible() {
    let m = model("case18.m");
    let render = || {
        let recs = direction_scan(&m, &random_directions(m.n(), 300, 42)).unwrap();
        let mut buf = Vec::new();
        write_csv(&recs, &mut buf).unwrap();
        buf
    };
    let a = render();
    assert_eq!(a, render());
    let threads =
        quadcert::scan::direction_scan_with_threads(&m, &random_directions(m.n(), 300, 42), 1)
            .unwrap();
    let mut b = Vec::new();
    write_csv(&threads, &mut b).unwrap();
    assert_eq!(a, b);
}

#[test]
fn rotation_row_zero_matches_direction_scan() {
    let m = model("case18.m");
    let d = random_directions::<f64>(m.n(), 1, 42);
    let rec = &direction_scan(&m, &d).unwrap()[0];
    let rows = rotation_scan(&m, &d[0].s_hat, 16).unwrap();
    assert_eq!(rows[0].t_cert, rec.t_cert);
    assert_eq!(rows[0].t_prior, rec.t_prior);
    for r in &rows {
        assert!((r.t_cert - rec.t_cert).abs() <= 1e-12 * rec.t_cert);
        assert!((r.t_prior - rec.t_prior).abs() <= 1e-12 * rec.t_prior);
    }
}

#[test]
fn single_precision_model_agrees() {
    let case = read_case(data("case18.m")).unwrap();
    let m64: PowerFlowModel<f64> = build_model(&case).unwrap();
    let m32: PowerFlowModel<f32> = build_model(&case).unwrap();
    let d64 = &random_directions::<f64>(m64.n(), 1, 9)[0];
    let d32 = &random_directions::<f32>(m32.n(), 1, 9)[0];
    let (k64, k32) = (
        kappa(&m64, &d64.s_hat).unwrap(),
        kappa(&m32, &d32.s_hat).unwrap(),
    );
    assert!((k64 - k32 as f64).abs() < 1e-4 * k64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kappa_is_phase_invariant_and_homogeneous(seed in any::<u64>(), t in 0.01f64..50.0) {
        let m = model("case18.m");
        let d = &random_directions::<f64>(m.n(), 1, seed)[0];
        let (k, kp) = (kappa(&m, &d.s_hat).unwrap(), kappa_prime(&m, &d.s_hat).unwrap());
        for j in 0..16 {
            let phase = C::from_polar(1.0, 2.0 * PI * j as f64 / 16.0);
            let s: Vec<C<f64>> = d.s_hat.iter().map(|z| z * phase).collect();
            prop_assert!((kappa(&m, &s).unwrap() - k).abs() <= 1e-12 * k);
            prop_assert!((kappa_prime(&m, &s).unwrap() - kp).abs() <= 1e-12 * kp);
        }
        let scaled: Vec<C<f64>> = d.s_hat.iter().map(|z| z * t).collect();
        prop_assert!((kappa(&m, &scaled).unwrap() - t * k).abs() <= 1e-12 * t * k);
        prop_assert!((kappa_prime(&m, &scaled).unwrap() - t * kp).abs() <= 1e-12 * t * kp);
    }

    #[test]
    fn zeta_is_conjugate_linear(seed in any::<u64>(), c in -3.0f64..3.0) {
        let m = model("case18.m");
        let d = &random_directions::<f64>(m.n(), 1, seed)[0];
        let z1 = zeta(&m, &d.s_hat).unwrap();
        let scaled: Vec<C<f64>> = d.s_hat.iter().map(|z| z * c).collect();
        let z2 = zeta(&m, &scaled).unwrap();
        prop_assert!(z2.sub(&z1.scale(C::new(c, 0.0))).unwrap().max_abs() <= 1e-14 * z1.max_abs().max(1.0));
    }
}
