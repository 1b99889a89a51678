//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use quadcert::certificate::{boundary_along, certify_in_ball, compute_terms, tightness_bounds};
use quadcert::oracle::{newton_multistart, scalar_quadratic_region};
use quadcert::powerflow::{
    build_model, parse_matpower, picard_solve, read_case, write_matpower, PowerFlowModel,
};
use quadcert::quadform::{make_nominal, make_nominal_block};
use quadcert::scan::{direction_scan, random_directions, rotation_scan, summarize};
use quadcert::testing::{random_system, scalar_demo};
use quadcert::{Error, ParseErrorKind, C};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn case18() -> PowerFlowModel<f64> {
    build_model(&read_case(data("case18.m")).unwrap()).unwrap()
}

type Outcome = Result<String, String>;
type ErrorCheck = fn(&ParseErrorKind) -> bool;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn scalar_exactness() -> Outcome {
    let sys = scalar_demo();
    let nominal = make_nominal(&sys, &[C::new(0.0, 0.0)], &[0.0]).map_err(|e| e.to_string())?;
    let b = boundary_along(&nominal, &sys, &[1.0], 10.0).map_err(|e| e.to_string())?;
    check((b - 0.25).abs() <= 1e-12, format!("boundary = {b:.17}"))
}

fn sandwich() -> Outcome {
    let sys = scalar_demo();
    let nominal = make_nominal(&sys, &[C::new(0.0, 0.0)], &[0.0]).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for kappa in [0.25, 0.5, 0.75] {
        let tb = tightness_bounds(&nominal, &sys, kappa).map_err(|e| e.to_string())?;
        // e(u) = |u| for this system, so the e-thresholds are symmetric u-intervals.
        let inner = (-tb.inner, tb.inner);
        let outer = (-tb.outer, tb.outer);
        let exact = scalar_quadratic_region(&sys, &[0.0], tb.ball_radius)
            .and_then(|r| r.parameter_interval())
            .map_err(|e| e.to_string())?
            .ok_or("empty exact interval")?;
        let nested =
            outer.0 <= exact.0 && exact.0 <= inner.0 && inner.1 <= exact.1 && exact.1 <= outer.1;
        if !nested {
            return Err(format!(
                "kappa {kappa}: inner {inner:?} exact {exact:?} outer {outer:?}"
            ));
        }
        if kappa == 0.5 {
            let want = [(-0.1875, 0.1875), (-0.3125, 0.1875), (-0.3125, 0.3125)];
            for (got, want) in [inner, exact, outer].iter().zip(want) {
                if (got.0 - want.0).abs() > 1e-12 || (got.1 - want.1).abs() > 1e-12 {
                    return Err(format!("kappa 0.5: got {got:?}, want {want:?}"));
                }
            }
        }
        notes.push(format!("k={kappa}: [{:.4},{:.4}]", exact.0, exact.1));
    }
    Ok(notes.join(" "))
}

fn two_bus_loadability() -> Outcome {
    let model: PowerFlowModel<f64> =
        build_model(&read_case(data("case2.m")).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
    let k = quadcert::kappa(&model, &[C::new(1.0, 0.0)]).map_err(|e| e.to_string())?;
    let t = 1.0 / k;
    check((t - 2.5).abs() <= 1e-9, format!("t_cert = {t:.15}"))
}

fn ratio_reproduction() -> Outcome {
    let model = case18();
    let dirs = random_directions(model.n(), 1000, 42);
    let recs = direction_scan(&model, &dirs).map_err(|e| e.to_string())?;
    let s = summarize(&recs);
    check(
        s.valid == 1000 && s.frac_at_least_1 == 1.0 && s.frac_at_least_2 >= 0.5,
        format!(
            "ratio>=1: {:.1}%, ratio>=2: {:.1}%, median {:.3}, range [{:.3}, {:.3}]",
            100.0 * s.frac_at_least_1,
            100.0 * s.frac_at_least_2,
            s.median,
            s.min,
            s.max
        ),
    )
}

fn brouwer_sweep() -> Outcome {
    let model = case18();
    let dirs = random_directions(model.n(), 200, 42);
    let recs = direction_scan(&model, &dirs).map_err(|e| e.to_string())?;
    let mut picard_ok = 0;
    let mut max_iter = 0;
    for (d, r) in dirs.iter().zip(&recs) {
        let s: Vec<C<f64>> = d.s_hat.iter().map(|z| z * (0.99 * r.t_cert)).collect();
        match picard_solve(&model, &s, 1e-10, 200).map_err(|e| e.to_string())? {
            quadcert::powerflow::PicardOutcome::Converged { iterations, .. } => {
                picard_ok += 1;
                max_iter = max_iter.max(iterations);
            }
            quadcert::powerflow::PicardOutcome::Diverged { .. } => {}
        }
    }

    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2024);
    let (mut certified, mut confirmed, mut systems) = (0, 0, 0);
    while systems < 50 {
        let conj = systems % 2 == 1;
        let n = 1 + systems % 2;
        let (sys, x, u_star) = random_system(&mut rng, n, 2, conj);
        let Ok(nominal) = make_nominal(&sys, &x, &u_star) else {
            continue;
        };
        systems += 1;
        for _ in 0..10 {
            let scale = 10f64.powf(rng.random_range(-3.0..-0.5));
            let u: Vec<f64> = u_star
                .iter()
                .map(|v| v + scale * rng.random_range(-1.0..1.0))
                .collect();
            let r = rng.random_range(0.05..1.0);
            let cert = certify_in_ball(&nominal, &sys, &u, r).map_err(|e| e.to_string())?;
            if cert.certified {
                certified += 1;
                let rep =
                    newton_multistart(&sys, &u, &x, r, 5, 1e-10).map_err(|e| e.to_string())?;
                if rep.found {
                    confirmed += 1;
                }
            }
        }
    }
    check(
        picard_ok == 200 && certified == confirmed && certified > 0,
        format!("picard {picard_ok}/200 (max {max_iter} iterations), newton {confirmed}/{certified} certified (u, r)"),
    )
}

fn phase_invariance() -> Outcome {
    let model = case18();
    let d = &random_directions(model.n(), 1, 42)[0];
    let rows = rotation_scan(&model, &d.s_hat, 360).map_err(|e| e.to_string())?;
    let (lo, hi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.t_cert), hi.max(r.t_cert))
    });
    let (plo, phi) = rows.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.t_prior), hi.max(r.t_prior))
    });
    check(
        rows.len() == 360 && hi - lo <= 1e-10 * lo && phi - plo <= 1e-10 * plo,
        format!(
            "t_cert spread {:.2e} rel, t_prior spread {:.2e} rel",
            (hi - lo) / lo,
            (phi - plo) / plo
        ),
    )
}

fn embedding() -> Outcome {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(77);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < 50 {
        let n = 1 + done % 4;
        let (sys, x, u_star) = random_system(&mut rng, n, 2, false);
        let (Ok(direct), Ok(block)) = (
            make_nominal(&sys, &x, &u_star),
            make_nominal_block(&sys, &x, &u_star),
        ) else {
            continue;
        };
        done += 1;
        for _ in 0..4 {
            let u: Vec<f64> = u_star
                .iter()
                .map(|v| v + rng.random_range(-0.5..0.5))
                .collect();
            let a = compute_terms(&direct, &sys, &u).map_err(|e| e.to_string())?;
            let b = compute_terms(&block, &sys, &u).map_err(|e| e.to_string())?;
            worst = worst
                .max((a.e - b.e).abs())
                .max((a.g - b.g).abs())
                .max((a.h - b.h).abs());
        }
    }
    check(
        worst <= 1e-10,
        format!("max |diff| over e, g, h = {worst:.2e}"),
    )
}

fn parser_corpus() -> Outcome {
    for name in ["case2.m", "case18.m"] {
        let text = std::fs::read_to_string(data(name)).map_err(|e| e.to_string())?;
        let case = parse_matpower(&text).map_err(|e| format!("{name}: {e}"))?;
        let written = write_matpower(&case);
        let again = parse_matpower(&written).map_err(|e| format!("{name} rewritten: {e}"))?;
        if again != case || write_matpower(&again) != written {
            return Err(format!("{name}: round trip changed the case"));
        }
    }
    let expected: [(&str, ErrorCheck); 7] = [
        ("missing_basemva.m", |k| {
            *k == ParseErrorKind::MissingField("baseMVA")
        }),
        ("missing_bus.m", |k| {
            *k == ParseErrorKind::MissingField("bus")
        }),
        (
            "malformed_number.m",
            |k| matches!(k, ParseErrorKind::MalformedNumber(t) if t == "5O"),
        ),
        ("no_slack.m", |k| *k == ParseErrorKind::SlackCount(0)),
        ("two_slacks.m", |k| *k == ParseErrorKind::SlackCount(2)),
        (
            "unknown_branch_bus.m",
            |k| matches!(k, ParseErrorKind::UnknownBus(id) if id == "9"),
        ),
        ("unterminated_matrix.m", |k| {
            *k == ParseErrorKind::Unterminated("branch")
        }),
    ];
    for (file, want) in expected {
        match read_case(data("malformed").join(file)) {
            Err(Error::Parse { line, kind }) if want(&kind) && line > 0 => {}
            other => return Err(format!("{file}: unexpected result {other:?}")),
        }
    }
    Ok("2 cases round-trip, 7 malformed files rejected".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("scalar exactness", Duration::from_secs(1), scalar_exactness),
        ("inner/outer sandwich", Duration::from_secs(1), sandwich),
        (
            "2-bus loadability",
            Duration::from_secs(1),
            two_bus_loadability,
        ),
        (
            "18-bus ratio statistics",
            Duration::from_secs(30),
            ratio_reproduction,
        ),
        (
            "existence soundness sweep",
            Duration::from_secs(60),
            brouwer_sweep,
        ),
        ("phase invariance", Duration::from_secs(5), phase_invariance),
        ("real/complex embedding", Duration::from_secs(10), embedding),
        ("parser corpus", Duration::from_secs(1), parser_corpus),
    ];
    let mut failed = 0;
    for (name, limit, run) in criteria {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let (ok, detail) = match out {
            Ok(d) if took <= limit => (true, d),
            Ok(d) => (false, format!("{d}; took {took:.2?}, limit {limit:?}")),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} {name}: {detail} [{took:.2?}]",
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
