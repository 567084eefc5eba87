use std::f64::consts::PI;

use singsym::actionangle::{integrate_flow_at, FlowOptions};
use singsym::gallery::{check_oracles, instantiate, run_all_checks, GALLERY_IDS};
use singsym::geometry::validate_form;
use singsym::sampling::SamplePlan;
use singsym::Error;

#[test]
fn every_entry_agrees_with_its_closed_forms() {
    for id in GALLERY_IDS {
        let e = instantiate(id).unwrap();
        let r = check_oracles(&e, 19).unwrap();
        assert!(r.pass, "{id}: {r:?}");
    }
}

#[test]
fn recorded_outcomes_are_reproduced_under_another_seed() {
    for id in ["spherical_pendulum", "radko_sphere", "swap_monodromy"] {
        let e = instantiate(id).unwrap();
        let r = run_all_checks(&e, &SamplePlan::new(600, 150, 31)).unwrap();
        assert!(r.matches_expected, "{id}:\n{}", r.outcome);
    }
}

#[test]
fn a_tampered_fixture_is_a_regression() {
    let e = instantiate("radko_sphere").unwrap();
    let r = run_all_checks(&e, &SamplePlan::new(300, 60, 7)).unwrap();
    let tampered = e.expected.replace("validate: pass", "validate: fail");
    assert!(matches!(r.into_result(&tampered), Err(Error::Regression(_))));
}

#[test]
fn pendulum_conserves_energy_over_fifty_time_units() {
    let e = instantiate("spherical_pendulum").unwrap();
    let sys = &e.system;
    let p0 = [0.0, 2.0, 0.1, 1.0];
    let tr = integrate_flow_at(&sys.fields[0], &p0, 50.0, 500, &FlowOptions::with_tol(1e-10)).unwrap();
    assert!(!tr.truncated, "{:?}", tr.reason);
    assert_eq!(tr.points.len(), 501);
    let f0 = sys.values(&p0);
    for p in &tr.points {
        let f = sys.values(p);
        for k in 0..2 {
            assert!((f[k] - f0[k]).abs() <= 1e-7 * (1.0 + f0[k].abs()), "{k}: {} vs {}", f[k], f0[k]);
        }
    }
}

#[test]
fn pendulum_flow_starting_on_the_fold_stays_there() {
    let e = instantiate("spherical_pendulum").unwrap();
    let tr = integrate_flow_at(&e.system.fields[0], &[0.2, 1.0, 0.3, 0.0], 5.0, 50, &FlowOptions::default()).unwrap();
    assert!(tr.points.iter().all(|p| p[3].abs() < 1e-12));
}

#[test]
fn non_b_field_vanishes_on_the_fold_exactly_where_cos_does() {
    let e = instantiate("non_b_modelable").unwrap();
    let x = &e.system.fields[0];
    let n = 400;
    let vals: Vec<f64> = (0..n).map(|k| x.eval(&[0.0, k as f64 / n as f64]).unwrap()[1]).collect();
    for (k, v) in vals.iter().enumerate() {
        let th = k as f64 / n as f64;
        assert!((v - (2.0 * PI * th).cos() / PI).abs() < 1e-8, "θ = {th}: {v}");
    }
    let zeros: Vec<f64> = (0..n)
        .filter(|&k| vals[k] * vals[(k + 1) % n] <= 0.0)
        .map(|k| (k as f64 + 0.5) / n as f64)
        .collect();
    assert_eq!(zeros.len(), 2, "{zeros:?}");
    assert!((zeros[0] - 0.25).abs() < 2.0 / n as f64 && (zeros[1] - 0.75).abs() < 2.0 / n as f64);
    for th in [0.25, 0.75] {
        let v = x.eval(&[0.0, th]).unwrap();
        assert!(v.iter().all(|c| c.abs() < 1e-12), "{v:?}");
    }
}

#[test]
fn radko_sphere_is_b_symplectic() {
    let e = instantiate("radko_sphere").unwrap();
    let r = validate_form(&e.system.form, &SamplePlan::default()).unwrap();
    assert!(r.pass, "{r:?}");
    assert_eq!(r.kind, "b-symplectic");
}

#[test]
fn double_collision_has_no_w_motion() {
    let e = instantiate("double_collision").unwrap();
    for p in SamplePlan::new(50, 50, 5).interior_points(e.system.chart()) {
        let x = e.system.vectors(&p).unwrap();
        assert_eq!(x[0][3], 0.0);
        assert!((x[1][2] + 1.0 / (2.0 * PI)).abs() < 1e-12);
    }
}
