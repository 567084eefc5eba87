use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn singsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_singsym"))
        .args(args)
        .env("SINGSYM_CONFIG_DIR", configs())
        .output()
        .unwrap()
}

fn code(args: &[&str]) -> i32 {
    singsym(args).status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn validate_exit_codes() {
    assert_eq!(code(&["validate", "--config", "radko_sphere.toml"]), 0);
    assert_eq!(code(&["validate", "--config", "folded_without_z.toml"]), 2);
    let o = singsym(&["validate", "--config", "corrupted_form.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let line = stdout(&o);
    assert!(line.contains("\"max_dw_at\":[") && line.contains("not closed"), "{line}");
}

#[test]
fn check_exit_codes() {
    assert_eq!(code(&["check", "--config", "martinet.toml"]), 0);
    assert_eq!(code(&["check", "--config", "martinet_inadmissible.toml"]), 1);
    let bad = scratch("unknown_gallery.toml");
    fs::write(&bad, "gallery = \"no_such_entry\"\n").unwrap();
    assert_eq!(code(&["check", "--config", bad.to_str().unwrap()]), 2);
}

#[test]
fn pendulum_gallery_check_passes() {
    let o = singsym(&["check", "--config", "pendulum.toml", "--samples", "400"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).lines().last().unwrap().contains("\"pass\":true"));
}

#[test]
fn actionangle_reports() {
    let o = singsym(&["actionangle", "--config", "twisted_lift_actionangle.toml"]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().filter(|l| l.contains("modular_period")) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!((v["period"].as_f64().unwrap() - 2.0).abs() < 1e-6, "{line}");
    }
    assert_eq!(code(&["actionangle", "--config", "folded_lift_actionangle.toml"]), 0);
    assert_eq!(code(&["actionangle", "--config", "folded_lift_degenerate.toml"]), 3);
}

#[test]
fn flow_tables() {
    let o = singsym(&["flow", "--config", "pendulum.toml", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "t");
    let drift = header.iter().position(|h| *h == "drift[H]").unwrap();
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 501);
    assert!(rows.iter().all(|r| r[drift].abs() <= 1e-7));

    let o = singsym(&["flow", "--config", "pendulum_rest.toml", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert_eq!(code(&["flow", "--config", "pendulum_outside.toml"]), 2);
}

#[test]
fn constructed_system_round_trips_through_validate() {
    let out = scratch("desingularized.toml");
    let args = ["construct", "--config", "desingularize_twisted_lift.toml", "--out", out.to_str().unwrap()];
    assert_eq!(code(&args), 0);
    assert_eq!(code(&["validate", "--config", out.to_str().unwrap()]), 0);
    assert_eq!(code(&["check", "--config", out.to_str().unwrap()]), 0);
}

#[test]
fn construct_verdicts() {
    let o = singsym(&["construct", "--config", "obstruction_swap.toml"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("nontrivial — global action-angle obstructed"));
    let o = singsym(&["construct", "--config", "obstruction_identity.toml"]);
    assert!(stdout(&o).contains("\"verdict\":\"trivial\""));
    assert_eq!(code(&["construct", "--config", "delzant_square.toml"]), 0);
    assert_eq!(code(&["construct", "--config", "average_half_turn.toml"]), 0);
    let out = scratch("product.toml");
    assert_eq!(code(&["construct", "--config", "product_sphere_cylinder.toml", "--out", out.to_str().unwrap()]), 0);
    assert_eq!(code(&["check", "--config", out.to_str().unwrap()]), 0);
}

#[test]
fn usage_errors() {
    assert_eq!(code(&["validate"]), 2);
    assert_eq!(code(&["frobnicate", "--config", "x.toml"]), 2);
    assert_eq!(code(&["validate", "--config", "does_not_exist.toml"]), 2);
    assert_eq!(code(&["validate", "--config", "radko_sphere.toml", "--format", "xml"]), 2);
    assert_eq!(code(&["--help"]), 0);
    let help = stdout(&singsym(&["flow", "--help"]));
    for flag in ["--config", "--seed", "--tol", "--samples", "--out", "--format", "SINGSYM_CONFIG_DIR"] {
        assert!(help.contains(flag), "{flag} missing from help");
    }
}

#[test]
fn seed_changes_samples_but_not_verdicts() {
    let a = singsym(&["validate", "--config", "corrupted_form.toml", "--seed", "1"]);
    let b = singsym(&["validate", "--config", "corrupted_form.toml", "--seed", "2"]);
    assert_eq!(a.status.code(), b.status.code());
    assert_ne!(a.stdout, b.stdout);
    let c = singsym(&["validate", "--config", "corrupted_form.toml", "--seed", "1"]);
    assert_eq!(a.stdout, c.stdout);
}
