use std::fs;
use std::path::Path;

use singsym::constructions::{delzant_check, parse_template};

fn load(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/templates").join(name);
    fs::read_to_string(p).unwrap()
}

#[test]
fn fixture_templates_have_the_expected_verdicts() {
    for (name, pass) in [
        ("square.txt", true),
        ("hirzebruch.txt", true),
        ("skewed_triangle.txt", false),
        ("folded_pair.txt", true),
    ] {
        let t = parse_template(&load(name)).unwrap();
        let r = delzant_check(&t).unwrap();
        assert_eq!(r.pass, pass, "{name}: {r:?}");
    }
}

#[test]
fn fold_indices_are_checked() {
    let src = load("folded_pair.txt").replace("fold a 1 b 3", "fold a 1 b 7");
    assert!(parse_template(&src).is_err());
    let src = load("folded_pair.txt").replace("fold a 1 b 3", "fold a 1 c 3");
    assert!(parse_template(&src).is_err());
}
