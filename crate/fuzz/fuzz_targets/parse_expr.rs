#![no_main]

use libfuzzer_sys::fuzz_target;
use singsym::expr::Expr;

const VARS: [&str; 4] = ["t", "q", "x2", "y2"];

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(e) = Expr::parse(src, &VARS) {
        let p = [0.25, -0.5, 0.75, 1.0];
        let _ = e.value(&p);
        let _ = e.gradient(&p);
        let again = Expr::parse(&e.render(&VARS), &VARS).expect("rendered expression parses");
        let (a, b) = (e.value(&p), again.value(&p));
        assert!(a == b || (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }
});
