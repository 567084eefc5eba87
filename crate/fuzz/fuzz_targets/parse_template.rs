#![no_main]

use libfuzzer_sys::fuzz_target;
use singsym::constructions::{delzant_check, parse_template};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_template(src) {
        let _ = delzant_check(&t);
    }
});
