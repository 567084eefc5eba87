#![no_main]

use libfuzzer_sys::fuzz_target;
use singsym::config::ConfigFile;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ConfigFile::parse(src) {
        // Building the input exercises chart, form and observable parsing
        // without running any numerical pipeline.
        if cfg.construction.is_none() {
            let _ = cfg.input();
        }
    }
});
