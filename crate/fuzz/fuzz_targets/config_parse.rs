#![no_main]

use libfuzzer_sys::fuzz_target;
use mbl_core::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = RunConfig::parse(text) {
        let back = RunConfig::parse(&cfg.to_text()).expect("canonical text parses");
        assert_eq!(back, cfg);
    }
});
