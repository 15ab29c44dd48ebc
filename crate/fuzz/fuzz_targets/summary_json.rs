#![no_main]

use libfuzzer_sys::fuzz_target;
use mbl_core::trace::Summary;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(summary) = Summary::from_json(text) {
        let back = Summary::from_json(&summary.to_json().unwrap()).expect("serialized summary loads");
        assert_eq!(back.algos, summary.algos);
    }
});
