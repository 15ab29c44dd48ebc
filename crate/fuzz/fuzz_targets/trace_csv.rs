#![no_main]

use libfuzzer_sys::fuzz_target;
use mbl_core::trace::{aggregate_sampled, read_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(traces) = read_csv(data) {
        if !traces.is_empty() {
            let _ = aggregate_sampled(&traces, "");
        }
    }
});
