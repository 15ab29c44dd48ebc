#![no_main]

use libfuzzer_sys::fuzz_target;
use mbl_core::env::FiniteMarkovEnv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(env) = FiniteMarkovEnv::from_json(text) {
        let back = FiniteMarkovEnv::from_json(&env.to_json().unwrap()).expect("serialized env loads");
        assert_eq!(back, env);
    }
});
