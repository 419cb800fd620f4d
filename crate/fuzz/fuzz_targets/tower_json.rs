#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = cstar_core::tower::parse_tower_json(text) {
        let again = t.to_json().unwrap();
        assert!(cstar_core::tower::parse_tower_json(&again).is_ok());
    }
});
