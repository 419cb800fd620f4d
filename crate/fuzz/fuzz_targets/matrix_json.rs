#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = cstar_core::matrix::parse_matrix_json(text) {
            assert!(m.is_finite());
            let back = serde_json::to_string(&m).unwrap();
            assert_eq!(cstar_core::matrix::parse_matrix_json(&back).unwrap(), m);
        }
    }
});
