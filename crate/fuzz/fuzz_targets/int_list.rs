#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(v) = cstar_cli::parse_int_list(text) {
        assert!(!v.is_empty() && v.iter().all(|&x| x > 0));
        let joined = v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        assert_eq!(cstar_cli::parse_int_list(&joined).unwrap(), v);
    }
});
