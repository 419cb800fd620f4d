#![no_main]

use cstar_core::certificate::{parse_certificate_json, verify_certificate};
use cstar_core::{ComplexMatrix, ToleranceConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cert) = parse_certificate_json(text) else { return };
    if cert.dim() > 32 || cert.len() > 64 {
        return;
    }
    let a = ComplexMatrix::identity(cert.dim());
    let _ = verify_certificate(&a, &cert, None, &ToleranceConfig::default());
});
