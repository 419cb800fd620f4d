#![no_main]

use cstar_core::algebra::{parse_embedding_json, validate_embedding, SubalgebraEmbedding};
use cstar_core::ToleranceConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(raw) = parse_embedding_json(text) else { return };
    if raw.ambient_dim > 32 {
        return;
    }
    let tol = ToleranceConfig::default();
    let _ = validate_embedding(&raw, &tol);
    if let Ok(emb) = SubalgebraEmbedding::from_unit_images(&raw, &tol) {
        assert_eq!(emb.ambient_dim(), raw.ambient_dim);
    }
});
