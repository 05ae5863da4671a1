#![no_main]

use libfuzzer_sys::fuzz_target;
use phaselock::galois::{FieldMeta, GaloisField};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    let Ok(meta) = FieldMeta::from_json(s) else { return };
    if let Ok(field) = GaloisField::from_meta(&meta) {
        assert_eq!(field.meta(), meta);
    }
});
