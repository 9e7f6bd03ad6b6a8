use std::path::PathBuf;

use logsum_recovery::fixture::{decode_instance, encode_instance};

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(name)
}

#[test]
fn instance_seeds_decode_or_fail_as_named() {
    for name in ["small_noisy", "square_noiseless", "wide_dense", "single_entry"] {
        let bytes = std::fs::read(corpus("decode_instance").join(name)).unwrap();
        let instance = decode_instance(&bytes).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(encode_instance(&instance), bytes, "{name}");
    }
    for name in ["truncated", "header_only"] {
        let bytes = std::fs::read(corpus("decode_instance").join(name)).unwrap();
        assert!(decode_instance(&bytes).is_err(), "{name}");
    }
}
