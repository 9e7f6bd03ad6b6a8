#![no_main]

use libfuzzer_sys::fuzz_target;
use logsum_recovery::fixture::{decode_instance, encode_instance};

fuzz_target!(|data: &[u8]| {
    // Anything that decodes must survive a round trip unchanged.
    if let Ok(instance) = decode_instance(data) {
        let bytes = encode_instance(&instance);
        let again = decode_instance(&bytes).expect("re-decode of encoded instance");
        assert_eq!(again.a_matrix, instance.a_matrix);
        assert_eq!(again.y, instance.y);
    }
});
