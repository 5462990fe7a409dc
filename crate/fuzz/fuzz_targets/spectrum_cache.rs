#![no_main]

use efftemp::io::{decode_spectrum, encode_spectrum};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Whatever decodes must survive a re-encode/decode round trip unchanged.
    if let Ok((header, spectrum)) = decode_spectrum(data) {
        let bytes = encode_spectrum(&header, &spectrum);
        let (h2, s2) = decode_spectrum(&bytes).expect("re-encoded spectrum decodes");
        assert_eq!(h2, header);
        assert_eq!(encode_spectrum(&h2, &s2), bytes);
    }
});
