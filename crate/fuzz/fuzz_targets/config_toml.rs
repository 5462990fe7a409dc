#![no_main]

use efftemp_cli::config::{parse_config, snapshot};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = parse_config(text) else { return };
    // Snapshots are compared as text so NaN fields do not break equality.
    let first = snapshot(&cfg).expect("snapshot of a parsed config");
    let reparsed = parse_config(&first).expect("snapshot parses");
    assert_eq!(snapshot(&reparsed).expect("second snapshot"), first);
});
