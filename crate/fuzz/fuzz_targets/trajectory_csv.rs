#![no_main]

use efftemp_cli::csvio::parse_trajectory;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_trajectory(data);
});
