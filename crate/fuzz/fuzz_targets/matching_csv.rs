//! Fuzz the four-column matching-error CSV reader.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stabcert::io::parse_matching_csv;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_matching_csv(text);
});
