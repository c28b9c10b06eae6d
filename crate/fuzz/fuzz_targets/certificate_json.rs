//! Fuzz certificate-document ingestion: parse, validate, and re-serialize.
//! Accepted documents must survive a round trip unchanged.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stabcert::Certificate;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cert) = Certificate::from_json_str(text) {
        let json = cert.to_json_string();
        let again = Certificate::from_json_str(&json).expect("round trip must stay valid");
        assert_eq!(again, cert);
    }
});
