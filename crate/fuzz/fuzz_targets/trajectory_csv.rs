//! Fuzz the two-column trajectory CSV readers (both header dialects).

#![no_main]

use libfuzzer_sys::fuzz_target;
use stabcert::io::{parse_series_csv, norm_csv_string};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_series_csv(text, "t,norm") {
        // Writers and readers must agree on the accepted subset.
        let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let values: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let rewritten = norm_csv_string(&times, &values);
        let again = parse_series_csv(&rewritten, "t,norm").expect("rewritten CSV must parse");
        assert_eq!(again.len(), rows.len());
    }
    let _ = parse_series_csv(text, "t,g");
});
