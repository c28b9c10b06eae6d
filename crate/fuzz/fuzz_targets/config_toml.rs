//! Fuzz the TOML run-configuration parser and its semantic validation.
//! Any input must produce Ok or a structured error, never a panic.

#![no_main]

use libfuzzer_sys::fuzz_target;
use stabcert_cli::config::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = Config::from_toml_str(text) {
        // Exercise the semantic layer behind the syntax.
        let _ = config.gamma_model();
        let _ = config.perturbation_bound();
        let _ = config.check_command("certify");
    }
});
