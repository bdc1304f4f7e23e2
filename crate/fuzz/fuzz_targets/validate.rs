#![no_main]

use libfuzzer_sys::fuzz_target;
use pairlind_cli::config::validate_bytes;

// Arbitrary bytes must produce a config or a non-empty violation list.
fuzz_target!(|data: &[u8]| {
    if let Err(e) = validate_bytes(data) {
        assert!(!e.violations.is_empty());
        let _ = e.to_json();
    }
});
