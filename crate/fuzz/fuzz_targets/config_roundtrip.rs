#![no_main]

use libfuzzer_sys::fuzz_target;
use pairlind_cli::config::{validate, validate_bytes};

// Every accepted config serializes to TOML that validates back to itself.
fuzz_target!(|data: &[u8]| {
    if let Ok(cfg) = validate_bytes(data) {
        let text = cfg.to_toml();
        assert_eq!(validate(&text).as_ref(), Ok(&cfg), "{text}");
    }
});
