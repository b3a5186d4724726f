#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::metrics::parse_betas;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(betas) = parse_betas(text) {
            assert!(betas.iter().all(|b| (0.0..=1.0).contains(b)));
        }
    }
});
