#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::ingest::read_profile_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = read_profile_csv(data) {
        assert!(p.iter().all(|v| v.is_finite()));
    }
});
