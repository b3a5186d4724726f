#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::{parse_case, validate};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(net) = parse_case(text) {
            let _ = validate(&net);
            // Anything accepted must survive a round trip.
            let again = parse_case(&net.to_json()).expect("re-parse of own output");
            assert_eq!(again, net);
        }
    }
});
