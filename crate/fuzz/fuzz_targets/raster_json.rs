#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::ingest::line_risks;
use psps_core::synthetic;
use psps_core::RiskRaster;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(raster) = RiskRaster::from_json(text) {
            let (net, _) = synthetic::triangle();
            if let Ok(risk) = line_risks(&net, &raster, 0.5) {
                assert!(risk.iter().all(|r| r.is_finite() && *r >= 0.0));
            }
        }
    }
});
