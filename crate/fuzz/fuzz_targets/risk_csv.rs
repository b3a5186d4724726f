#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::ingest::read_risk_csv;
use psps_core::synthetic;

fuzz_target!(|data: &[u8]| {
    let (net, _) = synthetic::triangle();
    if let Ok(table) = read_risk_csv(&net, data) {
        assert_eq!(table.days.len(), table.values.len());
        assert!(table.values.iter().all(|day| day.len() == net.n_lines()));
    }
});
