#![no_main]

use libfuzzer_sys::fuzz_target;
use psps_core::ingest::read_demand_csv;
use psps_core::synthetic;

fuzz_target!(|data: &[u8]| {
    let (net, _) = synthetic::triangle();
    if let Ok(d) = read_demand_csv(&net, data, None) {
        assert_eq!(d.n_buses(), net.n_buses());
        assert!(d.check(net.n_buses(), d.horizon()).is_ok());
    }
});
