//! Replays the checked-in fuzz seeds through the parsers on stable, so the
//! seeds keep exercising the success paths they were written for.

use std::fs;
use std::path::PathBuf;

use psps_core::ingest::{read_demand_csv, read_profile_csv, read_risk_csv};
use psps_core::metrics::parse_betas;
use psps_core::synthetic;
use psps_core::{parse_case, RiskRaster};

fn seeds(target: &str) -> Vec<(String, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

fn text(bytes: &[u8]) -> &str {
    std::str::from_utf8(bytes).unwrap()
}

#[test]
fn case_seeds() {
    for (name, data) in seeds("parse_case") {
        let parsed = parse_case(text(&data));
        assert_eq!(parsed.is_ok(), !name.starts_with("dangling"), "{name}: {parsed:?}");
    }
}

#[test]
fn raster_seeds() {
    for (name, data) in seeds("raster_json") {
        RiskRaster::from_json(text(&data)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn table_seeds() {
    let (net, _) = synthetic::triangle();
    for (name, data) in seeds("demand_csv") {
        read_demand_csv(&net, data.as_slice(), None).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("profile_csv") {
        assert_eq!(read_profile_csv(data.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}")).len(), 24);
    }
    for (name, data) in seeds("risk_csv") {
        read_risk_csv(&net, data.as_slice()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
    for (name, data) in seeds("beta_list") {
        parse_betas(text(&data)).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
