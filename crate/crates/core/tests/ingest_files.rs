use std::fs::{self, File};

use psps_core::ingest::{line_risks, read_demand_csv, read_profile_csv, read_risk_csv, scale_demand};
use psps_core::network::LoadOptions;
use psps_core::synthetic;
use psps_core::{Network, RiskRaster};

#[test]
fn case_and_tables_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let (net, _) = synthetic::triangle();
    let case = dir.path().join("case.json");
    fs::write(&case, net.to_json()).unwrap();
    let loaded = Network::from_path(&case, LoadOptions::default()).unwrap();
    assert_eq!(loaded, net);

    let demand = dir.path().join("demand.csv");
    fs::write(&demand, "bus_id,hour,value_pu\n2,1,1.0\n3,1,0.5\n2,2,0.8\n").unwrap();
    let d = read_demand_csv(&net, File::open(&demand).unwrap(), None).unwrap();
    assert_eq!(d.values, vec![vec![0.0, 0.0], vec![1.0, 0.8], vec![0.5, 0.0]]);

    let profile = dir.path().join("profile.csv");
    fs::write(&profile, "hour,fraction\n2,0.5\n1,1.0\n").unwrap();
    let p = read_profile_csv(File::open(&profile).unwrap()).unwrap();
    assert_eq!(p, vec![1.0, 0.5]);
    let scaled = scale_demand(&[0.0, 2.0, 1.0], &p, 2).unwrap();
    assert_eq!(scaled.values[1], vec![2.0, 1.0]);

    let risk = dir.path().join("risk.csv");
    fs::write(&risk, "day,line_id,risk\n2,1,0.5\n1,1,1\n1,2,2\n1,3,3\n2,2,0\n2,3,4\n").unwrap();
    let r = read_risk_csv(&net, File::open(&risk).unwrap()).unwrap();
    assert_eq!(r.days, vec![1, 2]);
    assert_eq!(r.values, vec![vec![1.0, 2.0, 3.0], vec![0.5, 0.0, 4.0]]);
}

#[test]
fn bad_tables_name_the_offending_line() {
    let (net, _) = synthetic::triangle();
    let err = read_demand_csv(&net, "bus_id,hour,value_pu\n2,1,1.0\n9,1,1.0\n".as_bytes(), None).unwrap_err();
    assert!(err.to_string().contains('3'), "{err}");
    let err = read_risk_csv(&net, "day,line_id,risk\n1,1,-1\n".as_bytes()).unwrap_err();
    assert!(err.to_string().contains("non-negative"), "{err}");
}

#[test]
fn generated_raster_gives_bounded_line_risk() {
    let net = synthetic::rts_style(3);
    let raster = synthetic::ridge_raster(&net, 4);
    let text = serde_json::to_string(&raster).unwrap();
    let back = RiskRaster::from_json(&text).unwrap();
    assert_eq!(back, raster);
    let risk = line_risks(&net, &raster, raster.cell_size / 4.0).unwrap();
    assert_eq!(risk.len(), net.n_lines());
    for (line, r) in net.lines.iter().zip(&risk) {
        let len = line.path_length() / raster.cell_size;
        assert!(*r >= 0.0 && *r <= 150.0 * len + 1e-9, "line {}: {r}", line.id);
    }
    assert!(risk.iter().any(|r| *r > 0.0));
}
