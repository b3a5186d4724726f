//! Fire-potential rasters and line-path integration.
//!
//! A raster is a regular lon/lat grid. `origin` is the north-west corner of
//! cell `(0, 0)`; rows run south and columns run east. Path lengths are planar
//! and measured in cell units, so a risk value is "index × cells traversed".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::Network;

/// Largest index value the fire-potential scale produces.
pub const MAX_INDEX: f64 = 150.0;

/// Upper bound on samples per segment, so hostile inputs cannot stall a run.
const MAX_SAMPLES_PER_SEGMENT: f64 = 1e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RasterFile")]
pub struct RiskRaster {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub n_rows: usize,
    pub n_cols: usize,
    pub values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RasterFile {
    origin: [f64; 2],
    cell_size: f64,
    n_rows: usize,
    n_cols: usize,
    values: Vec<Vec<f64>>,
}

impl TryFrom<RasterFile> for RiskRaster {
    type Error = Error;

    fn try_from(f: RasterFile) -> Result<Self> {
        RiskRaster::new(f.origin, f.cell_size, f.values).and_then(|r| {
            if r.n_rows != f.n_rows || r.n_cols != f.n_cols {
                Err(Error::Raster(format!(
                    "declared {}x{} but values are {}x{}",
                    f.n_rows, f.n_cols, r.n_rows, r.n_cols
                )))
            } else {
                Ok(r)
            }
        })
    }
}

impl RiskRaster {
    pub fn new(origin: [f64; 2], cell_size: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::Raster(format!("cell_size must be positive, got {cell_size}")));
        }
        if !origin.iter().all(|c| c.is_finite()) {
            return Err(Error::Raster("origin must be finite".into()));
        }
        let n_rows = values.len();
        let n_cols = values.first().map_or(0, Vec::len);
        for (r, row) in values.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Raster(format!(
                    "row {r} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=MAX_INDEX).contains(*v)) {
                return Err(Error::Raster(format!("value {v} in row {r} outside [0, {MAX_INDEX}]")));
            }
        }
        Ok(Self {
            origin,
            cell_size,
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RasterFile = serde_json::from_str(text)?;
        file.try_into()
    }

    /// `(column, row)` position of a lon/lat point in fractional cell units.
    fn to_cells(&self, p: [f64; 2]) -> (f64, f64) {
        (
            (p[0] - self.origin[0]) / self.cell_size,
            (self.origin[1] - p[1]) / self.cell_size,
        )
    }

    /// Value of the cell containing the point, 0 outside the grid.
    fn value_at_cells(&self, col: f64, row: f64) -> f64 {
        if col < 0.0 || row < 0.0 {
            return 0.0;
        }
        let (c, r) = (col.floor() as usize, row.floor() as usize);
        if c < self.n_cols && r < self.n_rows {
            self.values[r][c]
        } else {
            0.0
        }
    }

    pub fn value_at(&self, lon: f64, lat: f64) -> f64 {
        let (c, r) = self.to_cells([lon, lat]);
        self.value_at_cells(c, r)
    }
}

/// Integrates the raster along a polyline given in lon/lat.
///
/// Each segment is split into equal pieces no longer than `step` cell units;
/// each piece contributes the value of the cell holding its midpoint times its
/// length.
pub fn integrate_line_risk(raster: &RiskRaster, path: &[[f64; 2]], step: f64) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::EmptyPath);
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidParameter(format!("integration step must be positive, got {step}")));
    }
    let mut total = 0.0;
    for w in path.windows(2) {
        let (c0, r0) = raster.to_cells(w[0]);
        let (c1, r1) = raster.to_cells(w[1]);
        let len = (c1 - c0).hypot(r1 - r0);
        if !len.is_finite() {
            return Err(Error::InvalidParameter("path has non-finite coordinates".into()));
        }
        if len == 0.0 {
            continue;
        }
        let pieces = (len / step).ceil().max(1.0);
        if pieces > MAX_SAMPLES_PER_SEGMENT {
            return Err(Error::InvalidParameter(format!(
                "segment of {len} cells needs {pieces} samples at step {step}"
            )));
        }
        let n = pieces as usize;
        let ds = len / pieces;
        for k in 0..n {
            let t = (k as f64 + 0.5) / pieces;
            total += raster.value_at_cells(c0 + t * (c1 - c0), r0 + t * (r1 - r0)) * ds;
        }
    }
    Ok(total)
}

/// Risk of every line, in network line order.
pub fn line_risks(net: &Network, raster: &RiskRaster, step: f64) -> Result<Vec<f64>> {
    net.lines
        .iter()
        .map(|l| integrate_line_risk(raster, &l.path, step))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(v: f64, n: usize) -> RiskRaster {
        RiskRaster::new([0.0, n as f64], 1.0, vec![vec![v; n]; n]).unwrap()
    }

    #[test]
    fn constant_field_is_value_times_length() {
        let r = uniform(100.0, 4);
        let got = integrate_line_risk(&r, &[[0.5, 2.0], [2.5, 2.0]], 0.1).unwrap();
        assert!((got - 200.0).abs() < 1e-9);
    }

    #[test]
    fn zero_field_gives_zero() {
        let r = uniform(0.0, 4);
        let got = integrate_line_risk(&r, &[[0.2, 0.3], [3.1, 2.9], [1.0, 1.0]], 0.05).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn outside_points_contribute_nothing() {
        let r = uniform(100.0, 2);
        // Half the path is east of the grid.
        let got = integrate_line_risk(&r, &[[1.0, 1.5], [3.0, 1.5]], 0.01).unwrap();
        assert!((got - 100.0).abs() < 1e-6);
    }

    #[test]
    fn split_field_matches_piecewise_integral() {
        // Left column 50, right column 150; a unit path centred on the seam.
        let r = RiskRaster::new([0.0, 1.0], 1.0, vec![vec![50.0, 150.0]]).unwrap();
        let got = integrate_line_risk(&r, &[[0.5, 0.5], [1.5, 0.5]], 0.01).unwrap();
        let exact = 50.0 * 0.5 + 150.0 * 0.5;
        assert!((got - exact).abs() <= 150.0 * 0.01, "{got}");
    }

    #[test]
    fn empty_path_and_bad_step_are_errors() {
        let r = uniform(1.0, 1);
        assert!(matches!(integrate_line_risk(&r, &[], 0.1), Err(Error::EmptyPath)));
        assert!(integrate_line_risk(&r, &[[0.0, 0.0], [1.0, 0.0]], 0.0).is_err());
    }

    #[test]
    fn raster_json_is_checked() {
        let ok = r#"{"origin":[0,1],"cell_size":0.5,"n_rows":1,"n_cols":2,"values":[[1,2]]}"#;
        assert_eq!(RiskRaster::from_json(ok).unwrap().n_cols, 2);
        let bad_dims = ok.replace(r#""n_cols":2"#, r#""n_cols":3"#);
        assert!(RiskRaster::from_json(&bad_dims).is_err());
        let bad_value = ok.replace("[[1,2]]", "[[1,151]]");
        assert!(RiskRaster::from_json(&bad_value).is_err());
    }
}
