use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::scanpath::{Point3, RegionTag};
use crate::thermal::SubsurfaceMode;
use crate::units::{to_mm, MM2};
use crate::{Error, Result};

pub const SCHEDULE_HEADER: &str = "layer,vector_id,x0_mm,y0_mm,x1_mm,y1_mm,speed_mm_s,power_W,Tb_K,Ac_mm2,clamped";
pub const LAYER_POWER_HEADER: &str = "layer,n_vectors,mean_power_W,min_power_W,max_power_W,n_clamped";
const SCHEDULE_VERSION: &str = "# lpbf power schedule v1";
const LAYER_POWER_VERSION: &str = "# lpbf layer power v1";

/// One mark vector as scanned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub layer: usize,
    pub vector_id: usize,
    pub source_id: usize,
    pub start: Point3,
    pub end: Point3,
    /// m/s
    pub speed: f64,
    /// W
    pub power: f64,
    /// Subsurface temperature just before the vector, K.
    pub t_b: f64,
    /// Predicted melt-pool area, m^2.
    pub area: f64,
    pub clamped: bool,
    pub region: RegionTag,
    pub mode: SubsurfaceMode,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl PowerSchedule {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn powers(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.power).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.area).collect()
    }

    /// Mean power over entries accepted by `keep`, NaN when none are.
    pub fn mean_power_where(&self, keep: impl Fn(&ScheduleEntry) -> bool) -> f64 {
        let (sum, n) = self
            .entries
            .iter()
            .filter(|e| keep(e))
            .fold((0.0, 0usize), |(s, n), e| (s + e.power, n + 1));
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }

    /// `(layer, n, mean, min, max, n_clamped)` per layer, in layer order.
    pub fn layer_powers(&self) -> Vec<(usize, usize, f64, f64, f64, usize)> {
        let mut by_layer: BTreeMap<usize, Vec<&ScheduleEntry>> = BTreeMap::new();
        for e in &self.entries {
            by_layer.entry(e.layer).or_default().push(e);
        }
        by_layer
            .into_iter()
            .map(|(k, es)| {
                let n = es.len();
                let mean = es.iter().map(|e| e.power).sum::<f64>() / n as f64;
                let min = es.iter().map(|e| e.power).fold(f64::INFINITY, f64::min);
                let max = es.iter().map(|e| e.power).fold(f64::NEG_INFINITY, f64::max);
                let clamped = es.iter().filter(|e| e.clamped).count();
                (k, n, mean, min, max, clamped)
            })
            .collect()
    }

    /// Fixed-precision CSV, so identical schedules give identical bytes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{SCHEDULE_VERSION}")?;
        writeln!(w, "{SCHEDULE_HEADER}")?;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{:.6},{:.6},{:.6},{:.6},{:.3},{:.6},{:.6},{},{}",
                e.layer,
                e.vector_id,
                to_mm(e.start.x),
                to_mm(e.start.y),
                to_mm(e.end.x),
                to_mm(e.end.y),
                to_mm(e.speed),
                e.power,
                e.t_b,
                fmt_area(e.area),
                e.clamped as u8
            )?;
        }
        Ok(())
    }

    pub fn write_layer_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{LAYER_POWER_VERSION}")?;
        writeln!(w, "{LAYER_POWER_HEADER}")?;
        for (k, n, mean, min, max, clamped) in self.layer_powers() {
            writeln!(w, "{k},{n},{mean:.6},{min:.6},{max:.6},{clamped}")?;
        }
        Ok(())
    }
}

fn fmt_area(a: f64) -> String {
    if a.is_finite() {
        format!("{:.10}", a / MM2)
    } else {
        "NaN".into()
    }
}

/// Reads `vector_id -> power` from any CSV with `vector_id` and `power_W`
/// columns, such as a schedule written by [`PowerSchedule::write_csv`].
pub fn read_power_table<R: Read>(reader: R) -> Result<BTreeMap<usize, f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))
    };
    let (id_col, p_col) = (col("vector_id")?, col("power_W")?);
    let mut out = BTreeMap::new();
    for (n, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(n + 2, |p| p.line() as usize);
        let parse_err = |what: &str| Error::Parse {
            line,
            msg: format!("bad {what}"),
        };
        let id: usize = rec.get(id_col).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("vector_id"))?;
        let p: f64 = rec.get(p_col).and_then(|s| s.parse().ok()).ok_or_else(|| parse_err("power_W"))?;
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::Parse {
                line,
                msg: format!("power {p} W must be non-negative"),
            });
        }
        if out.insert(id, p).is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("vector {id} listed twice"),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(layer: usize, id: usize, power: f64, area: f64) -> ScheduleEntry {
        ScheduleEntry {
            layer,
            vector_id: id,
            source_id: id,
            start: Point3::new(0.0, 1e-3, 4e-5),
            end: Point3::new(2e-3, 1e-3, 4e-5),
            speed: 1.0,
            power,
            t_b: 400.0,
            area,
            clamped: area.is_nan(),
            region: RegionTag::Bulk,
            mode: SubsurfaceMode::SolidBelow,
        }
    }

    #[test]
    fn csv_round_trip_of_powers() {
        let s = PowerSchedule {
            entries: vec![entry(0, 0, 200.5, 1.64e-8), entry(0, 2, 20.0, f64::NAN), entry(1, 4, 300.0, 1.6e-8)],
        };
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# lpbf power schedule v1\n"));
        assert!(text.contains("0,0,0.000000,1.000000,2.000000,1.000000,1000.000,200.500000,400.000000,0.0164000000,0"));
        assert!(text.contains(",NaN,1"));
        let table = read_power_table(buf.as_slice()).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table[&2], 20.0);

        let mut buf = Vec::new();
        s.write_layer_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\n0,2,110.250000,20.000000,200.500000,1\n"));
    }

    #[test]
    fn power_table_needs_columns() {
        let err = read_power_table("vector_id,P\n1,2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "power_W"));
    }
}
