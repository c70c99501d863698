use std::io::{Read, Write};
use std::path::Path;

use super::fit::{SingleTrackRecord, TrackSource};
use crate::units::{celsius_to_kelvin, kelvin_to_celsius, MM, UM};
use crate::{Error, Result};

pub const TRACK_COLUMNS: [&str; 6] = ["P_W", "v_mm_s", "Tb_C", "width_um", "length_um", "source"];

pub fn read_tracks(path: impl AsRef<Path>) -> Result<Vec<SingleTrackRecord>> {
    read_tracks_from(std::fs::File::open(path)?)
}

/// Reads single-track measurements; `#` lines are comments.
pub fn read_tracks_from<R: Read>(r: R) -> Result<Vec<SingleTrackRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut idx = [0usize; 6];
    for (slot, name) in idx.iter_mut().zip(TRACK_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
    }
    let mut out = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        let row = row?;
        let line = n + 2;
        let num = |c: usize| -> Result<f64> {
            let s = row.get(idx[c]).unwrap_or("");
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("column {}: `{s}` is not a number", TRACK_COLUMNS[c]),
            })
        };
        let src = row.get(idx[5]).unwrap_or("");
        let source = TrackSource::parse(src).ok_or_else(|| Error::Parse {
            line,
            msg: format!("unknown source `{src}`"),
        })?;
        out.push(SingleTrackRecord {
            power: num(0)?,
            speed: num(1)? * MM,
            t_b: celsius_to_kelvin(num(2)?),
            width: num(3)? * UM,
            length: num(4)? * UM,
            source,
        });
    }
    Ok(out)
}

pub fn write_tracks<W: Write>(mut w: W, records: &[SingleTrackRecord]) -> Result<()> {
    writeln!(w, "# lpbf single tracks v1")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(TRACK_COLUMNS)?;
    for r in records {
        wtr.write_record([
            format!("{}", r.power),
            format!("{}", r.speed / MM),
            format!("{}", kelvin_to_celsius(r.t_b)),
            format!("{}", r.width / UM),
            format!("{}", r.length / UM),
            r.source.as_str().to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
