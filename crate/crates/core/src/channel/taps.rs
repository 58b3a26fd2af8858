//! Tap CSV files exported by a ray tracer, one row per path:
//!
//! ```text
//! point_index,true_distance_m,gain_db,phase_rad,delay_s,doppler_hz
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;

use super::{ChannelRealization, ChannelTap};
use crate::error::{Error, Result};
use crate::scalar::{lit, to_f64, Real};

pub const HEADER: [&str; 6] = [
    "point_index",
    "true_distance_m",
    "gain_db",
    "phase_rad",
    "delay_s",
    "doppler_hz",
];

struct Row {
    line: u64,
    true_distance: f64,
    tap: ChannelTap<f64>,
}

fn parse_field<F: std::str::FromStr>(rec: &csv::StringRecord, i: usize, line: u64) -> Result<F> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing column `{}`", HEADER[i]),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{raw}` as {}", HEADER[i]),
    })
}

pub fn read_taps<T: Real, R: Read>(reader: R, los_margin_db: T) -> Result<Vec<ChannelRealization<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if headers.iter().map(str::trim).ne(HEADER) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }

    let mut points: BTreeMap<usize, Vec<Row>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let index: usize = parse_field(&rec, 0, line)?;
        let true_distance: f64 = parse_field(&rec, 1, line)?;
        let gain_db: f64 = parse_field(&rec, 2, line)?;
        let phase: f64 = parse_field(&rec, 3, line)?;
        let delay: f64 = parse_field(&rec, 4, line)?;
        let doppler: f64 = parse_field(&rec, 5, line)?;
        if delay < 0.0 {
            return Err(Error::Validation(format!("line {line}: negative delay {delay}")));
        }
        let gain = Complex::from_polar(10f64.powf(gain_db / 20.0), phase);
        let tap = ChannelTap::new(gain, delay, doppler)
            .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        points.entry(index).or_default().push(Row {
            line,
            true_distance,
            tap,
        });
    }

    points
        .into_iter()
        .map(|(index, rows)| {
            let d = rows[0].true_distance;
            if let Some(r) = rows.iter().find(|r| r.true_distance != d) {
                return Err(Error::Validation(format!(
                    "line {}: point {index} has conflicting true distances {d} and {}",
                    r.line, r.true_distance
                )));
            }
            let taps = rows
                .iter()
                .map(|r| ChannelTap {
                    gain: Complex::new(lit(r.tap.gain.re), lit(r.tap.gain.im)),
                    delay: lit(r.tap.delay),
                    doppler: lit(r.tap.doppler),
                })
                .collect();
            ChannelRealization::new(taps, index, lit(d), los_margin_db)
        })
        .collect()
}

pub fn load_taps<T: Real>(path: impl AsRef<Path>, los_margin_db: T) -> Result<Vec<ChannelRealization<T>>> {
    read_taps(File::open(path)?, los_margin_db)
}

pub fn write_taps<T: Real, W: Write>(writer: W, realizations: &[ChannelRealization<T>]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    wtr.write_record(HEADER).map_err(io)?;
    for r in realizations {
        for t in r.taps() {
            let gain_db = 20.0 * to_f64(t.gain.norm()).log10();
            let phase = to_f64(t.gain.arg());
            wtr.write_record([
                r.trajectory_index.to_string(),
                to_f64(r.true_distance).to_string(),
                gain_db.to_string(),
                phase.to_string(),
                to_f64(t.delay).to_string(),
                to_f64(t.doppler).to_string(),
            ])
            .map_err(io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_taps<T: Real>(path: impl AsRef<Path>, realizations: &[ChannelRealization<T>]) -> Result<()> {
    write_taps(File::create(path)?, realizations)
}
