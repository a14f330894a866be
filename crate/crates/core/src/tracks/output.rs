//! Per-aircraft annual output file of processed segments.

use std::io::{self, Write};

use super::{AirspaceClass, TrackPoint, TrackSegment};

pub const PROCESSED_HEADER: &str =
    "time,lat,lon,altMSL_ft,altAGL_ft,speed_kt,course_deg,vertRate_ftmin,accel_ktps,airspace,segmentId";

/// A row read back from a processed file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessedRow {
    pub segment_id: usize,
    pub point: TrackPoint,
}

fn course_text(c: f64) -> String {
    let s = format!("{c:.2}");
    if s == "360.00" {
        "0.00".to_string()
    } else {
        s
    }
}

pub fn write_segments<W: Write>(w: &mut W, segments: &[TrackSegment]) -> io::Result<()> {
    writeln!(w, "{PROCESSED_HEADER}")?;
    for (id, seg) in segments.iter().enumerate() {
        for p in &seg.points {
            writeln!(
                w,
                "{},{:.6},{:.6},{:.2},{},{:.3},{},{:.2},{:.4},{},{}",
                p.time,
                p.lat,
                p.lon,
                p.alt_msl,
                p.alt_agl.map(|a| format!("{a:.2}")).unwrap_or_default(),
                p.speed,
                course_text(p.course),
                p.vert_rate,
                p.accel,
                p.airspace,
                id
            )?;
        }
    }
    Ok(())
}

pub fn read_processed(text: &str) -> Result<Vec<ProcessedRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == PROCESSED_HEADER => {}
        Some(h) => return Err(format!("unexpected header {h:?}")),
        None => return Ok(Vec::new()),
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| format!("line {}: bad {what}", n + 2);
        if c.len() != 11 {
            return Err(bad("field count"));
        }
        let f = |i: usize, what: &str| c[i].parse::<f64>().map_err(|_| bad(what));
        out.push(ProcessedRow {
            segment_id: c[10].parse().map_err(|_| bad("segmentId"))?,
            point: TrackPoint {
                time: c[0].parse().map_err(|_| bad("time"))?,
                lat: f(1, "lat")?,
                lon: f(2, "lon")?,
                alt_msl: f(3, "altMSL_ft")?,
                alt_agl: if c[4].is_empty() { None } else { Some(f(4, "altAGL_ft")?) },
                speed: f(5, "speed_kt")?,
                course: f(6, "course_deg")?,
                vert_rate: f(7, "vertRate_ftmin")?,
                accel: f(8, "accel_ktps")?,
                airspace: c[9].parse::<AirspaceClass>().map_err(|_| bad("airspace"))?,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::AircraftClass;

    #[test]
    fn roundtrip() {
        let p = TrackPoint {
            time: 1584334800,
            lat: 42.5,
            lon: -71.25,
            alt_msl: 1500.0,
            alt_agl: Some(1200.5),
            speed: 95.125,
            course: 359.999,
            vert_rate: -250.0,
            accel: 0.5,
            airspace: AirspaceClass::D,
        };
        let seg = TrackSegment {
            icao24: "A00C12".parse().unwrap(),
            aircraft_class: AircraftClass::Rotorcraft,
            points: vec![p, TrackPoint { time: p.time + 1, alt_agl: None, ..p }],
        };
        let mut buf = Vec::new();
        write_segments(&mut buf, &[seg.clone(), seg]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "1584334800,42.500000,-71.250000,1500.00,1200.50,95.125,0.00,-250.00,0.5000,D,0"
        );
        let rows = read_processed(&text).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[3].segment_id, 1);
        assert_eq!(rows[1].point.alt_agl, None);
        assert_eq!(rows[0].point.course, 0.0);
    }
}
