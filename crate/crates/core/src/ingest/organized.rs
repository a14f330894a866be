//! Organized per-aircraft hourly file format.

use std::io::{self, Write};

use crate::hour::HourStamp;
use crate::registry::Icao24;

use super::StateVector;

pub const ORGANIZED_HEADER: &str = "time,lat,lon,altBaro_ft,altGeo_ft,speed_kt,track_deg,vertRate_ftmin,onGround";

/// `YYYY-MM-DD_HH_ICAO24.csv`
pub fn organized_file_name(hour: HourStamp, icao: Icao24) -> String {
    format!("{hour}_{icao}.csv")
}

pub fn parse_organized_file_name(name: &str) -> Option<(HourStamp, Icao24)> {
    let stem = name.strip_suffix(".csv")?;
    if stem.len() != 20 || stem.as_bytes()[13] != b'_' {
        return None;
    }
    let hour: HourStamp = stem[..13].parse().ok()?;
    let icao_text = &stem[14..];
    if icao_text.len() != 6 || icao_text.bytes().any(|b| b.is_ascii_lowercase()) {
        return None;
    }
    Some((hour, icao_text.parse().ok()?))
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| format!("{x:.decimals$}")).unwrap_or_default()
}

pub fn write_organized_csv<'a, W: Write>(w: &mut W, records: impl IntoIterator<Item = &'a StateVector>) -> io::Result<()> {
    writeln!(w, "{ORGANIZED_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{:.6},{:.6},{},{},{},{},{},{}",
            r.time,
            r.lat,
            r.lon,
            opt(r.baro_alt, 2),
            opt(r.geo_alt, 2),
            opt(r.ground_speed, 3),
            opt(r.track, 2),
            opt(r.vertical_rate, 2),
            if r.on_ground { "true" } else { "false" },
        )?;
    }
    Ok(())
}

/// Reads an organized file. The address comes from the file name.
pub fn read_organized(bytes: &[u8], icao24: Icao24) -> Result<Vec<StateVector>, String> {
    let text = std::str::from_utf8(bytes).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == ORGANIZED_HEADER => {}
        Some(h) => return Err(format!("unexpected header {h:?}")),
        None => return Ok(Vec::new()),
    }
    let f = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| format!("bad number {s:?}"))
        }
    };
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 9 {
            return Err(format!("line {}: expected 9 fields", n + 2));
        }
        out.push(StateVector {
            time: c[0].parse().map_err(|_| format!("line {}: bad time", n + 2))?,
            icao24,
            lat: f(c[1])?.ok_or("missing lat")?,
            lon: f(c[2])?.ok_or("missing lon")?,
            baro_alt: f(c[3])?,
            geo_alt: f(c[4])?,
            ground_speed: f(c[5])?,
            track: f(c[6])?,
            vertical_rate: f(c[7])?,
            on_ground: c[8] == "true",
            last_position_update: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        let h = HourStamp::from_ymdh(2020, 3, 16, 5).unwrap();
        let a: Icao24 = "A00C12".parse().unwrap();
        let name = organized_file_name(h, a);
        assert_eq!(name, "2020-03-16_05_A00C12.csv");
        assert_eq!(parse_organized_file_name(&name), Some((h, a)));
        assert_eq!(parse_organized_file_name("20-03-16_05_A00CDE.csv"), None);
        assert_eq!(parse_organized_file_name("2020-03-16_05_a00c12.csv"), None);
    }

    #[test]
    fn write_then_read() {
        let a: Icao24 = "A00C12".parse().unwrap();
        let r = StateVector {
            time: 1584334800,
            icao24: a,
            lat: 42.123456,
            lon: -71.5,
            ground_speed: Some(100.0),
            track: None,
            vertical_rate: Some(-500.0),
            baro_alt: Some(1000.0),
            geo_alt: None,
            on_ground: false,
            last_position_update: None,
        };
        let mut buf = Vec::new();
        write_organized_csv(&mut buf, [&r]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1584334800,42.123456,-71.500000,1000.00,,100.000,,-500.00,false");
        assert_eq!(read_organized(&buf, a).unwrap(), vec![r]);
        assert!(read_organized(b"bad,header\n", a).is_err());
    }
}
