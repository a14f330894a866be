//! UTC hour stamps used to name raw files, unknown-branch directories and
//! organized per-aircraft files.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

/// One UTC hour of raw data, e.g. `2020-03-16_05`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HourStamp {
    date: NaiveDate,
    hour: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid hour stamp: {0:?}")]
pub struct HourStampError(pub String);

impl HourStamp {
    pub fn new(date: NaiveDate, hour: u8) -> Option<Self> {
        (hour < 24).then_some(Self { date, hour })
    }

    pub fn from_ymdh(year: i32, month: u32, day: u32, hour: u8) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).and_then(|d| Self::new(d, hour))
    }

    /// Hour containing the given unix time.
    pub fn from_unix(secs: i64) -> Option<Self> {
        let dt = chrono::DateTime::from_timestamp(secs, 0)?.naive_utc();
        Self::new(dt.date(), dt.hour() as u8)
    }

    pub fn date(&self) -> NaiveDate {
        self.date
    }

    pub fn hour(&self) -> u8 {
        self.hour
    }

    pub fn year(&self) -> i32 {
        self.date.year()
    }

    /// Unix time of the first second of the hour.
    pub fn start_unix(&self) -> i64 {
        let t = NaiveTime::from_hms_opt(u32::from(self.hour), 0, 0).expect("hour < 24");
        NaiveDateTime::new(self.date, t).and_utc().timestamp()
    }

    /// Finds the first `YYYY-MM-DD[-_ ]HH` group inside a file name such as
    /// `states_2020-06-22-05.csv.gz`.
    pub fn find_in(name: &str) -> Option<Self> {
        let b = name.as_bytes();
        if b.len() < 13 {
            return None;
        }
        for start in 0..=b.len() - 13 {
            let w = &b[start..start + 13];
            let digits = |r: std::ops::Range<usize>| w[r].iter().all(u8::is_ascii_digit);
            if digits(0..4)
                && w[4] == b'-'
                && digits(5..7)
                && w[7] == b'-'
                && digits(8..10)
                && matches!(w[10], b'-' | b'_' | b' ' | b'T')
                && digits(11..13)
            {
                let s = &name[start..start + 13];
                if let Ok(h) = format!("{}_{}", &s[..10], &s[11..]).parse() {
                    return Some(h);
                }
            }
        }
        None
    }
}

impl fmt::Display for HourStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{:02}", self.date.format("%Y-%m-%d"), self.hour)
    }
}

impl FromStr for HourStamp {
    type Err = HourStampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || HourStampError(s.to_string());
        let (d, h) = s.split_once('_').ok_or_else(err)?;
        if h.len() != 2 {
            return Err(err());
        }
        let date = NaiveDate::parse_from_str(d, "%Y-%m-%d").map_err(|_| err())?;
        let hour: u8 = h.parse().map_err(|_| err())?;
        Self::new(date, hour).ok_or_else(err)
    }
}
