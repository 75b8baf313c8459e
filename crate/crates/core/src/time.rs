//! UTC timestamp parsing and hour arithmetic.

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};

use crate::error::{Error, Result};

/// Whole hours since the Unix epoch.
pub type Hour = i64;

/// Parses RFC 3339 or a naive `YYYY-MM-DD[T ]HH:MM[:SS]` taken as UTC.
pub fn parse_utc(s: &str) -> Result<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    let naive = s.trim_end_matches('Z');
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(naive, fmt) {
            return Ok(Utc.from_utc_datetime(&t));
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(naive, "%Y-%m-%d") {
        return Ok(Utc.from_utc_datetime(&d.and_hms_opt(0, 0, 0).expect("midnight")));
    }
    Err(Error::Format(format!("unparseable UTC timestamp {s:?}")))
}

/// The hour containing `t`.
pub fn floor_hour(t: &DateTime<Utc>) -> Hour {
    t.timestamp().div_euclid(3600)
}

/// The nearest whole hour; half past rounds up.
pub fn nearest_hour(t: &DateTime<Utc>) -> Hour {
    (t.timestamp() + 1800).div_euclid(3600)
}

pub fn hour_datetime(h: Hour) -> DateTime<Utc> {
    Utc.timestamp_opt(h * 3600, 0).single().expect("in range")
}

/// `YYYY-MM-DDTHH:00:00Z`.
pub fn format_hour(h: Hour) -> String {
    hour_datetime(h).format("%Y-%m-%dT%H:00:00Z").to_string()
}

pub fn format_utc(t: &DateTime<Utc>) -> String {
    if t.nanosecond() == 0 {
        t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
    } else {
        t.to_rfc3339_opts(chrono::SecondsFormat::AutoSi, true)
    }
}
