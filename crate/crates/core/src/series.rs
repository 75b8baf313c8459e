//! Paired contrast/wind samples with lagged wind, and their CSV form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::time::{self, Hour};

/// Minimum sample count for any correlation on a series.
pub const MIN_SAMPLES: usize = 8;

/// Wind at offsets `-2Δ, -Δ, +Δ, +2Δ` around each overpass.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LagSet {
    pub m2: Vec<f64>,
    pub m1: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl LagSet {
    fn map(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        let m = |v: &Vec<f64>| v.iter().map(|&u| f(u)).collect();
        LagSet {
            m2: m(&self.m2),
            m1: m(&self.m1),
            p1: m(&self.p1),
            p2: m(&self.p2),
        }
    }

    fn push(&mut self, lags: [f64; 4]) {
        self.m2.push(lags[0]);
        self.m1.push(lags[1]);
        self.p1.push(lags[2]);
        self.p2.push(lags[3]);
    }

    fn lens_ok(&self, n: usize) -> bool {
        [&self.m2, &self.m1, &self.p1, &self.p2].iter().all(|v| v.len() == n)
    }
}

/// Contrast magnitude `c` and wind `u` per overpass, plus lagged wind for
/// each sampling interval Δ (hours).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairedSeries {
    pub hours: Vec<Hour>,
    pub c: Vec<f64>,
    pub u: Vec<f64>,
    pub lags: BTreeMap<u32, LagSet>,
}

impl PairedSeries {
    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.u.len() != n || self.hours.len() != n {
            return Err(Error::Format(format!(
                "series lengths differ: c {n}, u {}, hours {}",
                self.u.len(),
                self.hours.len()
            )));
        }
        if let Some((d, _)) = self.lags.iter().find(|(_, l)| !l.lens_ok(n)) {
            return Err(Error::Format(format!("lag set Δ={d} h has the wrong length")));
        }
        Ok(())
    }

    /// Applies `f` to the wind at the overpass and every lag.
    pub fn map_wind(&self, f: impl Fn(f64) -> f64 + Copy) -> Self {
        PairedSeries {
            hours: self.hours.clone(),
            c: self.c.clone(),
            u: self.u.iter().map(|&u| f(u)).collect(),
            lags: self.lags.iter().map(|(&d, l)| (d, l.map(f))).collect(),
        }
    }

    pub fn map_contrast(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        PairedSeries {
            c: self.c.iter().zip(&self.u).map(|(&c, &u)| f(c, u)).collect(),
            ..self.clone()
        }
    }

    /// Appends one overpass; `lags` maps Δ to `[m2, m1, p1, p2]`.
    pub fn push(&mut self, hour: Hour, c: f64, u: f64, lags: &BTreeMap<u32, [f64; 4]>) {
        self.hours.push(hour);
        self.c.push(c);
        self.u.push(u);
        for (&d, &l) in lags {
            self.lags.entry(d).or_default().push(l);
        }
    }
}

/// Writes `domain,iso_utc_hour,C,U_0,U_m2,U_m1,U_p1,U_p2,delta_h`, one row
/// per overpass and Δ.
pub fn to_csv(series: &BTreeMap<String, PairedSeries>) -> String {
    let mut out = String::from("domain,iso_utc_hour,C,U_0,U_m2,U_m1,U_p1,U_p2,delta_h\n");
    for (domain, s) in series {
        for i in 0..s.len() {
            for (d, l) in &s.lags {
                writeln!(
                    out,
                    "{domain},{},{},{},{},{},{},{},{d}",
                    time::format_hour(s.hours[i]),
                    s.c[i],
                    s.u[i],
                    l.m2[i],
                    l.m1[i],
                    l.p1[i],
                    l.p2[i]
                )
                .expect("string write");
            }
        }
    }
    out
}

#[derive(Debug, Deserialize)]
struct Row {
    domain: String,
    iso_utc_hour: String,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "U_0")]
    u0: f64,
    #[serde(rename = "U_m2")]
    m2: f64,
    #[serde(rename = "U_m1")]
    m1: f64,
    #[serde(rename = "U_p1")]
    p1: f64,
    #[serde(rename = "U_p2")]
    p2: f64,
    delta_h: u32,
}

pub fn parse_csv(text: &str, origin: &str) -> Result<BTreeMap<String, PairedSeries>> {
    // (domain, hour) -> (line, C, U0, Δ -> lags)
    type Sample = (usize, f64, f64, BTreeMap<u32, [f64; 4]>);
    let mut samples: BTreeMap<(String, Hour), Sample> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    for (i, row) in rdr.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let t = time::parse_utc(&row.iso_utc_hour).map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let entry = samples
            .entry((row.domain.clone(), time::floor_hour(&t)))
            .or_insert_with(|| (line, row.c, row.u0, BTreeMap::new()));
        if entry.1 != row.c || entry.2 != row.u0 {
            return Err(Error::parse(
                origin,
                line,
                format!("C/U_0 differ from line {} for the same overpass", entry.0),
            ));
        }
        if entry.3.insert(row.delta_h, [row.m2, row.m1, row.p1, row.p2]).is_some() {
            return Err(Error::parse(origin, line, format!("duplicate Δ={} h row", row.delta_h)));
        }
    }
    let mut by_domain: BTreeMap<String, Vec<(Hour, Sample)>> = BTreeMap::new();
    for ((domain, hour), s) in samples {
        by_domain.entry(domain).or_default().push((hour, s));
    }
    let mut out = BTreeMap::new();
    for (domain, rows) in by_domain {
        let mut deltas: Vec<u32> = rows.iter().flat_map(|(_, s)| s.3.keys().copied()).collect();
        deltas.sort_unstable();
        deltas.dedup();
        let complete: Vec<u32> = deltas
            .iter()
            .copied()
            .filter(|d| rows.iter().all(|(_, s)| s.3.contains_key(d)))
            .collect();
        if complete.len() != deltas.len() {
            warn!("{origin}: domain {domain}: dropping Δ values missing for some overpasses");
        }
        let mut s = PairedSeries::default();
        for (hour, (_, c, u, lags)) in rows {
            let lags = lags.into_iter().filter(|(d, _)| complete.contains(d)).collect();
            s.push(hour, c, u, &lags);
        }
        out.insert(domain, s);
    }
    Ok(out)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<BTreeMap<String, PairedSeries>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}
