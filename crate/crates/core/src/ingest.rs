//! Sightings, scene catalog and wind series ingestion; collocation, hourly
//! binning and yearly summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, Utc};
use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filament::{point_in_ring, DomainPolygon};
use crate::gmf::Polarization;
use crate::series::PairedSeries;
use crate::time::{self, Hour};

/// Sightings database of origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Source {
    A,
    B,
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(Source::A),
            "B" | "b" => Ok(Source::B),
            other => Err(Error::Format(format!("unknown source {other:?}"))),
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::A => "A",
            Source::B => "B",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sighting {
    pub source: Source,
    pub t: DateTime<Utc>,
    pub lat: f64,
    pub lon: f64,
    pub count: u32,
    pub dead: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SightingBounds {
    pub lat: (f64, f64),
    pub lon: (f64, f64),
}

impl Default for SightingBounds {
    fn default() -> Self {
        SightingBounds {
            lat: (40.0, 55.0),
            lon: (-72.0, -55.0),
        }
    }
}

/// A row that failed to parse or validate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

fn parse_flag(s: &str) -> std::result::Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "f" | "no" | "n" => Ok(false),
        "1" | "true" | "t" | "yes" | "y" => Ok(true),
        other => Err(format!("bad dead_flag {other:?}")),
    }
}

fn column(headers: &csv::StringRecord, name: &str, origin: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::parse(origin, 1, format!("missing column {name}")))
}

fn field<T: FromStr>(rec: &csv::StringRecord, idx: usize, name: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    let raw = rec.get(idx).ok_or_else(|| format!("missing {name}"))?.trim();
    raw.parse().map_err(|e| format!("bad {name} {raw:?}: {e}"))
}

fn sighting_row(
    rec: &csv::StringRecord,
    cols: &[usize; 6],
    bounds: &SightingBounds,
) -> std::result::Result<Sighting, String> {
    let source: Source = field(rec, cols[0], "source")?;
    let t = time::parse_utc(rec.get(cols[1]).unwrap_or("")).map_err(|e| e.to_string())?;
    let lat: f64 = field(rec, cols[2], "lat")?;
    let lon: f64 = field(rec, cols[3], "lon")?;
    let count: u32 = field(rec, cols[4], "count")?;
    let dead = parse_flag(rec.get(cols[5]).unwrap_or(""))?;
    if count < 1 {
        return Err("count must be at least 1".into());
    }
    if !(bounds.lat.0..=bounds.lat.1).contains(&lat) || !(bounds.lon.0..=bounds.lon.1).contains(&lon) {
        return Err(format!("position ({lat}, {lon}) outside the study bounds"));
    }
    Ok(Sighting {
        source,
        t,
        lat,
        lon,
        count,
        dead,
    })
}

/// Parses `source,iso_utc,lat,lon,count,dead_flag`.
///
/// Bad rows are collected as rejections; a missing header column is an error.
pub fn parse_sightings(text: &str, origin: &str, bounds: &SightingBounds) -> Result<(Vec<Sighting>, Vec<Rejection>)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|e| Error::parse(origin, 1, e.to_string()))?
        .clone();
    let mut cols = [0; 6];
    for (slot, name) in cols
        .iter_mut()
        .zip(["source", "iso_utc", "lat", "lon", "count", "dead_flag"])
    {
        *slot = column(&headers, name, origin)?;
    }
    let mut ok = Vec::new();
    let mut rejected = Vec::new();
    for rec in rdr.records() {
        let (line, parsed) = match rec {
            Ok(rec) => {
                let line = rec.position().map_or(0, |p| p.line() as usize);
                (line, sighting_row(&rec, &cols, bounds))
            }
            Err(e) => (e.position().map_or(0, |p| p.line() as usize), Err(e.to_string())),
        };
        match parsed {
            Ok(s) => ok.push(s),
            Err(reason) => rejected.push(Rejection { line, reason }),
        }
    }
    for r in &rejected {
        warn!("{origin}: rejected {r}");
    }
    Ok((ok, rejected))
}

pub fn load_sightings(path: impl AsRef<Path>, bounds: &SightingBounds) -> Result<(Vec<Sighting>, Vec<Rejection>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sightings(&text, &path.display().to_string(), bounds)
}

pub const DEDUP_WINDOW_S: i64 = 24 * 3600;
pub const DEDUP_DEGREES: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DedupResult {
    /// Surviving records ordered by time.
    pub merged: Vec<Sighting>,
    /// B records removed as duplicates.
    pub removed: usize,
    /// Dead-flagged records dropped before matching.
    pub dead_dropped: usize,
    /// Unmatched B records whose only candidates were claimed by closer pairs.
    pub blocked: usize,
}

fn order_key(s: &Sighting) -> (i64, u32, i64, i64, u32) {
    (
        s.t.timestamp(),
        s.t.timestamp_subsec_nanos(),
        (s.lat * 1e7).round() as i64,
        (s.lon * 1e7).round() as i64,
        s.count,
    )
}

fn is_candidate(a: &Sighting, b: &Sighting) -> bool {
    const SLACK: f64 = 1e-9;
    a.count == b.count
        && (a.t - b.t).num_milliseconds().abs() <= DEDUP_WINDOW_S * 1000
        && (a.lat - b.lat).abs() <= DEDUP_DEGREES + SLACK
        && (a.lon - b.lon).abs() <= DEDUP_DEGREES + SLACK
}

/// Removes B copies of cross-source duplicates.
///
/// Candidate pairs are accepted in order of increasing time separation; each
/// record is matched at most once.
pub fn dedup_sightings(a: &[Sighting], b: &[Sighting]) -> DedupResult {
    let dead_dropped = a.iter().chain(b).filter(|s| s.dead).count();
    let mut a: Vec<&Sighting> = a.iter().filter(|s| !s.dead).collect();
    let mut b: Vec<&Sighting> = b.iter().filter(|s| !s.dead).collect();
    a.sort_by_key(|s| order_key(s));
    b.sort_by_key(|s| order_key(s));

    let mut pairs = Vec::new();
    for (j, sb) in b.iter().enumerate() {
        let lo = sb.t - chrono::Duration::seconds(DEDUP_WINDOW_S + 1);
        let start = a.partition_point(|s| s.t < lo);
        for (i, sa) in a.iter().enumerate().skip(start) {
            if (sa.t - sb.t).num_seconds() > DEDUP_WINDOW_S + 1 {
                break;
            }
            if is_candidate(sa, sb) {
                pairs.push(((sa.t - sb.t).num_milliseconds().abs(), i, j));
            }
        }
    }
    pairs.sort_unstable();
    let mut a_used = vec![false; a.len()];
    let mut b_used = vec![false; b.len()];
    let mut has_candidate = vec![false; b.len()];
    for &(_, i, j) in &pairs {
        has_candidate[j] = true;
        if !a_used[i] && !b_used[j] {
            a_used[i] = true;
            b_used[j] = true;
        }
    }
    let removed = b_used.iter().filter(|&&u| u).count();
    let blocked = (0..b.len()).filter(|&j| has_candidate[j] && !b_used[j]).count();
    let mut merged: Vec<Sighting> = a
        .iter()
        .map(|s| (*s).clone())
        .chain(b.iter().zip(&b_used).filter(|(_, &u)| !u).map(|(s, _)| (*s).clone()))
        .collect();
    merged.sort_by_key(|s| (order_key(s), s.source));
    DedupResult {
        merged,
        removed,
        dead_dropped,
        blocked,
    }
}

/// Splits by source and deduplicates.
pub fn dedup_all(sightings: &[Sighting]) -> DedupResult {
    let (a, b): (Vec<Sighting>, Vec<Sighting>) = sightings.iter().cloned().partition(|s| s.source == Source::A);
    dedup_sightings(&a, &b)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneRecord {
    pub scene_id: String,
    pub t: DateTime<Utc>,
    pub polarization: Polarization,
    pub grid_path: PathBuf,
    /// Bounding ring as `(lat, lon)` vertices.
    pub ring: Vec<(f64, f64)>,
    pub track_heading: f64,
}

#[derive(Debug, Deserialize)]
struct SceneRow {
    scene_id: String,
    iso_utc: String,
    pol: String,
    grid_path: String,
    ring: String,
    track_heading: f64,
}

fn parse_ring(s: &str) -> std::result::Result<Vec<(f64, f64)>, String> {
    let ring: Vec<(f64, f64)> = s
        .split(';')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            let mut it = v.split_whitespace().map(f64::from_str);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(lat)), Some(Ok(lon)), None) => Ok((lat, lon)),
                _ => Err(format!("bad ring vertex {v:?}")),
            }
        })
        .collect::<std::result::Result<_, _>>()?;
    if ring.len() < 3 {
        return Err(format!("ring needs at least 3 vertices, got {}", ring.len()));
    }
    Ok(ring)
}

/// Parses `scene_id,iso_utc,pol,grid_path,ring,track_heading`, the ring
/// written as `lat lon;lat lon;...`.
///
/// Relative grid paths resolve against `base`.
pub fn parse_scene_catalog(text: &str, origin: &str, base: &Path) -> Result<Vec<SceneRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, row) in rdr.deserialize::<SceneRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let t = time::parse_utc(&row.iso_utc).map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let polarization: Polarization = row
            .pol
            .parse()
            .map_err(|e: Error| Error::parse(origin, line, e.to_string()))?;
        let ring = parse_ring(&row.ring).map_err(|m| Error::parse(origin, line, m))?;
        if !ids.insert(row.scene_id.clone()) {
            return Err(Error::parse(
                origin,
                line,
                format!("duplicate scene_id {}", row.scene_id),
            ));
        }
        out.push(SceneRecord {
            scene_id: row.scene_id,
            t,
            polarization,
            grid_path: base.join(row.grid_path),
            ring,
            track_heading: row.track_heading,
        });
    }
    Ok(out)
}

pub fn load_scene_catalog(path: impl AsRef<Path>) -> Result<Vec<SceneRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scene_catalog(&text, &path.display().to_string(), base)
}

/// Writes the catalog with paths relative to `base` where possible.
pub fn scene_catalog_csv(scenes: &[SceneRecord], base: &Path) -> String {
    let mut out = String::from("scene_id,iso_utc,pol,grid_path,ring,track_heading\n");
    for s in scenes {
        let path = s.grid_path.strip_prefix(base).unwrap_or(&s.grid_path);
        let ring: Vec<String> = s.ring.iter().map(|(la, lo)| format!("{la} {lo}")).collect();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            s.scene_id,
            time::format_utc(&s.t),
            s.polarization,
            path.display(),
            ring.join(";"),
            s.track_heading
        )
        .expect("string write");
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindRecord {
    pub hour: Hour,
    pub lat: f64,
    pub lon: f64,
    pub u10: f64,
    pub v10: f64,
}

impl WindRecord {
    pub fn speed(&self) -> f64 {
        self.u10.hypot(self.v10)
    }
}

pub(crate) fn coord_key(v: f64) -> i64 {
    (v * 1e6).round() as i64
}

/// Hourly wind records keyed by hour and position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindSeries {
    records: BTreeMap<(Hour, i64, i64), WindRecord>,
}

impl WindSeries {
    /// Inserts a record; returns true when it replaced an earlier one.
    pub fn insert(&mut self, r: WindRecord) -> bool {
        self.records
            .insert((r.hour, coord_key(r.lat), coord_key(r.lon)), r)
            .is_some()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> impl Iterator<Item = &WindRecord> {
        self.records.values()
    }

    pub fn get(&self, hour: Hour, lat: f64, lon: f64) -> Option<&WindRecord> {
        self.records.get(&(hour, coord_key(lat), coord_key(lon)))
    }

    pub fn speed_at(&self, hour: Hour, lat: f64, lon: f64) -> Option<f64> {
        self.get(hour, lat, lon).map(WindRecord::speed)
    }

    pub fn to_field(&self) -> crate::sweep::WindField {
        crate::sweep::WindField::from_components(self.records().map(|r| (r.hour, r.lat, r.lon, r.u10, r.v10)))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iso_utc,lat,lon,u10,v10\n");
        for r in self.records() {
            writeln!(
                out,
                "{},{},{},{},{}",
                time::format_hour(r.hour),
                r.lat,
                r.lon,
                r.u10,
                r.v10
            )
            .expect("string write");
        }
        out
    }
}

#[derive(Debug, Deserialize)]
struct WindRow {
    iso_utc: String,
    lat: f64,
    lon: f64,
    u10: f64,
    v10: f64,
}

/// Parses `iso_utc,lat,lon,u10,v10`; a repeated (hour, lat, lon) keeps the
/// last row.
pub fn parse_wind_series(text: &str, origin: &str) -> Result<WindSeries> {
    let mut out = WindSeries::default();
    if text.trim().is_empty() {
        return Ok(out);
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    for (i, row) in rdr.deserialize::<WindRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::parse(origin, line, e.to_string()))?;
        let t = time::parse_utc(&row.iso_utc).map_err(|e| Error::parse(origin, line, e.to_string()))?;
        if ![row.lat, row.lon, row.u10, row.v10].iter().all(|v| v.is_finite()) {
            return Err(Error::parse(origin, line, "non-finite value"));
        }
        let replaced = out.insert(WindRecord {
            hour: time::nearest_hour(&t),
            lat: row.lat,
            lon: row.lon,
            u10: row.u10,
            v10: row.v10,
        });
        if replaced {
            warn!(
                "{origin}:{line}: duplicate wind record for {}, keeping the later row",
                row.iso_utc
            );
        }
    }
    Ok(out)
}

pub fn load_wind_series(path: impl AsRef<Path>) -> Result<WindSeries> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_wind_series(&text, &path.display().to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Match {
    pub sighting: usize,
    pub scene: usize,
}

/// Pairs sharing a UTC calendar date with the sighting inside the scene ring.
pub fn collocate_day(sightings: &[Sighting], scenes: &[SceneRecord]) -> Vec<Match> {
    let mut by_date: BTreeMap<NaiveDate, Vec<usize>> = BTreeMap::new();
    for (k, s) in scenes.iter().enumerate() {
        by_date.entry(s.t.date_naive()).or_default().push(k);
    }
    let mut out = Vec::new();
    for (i, s) in sightings.iter().enumerate() {
        if let Some(ks) = by_date.get(&s.t.date_naive()) {
            for &k in ks {
                if point_in_ring(&scenes[k].ring, s.lat, s.lon) {
                    out.push(Match { sighting: i, scene: k });
                }
            }
        }
    }
    out
}

/// One domain contrast measured on one scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSample {
    pub domain: String,
    pub t: DateTime<Utc>,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindRestriction {
    pub min: f64,
    pub max: f64,
}

impl Default for WindRestriction {
    fn default() -> Self {
        WindRestriction { min: 1.0, max: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BinCounts {
    pub samples: usize,
    pub bins: usize,
    pub kept: usize,
    pub missing_wind: usize,
    pub out_of_range: usize,
    pub unknown_domain: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinResult {
    pub series: BTreeMap<String, PairedSeries>,
    pub counts: BinCounts,
}

/// Averages samples per domain and nearest UTC hour and pairs each bin with
/// gridbox wind at the hour and at `±Δ, ±2Δ` for every Δ.
///
/// Bins whose overpass wind lies outside the restriction, or with a
/// non-positive lagged wind, are dropped; so are bins with any wind missing.
pub fn bin_hourly(
    samples: &[SceneSample],
    domains: &[DomainPolygon],
    wind: &WindSeries,
    deltas: &[u32],
    restriction: &WindRestriction,
) -> BinResult {
    let gridbox: BTreeMap<&str, (f64, f64)> = domains.iter().map(|d| (d.name.as_str(), d.era5_gridbox)).collect();
    let mut counts = BinCounts {
        samples: samples.len(),
        ..BinCounts::default()
    };
    let mut bins: BTreeMap<(&str, Hour), (f64, usize)> = BTreeMap::new();
    for s in samples {
        if !gridbox.contains_key(s.domain.as_str()) {
            counts.unknown_domain += 1;
            continue;
        }
        let e = bins
            .entry((s.domain.as_str(), time::nearest_hour(&s.t)))
            .or_insert((0.0, 0));
        e.0 += s.c;
        e.1 += 1;
    }
    counts.bins = bins.len();
    let mut series: BTreeMap<String, PairedSeries> = BTreeMap::new();
    'bins: for ((domain, hour), (sum, n)) in bins {
        let (lat, lon) = gridbox[domain];
        let Some(u0) = wind.speed_at(hour, lat, lon) else {
            counts.missing_wind += 1;
            continue;
        };
        let mut lags = BTreeMap::new();
        let mut positive = true;
        for &d in deltas {
            let d = i64::from(d);
            let mut l = [0.0; 4];
            for (slot, k) in l.iter_mut().zip([-2, -1, 1, 2]) {
                let Some(v) = wind.speed_at(hour + k * d, lat, lon) else {
                    counts.missing_wind += 1;
                    continue 'bins;
                };
                positive &= v > 0.0;
                *slot = v;
            }
            lags.insert(d as u32, l);
        }
        if !(restriction.min..=restriction.max).contains(&u0) || !positive {
            counts.out_of_range += 1;
            continue;
        }
        // a single-sample bin passes through unchanged
        let c = if n == 1 { sum } else { sum / n as f64 };
        series.entry(domain.to_string()).or_default().push(hour, c, u0, &lags);
        counts.kept += 1;
    }
    BinResult { series, counts }
}

/// Inclusive month/day window within each year.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeasonWindow {
    pub start: (u32, u32),
    pub end: (u32, u32),
}

impl Default for SeasonWindow {
    fn default() -> Self {
        SeasonWindow {
            start: (5, 15),
            end: (8, 15),
        }
    }
}

impl SeasonWindow {
    pub fn validate(&self) -> Result<()> {
        let ok = |(m, d): (u32, u32)| NaiveDate::from_ymd_opt(2000, m, d).is_some();
        if !ok(self.start) || !ok(self.end) {
            return Err(Error::Config(format!("bad season window {self:?}")));
        }
        if self.start >= self.end {
            return Err(Error::Config("season window start must precede its end".into()));
        }
        Ok(())
    }

    pub fn contains(&self, t: &DateTime<Utc>) -> bool {
        let md = (t.month(), t.day());
        self.start <= md && md <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeasonRow {
    pub year: i32,
    pub n: usize,
    pub mean_c: f64,
    pub std_c: f64,
    pub mean_u: f64,
    pub std_u: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Per-year mean and population standard deviation of C and U inside the
/// window.
pub fn seasonal_summary(s: &PairedSeries, window: &SeasonWindow) -> Vec<SeasonRow> {
    let mut years: BTreeMap<i32, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for i in 0..s.len() {
        let t = time::hour_datetime(s.hours[i]);
        if window.contains(&t) {
            let e = years.entry(t.year()).or_default();
            e.0.push(s.c[i]);
            e.1.push(s.u[i]);
        }
    }
    years
        .into_iter()
        .map(|(year, (c, u))| {
            let (mean_c, std_c) = mean_std(&c);
            let (mean_u, std_u) = mean_std(&u);
            SeasonRow {
                year,
                n: c.len(),
                mean_c,
                std_c,
                mean_u,
                std_u,
            }
        })
        .collect()
}

pub fn seasonal_csv(rows: &BTreeMap<String, Vec<SeasonRow>>) -> String {
    let mut out = String::from("domain,year,n,mean_c,std_c,mean_u,std_u\n");
    for (d, rs) in rows {
        for r in rs {
            writeln!(
                out,
                "{d},{},{},{},{},{},{}",
                r.year, r.n, r.mean_c, r.std_c, r.mean_u, r.std_u
            )
            .expect("string write");
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct YearSummary {
    pub year: i32,
    pub groups: usize,
    pub individuals: u64,
    pub scenes: usize,
    pub scenes_with_whales: usize,
    pub groups_in_scenes: usize,
    pub individuals_in_scenes: u64,
}

fn pct(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl YearSummary {
    pub fn scenes_with_whales_pct(&self) -> f64 {
        pct(self.scenes_with_whales as u64, self.scenes as u64)
    }

    pub fn groups_in_scenes_pct(&self) -> f64 {
        pct(self.groups_in_scenes as u64, self.groups as u64)
    }

    pub fn individuals_in_scenes_pct(&self) -> f64 {
        pct(self.individuals_in_scenes, self.individuals)
    }
}

/// Yearly counts. A sighting seen in several scenes counts once.
pub fn summarize_counts(matches: &[Match], scenes: &[SceneRecord], sightings: &[Sighting]) -> Vec<YearSummary> {
    let mut rows: BTreeMap<i32, YearSummary> = BTreeMap::new();
    fn row(rows: &mut BTreeMap<i32, YearSummary>, year: i32) -> &mut YearSummary {
        rows.entry(year).or_insert_with(|| YearSummary {
            year,
            ..YearSummary::default()
        })
    }
    for s in sightings {
        let r = row(&mut rows, s.t.year());
        r.groups += 1;
        r.individuals += u64::from(s.count);
    }
    for sc in scenes {
        row(&mut rows, sc.t.year()).scenes += 1;
    }
    let matched_scenes: BTreeSet<usize> = matches.iter().map(|m| m.scene).collect();
    let matched_sightings: BTreeSet<usize> = matches.iter().map(|m| m.sighting).collect();
    for &k in &matched_scenes {
        if let Some(r) = rows.get_mut(&scenes[k].t.year()) {
            r.scenes_with_whales += 1;
        }
    }
    for &i in &matched_sightings {
        let s = &sightings[i];
        if let Some(r) = rows.get_mut(&s.t.year()) {
            r.groups_in_scenes += 1;
            r.individuals_in_scenes += u64::from(s.count);
        }
    }
    rows.into_values().collect()
}

pub fn summary_csv(rows: &[YearSummary]) -> String {
    let mut out = String::from(
        "year,groups,individuals,scenes,scenes_with_whales,scenes_with_whales_pct,\
         groups_in_scenes,individuals_in_scenes,groups_in_scenes_pct,individuals_in_scenes_pct\n",
    );
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.year,
            r.groups,
            r.individuals,
            r.scenes,
            r.scenes_with_whales,
            r.scenes_with_whales_pct(),
            r.groups_in_scenes,
            r.individuals_in_scenes,
            r.groups_in_scenes_pct(),
            r.individuals_in_scenes_pct()
        )
        .expect("string write");
    }
    out
}
