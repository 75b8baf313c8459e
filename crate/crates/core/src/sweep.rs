//! Exponent sweep of contrast/wind dependence, scene wind interpolation and
//! the `(V/6)^x` contrast adjustment.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use crate::depstats::{dcor, decompose_pearson, pearson, solve_measurement_model, Components};
use crate::error::{Error, Result};
use crate::ingest::coord_key;
use crate::raster::Grid;
use crate::series::{PairedSeries, MIN_SAMPLES};
use crate::time::{self, Hour};

/// Wind speed left unchanged by the adjustment, m/s.
pub const REFERENCE_WIND: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
    pub deltas: Vec<u32>,
    pub x_star: f64,
    /// Sweeps whose best |Pearson| is below this are flagged low-confidence.
    pub low_confidence_below: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            x_min: -5.0,
            x_max: 5.0,
            step: 0.1,
            deltas: vec![1, 2, 5],
            x_star: 0.8,
            low_confidence_below: 0.2,
        }
    }
}

impl SweepConfig {
    /// Exponents from `x_min` to `x_max`, zero excluded.
    ///
    /// Points are `k / (1/step)` when `1/step` is an integer, so decimal
    /// steps land on exact decimal values.
    pub fn x_grid(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.x_max > self.x_min) {
            return Err(Error::Config(format!(
                "bad sweep range {}..{} step {}",
                self.x_min, self.x_max, self.step
            )));
        }
        let inv = 1.0 / self.step;
        let exact = (inv - inv.round()).abs() < 1e-9;
        let at = |k: i64| {
            if exact {
                k as f64 / inv.round()
            } else {
                k as f64 * self.step
            }
        };
        let k0 = (self.x_min / self.step).round() as i64;
        let k1 = (self.x_max / self.step).round() as i64;
        Ok((k0..=k1).filter(|&k| k != 0).map(at).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub x: f64,
    /// Signed Pearson correlation of C and U^x.
    pub pearson: f64,
    pub abs_pearson: f64,
    pub dcor: f64,
    /// |linear| and |nonlinear| components per Δ; `None` when unavailable.
    pub components: BTreeMap<u32, Option<Components>>,
}

/// Index of the best point of each curve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Argmax {
    pub abs_pearson: usize,
    pub dcor: usize,
    pub linear: BTreeMap<u32, Option<usize>>,
    pub nonlinear: BTreeMap<u32, Option<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceReport {
    pub points: Vec<SweepPoint>,
    pub deltas: Vec<u32>,
    pub argmax: Argmax,
    pub x_star: f64,
    pub low_confidence: bool,
}

fn argmax_by(values: impl Iterator<Item = Option<f64>>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Correlations of C against U^x over the configured exponents.
///
/// The power is applied to the overpass wind and to every lag before the
/// measurement model is solved.
pub fn sweep_exponent(s: &PairedSeries, cfg: &SweepConfig) -> Result<DependenceReport> {
    s.validate()?;
    if s.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData {
            needed: MIN_SAMPLES,
            got: s.len(),
        });
    }
    let min_u =
        s.u.iter()
            .chain(
                s.lags
                    .values()
                    .flat_map(|l| l.m2.iter().chain(&l.m1).chain(&l.p1).chain(&l.p2)),
            )
            .fold(f64::INFINITY, |a, &b| a.min(b));
    if !(min_u > 0.0) {
        return Err(Error::Format(format!("wind speed {min_u} is not positive")));
    }
    let mut points = Vec::new();
    for x in cfg.x_grid()? {
        let sx = s.map_wind(|u| u.powf(x));
        let r = pearson(&sx.c, &sx.u)?;
        let d = dcor(&sx.c, &sx.u)?;
        let mut components = BTreeMap::new();
        for &delta in &cfg.deltas {
            let sol = solve_measurement_model(&sx, delta)?;
            let comp = decompose_pearson(&sol, sol.var_c, sol.var_u).map(|c| Components {
                linear: c.linear.abs(),
                nonlinear: c.nonlinear.abs(),
            });
            components.insert(delta, comp);
        }
        points.push(SweepPoint {
            x,
            pearson: r,
            abs_pearson: r.abs(),
            dcor: d,
            components,
        });
    }
    let argmax = Argmax {
        abs_pearson: argmax_by(points.iter().map(|p| Some(p.abs_pearson))).expect("non-empty grid"),
        dcor: argmax_by(points.iter().map(|p| Some(p.dcor))).expect("non-empty grid"),
        linear: cfg
            .deltas
            .iter()
            .map(|&d| (d, argmax_by(points.iter().map(|p| p.components[&d].map(|c| c.linear)))))
            .collect(),
        nonlinear: cfg
            .deltas
            .iter()
            .map(|&d| {
                (
                    d,
                    argmax_by(points.iter().map(|p| p.components[&d].map(|c| c.nonlinear))),
                )
            })
            .collect(),
    };
    let low_confidence = points[argmax.abs_pearson].abs_pearson < cfg.low_confidence_below;
    Ok(DependenceReport {
        points,
        deltas: cfg.deltas.clone(),
        argmax,
        x_star: cfg.x_star,
        low_confidence,
    })
}

impl DependenceReport {
    /// `x,abs_pearson,dcor,lin_d1,nonlin_d1,...`; empty cells where the
    /// model solution is unavailable.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,abs_pearson,dcor");
        for d in &self.deltas {
            write!(out, ",lin_d{d},nonlin_d{d}").expect("string write");
        }
        out.push('\n');
        for p in &self.points {
            write!(out, "{},{},{}", p.x, p.abs_pearson, p.dcor).expect("string write");
            for d in &self.deltas {
                match p.components.get(d).copied().flatten() {
                    Some(c) => write!(out, ",{},{}", c.linear, c.nonlinear),
                    None => write!(out, ",,"),
                }
                .expect("string write");
            }
            out.push('\n');
        }
        out
    }

    pub fn best_abs_pearson(&self) -> &SweepPoint {
        &self.points[self.argmax.abs_pearson]
    }

    pub fn best_dcor(&self) -> &SweepPoint {
        &self.points[self.argmax.dcor]
    }
}

/// Hourly 10-m wind on a regular lat/lon lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    lats: Vec<f64>,
    lons: Vec<f64>,
    /// Speed per hour, lat-major; `None` where no record exists.
    speed: BTreeMap<Hour, Vec<Option<f64>>>,
}

impl WindField {
    /// Builds the lattice from `(hour, lat, lon, u10, v10)` records.
    pub fn from_components(records: impl IntoIterator<Item = (Hour, f64, f64, f64, f64)>) -> Self {
        let records: Vec<_> = records.into_iter().collect();
        let mut lats: Vec<i64> = records.iter().map(|r| coord_key(r.1)).collect();
        let mut lons: Vec<i64> = records.iter().map(|r| coord_key(r.2)).collect();
        lats.sort_unstable();
        lats.dedup();
        lons.sort_unstable();
        lons.dedup();
        let mut speed: BTreeMap<Hour, Vec<Option<f64>>> = BTreeMap::new();
        for &(h, lat, lon, u, v) in &records {
            let i = lats.binary_search(&coord_key(lat)).expect("present");
            let j = lons.binary_search(&coord_key(lon)).expect("present");
            let cells = speed.entry(h).or_insert_with(|| vec![None; lats.len() * lons.len()]);
            cells[i * lons.len() + j] = Some(u.hypot(v));
        }
        WindField {
            lats: lats.iter().map(|&k| k as f64 / 1e6).collect(),
            lons: lons.iter().map(|&k| k as f64 / 1e6).collect(),
            speed,
        }
    }

    pub fn hours(&self) -> impl Iterator<Item = Hour> + '_ {
        self.speed.keys().copied()
    }

    fn bracket(axis: &[f64], v: f64) -> Option<(usize, usize, f64)> {
        const EPS: f64 = 1e-9;
        if axis.len() == 1 {
            return ((axis[0] - v).abs() <= EPS).then_some((0, 0, 0.0));
        }
        if v < axis[0] - EPS || v > axis[axis.len() - 1] + EPS {
            return None;
        }
        let k = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1);
        let t = ((v - axis[k - 1]) / (axis[k] - axis[k - 1])).clamp(0.0, 1.0);
        Some((k - 1, k, t))
    }

    /// Bilinear speed at `(lat, lon)` for one hour.
    pub fn speed_at(&self, hour: Hour, lat: f64, lon: f64) -> Result<f64> {
        let cells = self
            .speed
            .get(&hour)
            .ok_or_else(|| Error::Coverage(format!("no wind field at {}", time::format_hour(hour))))?;
        let (i0, i1, ti) = Self::bracket(&self.lats, lat)
            .ok_or_else(|| Error::Coverage(format!("latitude {lat} outside the wind field")))?;
        let (j0, j1, tj) = Self::bracket(&self.lons, lon)
            .ok_or_else(|| Error::Coverage(format!("longitude {lon} outside the wind field")))?;
        let n = self.lons.len();
        let cell = |i: usize, j: usize| {
            cells[i * n + j].ok_or_else(|| {
                Error::Coverage(format!(
                    "missing wind cell ({}, {}) at {}",
                    self.lats[i],
                    self.lons[j],
                    time::format_hour(hour)
                ))
            })
        };
        let (a, b, c, d) = (cell(i0, j0)?, cell(i0, j1)?, cell(i1, j0)?, cell(i1, j1)?);
        let top = a + tj * (b - a);
        let bottom = c + tj * (d - c);
        Ok(top + ti * (bottom - top))
    }
}

/// Wind speed at every pixel centre of `scene` for the hour nearest `t`.
pub fn interpolate_wind(field: &WindField, scene: &Grid, t: &DateTime<Utc>) -> Result<Grid> {
    let (first, last) = match (field.speed.keys().next(), field.speed.keys().next_back()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::Coverage("empty wind field".into())),
    };
    let secs = t.timestamp();
    if secs < first * 3600 || secs > last * 3600 {
        return Err(Error::Coverage(format!(
            "{} outside wind field time range {}..{}",
            time::format_utc(t),
            time::format_hour(first),
            time::format_hour(last)
        )));
    }
    let hour = time::nearest_hour(t);
    let mut values = Vec::with_capacity(scene.len());
    for r in 0..scene.nrows() {
        for c in 0..scene.ncols() {
            let (lat, lon) = scene.pixel_center(r, c);
            values.push(field.speed_at(hour, lat, lon)?);
        }
    }
    Ok(scene.like(values, vec![true; scene.len()]))
}

/// Multiplies contrast by `(V/6)^x_star`.
///
/// Valid pixels with non-positive wind are invalidated; their count is
/// returned alongside the grid.
pub fn adjust_contrast(c: &Grid, wind: &Grid, x_star: f64) -> Result<(Grid, usize)> {
    c.ensure_same_geometry(wind, "wind field")?;
    let mut invalidated = 0;
    let mut values = Vec::with_capacity(c.len());
    let mut valid = Vec::with_capacity(c.len());
    for k in 0..c.len() {
        if !c.validity()[k] {
            values.push(f64::NAN);
            valid.push(false);
            continue;
        }
        let v = wind.values()[k];
        if wind.validity()[k] && v > 0.0 {
            values.push(c.values()[k] * (v / REFERENCE_WIND).powf(x_star));
            valid.push(true);
        } else {
            invalidated += 1;
            values.push(f64::NAN);
            valid.push(false);
        }
    }
    if invalidated > 0 {
        log::warn!("adjustment invalidated {invalidated} pixels with non-positive wind");
    }
    Ok((c.like(values, valid), invalidated))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_has_100_points_without_zero() {
        let g = SweepConfig::default().x_grid().unwrap();
        assert_eq!(g.len(), 100);
        assert!(!g.contains(&0.0));
        assert!(g.contains(&-1.0));
        assert!(g.contains(&0.8));
        assert_eq!(g[0], -5.0);
        assert_eq!(g[99], 5.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adjustment_factors() {
        let c = Grid::filled(3, 1, 800.0, 48.0, -64.0, 1.0).unwrap();
        let v = c.like(vec![6.0, 12.0, 3.0], vec![true; 3]);
        let (a, n) = adjust_contrast(&c, &v, 0.8).unwrap();
        assert_eq!(n, 0);
        assert_eq!(a.values()[0], 1.0);
        assert!((a.values()[1] - 1.741101126592248).abs() < 1e-12);
        assert!((a.values()[2] - 0.574349177498517).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_wind_invalidates() {
        let c = Grid::filled(2, 1, 800.0, 48.0, -64.0, 0.4).unwrap();
        let v = c.like(vec![0.0, 5.0], vec![true; 2]);
        let (a, n) = adjust_contrast(&c, &v, 0.8).unwrap();
        assert_eq!(n, 1);
        assert_eq!(a.validity(), &[false, true]);
    }

    fn field_2x2(speeds: [f64; 4]) -> WindField {
        // cells at lat {47, 48} x lon {-65, -64}; u carries the speed
        let pts = [(48.0, -65.0), (48.0, -64.0), (47.0, -65.0), (47.0, -64.0)];
        WindField::from_components(
            [100, 101]
                .into_iter()
                .flat_map(|h| pts.iter().zip(speeds).map(move |(&(la, lo), s)| (h, la, lo, s, 0.0))),
        )
    }

    #[test]
    fn bilinear_midpoint() {
        let f = field_2x2([2.0, 2.0, 4.0, 4.0]);
        assert!((f.speed_at(100, 47.5, -64.5).unwrap() - 3.0).abs() < 1e-12);
        assert!(f.speed_at(100, 49.0, -64.5).is_err());
        assert!(f.speed_at(102, 47.5, -64.5).is_err());
    }

    #[test]
    fn uniform_field_speed() {
        let pts = [(48.0, -65.0), (48.0, -64.0), (47.0, -65.0), (47.0, -64.0)];
        let f = WindField::from_components(pts.iter().map(|&(la, lo)| (100, la, lo, 3.0, 4.0)));
        let scene = Grid::filled(5, 5, 800.0, 47.8, -64.8, 0.0).unwrap();
        let t = time::hour_datetime(100);
        let v = interpolate_wind(&f, &scene, &t).unwrap();
        assert!(v.values().iter().all(|&s| (s - 5.0).abs() < 1e-12));
        let late = time::hour_datetime(103);
        assert!(matches!(interpolate_wind(&f, &scene, &late), Err(Error::Coverage(_))));
    }
}
