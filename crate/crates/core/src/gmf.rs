//! C-band geophysical model function evaluation and the σ₀ bounds mask.
//!
//! The model coefficients and the VV/HH polarization ratio are loaded from
//! data files; see `data/cmod5.coef` and `data/polratio.csv`.

use std::fs;
use std::path::Path;

use log::warn;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::raster::Grid;

/// Incidence envelope, degrees; inputs outside are clamped.
pub const INCIDENCE_ENVELOPE: (f64, f64) = (15.0, 60.0);
/// Wind speed envelope, m/s.
pub const SPEED_ENVELOPE: (f64, f64) = (0.2, 50.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Polarization {
    #[serde(alias = "vv")]
    VV,
    #[serde(alias = "hh")]
    HH,
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "VV" => Ok(Polarization::VV),
            "HH" => Ok(Polarization::HH),
            other => Err(Error::Config(format!("unknown polarization {other:?}"))),
        }
    }
}

impl std::fmt::Display for Polarization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Polarization::VV => "VV",
            Polarization::HH => "HH",
        })
    }
}

/// Coefficient counts of the supported model family.
fn model_arity(name: &str) -> Option<usize> {
    match name.to_ascii_uppercase().as_str() {
        "CMOD5" | "CMOD5.N" | "CMOD5N" => Some(28),
        _ => None,
    }
}

/// Tabulated VV/HH backscatter ratio, linearly interpolated in incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationRatio {
    incidence: Vec<f64>,
    ratio: Vec<f64>,
}

impl PolarizationRatio {
    pub fn from_table(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::Config("polarization ratio table needs at least two rows".into()));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Config("duplicate incidence in polarization ratio table".into()));
        }
        if let Some(bad) = rows.iter().find(|r| !(r.1 > 0.0)) {
            return Err(Error::Config(format!(
                "polarization ratio must be positive, got {} at {}°",
                bad.1, bad.0
            )));
        }
        let (lo, hi) = (rows[0].0, rows[rows.len() - 1].0);
        if lo > 20.0 || hi < 49.0 {
            return Err(Error::Config(format!(
                "polarization ratio table covers {lo}°..{hi}°, needs 20°..49°"
            )));
        }
        Ok(PolarizationRatio {
            incidence: rows.iter().map(|r| r.0).collect(),
            ratio: rows.iter().map(|r| r.1).collect(),
        })
    }

    /// Parses an `incidence_deg,ratio` CSV with a header row.
    pub fn parse_csv(text: &str, origin: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<(f64, f64)>().enumerate() {
            let row = rec.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
            rows.push(row);
        }
        Self::from_table(rows)
    }

    pub fn at(&self, incidence_deg: f64) -> f64 {
        let xs = &self.incidence;
        if incidence_deg <= xs[0] {
            return self.ratio[0];
        }
        if incidence_deg >= xs[xs.len() - 1] {
            return self.ratio[xs.len() - 1];
        }
        let k = xs.partition_point(|&x| x <= incidence_deg) - 1;
        let t = (incidence_deg - xs[k]) / (xs[k + 1] - xs[k]);
        self.ratio[k] + t * (self.ratio[k + 1] - self.ratio[k])
    }
}

/// One scalar model evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sigma0 {
    /// Linear σ₀.
    pub value: f64,
    /// True if an input was outside the envelope and clamped.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmfSpec {
    name: String,
    coefficients: Vec<f64>,
    polarization_ratio: PolarizationRatio,
}

impl GmfSpec {
    pub fn new(name: impl Into<String>, coefficients: Vec<f64>, polarization_ratio: PolarizationRatio) -> Result<Self> {
        let name = name.into();
        let arity = model_arity(&name).ok_or_else(|| Error::Config(format!("unsupported model {name:?}")))?;
        if coefficients.len() != arity {
            return Err(Error::Config(format!(
                "{name} needs {arity} coefficients, got {}",
                coefficients.len()
            )));
        }
        Ok(GmfSpec {
            name,
            coefficients,
            polarization_ratio,
        })
    }

    /// Parses the coefficient text: a model-name header, then one real per line.
    pub fn parse(coef_text: &str, origin: &str, ratio: PolarizationRatio) -> Result<Self> {
        let mut lines = coef_text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (_, name) = lines
            .next()
            .ok_or_else(|| Error::Config(format!("{origin}: empty coefficient file")))?;
        let coefficients = lines
            .map(|(i, l)| {
                l.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(origin, i + 1, e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name.trim(), coefficients, ratio)
    }

    pub fn load(coef_path: impl AsRef<Path>, ratio_path: impl AsRef<Path>) -> Result<Self> {
        let (cp, rp) = (coef_path.as_ref(), ratio_path.as_ref());
        let coef = fs::read_to_string(cp).map_err(|e| Error::Config(format!("{}: {e}", cp.display())))?;
        let ratio = fs::read_to_string(rp).map_err(|e| Error::Config(format!("{}: {e}", rp.display())))?;
        let ratio = PolarizationRatio::parse_csv(&ratio, &rp.display().to_string())?;
        Self::parse(&coef, &cp.display().to_string(), ratio)
    }

    /// The coefficient and ratio files shipped with the crate.
    pub fn reference() -> Self {
        let ratio = PolarizationRatio::parse_csv(REFERENCE_POLRATIO, "polratio.csv").expect("reference table parses");
        Self::parse(REFERENCE_COEFFICIENTS, "cmod5.coef", ratio).expect("reference coefficients")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn polarization_ratio(&self) -> &PolarizationRatio {
        &self.polarization_ratio
    }

    /// σ₀ for `wind_speed` (m/s), wind direction relative to the look
    /// direction (degrees, 0 = blowing toward the radar) and incidence.
    pub fn sigma0(
        &self,
        wind_speed: f64,
        rel_azimuth_deg: f64,
        incidence_deg: f64,
        pol: Polarization,
    ) -> Result<Sigma0> {
        if !(wind_speed > 0.0) || !rel_azimuth_deg.is_finite() || !incidence_deg.is_finite() {
            return Err(Error::Config(format!(
                "invalid model input: speed {wind_speed}, azimuth {rel_azimuth_deg}, incidence {incidence_deg}"
            )));
        }
        let v = wind_speed.clamp(SPEED_ENVELOPE.0, SPEED_ENVELOPE.1);
        let theta = incidence_deg.clamp(INCIDENCE_ENVELOPE.0, INCIDENCE_ENVELOPE.1);
        let clamped = v != wind_speed || theta != incidence_deg;
        if clamped {
            warn!(
                "{} evaluated outside envelope: speed {wind_speed}, incidence {incidence_deg}",
                self.name
            );
        }
        let vv = cmod5_vv(&self.coefficients, v, rel_azimuth_deg, theta);
        let value = match pol {
            Polarization::VV => vv,
            Polarization::HH => vv / self.polarization_ratio.at(theta),
        };
        Ok(Sigma0 { value, clamped })
    }
}

pub const REFERENCE_COEFFICIENTS: &str = include_str!("../data/cmod5.coef");
pub const REFERENCE_POLRATIO: &str = include_str!("../data/polratio.csv");

/// CMOD5-family VV backscatter.
fn cmod5_vv(c: &[f64], v: f64, phi_deg: f64, theta_deg: f64) -> f64 {
    const ZPOW: f64 = 1.6;
    let y0 = c[18];
    let pn = c[19];
    let a = y0 - (y0 - 1.0) / pn;
    let b = 1.0 / (pn * (y0 - 1.0).powf(pn - 1.0));

    let cos_phi = phi_deg.to_radians().cos();
    let cos_2phi = 2.0 * cos_phi * cos_phi - 1.0;

    let x = (theta_deg - 40.0) / 25.0;
    let xx = x * x;

    // isotropic term
    let a0 = c[0] + c[1] * x + c[2] * xx + c[3] * x * xx;
    let a1 = c[4] + c[5] * x;
    let a2 = c[6] + c[7] * x;
    let gam = c[8] + c[9] * x + c[10] * xx;
    let s0 = c[11] + c[12] * x;
    let s = a2 * v;
    let mut a3 = 1.0 / (1.0 + (-s.max(s0)).exp());
    if s < s0 {
        a3 *= (s / s0).powf(s0 * (1.0 - a3));
    }
    let b0 = a3.powf(gam) * 10f64.powf(a0 + a1 * v);

    // upwind/downwind term
    let b1 = c[14] * v * (0.5 + x - (4.0 * (x + c[15] + c[16] * v)).tanh());
    let b1 = (c[13] * (1.0 + x) - b1) / ((0.34 * (v - c[17])).exp() + 1.0);

    // upwind/crosswind term
    let v0 = c[20] + c[21] * x + c[22] * xx;
    let d1 = c[23] + c[24] * x + c[25] * xx;
    let d2 = c[26] + c[27] * x;
    let mut v2 = v / v0 + 1.0;
    if v2 < y0 {
        v2 = a + b * (v2 - 1.0).powf(pn);
    }
    let b2 = (-d1 + d2 * v2) * (-v2).exp();

    b0 * (1.0 + b1 * cos_phi + b2 * cos_2phi).powf(ZPOW)
}

/// Incidence angle field and track orientation of one scene.
#[derive(Debug, Clone)]
pub struct SceneGeometry {
    incidence: Grid,
    track_heading: f64,
    look_direction: f64,
}

impl SceneGeometry {
    pub fn new(incidence: Grid, track_heading: f64, look_direction: f64) -> Result<Self> {
        const TOL: f64 = 1e-6;
        let (lo, hi) = INCIDENCE_ENVELOPE;
        if let Some(bad) = incidence
            .values()
            .iter()
            .zip(incidence.validity())
            .find(|(&v, &ok)| ok && !(lo - TOL..=hi + TOL).contains(&v))
        {
            return Err(Error::Config(format!("incidence {}° outside [{lo}, {hi}]", bad.0)));
        }
        for (what, h) in [("track heading", track_heading), ("look direction", look_direction)] {
            if !(0.0..360.0).contains(&h) {
                return Err(Error::Config(format!("{what} {h} outside [0, 360)")));
            }
        }
        Ok(SceneGeometry {
            incidence,
            track_heading,
            look_direction,
        })
    }

    /// Incidence varying linearly across columns from `near` to `far`, for
    /// a right-looking sensor on `track_heading`.
    pub fn linear_range(template: &Grid, near_deg: f64, far_deg: f64, track_heading: f64) -> Result<Self> {
        let n = template.ncols();
        let step = if n > 1 {
            (far_deg - near_deg) / (n - 1) as f64
        } else {
            0.0
        };
        let values = (0..template.len()).map(|k| near_deg + step * (k % n) as f64).collect();
        let incidence = template.like(values, vec![true; template.len()]);
        let heading = track_heading.rem_euclid(360.0);
        Self::new(incidence, heading, (heading + 90.0).rem_euclid(360.0))
    }

    pub fn incidence(&self) -> &Grid {
        &self.incidence
    }

    pub fn track_heading(&self) -> f64 {
        self.track_heading
    }

    pub fn look_direction(&self) -> f64 {
        self.look_direction
    }
}

/// Wind conditions defining the lower and upper σ₀ bounds.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default)]
pub struct BoundWinds {
    pub low_speed: f64,
    /// Relative azimuth of the low bound; 90° is a wind along the track.
    pub low_azimuth: f64,
    pub high_speed: f64,
    /// Relative azimuth of the high bound; 0° is a wind toward the sensor.
    pub high_azimuth: f64,
}

impl Default for BoundWinds {
    fn default() -> Self {
        BoundWinds {
            low_speed: 1.0,
            low_azimuth: 90.0,
            high_speed: 15.0,
            high_azimuth: 0.0,
        }
    }
}

/// Per-pixel lower and upper σ₀ bounds on the incidence grid.
pub fn mask_bounds(gmf: &GmfSpec, geom: &SceneGeometry, pol: Polarization, winds: &BoundWinds) -> Result<(Grid, Grid)> {
    let inc = geom.incidence();
    let mut lo = Vec::with_capacity(inc.len());
    let mut hi = Vec::with_capacity(inc.len());
    for (&theta, &ok) in inc.values().iter().zip(inc.validity()) {
        if ok {
            lo.push(gmf.sigma0(winds.low_speed, winds.low_azimuth, theta, pol)?.value);
            hi.push(gmf.sigma0(winds.high_speed, winds.high_azimuth, theta, pol)?.value);
        } else {
            lo.push(f64::NAN);
            hi.push(f64::NAN);
        }
    }
    let valid = inc.validity().to_vec();
    Ok((inc.like(lo, valid.clone()), inc.like(hi, valid)))
}

/// Masks pixels whose σ₀ falls outside `[lo, hi]`.
pub fn apply_mask(sigma0: &Grid, lo: &Grid, hi: &Grid) -> Result<Grid> {
    sigma0.ensure_same_geometry(lo, "mask lower bound")?;
    sigma0.ensure_same_geometry(hi, "mask upper bound")?;
    let mut valid = sigma0.validity().to_vec();
    for (k, ok) in valid.iter_mut().enumerate() {
        if !*ok {
            continue;
        }
        let s = sigma0.values()[k];
        let inside = lo.validity()[k] && hi.validity()[k] && s >= lo.values()[k] && s <= hi.values()[k];
        *ok = inside;
    }
    let values = sigma0
        .values()
        .iter()
        .zip(&valid)
        .map(|(&v, &ok)| if ok { v } else { f64::NAN })
        .collect();
    Ok(sigma0.like(values, valid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gmf() -> GmfSpec {
        GmfSpec::reference()
    }

    #[test]
    fn stronger_wind_brighter() {
        let g = gmf();
        for theta in [20.0, 35.0, 49.0] {
            let a = g.sigma0(2.0, 45.0, theta, Polarization::VV).unwrap().value;
            let b = g.sigma0(10.0, 45.0, theta, Polarization::VV).unwrap().value;
            assert!(a < b, "theta {theta}: {a} !< {b}");
        }
    }

    #[test]
    fn upwind_at_least_crosswind() {
        let g = gmf();
        for theta in [20.0, 30.0, 40.0, 49.0] {
            let up = g.sigma0(5.0, 0.0, theta, Polarization::VV).unwrap().value;
            let cross = g.sigma0(5.0, 90.0, theta, Polarization::VV).unwrap().value;
            assert!(up >= cross);
        }
    }

    #[test]
    fn hh_is_vv_over_ratio() {
        let g = gmf();
        let vv = g.sigma0(7.0, 30.0, 33.3, Polarization::VV).unwrap().value;
        let hh = g.sigma0(7.0, 30.0, 33.3, Polarization::HH).unwrap().value;
        assert_eq!(hh, vv / g.polarization_ratio().at(33.3));
    }

    #[test]
    fn out_of_envelope_is_clamped() {
        let g = gmf();
        let s = g.sigma0(5.0, 0.0, 70.0, Polarization::VV).unwrap();
        assert!(s.clamped);
        let edge = g.sigma0(5.0, 0.0, 60.0, Polarization::VV).unwrap();
        assert_eq!(s.value, edge.value);
        assert!(g.sigma0(0.0, 0.0, 30.0, Polarization::VV).is_err());
    }

    #[test]
    fn wrong_arity_and_unknown_model_rejected() {
        let ratio = gmf().polarization_ratio().clone();
        assert!(GmfSpec::parse("CMOD5\n1.0\n2.0\n", "t", ratio.clone()).is_err());
        assert!(GmfSpec::parse("", "t", ratio.clone()).is_err());
        let many = format!("CMOD9\n{}", "1.0\n".repeat(28));
        assert!(GmfSpec::parse(&many, "t", ratio).is_err());
        assert!(matches!(
            GmfSpec::load("/nonexistent/coef", "/nonexistent/pr"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn ratio_table_interpolates_and_validates() {
        let r = PolarizationRatio::from_table(vec![(20.0, 1.0), (50.0, 4.0)]).unwrap();
        assert!((r.at(35.0) - 2.5).abs() < 1e-12);
        assert_eq!(r.at(10.0), 1.0);
        assert!(PolarizationRatio::from_table(vec![(20.0, 1.0), (50.0, -1.0)]).is_err());
        assert!(PolarizationRatio::from_table(vec![(30.0, 1.0), (50.0, 1.0)]).is_err());
    }

    #[test]
    fn bounds_on_uniform_geometry_are_uniform() {
        let t = Grid::filled(4, 3, 800.0, 48.0, -64.0, 30.0).unwrap();
        let geom = SceneGeometry::new(t, 190.0, 280.0).unwrap();
        let (lo, hi) = mask_bounds(&gmf(), &geom, Polarization::VV, &BoundWinds::default()).unwrap();
        assert!(lo.values().iter().all(|&v| v == lo.values()[0]));
        assert!(hi.values().iter().all(|&v| v == hi.values()[0]));
        assert!(lo.values()[0] < hi.values()[0]);
    }

    #[test]
    fn mask_removes_out_of_bounds_pixels() {
        let t = Grid::filled(3, 1, 800.0, 48.0, -64.0, 30.0).unwrap();
        let lo = t.map_valid(|_| 0.01);
        let hi = t.map_valid(|_| 0.1);
        let s = t.like(vec![0.005, 0.05, 0.2], vec![true; 3]);
        let m = apply_mask(&s, &lo, &hi).unwrap();
        assert_eq!(m.validity(), &[false, true, false]);
        assert_eq!(m.get(0, 1), Some(0.05));
        let again = apply_mask(&m, &lo, &hi).unwrap();
        assert_eq!(again.validity(), m.validity());
        let other = Grid::filled(2, 1, 800.0, 48.0, -64.0, 0.05).unwrap();
        assert!(apply_mask(&other, &lo, &hi).is_err());
    }

    #[test]
    fn geometry_validation() {
        let t = Grid::filled(2, 1, 800.0, 48.0, -64.0, 80.0).unwrap();
        assert!(SceneGeometry::new(t.clone(), 10.0, 100.0).is_err());
        let ok = t.map_valid(|_| 30.0);
        assert!(SceneGeometry::new(ok.clone(), 360.0, 90.0).is_err());
        let lin = SceneGeometry::linear_range(&ok, 20.0, 49.0, 350.0).unwrap();
        assert_eq!(lin.incidence().values(), &[20.0, 49.0]);
        assert_eq!(lin.look_direction(), 80.0);
    }
}
