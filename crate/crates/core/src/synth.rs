//! Seed-deterministic synthetic series and scenes with known ground truth.
//!
//! Randomness comes from SplitMix64 (Steele, Lea and Flood 2014): state
//! advances by `0x9E3779B97F4A7C15` and each output is the state passed
//! through the `mix64` finalizer below. Uniforms take the top 53 bits;
//! normals use the Box-Muller transform, consuming two uniforms per pair
//! (`u1 = 1 - uniform`, cosine branch first). A child stream `k` is seeded
//! with `mix64(state ^ mix64((k + 1) * 0x9E3779B97F4A7C15))`. Following
//! these rules reproduces the fixtures bit for bit.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::filament::{diameter_sq, FilamentField, LabelGrid};
use crate::gmf::{GmfSpec, Polarization, SceneGeometry};
use crate::raster::Grid;
use crate::series::PairedSeries;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator with a cached second Box-Muller normal.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            spare: None,
        }
    }

    /// An independent stream derived from this generator's seed state.
    pub fn split(&self, stream: u64) -> Self {
        Self::new(mix64(self.state ^ mix64(stream.wrapping_add(1).wrapping_mul(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

/// Parameters of a synthetic scene.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneSpec {
    pub ncols: usize,
    pub nrows: usize,
    pub pixel_size_m: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub filaments: usize,
    /// Extent of each strip along its major axis, meters.
    pub filament_length_m: f64,
    /// Contrast of a strip at 6 m/s; scaled by `(V/6)^-0.8` elsewhere.
    pub filament_amplitude: f64,
    /// +1 bright, -1 dark, 0 random per strip.
    pub filament_sign: i32,
    /// Maximum |quadratic coefficient| of the strip centre line, 1/pixel.
    pub filament_curvature: f64,
    /// Wind speed at the scene centre, m/s.
    pub wind_speed: f64,
    /// Change of wind speed from the west to the east edge, m/s.
    pub wind_gradient: f64,
    /// Wind direction relative to the look direction, degrees.
    pub rel_azimuth: f64,
    pub incidence_near: f64,
    pub incidence_far: f64,
    pub track_heading: f64,
    pub polarization: Polarization,
    /// Number of looks of the multiplicative speckle; 0 disables it.
    pub speckle_looks: u32,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            ncols: 512,
            nrows: 512,
            pixel_size_m: 800.0,
            origin_lat: 50.0,
            origin_lon: -66.0,
            filaments: 6,
            filament_length_m: 40_000.0,
            filament_amplitude: 0.9,
            filament_sign: 0,
            filament_curvature: 0.002,
            wind_speed: 6.0,
            wind_gradient: 0.0,
            rel_azimuth: 45.0,
            incidence_near: 20.0,
            incidence_far: 49.0,
            track_heading: 190.0,
            polarization: Polarization::VV,
            speckle_looks: 0,
        }
    }
}

/// Parameters of a synthetic paired series and scene.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    pub n: usize,
    /// True linear covariance `β_U σ_t²`.
    pub b: f64,
    pub sigma_t2: f64,
    pub sigma_eps2: f64,
    pub sigma_c2: f64,
    pub sigma_u2: f64,
    /// Signal frequency, radians per hour.
    pub omega: f64,
    pub alpha_u: f64,
    pub deltas: Vec<u32>,
    pub scene: SceneSpec,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            seed: 1,
            n: 500,
            b: 0.5,
            sigma_t2: 1.0,
            sigma_eps2: 0.5,
            sigma_c2: 0.5,
            sigma_u2: 0.5,
            omega: 0.3,
            alpha_u: 6.0,
            deltas: vec![1, 2, 5],
            scene: SceneSpec::default(),
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("sigma_t2", self.sigma_t2),
            ("sigma_eps2", self.sigma_eps2),
            ("sigma_c2", self.sigma_c2),
            ("sigma_u2", self.sigma_u2),
        ] {
            if !(v >= 0.0) {
                return Err(Error::Config(format!("{what} must be >= 0, got {v}")));
            }
        }
        if self.b != 0.0 && self.sigma_t2 == 0.0 {
            return Err(Error::Config("nonzero b needs sigma_t2 > 0".into()));
        }
        if self.deltas.contains(&0) {
            return Err(Error::Config("sampling intervals must be positive".into()));
        }
        Ok(())
    }

    pub fn beta_u(&self) -> f64 {
        if self.sigma_t2 > 0.0 {
            self.b / self.sigma_t2
        } else {
            0.0
        }
    }

    /// Population Pearson correlation of `C` and `U₀`.
    pub fn population_pearson(&self) -> f64 {
        let beta = self.beta_u();
        let var_c = self.sigma_t2 + self.sigma_eps2 + self.sigma_c2;
        let var_u = beta * beta * self.sigma_t2 + self.sigma_eps2 + self.sigma_u2;
        (self.b + self.sigma_eps2) / (var_c * var_u).sqrt()
    }
}

/// Latent signal values `t(τ)` per sample, keyed by offset τ in hours.
#[derive(Debug, Clone, Default)]
pub struct LatentSignal {
    pub t: BTreeMap<i64, Vec<f64>>,
}

/// Draws a series from the signal-plus-noise model.
///
/// Each overpass gets an independent random-phase pair of quadrature
/// sinusoids, so `Cov(t(0), t(τ)) = σ_t² cos(ωτ)`; ε and ε_U are drawn
/// independently at every distinct offset.
pub fn gen_model_series(g: &GenSpec) -> Result<(PairedSeries, LatentSignal)> {
    g.validate()?;
    let mut rng = SplitMix64::new(g.seed).split(0);
    let offsets: BTreeSet<i64> = g
        .deltas
        .iter()
        .flat_map(|&d| [-2, -1, 0, 1, 2].map(|k| k * i64::from(d)))
        .chain([0])
        .collect();
    let beta = g.beta_u();
    let (st, se, sc, su) = (
        g.sigma_t2.sqrt(),
        g.sigma_eps2.sqrt(),
        g.sigma_c2.sqrt(),
        g.sigma_u2.sqrt(),
    );
    let mut series = PairedSeries::default();
    let mut latent = LatentSignal::default();
    for i in 0..g.n {
        let a = st * rng.normal();
        let b = st * rng.normal();
        let mut u_at = BTreeMap::new();
        let mut eps0 = 0.0;
        for &tau in &offsets {
            let (s, c) = (g.omega * tau as f64).sin_cos();
            let t = a * c + b * s;
            let eps = se * rng.normal();
            let eps_u = su * rng.normal();
            if tau == 0 {
                eps0 = eps;
            }
            u_at.insert(tau, g.alpha_u + beta * t + eps + eps_u);
            latent.t.entry(tau).or_insert_with(Vec::new).push(t);
        }
        let c = a + eps0 + sc * rng.normal();
        let lags = g
            .deltas
            .iter()
            .map(|&d| {
                let d = i64::from(d);
                (d as u32, [u_at[&(-2 * d)], u_at[&(-d)], u_at[&d], u_at[&(2 * d)]])
            })
            .collect();
        series.push(i as i64 * 24, c, u_at[&0], &lags);
    }
    Ok((series, latent))
}

/// A synthetic σ₀ scene with the filaments injected into it.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub sigma0: Grid,
    pub truth: FilamentField,
    /// Wind speed at every pixel, m/s.
    pub wind: Grid,
    pub geometry: SceneGeometry,
}

/// Pixels of a strip with one pixel per step along its major axis.
fn strip_pixels(spec: &SceneSpec, rng: &mut SplitMix64) -> Vec<(usize, usize)> {
    let (nc, nr) = (spec.ncols as f64, spec.nrows as f64);
    let len = (spec.filament_length_m / spec.pixel_size_m).round().max(0.0);
    let cols_major = rng.uniform() < 0.5;
    let (n_major, n_minor) = if cols_major { (nc, nr) } else { (nr, nc) };
    let slope = rng.uniform_in(-0.6, 0.6);
    let max_curv = if len > 0.0 {
        spec.filament_curvature.min(0.3 / len)
    } else {
        0.0
    };
    let curv = rng.uniform_in(-max_curv, max_curv);
    let start = rng.uniform_in(0.0, (n_major - len - 1.0).max(0.0)).floor();
    let mid_minor = rng.uniform_in(0.2 * n_minor, 0.8 * n_minor);
    let half = len / 2.0;
    let mut px = Vec::new();
    for m in 0..=(len as usize) {
        let x = m as f64 - half;
        let minor = (mid_minor + slope * x + curv * x * x).round();
        let major = start + m as f64;
        if minor < 0.0 || minor >= n_minor || major >= n_major {
            continue;
        }
        let (r, c) = if cols_major {
            (minor as usize, major as usize)
        } else {
            (major as usize, minor as usize)
        };
        px.push((r, c));
    }
    px
}

pub fn gen_scene(g: &GenSpec, gmf: &GmfSpec) -> Result<SyntheticScene> {
    let s = &g.scene;
    if s.ncols == 0 || s.nrows == 0 {
        return Err(Error::Config("scene needs positive dimensions".into()));
    }
    let template = Grid::filled(s.ncols, s.nrows, s.pixel_size_m, s.origin_lat, s.origin_lon, 0.0)?;
    let geometry = SceneGeometry::linear_range(&template, s.incidence_near, s.incidence_far, s.track_heading)?;
    let span = (s.ncols.max(2) - 1) as f64;
    let wind_values: Vec<f64> = (0..template.len())
        .map(|k| s.wind_speed + s.wind_gradient * ((k % s.ncols) as f64 / span - 0.5))
        .collect();
    if let Some(bad) = wind_values.iter().find(|&&v| !(v > 0.0)) {
        return Err(Error::Config(format!("synthetic wind speed {bad} is not positive")));
    }
    let wind = template.like(wind_values, vec![true; template.len()]);

    let mut background = Vec::with_capacity(template.len());
    for k in 0..template.len() {
        let inc = geometry.incidence().values()[k];
        background.push(gmf.sigma0(wind.values()[k], s.rel_azimuth, inc, s.polarization)?.value);
    }

    let root = SplitMix64::new(g.seed);
    let mut geo_rng = root.split(1);
    let mut truth_mag = vec![0.0; template.len()];
    let mut truth_lab = vec![0u32; template.len()];
    let mut factor = vec![1.0; template.len()];
    for f in 0..s.filaments {
        let pixels = strip_pixels(s, &mut geo_rng);
        let sign = match s.filament_sign {
            0 => {
                if geo_rng.uniform() < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            v => f64::from(v.signum()),
        };
        for (r, c) in pixels {
            let k = r * s.ncols + c;
            let amp = s.filament_amplitude * (wind.values()[k] / 6.0).powf(-0.8);
            factor[k] = (1.0 + sign * amp).max(1e-3);
            truth_mag[k] = amp;
            truth_lab[k] = f as u32 + 1;
        }
    }
    let mut speckle_rng = root.split(2);
    let sigma0_values = background
        .iter()
        .zip(&factor)
        .map(|(&b, &f)| {
            let noise = if s.speckle_looks > 0 {
                let l = s.speckle_looks;
                (0..l).map(|_| -(1.0 - speckle_rng.uniform()).ln()).sum::<f64>() / f64::from(l)
            } else {
                1.0
            };
            b * f * noise
        })
        .collect();
    let sigma0 = template.like(sigma0_values, vec![true; template.len()]);

    let labels = relabel_dense(s.ncols, s.nrows, truth_lab)?;
    let spans = labels
        .members()
        .iter()
        .map(|m| (diameter_sq(m) as f64).sqrt() * s.pixel_size_m)
        .collect();
    let truth = FilamentField {
        magnitude: template.like(truth_mag, vec![true; template.len()]),
        labels,
        component_spans: spans,
    };
    Ok(SyntheticScene {
        sigma0,
        truth,
        wind,
        geometry,
    })
}

fn relabel_dense(ncols: usize, nrows: usize, mut raw: Vec<u32>) -> Result<LabelGrid> {
    let mut map = BTreeMap::new();
    let mut sorted: Vec<u32> = raw.iter().copied().filter(|&l| l > 0).collect();
    sorted.sort_unstable();
    sorted.dedup();
    for (i, l) in sorted.into_iter().enumerate() {
        map.insert(l, i as u32 + 1);
    }
    for l in raw.iter_mut().filter(|l| **l > 0) {
        *l = map[l];
    }
    LabelGrid::from_raw(ncols, nrows, raw)
}
