//! A complete synthetic input set: scenes, catalog, wind, sightings, domains
//! and a run config that points at them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::TimeDelta;
use log::info;

use filamap::gmf::GmfSpec;
use filamap::ingest::{self, SceneRecord, WindRecord, WindSeries};
use filamap::series;
use filamap::sgrd::{self, GrayScale};
use filamap::synth::{gen_model_series, gen_scene, GenSpec, SplitMix64};
use filamap::time::{self, Hour};

const SCENES_PER_YEAR: usize = 8;
const YEARS: [i32; 2] = [2019, 2020];
const LATTICE_DEG: f64 = 0.25;
const WIND_HOURS: i64 = 10;

/// The default generator spec for `synth`: small scenes so a full dataset
/// stays quick to process.
pub fn default_spec() -> GenSpec {
    let mut g = GenSpec::default();
    g.scene.ncols = 128;
    g.scene.nrows = 128;
    g.scene.origin_lat = 49.6;
    g.scene.origin_lon = -65.4;
    g.scene.filaments = 5;
    g.scene.filament_length_m = 30_000.0;
    g
}

pub fn load_spec(path: Option<&Path>, seed: u64) -> Result<GenSpec> {
    let mut g = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<GenSpec>(&text).with_context(|| format!("generator config {}", p.display()))?
        }
        None => default_spec(),
    };
    g.seed = seed;
    g.validate()?;
    Ok(g)
}

fn snap_down(v: f64) -> f64 {
    (v / LATTICE_DEG).floor() * LATTICE_DEG - LATTICE_DEG
}

fn snap_up(v: f64) -> f64 {
    (v / LATTICE_DEG).ceil() * LATTICE_DEG + LATTICE_DEG
}

fn lattice(lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / LATTICE_DEG).round() as usize;
    (0..=n).map(|k| lo + k as f64 * LATTICE_DEG).collect()
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

struct Domain {
    name: &'static str,
    ring: Vec<(f64, f64)>,
    gridbox: (f64, f64),
}

fn sighting_line(out: &mut String, source: char, t: &str, lat: f64, lon: f64, count: u32, dead: bool) {
    writeln!(out, "{source},{t},{lat:.5},{lon:.5},{count},{}", u8::from(dead)).expect("string write");
}

pub fn generate(spec: &GenSpec, out: &Path) -> Result<()> {
    for d in [out.to_path_buf(), out.join("scenes"), out.join("truth")] {
        std::fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
    }
    let gmf = GmfSpec::reference();
    let root = SplitMix64::new(spec.seed);
    let mut rng = root.split(100);

    let mut catalog = Vec::new();
    let mut wind = WindSeries::default();
    let mut sightings = String::from("source,iso_utc,lat,lon,count,dead_flag\n");
    let mut template = None;

    for (yi, &year) in YEARS.iter().enumerate() {
        for k in 0..SCENES_PER_YEAR {
            let idx = yi * SCENES_PER_YEAR + k;
            let day =
                time::parse_utc(&format!("{year}-05-20T00:00:00Z"))? + TimeDelta::days(3 * k as i64 + (idx % 2) as i64);
            let t = day + TimeDelta::minutes(22 * 60 + 14);
            let mut g = spec.clone();
            g.seed = root.split(idx as u64).next_u64();
            g.scene.wind_speed = rng.uniform_in(3.0, 9.0);
            g.scene.track_heading = if idx.is_multiple_of(2) { 190.0 } else { 10.0 };
            let sc = gen_scene(&g, &gmf)?;
            let id = format!("S{year}_{k:02}");
            let grid_path = out.join("scenes").join(format!("{id}.sgrd"));
            sgrd::write(&grid_path, &sc.sigma0)?;
            sgrd::write(
                out.join("truth").join(format!("{id}_magnitude.sgrd")),
                &sc.truth.magnitude,
            )?;
            sgrd::write(
                out.join("truth").join(format!("{id}_labels.sgrd")),
                &sc.truth.label_grid(),
            )?;
            sgrd::write_pgm(
                out.join("truth").join(format!("{id}.pgm")),
                &sc.sigma0,
                GrayScale::fit(&sc.sigma0),
            )?;
            let ring = sc.sigma0.bounding_ring();

            // Spatially uniform wind per hour, varying through the day.
            let (lat0, lat1, lon0, lon1) = bbox(&ring);
            let lats = lattice(snap_down(lat0), snap_up(lat1));
            let lons = lattice(snap_down(lon0), snap_up(lon1));
            let h0: Hour = time::nearest_hour(&t);
            let phase = rng.uniform_in(0.0, std::f64::consts::TAU);
            let dir = rng.uniform_in(0.0, std::f64::consts::TAU);
            for dh in -WIND_HOURS..=WIND_HOURS {
                let v = g.scene.wind_speed * (1.0 + 0.15 * ((0.3 * dh as f64 + phase).sin() - phase.sin()));
                for &la in &lats {
                    for &lo in &lons {
                        wind.insert(WindRecord {
                            hour: h0 + dh,
                            lat: la,
                            lon: lo,
                            u10: v * dir.cos(),
                            v10: v * dir.sin(),
                        });
                    }
                }
            }

            // Groups inside the scene, one outside it, and a repeated report
            // of the first group from the second source.
            let date = day.format("%Y-%m-%d").to_string();
            for j in 0..3 {
                let r = rng.uniform_in(0.15, 0.85) * sc.sigma0.nrows() as f64;
                let c = rng.uniform_in(0.15, 0.85) * sc.sigma0.ncols() as f64;
                let (la, lo) = sc.sigma0.location(r, c);
                let hour = 12 + 2 * j;
                let count = 1 + (rng.next_u64() % 4) as u32;
                let dead = j == 2 && idx.is_multiple_of(5);
                sighting_line(
                    &mut sightings,
                    'A',
                    &format!("{date}T{hour:02}:05:00Z"),
                    la,
                    lo,
                    count,
                    dead,
                );
                if j == 0 {
                    sighting_line(
                        &mut sightings,
                        'B',
                        &format!("{date}T{:02}:45:00Z", hour),
                        la + 0.003,
                        lo - 0.003,
                        count,
                        false,
                    );
                }
            }
            sighting_line(
                &mut sightings,
                'B',
                &format!("{date}T15:30:00Z"),
                lat0 - 0.3,
                lon0 - 0.3,
                2,
                false,
            );

            template.get_or_insert(sc.sigma0.clone());
            catalog.push(SceneRecord {
                scene_id: id,
                t,
                polarization: g.scene.polarization,
                grid_path,
                ring,
                track_heading: g.scene.track_heading,
            });
        }
    }
    // Sightings on days without scenes.
    for k in 0..12 {
        let year = YEARS[k % YEARS.len()];
        let la = rng.uniform_in(47.0, 50.0);
        let lo = rng.uniform_in(-67.0, -62.0);
        sighting_line(
            &mut sightings,
            'A',
            &format!("{year}-08-{:02}T14:00:00Z", 1 + k),
            la,
            lo,
            1,
            false,
        );
    }

    let template = template.expect("at least one scene");
    let domains = domains(&template);
    let mut dv = String::from("name,vertex_index,lat,lon\n");
    let mut dg = String::from("name,era5_lat,era5_lon\n");
    for d in &domains {
        for (i, (la, lo)) in d.ring.iter().enumerate() {
            writeln!(dv, "{},{i},{la},{lo}", d.name)?;
        }
        writeln!(dg, "{},{},{}", d.name, d.gridbox.0, d.gridbox.1)?;
    }

    write(&out.join("scenes.csv"), ingest::scene_catalog_csv(&catalog, out))?;
    write(&out.join("wind.csv"), wind.to_csv())?;
    write(&out.join("sightings.csv"), sightings)?;
    write(&out.join("domain_vertices.csv"), dv)?;
    write(&out.join("domain_gridboxes.csv"), dg)?;

    let (model, _) = gen_model_series(spec)?;
    let mut m = BTreeMap::new();
    m.insert("model".to_string(), model);
    write(&out.join("model_series.csv"), series::to_csv(&m))?;
    write(&out.join("run.toml"), run_toml(spec))?;
    info!("wrote {} scenes to {}", catalog.len(), out.display());
    Ok(())
}

fn bbox(ring: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    ring.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(la, lo)| (a.min(la), b.max(la), c.min(lo), d.max(lo)),
    )
}

fn domains(g: &filamap::Grid) -> Vec<Domain> {
    let (nr, nc) = (g.nrows() as f64, g.ncols() as f64);
    let rect = |r0: f64, r1: f64, c0: f64, c1: f64| -> Vec<(f64, f64)> {
        [(r0, c0), (r0, c1), (r1, c1), (r1, c0)]
            .into_iter()
            .map(|(r, c)| g.location(r * nr, c * nc))
            .collect()
    };
    let gridbox = |ring: &[(f64, f64)]| {
        let (a, b, c, d) = bbox(ring);
        let snap = |v: f64| (v / LATTICE_DEG).round() * LATTICE_DEG;
        (snap(0.5 * (a + b)), snap(0.5 * (c + d)))
    };
    [
        ("north", rect(0.08, 0.45, 0.1, 0.9)),
        ("south", rect(0.55, 0.92, 0.1, 0.9)),
    ]
    .into_iter()
    .map(|(name, ring)| Domain {
        name,
        gridbox: gridbox(&ring),
        ring,
    })
    .collect()
}

fn run_toml(spec: &GenSpec) -> String {
    format!(
        "[paths]\n\
         catalog = \"scenes.csv\"\n\
         sightings = \"sightings.csv\"\n\
         wind = \"wind.csv\"\n\
         domain_vertices = \"domain_vertices.csv\"\n\
         domain_gridboxes = \"domain_gridboxes.csv\"\n\
         output = \"out\"\n\
         \n\
         [mask]\n\
         incidence_near = {}\n\
         incidence_far = {}\n",
        spec.scene.incidence_near, spec.scene.incidence_far
    )
}
