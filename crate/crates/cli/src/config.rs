use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use filamap::filament::AgreementParams;
use filamap::gmf::{BoundWinds, GmfSpec};
use filamap::ingest::{SeasonWindow, SightingBounds, WindRestriction};
use filamap::sweep::SweepConfig;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    catalog: PathBuf,
    sightings: PathBuf,
    wind: PathBuf,
    domain_vertices: PathBuf,
    domain_gridboxes: PathBuf,
    gmf_coefficients: Option<PathBuf>,
    polarization_ratio: Option<PathBuf>,
    series: Option<PathBuf>,
    #[serde(default = "default_output")]
    output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSeason {
    start: String,
    end: String,
}

impl Default for RawSeason {
    fn default() -> Self {
        RawSeason {
            start: "05-15".into(),
            end: "08-15".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaskConfig {
    pub enabled: bool,
    pub incidence_near: f64,
    pub incidence_far: f64,
    pub low_speed: f64,
    pub low_azimuth: f64,
    pub high_speed: f64,
    pub high_azimuth: f64,
}

impl Default for MaskConfig {
    fn default() -> Self {
        let b = BoundWinds::default();
        MaskConfig {
            enabled: true,
            incidence_near: 20.0,
            incidence_far: 49.0,
            low_speed: b.low_speed,
            low_azimuth: b.low_azimuth,
            high_speed: b.high_speed,
            high_azimuth: b.high_azimuth,
        }
    }
}

impl MaskConfig {
    pub fn bounds(&self) -> BoundWinds {
        BoundWinds {
            low_speed: self.low_speed,
            low_azimuth: self.low_azimuth,
            high_speed: self.high_speed,
            high_azimuth: self.high_azimuth,
        }
    }
}

fn default_levels() -> usize {
    8
}

fn default_coverage() -> f64 {
    0.25
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    paths: RawPaths,
    #[serde(default)]
    agreement: AgreementParams,
    #[serde(default)]
    sweep: SweepConfig,
    #[serde(default)]
    season: RawSeason,
    #[serde(default)]
    wind_restriction: WindRestriction,
    #[serde(default)]
    mask: MaskConfig,
    #[serde(default)]
    sighting_bounds: SightingBounds,
    #[serde(default = "default_levels")]
    pyramid_levels: usize,
    #[serde(default = "default_coverage")]
    min_coverage: f64,
}

#[derive(Debug, Clone)]
pub struct Paths {
    pub catalog: PathBuf,
    pub sightings: PathBuf,
    pub wind: PathBuf,
    pub domain_vertices: PathBuf,
    pub domain_gridboxes: PathBuf,
    pub gmf_coefficients: Option<PathBuf>,
    pub polarization_ratio: Option<PathBuf>,
    pub series: PathBuf,
    pub output: PathBuf,
}

/// Validated run configuration with paths resolved against the config file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub paths: Paths,
    pub agreement: AgreementParams,
    pub sweep: SweepConfig,
    pub season: SeasonWindow,
    pub wind_restriction: WindRestriction,
    pub mask: MaskConfig,
    pub sighting_bounds: SightingBounds,
    pub pyramid_levels: usize,
    pub min_coverage: f64,
}

fn parse_month_day(s: &str) -> Result<(u32, u32)> {
    let (m, d) = s
        .split_once('-')
        .with_context(|| format!("season date {s:?} is not MM-DD"))?;
    Ok((m.trim().parse()?, d.trim().parse()?))
}

impl RunConfig {
    pub fn load(path: &Path, output_override: Option<&Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")), output_override)
            .with_context(|| format!("config {}", path.display()))
    }

    pub fn parse(text: &str, base: &Path, output_override: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text)?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let output = match output_override {
            Some(o) => o.to_path_buf(),
            None => resolve(&raw.paths.output),
        };
        let paths = Paths {
            catalog: resolve(&raw.paths.catalog),
            sightings: resolve(&raw.paths.sightings),
            wind: resolve(&raw.paths.wind),
            domain_vertices: resolve(&raw.paths.domain_vertices),
            domain_gridboxes: resolve(&raw.paths.domain_gridboxes),
            gmf_coefficients: raw.paths.gmf_coefficients.as_deref().map(resolve),
            polarization_ratio: raw.paths.polarization_ratio.as_deref().map(resolve),
            series: raw
                .paths
                .series
                .as_deref()
                .map(resolve)
                .unwrap_or_else(|| output.join("series.csv")),
            output,
        };
        for (what, p) in [
            ("catalog", Some(&paths.catalog)),
            ("sightings", Some(&paths.sightings)),
            ("wind", Some(&paths.wind)),
            ("domain_vertices", Some(&paths.domain_vertices)),
            ("domain_gridboxes", Some(&paths.domain_gridboxes)),
            ("gmf_coefficients", paths.gmf_coefficients.as_ref()),
            ("polarization_ratio", paths.polarization_ratio.as_ref()),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    bail!("{what} file {} does not exist", p.display());
                }
            }
        }
        if paths.gmf_coefficients.is_some() != paths.polarization_ratio.is_some() {
            bail!("gmf_coefficients and polarization_ratio must be given together");
        }
        let season = SeasonWindow {
            start: parse_month_day(&raw.season.start)?,
            end: parse_month_day(&raw.season.end)?,
        };
        season.validate()?;
        raw.agreement.validate()?;
        raw.sweep.x_grid()?;
        if raw.sweep.deltas.is_empty() || raw.sweep.deltas.contains(&0) {
            bail!("sweep deltas must be positive hours");
        }
        if !(raw.wind_restriction.min < raw.wind_restriction.max) {
            bail!("wind restriction min must be below max");
        }
        if raw.pyramid_levels == 0 {
            bail!("pyramid_levels must be at least 1");
        }
        if !(0.0..=1.0).contains(&raw.min_coverage) {
            bail!("min_coverage must lie in [0, 1]");
        }
        Ok(RunConfig {
            paths,
            agreement: raw.agreement,
            sweep: raw.sweep,
            season,
            wind_restriction: raw.wind_restriction,
            mask: raw.mask,
            sighting_bounds: raw.sighting_bounds,
            pyramid_levels: raw.pyramid_levels,
            min_coverage: raw.min_coverage,
        })
    }

    pub fn gmf(&self) -> Result<GmfSpec> {
        match (&self.paths.gmf_coefficients, &self.paths.polarization_ratio) {
            (Some(c), Some(r)) => Ok(GmfSpec::load(c, r)?),
            _ => Ok(GmfSpec::reference()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir_with_inputs() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        for f in ["scenes.csv", "sightings.csv", "wind.csv", "dv.csv", "dg.csv"] {
            std::fs::write(d.path().join(f), "").unwrap();
        }
        d
    }

    const MINIMAL: &str = r#"
[paths]
catalog = "scenes.csv"
sightings = "sightings.csv"
wind = "wind.csv"
domain_vertices = "dv.csv"
domain_gridboxes = "dg.csv"
"#;

    #[test]
    fn defaults_and_relative_paths() {
        let d = dir_with_inputs();
        let c = RunConfig::parse(MINIMAL, d.path(), None).unwrap();
        assert_eq!(c.paths.catalog, d.path().join("scenes.csv"));
        assert_eq!(c.paths.output, d.path().join("out"));
        assert_eq!(c.paths.series, d.path().join("out/series.csv"));
        assert_eq!(c.season, SeasonWindow::default());
        assert_eq!(c.sweep.x_star, 0.8);
        assert_eq!(c.agreement, AgreementParams::default());
        assert_eq!(c.wind_restriction, WindRestriction::default());
        assert!(c.mask.enabled);
    }

    #[test]
    fn rejects_bad_values() {
        let d = dir_with_inputs();
        let bad_season = format!("{MINIMAL}\n[season]\nstart = \"08-15\"\nend = \"05-15\"\n");
        assert!(RunConfig::parse(&bad_season, d.path(), None).is_err());
        let missing = MINIMAL.replace("wind.csv", "nope.csv");
        assert!(RunConfig::parse(&missing, d.path(), None).is_err());
        let unknown = format!("{MINIMAL}\nbogus = 1\n");
        assert!(RunConfig::parse(&unknown, d.path(), None).is_err());
        let conn = format!("{MINIMAL}\n[agreement]\nconnectivity = 6\n");
        assert!(RunConfig::parse(&conn, d.path(), None).is_err());
    }
}
