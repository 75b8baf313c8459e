use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::{info, warn};

use filamap::depstats::{dcor, decompose_pearson, pearson, solve_measurement_model, Components};
use filamap::filament::{domain_contrast, load_domains, DomainPolygon};
use filamap::ingest::{self, SceneRecord, SceneSample};
use filamap::raster::build_pyramid;
use filamap::series::{self, PairedSeries, MIN_SAMPLES};
use filamap::sgrd::{self, GrayScale};
use filamap::sweep::{adjust_contrast, sweep_exponent, REFERENCE_WIND};
use filamap::time::format_utc;

use crate::config::RunConfig;
use crate::scene::{load_catalog, load_wind_field, par_map, select, SceneRunner};
use crate::DataError;

const CONTRAST_RANGE: (f64, f64) = (-1.0, 1.0);
const MAGNITUDE_RANGE: (f64, f64) = (0.0, 1.0);

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn scene_dir(cfg: &RunConfig, rec: &SceneRecord, what: &str) -> Result<PathBuf> {
    let d = cfg.paths.output.join(&rec.scene_id).join(what);
    fs::create_dir_all(&d).with_context(|| format!("creating {}", d.display()))?;
    Ok(d)
}

fn bracket_name(fine: f64, coarse: f64) -> String {
    format!("c_{fine}m_{coarse}m")
}

pub fn pyramid(cfg: &RunConfig, scene: Option<&str>) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let scenes = select(&catalog, scene)?;
    par_map(&scenes, |rec| {
        let base = filamap::sgrd::read(&rec.grid_path).with_context(|| format!("scene {}", rec.scene_id))?;
        let pyr = build_pyramid(&base, cfg.pyramid_levels)?;
        let dir = scene_dir(cfg, rec, "pyramid")?;
        let mut index = String::from("level,pixel_size_m,ncols,nrows,valid,mean\n");
        for (k, g) in pyr.levels().iter().enumerate() {
            let stem = format!("L{k}_{}m", g.pixel_size_m());
            sgrd::write(dir.join(format!("{stem}.sgrd")), g)?;
            sgrd::write_pgm(dir.join(format!("{stem}.pgm")), g, GrayScale::fit(g))?;
            let mean = g.mean_valid().map_or(String::new(), |m| m.to_string());
            writeln!(
                index,
                "{k},{},{},{},{},{mean}",
                g.pixel_size_m(),
                g.ncols(),
                g.nrows(),
                g.valid_count()
            )?;
        }
        write_file(&dir.join("levels.csv"), index)?;
        info!("{}: {} pyramid levels", rec.scene_id, pyr.len());
        Ok(())
    })?;
    Ok(())
}

pub fn contrast(cfg: &RunConfig, scene: Option<&str>) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let scenes = select(&catalog, scene)?;
    let gmf = cfg.gmf()?;
    let runner = SceneRunner {
        cfg,
        gmf: &gmf,
        wind: None,
    };
    par_map(&scenes, |rec| {
        let fine = runner.fine(rec)?;
        let cs = filamap::pipeline::bracket_contrasts(&fine, &cfg.agreement)?;
        let dir = scene_dir(cfg, rec, "contrast")?;
        write_brackets(&dir, cfg, &cs, "")?;
        Ok(())
    })?;
    Ok(())
}

fn write_brackets(dir: &Path, cfg: &RunConfig, cs: &[filamap::Grid; 3], suffix: &str) -> Result<()> {
    let scale = GrayScale::range(CONTRAST_RANGE.0, CONTRAST_RANGE.1);
    for (c, coarse) in cs.iter().zip(cfg.agreement.coarse_m) {
        let stem = format!("{}{suffix}", bracket_name(cfg.agreement.fine_m, coarse));
        sgrd::write(dir.join(format!("{stem}.sgrd")), c)?;
        sgrd::write_pgm(dir.join(format!("{stem}.pgm")), c, scale)?;
    }
    Ok(())
}

pub fn filaments(cfg: &RunConfig, scene: Option<&str>, xstar: Option<f64>) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let scenes = select(&catalog, scene)?;
    let gmf = cfg.gmf()?;
    let wind = xstar.map(|_| load_wind_field(cfg)).transpose()?;
    let runner = SceneRunner {
        cfg,
        gmf: &gmf,
        wind: wind.as_ref(),
    };
    par_map(&scenes, |rec| {
        let ex = runner.extract(rec, xstar)?;
        let dir = scene_dir(cfg, rec, "filaments")?;
        let f = &ex.field;
        sgrd::write(dir.join("magnitude.sgrd"), &f.magnitude)?;
        sgrd::write(dir.join("labels.sgrd"), &f.label_grid())?;
        sgrd::write_pgm(
            dir.join("magnitude.pgm"),
            &f.magnitude,
            GrayScale::range(MAGNITUDE_RANGE.0, MAGNITUDE_RANGE.1),
        )?;
        let mut pixels = vec![0usize; f.component_count()];
        for &l in f.labels.labels().iter().filter(|&&l| l > 0) {
            pixels[l as usize - 1] += 1;
        }
        let mut csv = String::from("label,pixels,span_m\n");
        for (i, span) in f.component_spans.iter().enumerate() {
            writeln!(csv, "{},{},{span}", i + 1, pixels[i])?;
        }
        write_file(&dir.join("components.csv"), csv)?;
        if ex.adjust_invalidated > 0 {
            warn!(
                "{}: wind adjustment invalidated {} pixels",
                rec.scene_id, ex.adjust_invalidated
            );
        }
        info!("{}: {} filaments", rec.scene_id, f.component_count());
        Ok(())
    })?;
    Ok(())
}

pub fn adjust(cfg: &RunConfig, scene: Option<&str>, xstar: Option<f64>) -> Result<()> {
    let x = xstar.unwrap_or(cfg.sweep.x_star);
    let catalog = load_catalog(cfg)?;
    let scenes = select(&catalog, scene)?;
    let gmf = cfg.gmf()?;
    let wind = load_wind_field(cfg)?;
    let runner = SceneRunner {
        cfg,
        gmf: &gmf,
        wind: Some(&wind),
    };
    par_map(&scenes, |rec| {
        let fine = runner.fine(rec)?;
        let w = runner.wind_on(rec, &fine)?;
        let cs = filamap::pipeline::bracket_contrasts(&fine, &cfg.agreement)?;
        let mut invalidated = 0;
        let mut adj = Vec::with_capacity(3);
        for c in &cs {
            let (a, n) = adjust_contrast(c, &w, x)?;
            invalidated += n;
            adj.push(a);
        }
        let adj: [filamap::Grid; 3] = adj.try_into().expect("three brackets");
        let dir = scene_dir(cfg, rec, "adjust")?;
        write_brackets(&dir, cfg, &adj, "_adj")?;
        write_file(
            &dir.join("adjust.txt"),
            format!("x_star\t{x}\ninvalidated\t{invalidated}\n"),
        )?;
        Ok(())
    })?;
    Ok(())
}

pub fn collocate(cfg: &RunConfig) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let (sightings, rejected) = ingest::load_sightings(&cfg.paths.sightings, &cfg.sighting_bounds)?;
    let d = ingest::dedup_all(&sightings);
    let matches = ingest::collocate_day(&d.merged, &catalog);
    let summary = ingest::summarize_counts(&matches, &catalog, &d.merged);
    let out = &cfg.paths.output;
    write_file(&out.join("collocation_summary.csv"), ingest::summary_csv(&summary))?;

    let mut m = String::from("scene_id,scene_utc,source,sighting_utc,lat,lon,count\n");
    for x in &matches {
        let (s, sc) = (&d.merged[x.sighting], &catalog[x.scene]);
        writeln!(
            m,
            "{},{},{},{},{},{},{}",
            sc.scene_id,
            format_utc(&sc.t),
            s.source,
            format_utc(&s.t),
            s.lat,
            s.lon,
            s.count
        )?;
    }
    write_file(&out.join("matches.csv"), m)?;

    let mut r = String::new();
    writeln!(r, "read\t{}", sightings.len())?;
    writeln!(r, "rejected\t{}", rejected.len())?;
    writeln!(r, "dead_dropped\t{}", d.dead_dropped)?;
    writeln!(r, "duplicates_removed\t{}", d.removed)?;
    writeln!(r, "blocked\t{}", d.blocked)?;
    writeln!(r, "merged\t{}", d.merged.len())?;
    writeln!(r, "matches\t{}", matches.len())?;
    for rej in &rejected {
        writeln!(r, "rejected_row\t{}\t{}", rej.line, rej.reason)?;
    }
    write_file(&out.join("dedup_report.txt"), r)?;
    info!("{} sightings after dedup, {} matches", d.merged.len(), matches.len());
    Ok(())
}

pub fn bin(cfg: &RunConfig, xstar: Option<f64>) -> Result<()> {
    let catalog = load_catalog(cfg)?;
    let domains = load_domains(&cfg.paths.domain_vertices, &cfg.paths.domain_gridboxes)?;
    let wind_series = ingest::load_wind_series(&cfg.paths.wind)?;
    let field = xstar.map(|_| wind_series.to_field());
    let gmf = cfg.gmf()?;
    let runner = SceneRunner {
        cfg,
        gmf: &gmf,
        wind: field.as_ref(),
    };
    let scenes: Vec<&SceneRecord> = catalog.iter().collect();
    let per_scene = par_map(&scenes, |rec| {
        let ex = runner.extract(rec, xstar)?;
        Ok(scene_samples(rec, &ex.field, &domains, cfg.min_coverage))
    })?;

    let mut samples_csv = String::from("scene_id,domain,iso_utc,C,overlap_pixels\n");
    let mut samples = Vec::new();
    for (rec, rows) in scenes.iter().zip(per_scene) {
        for (s, overlap) in rows {
            writeln!(
                samples_csv,
                "{},{},{},{},{overlap}",
                rec.scene_id,
                s.domain,
                format_utc(&s.t),
                s.c
            )?;
            samples.push(s);
        }
    }
    let res = ingest::bin_hourly(
        &samples,
        &domains,
        &wind_series,
        &cfg.sweep.deltas,
        &cfg.wind_restriction,
    );
    let out = &cfg.paths.output;
    write_file(&out.join("scene_samples.csv"), samples_csv)?;
    write_file(&cfg.paths.series, series::to_csv(&res.series))?;

    let c = res.counts;
    let mut report = String::new();
    writeln!(report, "scenes\t{}", catalog.len())?;
    writeln!(report, "samples\t{}", c.samples)?;
    writeln!(report, "bins\t{}", c.bins)?;
    writeln!(report, "kept\t{}", c.kept)?;
    writeln!(report, "missing_wind\t{}", c.missing_wind)?;
    writeln!(report, "out_of_range\t{}", c.out_of_range)?;
    writeln!(report, "unknown_domain\t{}", c.unknown_domain)?;
    for (d, s) in &res.series {
        writeln!(report, "domain\t{d}\t{}", s.len())?;
    }
    write_file(&out.join("bin_report.txt"), report)?;

    let seasonal: BTreeMap<String, _> = res
        .series
        .iter()
        .map(|(d, s)| (d.clone(), ingest::seasonal_summary(s, &cfg.season)))
        .collect();
    write_file(&out.join("seasonal.csv"), ingest::seasonal_csv(&seasonal))?;
    info!("{} binned samples in {} domains", c.kept, res.series.len());
    Ok(())
}

fn scene_samples(
    rec: &SceneRecord,
    f: &filamap::filament::FilamentField,
    domains: &[DomainPolygon],
    min_coverage: f64,
) -> Vec<(SceneSample, usize)> {
    domains
        .iter()
        .filter_map(|d| {
            domain_contrast(f, d, min_coverage).map(|dc| {
                (
                    SceneSample {
                        domain: d.name.clone(),
                        t: rec.t,
                        c: dc.c,
                    },
                    dc.overlap_pixels,
                )
            })
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

struct Correlations {
    pearson: f64,
    dcor: f64,
    components: BTreeMap<u32, Option<Components>>,
}

fn correlations(s: &PairedSeries, deltas: &[u32]) -> Result<Correlations> {
    let mut components = BTreeMap::new();
    for &d in deltas {
        let sol = solve_measurement_model(s, d)?;
        components.insert(d, decompose_pearson(&sol, sol.var_c, sol.var_u));
    }
    Ok(Correlations {
        pearson: pearson(&s.c, &s.u)?,
        dcor: dcor(&s.c, &s.u)?,
        components,
    })
}

pub fn analyze(cfg: &RunConfig) -> Result<()> {
    let all = series::read_csv(&cfg.paths.series)?;
    let dir = cfg.paths.output.join("analysis");
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let deltas = &cfg.sweep.deltas;
    let x_star = cfg.sweep.x_star;

    let mut corr = String::from("domain,n,stage,pearson,dcor");
    for d in deltas {
        write!(corr, ",linear_d{d},nonlinear_d{d}")?;
    }
    corr.push('\n');
    let mut summary = String::new();
    writeln!(summary, "x_star\t{x_star}")?;
    let mut analyzed = 0;
    for (domain, s) in &all {
        if s.len() < MIN_SAMPLES {
            warn!("domain {domain}: {} samples, needs {MIN_SAMPLES}", s.len());
            writeln!(summary, "skipped\t{domain}\t{} samples, needs {MIN_SAMPLES}", s.len())?;
            continue;
        }
        let rep = match sweep_exponent(s, &cfg.sweep) {
            Ok(r) => r,
            Err(e) if e.is_data_error() => {
                warn!("domain {domain}: {e}");
                writeln!(summary, "skipped\t{domain}\t{e}")?;
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        write_file(&dir.join(format!("dependence_{domain}.csv")), rep.to_csv())?;
        let adjusted = s.map_contrast(|c, u| c * (u / REFERENCE_WIND).powf(x_star));
        for (stage, series) in [("before", s), ("after", &adjusted)] {
            let c = correlations(series, deltas)?;
            write!(corr, "{domain},{},{stage},{},{}", s.len(), c.pearson, c.dcor)?;
            for d in deltas {
                let comp = c.components.get(d).copied().flatten();
                write!(
                    corr,
                    ",{},{}",
                    opt(comp.map(|x| x.linear)),
                    opt(comp.map(|x| x.nonlinear))
                )?;
            }
            corr.push('\n');
        }
        let bp = rep.best_abs_pearson();
        let bd = rep.best_dcor();
        writeln!(summary, "domain\t{domain}\tn\t{}", s.len())?;
        writeln!(summary, "best_abs_pearson\t{domain}\t{}\t{}", bp.x, bp.abs_pearson)?;
        writeln!(summary, "best_dcor\t{domain}\t{}\t{}", bd.x, bd.dcor)?;
        for d in deltas {
            for (what, idx) in [
                ("linear", rep.argmax.linear.get(d)),
                ("nonlinear", rep.argmax.nonlinear.get(d)),
            ] {
                match idx.copied().flatten() {
                    Some(i) => writeln!(summary, "best_{what}_d{d}\t{domain}\t{}", rep.points[i].x)?,
                    None => writeln!(summary, "best_{what}_d{d}\t{domain}\tunavailable")?,
                }
            }
        }
        if rep.low_confidence {
            writeln!(summary, "low_confidence\t{domain}")?;
        }
        analyzed += 1;
    }
    write_file(&dir.join("correlations.csv"), corr)?;
    write_file(&dir.join("summary.txt"), summary)?;
    if analyzed == 0 {
        return Err(DataError(format!(
            "no domain in {} has enough samples",
            cfg.paths.series.display()
        ))
        .into());
    }
    Ok(())
}
