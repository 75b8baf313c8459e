use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};

use filamap::gmf::{GmfSpec, SceneGeometry};
use filamap::ingest::{self, SceneRecord};
use filamap::pipeline::{self, AdjustInput, Extraction, MaskInput};
use filamap::sgrd;
use filamap::sweep::{interpolate_wind, WindField};
use filamap::Grid;

use crate::config::RunConfig;
use crate::UsageError;

pub fn load_catalog(cfg: &RunConfig) -> Result<Vec<SceneRecord>> {
    Ok(ingest::load_scene_catalog(&cfg.paths.catalog)?)
}

/// The requested scene, or every scene when none is named.
pub fn select<'a>(catalog: &'a [SceneRecord], scene: Option<&str>) -> Result<Vec<&'a SceneRecord>> {
    match scene {
        None => Ok(catalog.iter().collect()),
        Some(id) => catalog
            .iter()
            .find(|s| s.scene_id == id)
            .map(|s| vec![s])
            .ok_or_else(|| UsageError(format!("scene {id} is not in the catalog")).into()),
    }
}

pub fn load_wind_field(cfg: &RunConfig) -> Result<WindField> {
    Ok(ingest::load_wind_series(&cfg.paths.wind)?.to_field())
}

pub struct SceneRunner<'a> {
    pub cfg: &'a RunConfig,
    pub gmf: &'a GmfSpec,
    pub wind: Option<&'a WindField>,
}

impl SceneRunner<'_> {
    pub fn base(&self, rec: &SceneRecord) -> Result<Grid> {
        sgrd::read(&rec.grid_path).with_context(|| format!("scene {}", rec.scene_id))
    }

    /// σ₀ at the fine analysis resolution, GMF-masked when enabled.
    pub fn fine(&self, rec: &SceneRecord) -> Result<Grid> {
        let fine = pipeline::level_of(&self.base(rec)?, self.cfg.agreement.fine_m)?;
        if !self.cfg.mask.enabled {
            return Ok(fine);
        }
        let geom = self.geometry(rec, &fine)?;
        let (lo, hi) = filamap::gmf::mask_bounds(self.gmf, &geom, rec.polarization, &self.cfg.mask.bounds())?;
        Ok(filamap::gmf::apply_mask(&fine, &lo, &hi)?)
    }

    fn geometry(&self, rec: &SceneRecord, template: &Grid) -> Result<SceneGeometry> {
        Ok(SceneGeometry::linear_range(
            template,
            self.cfg.mask.incidence_near,
            self.cfg.mask.incidence_far,
            rec.track_heading,
        )?)
    }

    pub fn wind_on(&self, rec: &SceneRecord, template: &Grid) -> Result<Grid> {
        let field = self.wind.expect("wind field loaded for adjustment");
        interpolate_wind(field, template, &rec.t).with_context(|| format!("wind for scene {}", rec.scene_id))
    }

    pub fn extract(&self, rec: &SceneRecord, x_star: Option<f64>) -> Result<Extraction> {
        let fine = pipeline::level_of(&self.base(rec)?, self.cfg.agreement.fine_m)?;
        let geom = if self.cfg.mask.enabled {
            Some(self.geometry(rec, &fine)?)
        } else {
            None
        };
        let mask = geom.as_ref().map(|g| MaskInput {
            gmf: self.gmf,
            geometry: g,
            polarization: rec.polarization,
            bounds: self.cfg.mask.bounds(),
        });
        let wind = match x_star {
            Some(_) => Some(self.wind_on(rec, &fine)?),
            None => None,
        };
        let adjust = wind
            .as_ref()
            .zip(x_star)
            .map(|(w, x)| AdjustInput { wind: w, x_star: x });
        pipeline::extract_filaments(&fine, &self.cfg.agreement, mask, adjust)
            .with_context(|| format!("scene {}", rec.scene_id))
    }
}

/// Maps `f` over `items` on a bounded pool; results keep input order.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync) -> Result<Vec<R>> {
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(items.len())
        .max(1);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<R>>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("result lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("result lock")
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}
