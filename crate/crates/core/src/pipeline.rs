//! Scene-level filament extraction: pyramid, GMF masking, bracket contrasts,
//! optional wind adjustment, agreement averaging and the span rule.

use crate::error::{Error, Result};
use crate::filament::{extract, AgreementParams, FilamentField};
use crate::gmf::{apply_mask, mask_bounds, BoundWinds, GmfSpec, Polarization, SceneGeometry};
use crate::raster::{build_pyramid, contrast, Grid};
use crate::sweep::adjust_contrast;

/// GMF masking inputs; the geometry lives on the fine analysis grid.
#[derive(Debug, Clone, Copy)]
pub struct MaskInput<'a> {
    pub gmf: &'a GmfSpec,
    pub geometry: &'a SceneGeometry,
    pub polarization: Polarization,
    pub bounds: BoundWinds,
}

/// Wind adjustment inputs; `wind` lives on the fine analysis grid.
#[derive(Debug, Clone, Copy)]
pub struct AdjustInput<'a> {
    pub wind: &'a Grid,
    pub x_star: f64,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// σ₀ at the fine analysis resolution after masking.
    pub fine: Grid,
    pub contrasts: [Grid; 3],
    /// Pixels invalidated by the wind adjustment, summed over brackets.
    pub adjust_invalidated: usize,
    pub field: FilamentField,
}

fn halvings(from_m: f64, to_m: f64) -> Option<usize> {
    let r = to_m / from_m;
    let k = r.log2().round();
    (r >= 1.0 && (r.log2() - k).abs() < 1e-9).then_some(k as usize)
}

/// The pyramid level of `base` at `pixel_m`.
pub fn level_of(base: &Grid, pixel_m: f64) -> Result<Grid> {
    let k = halvings(base.pixel_size_m(), pixel_m).ok_or_else(|| {
        Error::Registration(format!(
            "{pixel_m} m is not a power-of-two coarsening of {} m",
            base.pixel_size_m()
        ))
    })?;
    let p = build_pyramid(base, k + 1)?;
    Ok(p.levels()[k].clone())
}

/// The three bracket contrasts on the fine grid.
pub fn bracket_contrasts(fine: &Grid, p: &AgreementParams) -> Result<[Grid; 3]> {
    let top = p.coarse_m.iter().fold(fine.pixel_size_m(), |a, &b| a.max(b));
    let n =
        halvings(fine.pixel_size_m(), top).ok_or_else(|| Error::Registration(format!("bad coarse level {top} m")))?;
    let pyr = build_pyramid(fine, n + 1)?;
    let mut out = Vec::with_capacity(3);
    for &c in &p.coarse_m {
        let coarse = pyr
            .level_at(c)
            .ok_or_else(|| Error::Registration(format!("no {c} m pyramid level")))?;
        out.push(contrast(fine, coarse)?);
    }
    Ok(out.try_into().expect("three brackets"))
}

/// Runs the whole extraction on a σ₀ scene at any power-of-two fraction of
/// the fine resolution.
///
/// Masking happens on the fine level and the coarse levels are rebuilt from
/// the masked grid, so masked pixels never leak into the backgrounds.
pub fn extract_filaments(
    base: &Grid,
    p: &AgreementParams,
    mask: Option<MaskInput<'_>>,
    adjust: Option<AdjustInput<'_>>,
) -> Result<Extraction> {
    p.validate()?;
    let mut fine = level_of(base, p.fine_m)?;
    if let Some(m) = mask {
        let (lo, hi) = mask_bounds(m.gmf, m.geometry, m.polarization, &m.bounds)?;
        fine = apply_mask(&fine, &lo, &hi)?;
    }
    let mut contrasts = bracket_contrasts(&fine, p)?;
    let mut adjust_invalidated = 0;
    if let Some(a) = adjust {
        for c in &mut contrasts {
            let (adj, n) = adjust_contrast(c, a.wind, a.x_star)?;
            *c = adj;
            adjust_invalidated += n;
        }
    }
    let [c1, c2, c3] = &contrasts;
    let field = extract(c1, c2, c3, p)?;
    Ok(Extraction {
        fine,
        contrasts,
        adjust_invalidated,
        field,
    })
}
