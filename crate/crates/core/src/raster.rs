//! Georeferenced grids, the resolution-halving pyramid and the relative
//! contrast operator `(s - s_bar) / s_bar`.

use crate::error::{Error, Result};

/// Meters per degree of latitude in the local equirectangular mapping.
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// Relative tolerance used when comparing pixel sizes and origins.
const GEOM_RTOL: f64 = 1e-9;

/// A row-major 2-D field with a per-pixel validity mask.
///
/// Pixel `(i, j)` is row `i`, column `j`. The origin is the center of pixel
/// `(0, 0)`, rows run south and columns run east.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    ncols: usize,
    nrows: usize,
    pixel_size_m: f64,
    origin_lat: f64,
    origin_lon: f64,
    values: Vec<f64>,
    valid: Vec<bool>,
}

impl Grid {
    /// Creates a grid; a pixel is valid iff its value is finite.
    pub fn new(
        ncols: usize,
        nrows: usize,
        pixel_size_m: f64,
        origin_lat: f64,
        origin_lon: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let valid = values.iter().map(|v| v.is_finite()).collect();
        Self::with_mask(ncols, nrows, pixel_size_m, origin_lat, origin_lon, values, valid)
    }

    pub fn with_mask(
        ncols: usize,
        nrows: usize,
        pixel_size_m: f64,
        origin_lat: f64,
        origin_lon: f64,
        values: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::Format("grid dimensions must be positive".into()));
        }
        if values.len() != ncols * nrows || valid.len() != values.len() {
            return Err(Error::Format(format!(
                "grid {}x{} needs {} values, got {} values and {} mask entries",
                ncols,
                nrows,
                ncols * nrows,
                values.len(),
                valid.len()
            )));
        }
        if !(pixel_size_m > 0.0 && pixel_size_m.is_finite()) {
            return Err(Error::Format(format!("invalid pixel size {pixel_size_m}")));
        }
        if !origin_lat.is_finite() || !origin_lon.is_finite() || origin_lat.abs() >= 90.0 {
            return Err(Error::Format(format!("invalid origin ({origin_lat}, {origin_lon})")));
        }
        Ok(Grid {
            ncols,
            nrows,
            pixel_size_m,
            origin_lat,
            origin_lon,
            values,
            valid,
        })
    }

    /// A fully valid grid holding `value` everywhere.
    pub fn filled(
        ncols: usize,
        nrows: usize,
        pixel_size_m: f64,
        origin_lat: f64,
        origin_lon: f64,
        value: f64,
    ) -> Result<Self> {
        Self::new(
            ncols,
            nrows,
            pixel_size_m,
            origin_lat,
            origin_lon,
            vec![value; ncols * nrows],
        )
    }

    /// Same geometry as `self`, new contents.
    pub fn like(&self, values: Vec<f64>, valid: Vec<bool>) -> Self {
        assert_eq!(values.len(), self.len());
        assert_eq!(valid.len(), self.len());
        Grid {
            ncols: self.ncols,
            nrows: self.nrows,
            pixel_size_m: self.pixel_size_m,
            origin_lat: self.origin_lat,
            origin_lon: self.origin_lon,
            values,
            valid,
        }
    }

    /// Applies `f` to every valid pixel; invalid pixels stay invalid.
    pub fn map_valid(&self, f: impl Fn(f64) -> f64) -> Self {
        let values = self
            .values
            .iter()
            .zip(&self.valid)
            .map(|(&v, &ok)| if ok { f(v) } else { f64::NAN })
            .collect();
        self.like(values, self.valid.clone())
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn pixel_size_m(&self) -> f64 {
        self.pixel_size_m
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_lat, self.origin_lon)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn validity(&self) -> &[bool] {
        &self.valid
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    /// Value at `(row, col)`, `None` if masked.
    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        let k = self.index(row, col);
        self.valid[k].then_some(self.values[k])
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Mean over valid pixels, `None` when nothing is valid.
    pub fn mean_valid(&self) -> Option<f64> {
        let (sum, n) = self
            .values
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .fold((0.0, 0usize), |(s, n), (&v, _)| (s + v, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Latitude and longitude of the center of pixel `(row, col)`.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        self.location(row as f64, col as f64)
    }

    /// Geolocation at fractional pixel coordinates.
    pub fn location(&self, row: f64, col: f64) -> (f64, f64) {
        let lat = self.origin_lat - row * self.pixel_size_m / METERS_PER_DEGREE;
        let lon = self.origin_lon + col * self.pixel_size_m / (METERS_PER_DEGREE * self.origin_lat.to_radians().cos());
        (lat, lon)
    }

    /// Fractional pixel coordinates `(row, col)` of a location.
    pub fn pixel_coords(&self, lat: f64, lon: f64) -> (f64, f64) {
        let row = (self.origin_lat - lat) * METERS_PER_DEGREE / self.pixel_size_m;
        let col = (lon - self.origin_lon) * METERS_PER_DEGREE * self.origin_lat.to_radians().cos() / self.pixel_size_m;
        (row, col)
    }

    /// Corner ring (lat, lon) of the outer pixel edges, clockwise from the
    /// upper-left corner.
    pub fn bounding_ring(&self) -> Vec<(f64, f64)> {
        let r1 = self.nrows as f64 - 0.5;
        let c1 = self.ncols as f64 - 0.5;
        vec![
            self.location(-0.5, -0.5),
            self.location(-0.5, c1),
            self.location(r1, c1),
            self.location(r1, -0.5),
        ]
    }

    /// True when both grids share dimensions, pixel size and origin.
    pub fn same_geometry(&self, other: &Grid) -> bool {
        self.ncols == other.ncols
            && self.nrows == other.nrows
            && close(self.pixel_size_m, other.pixel_size_m, self.pixel_size_m)
            && close(self.origin_lat, other.origin_lat, 1.0)
            && close(self.origin_lon, other.origin_lon, 1.0)
    }

    pub fn ensure_same_geometry(&self, other: &Grid, what: &str) -> Result<()> {
        if self.same_geometry(other) {
            Ok(())
        } else {
            Err(Error::Registration(format!(
                "{what}: {}x{} @ {} m vs {}x{} @ {} m",
                self.ncols, self.nrows, self.pixel_size_m, other.ncols, other.nrows, other.pixel_size_m
            )))
        }
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= GEOM_RTOL * scale.abs().max(1.0)
}

/// Halves the resolution by averaging the valid pixels of each 2x2 block.
///
/// Odd trailing rows or columns form partial blocks. A coarse pixel is
/// invalid only when none of its children are valid.
pub fn downsample_halve(g: &Grid) -> Grid {
    let ncols = g.ncols.div_ceil(2);
    let nrows = g.nrows.div_ceil(2);
    let mut values = vec![f64::NAN; ncols * nrows];
    let mut valid = vec![false; ncols * nrows];
    for r in 0..nrows {
        for c in 0..ncols {
            let mut sum = 0.0;
            let mut n = 0u32;
            for fr in 2 * r..(2 * r + 2).min(g.nrows) {
                for fc in 2 * c..(2 * c + 2).min(g.ncols) {
                    if let Some(v) = g.get(fr, fc) {
                        sum += v;
                        n += 1;
                    }
                }
            }
            if n > 0 {
                let k = r * ncols + c;
                values[k] = sum / f64::from(n);
                valid[k] = true;
            }
        }
    }
    let (origin_lat, origin_lon) = g.location(0.5, 0.5);
    Grid {
        ncols,
        nrows,
        pixel_size_m: 2.0 * g.pixel_size_m,
        origin_lat,
        origin_lon,
        values,
        valid,
    }
}

/// Successively halved copies of a base grid, `levels[0]` being the base.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<Grid>,
}

impl Pyramid {
    pub fn levels(&self) -> &[Grid] {
        &self.levels
    }

    pub fn level(&self, k: usize) -> Option<&Grid> {
        self.levels.get(k)
    }

    pub fn base(&self) -> &Grid {
        &self.levels[0]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// The level whose pixel size equals `pixel_size_m`.
    pub fn level_at(&self, pixel_size_m: f64) -> Option<&Grid> {
        self.levels
            .iter()
            .find(|g| close(g.pixel_size_m, pixel_size_m, pixel_size_m))
    }

    pub fn into_levels(self) -> Vec<Grid> {
        self.levels
    }
}

/// Builds `n_levels` levels; fails if a 1x1 level would have to be halved.
pub fn build_pyramid(g: &Grid, n_levels: usize) -> Result<Pyramid> {
    if n_levels == 0 {
        return Err(Error::Config("pyramid needs at least one level".into()));
    }
    let mut levels = Vec::with_capacity(n_levels);
    levels.push(g.clone());
    while levels.len() < n_levels {
        let top = levels.last().expect("non-empty");
        if top.ncols == 1 && top.nrows == 1 {
            return Err(Error::LevelExhaustion {
                requested: n_levels,
                ncols: g.ncols,
                nrows: g.nrows,
            });
        }
        let next = downsample_halve(top);
        levels.push(next);
    }
    Ok(Pyramid { levels })
}

/// Power-of-two factor between a fine and a coarse grid, after checking
/// that the coarse grid is the pyramid ancestor of the fine one.
fn ancestor_factor(fine: &Grid, coarse: &Grid) -> Result<u32> {
    let ratio = coarse.pixel_size_m / fine.pixel_size_m;
    let k = ratio.log2().round();
    if !(0.0..=30.0).contains(&k) || !close(ratio, 2f64.powf(k), ratio) {
        return Err(Error::Registration(format!(
            "pixel size ratio {ratio} is not a power of two"
        )));
    }
    let k = k as u32;
    let f = 1usize << k;
    if coarse.ncols != fine.ncols.div_ceil(f) || coarse.nrows != fine.nrows.div_ceil(f) {
        return Err(Error::Registration(format!(
            "coarse grid {}x{} is not a 2^{k} reduction of {}x{}",
            coarse.ncols, coarse.nrows, fine.ncols, fine.nrows
        )));
    }
    // The coarse origin sits at the center of the first 2^k x 2^k block.
    let half = (f as f64 - 1.0) / 2.0;
    let (lat, lon) = fine.location(half, half);
    let lat_tol = fine.pixel_size_m / METERS_PER_DEGREE * 1e-3;
    if (lat - coarse.origin_lat).abs() > lat_tol || (lon - coarse.origin_lon).abs() > 4.0 * lat_tol {
        return Err(Error::Registration(format!(
            "coarse origin ({}, {}) does not match fine grid block center ({lat}, {lon})",
            coarse.origin_lat, coarse.origin_lon
        )));
    }
    Ok(k)
}

/// Replicates each coarse pixel over the fine pixels it covers.
pub fn block_replicate(coarse: &Grid, fine: &Grid) -> Result<Grid> {
    let k = ancestor_factor(fine, coarse)?;
    let mut values = Vec::with_capacity(fine.len());
    let mut valid = Vec::with_capacity(fine.len());
    for r in 0..fine.nrows {
        for c in 0..fine.ncols {
            let ci = coarse.index(r >> k, c >> k);
            values.push(coarse.values[ci]);
            valid.push(coarse.valid[ci]);
        }
    }
    Ok(fine.like(values, valid))
}

/// Relative contrast of `fine` against its smoothed ancestor `coarse`.
///
/// Invalid where either input is invalid or the smoothed value is not
/// positive.
pub fn contrast(fine: &Grid, coarse: &Grid) -> Result<Grid> {
    let k = ancestor_factor(fine, coarse)?;
    let mut values = vec![f64::NAN; fine.len()];
    let mut valid = vec![false; fine.len()];
    for r in 0..fine.nrows {
        for c in 0..fine.ncols {
            let fi = fine.index(r, c);
            let ci = coarse.index(r >> k, c >> k);
            if fine.valid[fi] && coarse.valid[ci] && coarse.values[ci] > 0.0 {
                let bar = coarse.values[ci];
                values[fi] = (fine.values[fi] - bar) / bar;
                valid[fi] = true;
            }
        }
    }
    Ok(fine.like(values, valid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(ncols: usize, nrows: usize, values: Vec<f64>) -> Grid {
        Grid::new(ncols, nrows, 100.0, 48.0, -64.0, values).unwrap()
    }

    #[test]
    fn halving_two_by_two_gives_mean() {
        let g = grid(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let h = downsample_halve(&g);
        assert_eq!((h.ncols(), h.nrows()), (1, 1));
        assert_eq!(h.values(), &[2.5]);
        assert_eq!(h.pixel_size_m(), 200.0);
    }

    #[test]
    fn halving_ignores_invalid_children() {
        let g = grid(2, 2, vec![1.0, f64::NAN, 3.0, f64::NAN]);
        let h = downsample_halve(&g);
        assert_eq!(h.get(0, 0), Some(2.0));
    }

    #[test]
    fn all_invalid_block_is_invalid() {
        let g = grid(2, 2, vec![f64::NAN; 4]);
        assert_eq!(downsample_halve(&g).get(0, 0), None);
    }

    #[test]
    fn constant_grid_stays_constant() {
        let g = Grid::filled(7, 5, 100.0, 48.0, -64.0, 0.125).unwrap();
        let h = downsample_halve(&g);
        assert_eq!((h.ncols(), h.nrows()), (4, 3));
        assert!(h.values().iter().all(|&v| v == 0.125));
    }

    #[test]
    fn halving_shifts_origin_half_a_pixel() {
        let g = Grid::filled(4, 4, 800.0, 48.0, -64.0, 1.0).unwrap();
        let h = downsample_halve(&g);
        let (lat, lon) = h.origin();
        assert!((lat - (48.0 - 400.0 / METERS_PER_DEGREE)).abs() < 1e-12);
        let dlon = 400.0 / (METERS_PER_DEGREE * 48f64.to_radians().cos());
        assert!((lon - (-64.0 + dlon)).abs() < 1e-12);
    }

    #[test]
    fn pyramid_of_one_level_is_identity() {
        let g = grid(3, 3, (0..9).map(f64::from).collect());
        let p = build_pyramid(&g, 1).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.base(), &g);
    }

    #[test]
    fn pyramid_uses_ceil_halving() {
        // Blocks of the 3x3 base: {0,1,3,4}, {2,5}, {6,7}, {8}.
        let g = grid(3, 3, (0..9).map(f64::from).collect());
        let p = build_pyramid(&g, 2).unwrap();
        let top = p.level(1).unwrap();
        assert_eq!((top.ncols(), top.nrows()), (2, 2));
        assert_eq!(top.values(), &[2.0, 3.5, 6.5, 8.0]);
    }

    #[test]
    fn pyramid_exhaustion_is_an_error() {
        let g = grid(2, 2, vec![1.0; 4]);
        assert!(build_pyramid(&g, 2).is_ok());
        assert!(matches!(
            build_pyramid(&g, 3),
            Err(Error::LevelExhaustion { requested: 3, .. })
        ));
    }

    #[test]
    fn contrast_values() {
        let fine = Grid::filled(2, 2, 800.0, 48.0, -64.0, 0.02).unwrap();
        let coarse = downsample_halve(&Grid::filled(2, 2, 800.0, 48.0, -64.0, 0.01).unwrap());
        let c = contrast(&fine, &coarse).unwrap();
        assert!(c.values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn contrast_against_self_is_zero() {
        let g = grid(3, 2, vec![0.1, 0.2, 0.3, 0.4, f64::NAN, 0.6]);
        let c = contrast(&g, &g).unwrap();
        assert_eq!(c.valid_count(), 5);
        assert!(c.values().iter().zip(c.validity()).all(|(&v, &ok)| !ok || v == 0.0));
    }

    #[test]
    fn contrast_masks_nonpositive_background() {
        let fine = grid(2, 2, vec![0.0, 0.0, 0.0, 0.0]);
        let coarse = downsample_halve(&fine);
        let c = contrast(&fine, &coarse).unwrap();
        assert_eq!(c.valid_count(), 0);
    }

    #[test]
    fn contrast_rejects_unrelated_geometry() {
        let fine = grid(4, 4, vec![1.0; 16]);
        let other = Grid::filled(3, 3, 200.0, 48.0, -64.0, 1.0).unwrap();
        assert!(matches!(contrast(&fine, &other), Err(Error::Registration(_))));
        let shifted = Grid::filled(2, 2, 200.0, 47.0, -64.0, 1.0).unwrap();
        assert!(matches!(contrast(&fine, &shifted), Err(Error::Registration(_))));
        let non_pow2 = Grid::filled(2, 2, 300.0, 48.0, -64.0, 1.0).unwrap();
        assert!(contrast(&fine, &non_pow2).is_err());
    }

    #[test]
    fn replicate_then_halve_recovers_coarse() {
        let base = grid(8, 8, (0..64).map(|v| f64::from(v) * 0.5).collect());
        let p = build_pyramid(&base, 3).unwrap();
        let coarse = p.level(2).unwrap();
        let rep = block_replicate(coarse, &base).unwrap();
        let back = build_pyramid(&rep, 3).unwrap();
        assert_eq!(back.level(2).unwrap().values(), coarse.values());
    }

    #[test]
    fn mismatched_values_rejected() {
        assert!(Grid::new(2, 2, 1.0, 0.0, 0.0, vec![1.0; 3]).is_err());
        assert!(Grid::new(0, 2, 1.0, 0.0, 0.0, vec![]).is_err());
        assert!(Grid::new(1, 1, 0.0, 0.0, 0.0, vec![1.0]).is_err());
    }
}
