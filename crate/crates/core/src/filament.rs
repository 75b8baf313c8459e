//! Three-bracket agreement, connected components, the span rule and
//! per-domain contrast magnitude.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::raster::{Grid, METERS_PER_DEGREE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(try_from = "u8")]
pub enum Connectivity {
    Four,
    Eight,
}

impl TryFrom<u8> for Connectivity {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(format!("connectivity must be 4 or 8, got {v}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgreementParams {
    /// Minimum contrast magnitude required of every bracket.
    pub threshold: f64,
    /// Pixel size of σ₀ in every bracket, meters.
    pub fine_m: f64,
    /// Pixel sizes of the three smoothed backgrounds, meters.
    pub coarse_m: [f64; 3],
    pub connectivity: Connectivity,
    pub min_span_m: f64,
}

impl Default for AgreementParams {
    fn default() -> Self {
        AgreementParams {
            threshold: 0.3,
            fine_m: 800.0,
            coarse_m: [1600.0, 3200.0, 6400.0],
            connectivity: Connectivity::Eight,
            min_span_m: 10_000.0,
        }
    }
}

impl AgreementParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0) {
            return Err(Error::Config(format!("threshold {} must be > 0", self.threshold)));
        }
        if !(self.min_span_m > 0.0) {
            return Err(Error::Config(format!("min_span_m {} must be > 0", self.min_span_m)));
        }
        for &c in &self.coarse_m {
            let ratio = c / self.fine_m;
            if !(ratio > 1.0) || (ratio.log2() - ratio.log2().round()).abs() > 1e-9 {
                return Err(Error::Config(format!(
                    "bracket {}/{c} m is not a power-of-two coarsening",
                    self.fine_m
                )));
            }
        }
        Ok(())
    }
}

/// Mean of the three bracket contrasts where all share a sign and each
/// exceeds the threshold in magnitude, zero elsewhere.
pub fn agreement_average(c1: &Grid, c2: &Grid, c3: &Grid, p: &AgreementParams) -> Result<Grid> {
    c1.ensure_same_geometry(c2, "agreement bracket 2")?;
    c1.ensure_same_geometry(c3, "agreement bracket 3")?;
    let mut values = vec![f64::NAN; c1.len()];
    let mut valid = vec![false; c1.len()];
    for k in 0..c1.len() {
        if !(c1.validity()[k] && c2.validity()[k] && c3.validity()[k]) {
            continue;
        }
        let v = [c1.values()[k], c2.values()[k], c3.values()[k]];
        let agree = v.iter().all(|&x| x > p.threshold) || v.iter().all(|&x| x < -p.threshold);
        values[k] = if agree { (v[0] + v[1] + v[2]) / 3.0 } else { 0.0 };
        valid[k] = true;
    }
    Ok(c1.like(values, valid))
}

/// Component ids per pixel, 0 for background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelGrid {
    ncols: usize,
    nrows: usize,
    labels: Vec<u32>,
    count: u32,
}

impl LabelGrid {
    pub fn from_raw(ncols: usize, nrows: usize, labels: Vec<u32>) -> Result<Self> {
        if labels.len() != ncols * nrows {
            return Err(Error::Format("label count does not match dimensions".into()));
        }
        let count = labels.iter().copied().max().unwrap_or(0);
        Ok(LabelGrid {
            ncols,
            nrows,
            labels,
            count,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of components; labels run from 1 to `count`.
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.ncols + col]
    }

    /// `(row, col)` members of each component, indexed by `label - 1`.
    pub fn members(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.count as usize];
        for (k, &l) in self.labels.iter().enumerate() {
            if l > 0 {
                out[l as usize - 1].push((k / self.ncols, k % self.ncols));
            }
        }
        out
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        parent[hi as usize] = lo;
    }
}

/// Labels maximal connected sets of valid nonzero pixels.
///
/// Two-pass union-find; labels are dense from 1 in raster order of each
/// component's first pixel.
pub fn label_components(avg: &Grid, connectivity: Connectivity) -> LabelGrid {
    let (nc, nr) = (avg.ncols(), avg.nrows());
    let fg = |r: usize, c: usize| avg.get(r, c).is_some_and(|v| v != 0.0);
    let mut provisional = vec![0u32; nc * nr];
    let mut parent: Vec<u32> = vec![0];
    // Already-visited neighbours in raster order.
    let back: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(-1, 0), (0, -1)],
        Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
    };
    for r in 0..nr {
        for c in 0..nc {
            if !fg(r, c) {
                continue;
            }
            let mut label = 0u32;
            for &(dr, dc) in back {
                let (rr, cc) = (r as isize + dr, c as isize + dc);
                if rr < 0 || cc < 0 || cc >= nc as isize {
                    continue;
                }
                let l = provisional[rr as usize * nc + cc as usize];
                if l == 0 {
                    continue;
                }
                if label == 0 {
                    label = l;
                } else {
                    union(&mut parent, label, l);
                }
            }
            if label == 0 {
                label = parent.len() as u32;
                parent.push(label);
            }
            provisional[r * nc + c] = label;
        }
    }
    let mut dense = vec![0u32; parent.len()];
    let mut next = 0u32;
    let mut labels = provisional;
    for l in labels.iter_mut().filter(|l| **l > 0) {
        let root = find(&mut parent, *l) as usize;
        if dense[root] == 0 {
            next += 1;
            dense[root] = next;
        }
        *l = dense[root];
    }
    LabelGrid {
        ncols: nc,
        nrows: nr,
        labels,
        count: next,
    }
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Largest squared distance between member pixel centers, in pixel units.
///
/// Evaluated over the vertices of the convex hull, which contain every
/// diameter pair.
pub fn diameter_sq(points: &[(usize, usize)]) -> i64 {
    let mut pts: Vec<(i64, i64)> = points.iter().map(|&(r, c)| (r as i64, c as i64)).collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() < 2 {
        return 0;
    }
    let mut hull: Vec<(i64, i64)> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &(i64, i64)>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let mut best = 0;
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let (dr, dc) = (hull[i].0 - hull[j].0, hull[i].1 - hull[j].1);
            best = best.max(dr * dr + dc * dc);
        }
    }
    best
}

/// Retained filaments of one scene.
#[derive(Debug, Clone)]
pub struct FilamentField {
    /// `|average contrast|` inside retained filaments, 0 elsewhere.
    pub magnitude: Grid,
    pub labels: LabelGrid,
    /// Span in meters of each retained component, indexed by `label - 1`.
    pub component_spans: Vec<f64>,
}

impl FilamentField {
    pub fn component_count(&self) -> usize {
        self.component_spans.len()
    }

    /// Labels as a float grid for SGRD export.
    pub fn label_grid(&self) -> Grid {
        let values = self.labels.labels().iter().map(|&l| f64::from(l)).collect();
        self.magnitude.like(values, vec![true; self.magnitude.len()])
    }
}

/// Removes components spanning less than `min_span_m` and relabels the
/// survivors densely.
pub fn filter_span(avg: &Grid, labels: &LabelGrid, min_span_m: f64) -> Result<FilamentField> {
    if labels.ncols != avg.ncols() || labels.nrows != avg.nrows() {
        return Err(Error::Registration("labels do not match the contrast grid".into()));
    }
    let ps = avg.pixel_size_m();
    let mut remap = vec![0u32; labels.count as usize + 1];
    let mut spans = Vec::new();
    for (i, members) in labels.members().iter().enumerate() {
        let span = (diameter_sq(members) as f64).sqrt() * ps;
        if span >= min_span_m {
            spans.push(span);
            remap[i + 1] = spans.len() as u32;
        }
    }
    let new_labels: Vec<u32> = labels.labels.iter().map(|&l| remap[l as usize]).collect();
    let values = avg
        .values()
        .iter()
        .zip(avg.validity())
        .zip(&new_labels)
        .map(|((&v, &ok), &l)| match (ok, l) {
            (false, _) => f64::NAN,
            (true, 0) => 0.0,
            (true, _) => v.abs(),
        })
        .collect();
    Ok(FilamentField {
        magnitude: avg.like(values, avg.validity().to_vec()),
        labels: LabelGrid {
            ncols: labels.ncols,
            nrows: labels.nrows,
            labels: new_labels,
            count: spans.len() as u32,
        },
        component_spans: spans,
    })
}

/// Agreement, labeling and span filtering of three bracket contrasts.
pub fn extract(c1: &Grid, c2: &Grid, c3: &Grid, p: &AgreementParams) -> Result<FilamentField> {
    let avg = agreement_average(c1, c2, c3, p)?;
    let labels = label_components(&avg, p.connectivity);
    filter_span(&avg, &labels, p.min_span_m)
}

/// An analysis domain and its representative reanalysis wind cell.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainPolygon {
    pub name: String,
    /// Open ring of (lat, lon) vertices.
    vertices: Vec<(f64, f64)>,
    pub era5_gridbox: (f64, f64),
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| {
        let v = (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
        if v > 0.0 {
            1
        } else if v < 0.0 {
            -1
        } else {
            0
        }
    };
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0 && o3 * o4 < 0
}

impl DomainPolygon {
    pub fn new(name: impl Into<String>, mut vertices: Vec<(f64, f64)>, era5_gridbox: (f64, f64)) -> Result<Self> {
        let name = name.into();
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::Config(format!("domain {name}: ring needs 3 vertices")));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_cross(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::Config(format!("domain {name}: ring self-intersects")));
                }
            }
        }
        let poly = DomainPolygon {
            name,
            vertices,
            era5_gridbox,
        };
        let (lat, lon) = era5_gridbox;
        let (lat0, lat1, lon0, lon1) = poly.bbox();
        const ADJ: f64 = 0.25;
        let near = lat >= lat0 - ADJ && lat <= lat1 + ADJ && lon >= lon0 - ADJ && lon <= lon1 + ADJ;
        if !(poly.contains(lat, lon) || near) {
            return Err(Error::Config(format!(
                "domain {}: gridbox ({lat}, {lon}) is not inside or adjacent to the ring",
                poly.name
            )));
        }
        Ok(poly)
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(lat, lon)| (a.min(lat), b.max(lat), c.min(lon), d.max(lon)),
        )
    }

    /// Ray casting; points on the boundary count as inside.
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        point_in_ring(&self.vertices, lat, lon)
    }

    /// Area in square meters under the local equirectangular mapping.
    pub fn area_m2(&self) -> f64 {
        let lat0 = self.vertices.iter().map(|v| v.0).sum::<f64>() / self.vertices.len() as f64;
        let kx = METERS_PER_DEGREE * lat0.to_radians().cos();
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                (a.1 * kx) * (b.0 * METERS_PER_DEGREE) - (b.1 * kx) * (a.0 * METERS_PER_DEGREE)
            })
            .sum();
        twice.abs() / 2.0
    }
}

/// Point-in-ring test on (lat, lon) vertices; boundary points are inside.
pub fn point_in_ring(ring: &[(f64, f64)], lat: f64, lon: f64) -> bool {
    const EPS: f64 = 1e-12;
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        // on-segment check
        let cr = (b.0 - a.0) * (lon - a.1) - (b.1 - a.1) * (lat - a.0);
        if cr.abs() <= EPS
            && lat >= a.0.min(b.0) - EPS
            && lat <= a.0.max(b.0) + EPS
            && lon >= a.1.min(b.1) - EPS
            && lon <= a.1.max(b.1) + EPS
        {
            return true;
        }
        if (a.0 > lat) != (b.0 > lat) {
            let x = a.1 + (lat - a.0) * (b.1 - a.1) / (b.0 - a.0);
            if lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainContrast {
    /// Mean filament magnitude over the overlap.
    pub c: f64,
    /// Valid pixels of the scene inside the domain.
    pub overlap_pixels: usize,
}

/// Mean magnitude over valid pixels whose centers lie in the domain.
///
/// `None` when the overlap is empty or covers less than `min_coverage` of
/// the domain's pixel-equivalent area.
pub fn domain_contrast(f: &FilamentField, d: &DomainPolygon, min_coverage: f64) -> Option<DomainContrast> {
    let g = &f.magnitude;
    let (lat0, lat1, lon0, lon1) = d.bbox();
    // Restrict the scan to the pixel window covering the domain.
    let corners = [(lat0, lon0), (lat0, lon1), (lat1, lon0), (lat1, lon1)];
    let (mut rmin, mut rmax, mut cmin, mut cmax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (lat, lon) in corners {
        let (r, c) = g.pixel_coords(lat, lon);
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        cmin = cmin.min(c);
        cmax = cmax.max(c);
    }
    let clip = |v: f64, n: usize| v.clamp(0.0, n as f64 - 1.0);
    if rmax < -1.0 || cmax < -1.0 || rmin > g.nrows() as f64 || cmin > g.ncols() as f64 {
        return None;
    }
    let (r0, r1) = (
        clip(rmin.floor(), g.nrows()) as usize,
        clip(rmax.ceil(), g.nrows()) as usize,
    );
    let (c0, c1) = (
        clip(cmin.floor(), g.ncols()) as usize,
        clip(cmax.ceil(), g.ncols()) as usize,
    );
    let mut sum = 0.0;
    let mut n = 0usize;
    for r in r0..=r1 {
        for c in c0..=c1 {
            let Some(v) = g.get(r, c) else { continue };
            let (lat, lon) = g.pixel_center(r, c);
            if d.contains(lat, lon) {
                sum += v.abs();
                n += 1;
            }
        }
    }
    let equivalent = d.area_m2() / (g.pixel_size_m() * g.pixel_size_m());
    if n == 0 || (n as f64) < min_coverage * equivalent {
        return None;
    }
    Some(DomainContrast {
        c: sum / n as f64,
        overlap_pixels: n,
    })
}

#[derive(Debug, Deserialize)]
struct VertexRow {
    name: String,
    vertex_index: usize,
    lat: f64,
    lon: f64,
}

#[derive(Debug, Deserialize)]
struct GridboxRow {
    name: String,
    era5_lat: f64,
    era5_lon: f64,
}

/// Reads domain rings (`name,vertex_index,lat,lon`) and their gridboxes
/// (`name,era5_lat,era5_lon`).
pub fn parse_domains(vertices_csv: &str, gridboxes_csv: &str, origin: &str) -> Result<Vec<DomainPolygon>> {
    let mut rings: BTreeMap<String, Vec<(usize, f64, f64)>> = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(vertices_csv.as_bytes());
    for (i, row) in rdr.deserialize::<VertexRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
        rings
            .entry(row.name)
            .or_default()
            .push((row.vertex_index, row.lat, row.lon));
    }
    let mut boxes = BTreeMap::new();
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(gridboxes_csv.as_bytes());
    for (i, row) in rdr.deserialize::<GridboxRow>().enumerate() {
        let row = row.map_err(|e| Error::parse(origin, i + 2, e.to_string()))?;
        boxes.insert(row.name, (row.era5_lat, row.era5_lon));
    }
    rings
        .into_iter()
        .map(|(name, mut verts)| {
            verts.sort_by_key(|v| v.0);
            let gridbox = *boxes
                .get(&name)
                .ok_or_else(|| Error::Config(format!("domain {name} has no gridbox row")))?;
            DomainPolygon::new(name, verts.into_iter().map(|v| (v.1, v.2)).collect(), gridbox)
        })
        .collect()
}

pub fn load_domains(vertices: impl AsRef<Path>, gridboxes: impl AsRef<Path>) -> Result<Vec<DomainPolygon>> {
    let (vp, gp) = (vertices.as_ref(), gridboxes.as_ref());
    let v = std::fs::read_to_string(vp).map_err(|e| Error::io(vp, e))?;
    let g = std::fs::read_to_string(gp).map_err(|e| Error::io(gp, e))?;
    parse_domains(&v, &g, &vp.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(ncols: usize, nrows: usize, values: Vec<f64>) -> Grid {
        Grid::new(ncols, nrows, 800.0, 48.0, -64.0, values).unwrap()
    }

    fn avg_of(a: f64, b: f64, c: f64) -> f64 {
        let p = AgreementParams::default();
        let out = agreement_average(&g(1, 1, vec![a]), &g(1, 1, vec![b]), &g(1, 1, vec![c]), &p).unwrap();
        out.values()[0]
    }

    #[test]
    fn agreement_cases() {
        assert!((avg_of(0.4, 0.5, 0.6) - 0.5).abs() < 1e-15);
        assert_eq!(avg_of(0.4, -0.5, 0.6), 0.0);
        assert_eq!(avg_of(0.4, 0.2, 0.6), 0.0);
        assert!((avg_of(-0.4, -0.5, -0.9) + 0.6).abs() < 1e-15);
        // exactly at threshold does not pass
        assert_eq!(avg_of(0.3, 0.5, 0.6), 0.0);
    }

    #[test]
    fn agreement_invalid_propagates() {
        let p = AgreementParams::default();
        let a = g(2, 1, vec![0.5, f64::NAN]);
        let b = g(2, 1, vec![0.5, 0.5]);
        let out = agreement_average(&a, &b, &b, &p).unwrap();
        assert_eq!(out.validity(), &[true, false]);
    }

    #[test]
    fn diagonal_neighbours_depend_on_connectivity() {
        let grid = g(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(label_components(&grid, Connectivity::Eight).count(), 1);
        assert_eq!(label_components(&grid, Connectivity::Four).count(), 2);
    }

    #[test]
    fn u_shape_merges_provisional_labels() {
        #[rustfmt::skip]
        let grid = g(5, 3, vec![
            1.0, 0.0, 0.0, 0.0, 1.0,
            1.0, 0.0, 1.0, 0.0, 1.0,
            1.0, 1.0, 1.0, 1.0, 1.0,
        ]);
        let l = label_components(&grid, Connectivity::Four);
        assert_eq!(l.count(), 1);
        assert!(l
            .labels()
            .iter()
            .zip(grid.values())
            .all(|(&l, &v)| (l > 0) == (v != 0.0)));
    }

    #[test]
    fn span_rule_on_rows() {
        let mut v = vec![0.0; 40];
        for x in v.iter_mut().take(17) {
            *x = 0.5;
        }
        let grid = g(40, 1, v);
        let l = label_components(&grid, Connectivity::Eight);
        let f = filter_span(&grid, &l, 10_000.0).unwrap();
        assert_eq!(f.component_count(), 1);
        assert!((f.component_spans[0] - 12_800.0).abs() < 1e-9);

        let mut v = vec![0.0; 40];
        for x in v.iter_mut().take(10) {
            *x = -0.5;
        }
        let grid = g(40, 1, v);
        let l = label_components(&grid, Connectivity::Eight);
        let f = filter_span(&grid, &l, 10_000.0).unwrap();
        assert_eq!(f.component_count(), 0);
        assert!(f.magnitude.values().iter().all(|&m| m == 0.0));
    }

    #[test]
    fn magnitude_is_absolute_and_matches_labels() {
        let v: Vec<f64> = (0..20).map(|i| if i < 15 { -0.4 } else { 0.0 }).collect();
        let grid = g(20, 1, v);
        let l = label_components(&grid, Connectivity::Eight);
        let f = filter_span(&grid, &l, 10_000.0).unwrap();
        for (m, &lab) in f.magnitude.values().iter().zip(f.labels.labels()) {
            assert_eq!(*m > 0.0, lab > 0);
            if lab > 0 {
                assert_eq!(*m, 0.4);
            }
        }
    }

    #[test]
    fn hull_diameter_of_small_shapes() {
        assert_eq!(diameter_sq(&[(0, 0)]), 0);
        assert_eq!(diameter_sq(&[(0, 0), (3, 4)]), 25);
        let l: Vec<(usize, usize)> = (0..5).map(|r| (r, 0)).chain((0..4).map(|c| (4, c))).collect();
        assert_eq!(diameter_sq(&l), 16 + 9);
        // collinear points
        assert_eq!(diameter_sq(&[(0, 0), (0, 1), (0, 2), (0, 7)]), 49);
    }

    fn square(lat0: f64, lon0: f64, d: f64) -> DomainPolygon {
        DomainPolygon::new(
            "sq",
            vec![(lat0, lon0), (lat0, lon0 + d), (lat0 - d, lon0 + d), (lat0 - d, lon0)],
            (lat0 - d / 2.0, lon0 + d / 2.0),
        )
        .unwrap()
    }

    #[test]
    fn point_in_polygon_includes_boundary() {
        let sq = square(48.0, -64.0, 1.0);
        assert!(sq.contains(47.5, -63.5));
        assert!(sq.contains(48.0, -63.5));
        assert!(sq.contains(47.0, -64.0));
        assert!(!sq.contains(48.1, -63.5));
    }

    #[test]
    fn self_intersecting_ring_rejected() {
        let bow = vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (0.0, 1.0)];
        assert!(DomainPolygon::new("bow", bow, (0.5, 0.5)).is_err());
        let far = DomainPolygon::new("far", vec![(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)], (5.0, 5.0));
        assert!(far.is_err());
    }

    fn field(ncols: usize, nrows: usize, values: Vec<f64>) -> FilamentField {
        let magnitude = g(ncols, nrows, values);
        let labels = LabelGrid::from_raw(ncols, nrows, vec![0; ncols * nrows]).unwrap();
        FilamentField {
            magnitude,
            labels,
            component_spans: vec![],
        }
    }

    #[test]
    fn domain_contrast_cases() {
        // a domain drawn around the pixel centers of a 4x4 grid
        let base = g(4, 4, vec![0.0; 16]);
        let (lat_a, lon_a) = base.location(-0.5, -0.5);
        let (lat_b, lon_b) = base.location(3.5, 3.5);
        let dom = DomainPolygon::new(
            "d",
            vec![(lat_a, lon_a), (lat_a, lon_b), (lat_b, lon_b), (lat_b, lon_a)],
            (base.pixel_center(1, 1).0, base.pixel_center(1, 1).1),
        )
        .unwrap();
        let zero = field(4, 4, vec![0.0; 16]);
        let dc = domain_contrast(&zero, &dom, 0.25).unwrap();
        assert_eq!(dc.c, 0.0);
        assert_eq!(dc.overlap_pixels, 16);

        let half: Vec<f64> = (0..16).map(|k| if k < 8 { 0.5 } else { 0.0 }).collect();
        let dc = domain_contrast(&field(4, 4, half.clone()), &dom, 0.25).unwrap();
        assert!((dc.c - 0.25).abs() < 1e-15);

        let scaled: Vec<f64> = half.iter().map(|v| v * 3.0).collect();
        let dc3 = domain_contrast(&field(4, 4, scaled), &dom, 0.25).unwrap();
        assert_eq!(dc3.c, 3.0 * dc.c);

        let away = square(10.0, 10.0, 1.0);
        assert!(domain_contrast(&zero, &away, 0.25).is_none());
        // 5 of 16 pixels valid: below a 50% floor, above 25%
        let sparse: Vec<f64> = (0..16).map(|k| if k < 5 { 0.0 } else { f64::NAN }).collect();
        assert!(domain_contrast(&field(4, 4, sparse.clone()), &dom, 0.5).is_none());
        assert!(domain_contrast(&field(4, 4, sparse), &dom, 0.25).is_some());
    }

    #[test]
    fn domains_csv_round() {
        let v = "name,vertex_index,lat,lon\nA,1,48,-63\nA,0,48,-64\nA,2,47,-63\nA,3,47,-64\n";
        let b = "name,era5_lat,era5_lon\nA,47.5,-63.5\n";
        let d = parse_domains(v, b, "t").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].vertices()[0], (48.0, -64.0));
        assert!(parse_domains(v, "name,era5_lat,era5_lon\n", "t").is_err());
        assert!(parse_domains("name,vertex_index,lat,lon\nA,x,1,2\n", b, "t").is_err());
    }

    #[test]
    fn params_validation() {
        assert!(AgreementParams::default().validate().is_ok());
        let p = AgreementParams {
            threshold: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
        let p = AgreementParams {
            coarse_m: [1600.0, 2400.0, 6400.0],
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
