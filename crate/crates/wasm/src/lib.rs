//! Browser bindings: synthetic scene extraction, exponent sweeps and the
//! correlation decomposition.

use std::collections::BTreeMap;

use wasm_bindgen::prelude::*;

use filamap::depstats::{dcor, decompose_pearson, pearson, solve_measurement_model};
use filamap::filament::AgreementParams;
use filamap::gmf::{BoundWinds, GmfSpec};
use filamap::pipeline::{extract_filaments, MaskInput};
use filamap::series::PairedSeries;
use filamap::sgrd::GrayScale;
use filamap::sweep::{sweep_exponent, SweepConfig};
use filamap::synth::{gen_model_series, gen_scene, GenSpec, SplitMix64};

const SCENE_PX: usize = 256;

#[wasm_bindgen]
pub struct SceneView {
    width: usize,
    height: usize,
    rgba: Vec<u8>,
    components: usize,
    truth_components: usize,
    masked: usize,
}

#[wasm_bindgen]
impl SceneView {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    /// σ₀ in gray with retained filaments in color, masked pixels in blue.
    pub fn rgba(&self) -> Vec<u8> {
        self.rgba.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn components(&self) -> usize {
        self.components
    }

    #[wasm_bindgen(getter)]
    pub fn truth_components(&self) -> usize {
        self.truth_components
    }

    #[wasm_bindgen(getter)]
    pub fn masked(&self) -> usize {
        self.masked
    }
}

pub fn render_scene(seed: u64, wind: f64, filaments: usize, amplitude: f64, mask: bool) -> Result<SceneView, String> {
    let mut g = GenSpec {
        seed,
        ..GenSpec::default()
    };
    g.scene.ncols = SCENE_PX;
    g.scene.nrows = SCENE_PX;
    g.scene.wind_speed = wind;
    g.scene.filaments = filaments;
    g.scene.filament_amplitude = amplitude;
    g.scene.filament_length_m = 30_000.0;
    let gmf = GmfSpec::reference();
    let sc = gen_scene(&g, &gmf).map_err(|e| e.to_string())?;
    let m = MaskInput {
        gmf: &gmf,
        geometry: &sc.geometry,
        polarization: g.scene.polarization,
        bounds: BoundWinds::default(),
    };
    let ex = extract_filaments(&sc.sigma0, &AgreementParams::default(), mask.then_some(m), None)
        .map_err(|e| e.to_string())?;

    let scale = GrayScale::fit(&sc.sigma0);
    let mut rgba = Vec::with_capacity(4 * sc.sigma0.len());
    for k in 0..sc.sigma0.len() {
        let gray = scale.gray(sc.sigma0.values()[k]);
        let px = if !ex.fine.validity()[k] {
            [40, 60, 160]
        } else if ex.field.labels.labels()[k] > 0 {
            let mag = ex.field.magnitude.values()[k].min(1.0);
            [255, (200.0 * (1.0 - mag)) as u8, 0]
        } else {
            [gray, gray, gray]
        };
        rgba.extend_from_slice(&[px[0], px[1], px[2], 255]);
    }
    Ok(SceneView {
        width: SCENE_PX,
        height: SCENE_PX,
        rgba,
        components: ex.field.component_count(),
        truth_components: sc.truth.component_count(),
        masked: ex.fine.len() - ex.fine.valid_count(),
    })
}

/// Synthetic σ₀ scene with filaments extracted from it.
#[wasm_bindgen]
pub fn scene(seed: u64, wind: f64, filaments: usize, amplitude: f64, mask: bool) -> Result<SceneView, JsError> {
    render_scene(seed, wind, filaments, amplitude, mask).map_err(|e| JsError::new(&e))
}

/// `[x..., |pearson|..., dcor...]` for contrast `g U^exponent + noise`.
pub fn sweep_values(seed: u64, n: usize, exponent: f64, noise: f64) -> Result<Vec<f64>, String> {
    let mut rng = SplitMix64::new(seed);
    let mut s = PairedSeries::default();
    let lags: BTreeMap<u32, [f64; 4]> = BTreeMap::new();
    for i in 0..n {
        let u = rng.uniform_in(1.0, 10.0);
        let g = rng.uniform_in(0.05, 0.15);
        s.push(i as i64 * 24, g * u.powf(exponent) + noise * rng.normal(), u, &lags);
    }
    let cfg = SweepConfig {
        deltas: vec![],
        ..SweepConfig::default()
    };
    let rep = sweep_exponent(&s, &cfg).map_err(|e| e.to_string())?;
    let mut out: Vec<f64> = rep.points.iter().map(|p| p.x).collect();
    out.extend(rep.points.iter().map(|p| p.abs_pearson));
    out.extend(rep.points.iter().map(|p| p.dcor));
    Ok(out)
}

#[wasm_bindgen]
pub fn sweep(seed: u64, n: usize, exponent: f64, noise: f64) -> Result<Vec<f64>, JsError> {
    sweep_values(seed, n, exponent, noise).map_err(|e| JsError::new(&e))
}

/// `[pearson, dcor, linear, nonlinear, B̂, σ̂ε²]` for a generated series;
/// the last four are NaN when the model has no solution.
pub fn decomposition_values(
    seed: u64,
    n: usize,
    b: f64,
    sigma_eps2: f64,
    omega: f64,
    delta: u32,
) -> Result<Vec<f64>, String> {
    let g = GenSpec {
        seed,
        n,
        b,
        sigma_eps2,
        omega,
        deltas: vec![delta],
        ..GenSpec::default()
    };
    let (s, _) = gen_model_series(&g).map_err(|e| e.to_string())?;
    let sol = solve_measurement_model(&s, delta).map_err(|e| e.to_string())?;
    let comp = decompose_pearson(&sol, sol.var_c, sol.var_u);
    let r = pearson(&s.c, &s.u).map_err(|e| e.to_string())?;
    let d = dcor(&s.c, &s.u).map_err(|e| e.to_string())?;
    Ok(match comp {
        Some(c) => vec![r, d, c.linear, c.nonlinear, sol.linear_cov(), sol.sigma_eps2],
        None => vec![r, d, f64::NAN, f64::NAN, f64::NAN, f64::NAN],
    })
}

#[wasm_bindgen]
pub fn decomposition(
    seed: u64,
    n: usize,
    b: f64,
    sigma_eps2: f64,
    omega: f64,
    delta: u32,
) -> Result<Vec<f64>, JsError> {
    decomposition_values(seed, n, b, sigma_eps2, omega, delta).map_err(|e| JsError::new(&e))
}
