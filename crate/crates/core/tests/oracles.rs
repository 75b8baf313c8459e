//! Library results against independent brute-force or closed-form oracles.

mod common;

use common::*;
use filamap::depstats::{dcor, pearson};
use filamap::filament::{diameter_sq, filter_span, label_components, Connectivity};
use filamap::gmf::{GmfSpec, Polarization, REFERENCE_COEFFICIENTS};
use filamap::synth::SplitMix64;
use filamap::Grid;

#[test]
fn labeling_matches_flood_fill() {
    let mut rng = SplitMix64::new(42);
    for trial in 0..100 {
        let density = 0.2 + 0.5 * (trial as f64 / 100.0);
        let g = random_sparse_grid(&mut rng, 64, 64, density);
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let got = label_components(&g, conn);
            let want = flood_fill_labels(&g, conn == Connectivity::Eight);
            assert_eq!(got.labels(), want.as_slice(), "trial {trial} {conn:?}");
        }
    }
}

#[test]
fn span_filter_matches_all_pairs() {
    let mut rng = SplitMix64::new(7);
    let mut checked = 0;
    for _ in 0..60 {
        let g = random_sparse_grid(&mut rng, 48, 48, 0.45);
        let labels = label_components(&g, Connectivity::Eight);
        for min_span in [800.0, 2400.0, 5000.0, 10_000.0] {
            let f = filter_span(&g, &labels, min_span).unwrap();
            let members = labels.members();
            let kept: Vec<f64> = members
                .iter()
                .filter(|m| m.len() <= 200)
                .map(|m| all_pairs_span(m, g.pixel_size_m()))
                .filter(|&s| s >= min_span)
                .collect();
            let large_kept = members
                .iter()
                .filter(|m| m.len() > 200)
                .map(|m| all_pairs_span(m, g.pixel_size_m()))
                .filter(|&s| s >= min_span)
                .count();
            assert_eq!(f.component_count(), kept.len() + large_kept);
            for m in members.iter().filter(|m| m.len() <= 200) {
                let want = all_pairs_span(m, g.pixel_size_m());
                let got = (diameter_sq(m) as f64).sqrt() * g.pixel_size_m();
                assert_eq!(got, want);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn dcor_matches_full_matrix() {
    let mut rng = SplitMix64::new(99);
    for n in [4, 5, 17, 64, 200] {
        let x: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
        let y: Vec<f64> = x.iter().map(|&v| v * v + 0.3 * rng.normal()).collect();
        let want = dcor_full_matrix(&x, &y);
        let got = dcor(&x, &y).unwrap();
        assert!((got - want).abs() < 1e-12, "n={n}: {got} vs {want}");
    }
}

#[test]
fn pearson_matches_textbook_sums() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..50 {
        let x: Vec<f64> = (0..300).map(|_| 10.0 + rng.normal()).collect();
        let y: Vec<f64> = x.iter().map(|&v| -2.0 * v + rng.normal()).collect();
        let got = pearson(&x, &y).unwrap();
        assert!((got - pearson_oracle(&x, &y)).abs() < 1e-12);
    }
}

#[test]
fn bivariate_normal_dcor_near_closed_form() {
    for (k, rho) in [0.25, 0.5, 0.75].into_iter().enumerate() {
        let mut rng = SplitMix64::new(1000 + k as u64);
        let (x, y) = bivariate_normal(&mut rng, 5000, rho);
        let got = dcor(&x, &y).unwrap();
        let want = population_dcor_bvn(rho);
        assert!((got - want).abs() < 0.02, "rho {rho}: {got} vs {want}");
    }
}

#[test]
fn closed_form_dcor_matches_its_limits() {
    assert!(population_dcor_bvn(0.0).abs() < 1e-12);
    assert!((population_dcor_bvn(1.0) - 1.0).abs() < 1e-12);
    let mut prev = 0.0;
    for k in 1..=20 {
        let v = population_dcor_bvn(k as f64 / 20.0);
        assert!(v > prev && v <= 1.0 + 1e-12);
        // dCor never exceeds |ρ| for the bivariate normal
        assert!(v <= k as f64 / 20.0 + 1e-12);
        prev = v;
    }
}

#[test]
fn gmf_matches_scalar_oracle() {
    let coef = parse_coefficient_file(REFERENCE_COEFFICIENTS);
    let gmf = GmfSpec::reference();
    let mut rng = SplitMix64::new(3);
    for _ in 0..2000 {
        let v = rng.uniform_in(0.5, 30.0);
        let phi = rng.uniform_in(-180.0, 360.0);
        let theta = rng.uniform_in(16.0, 59.0);
        let got = gmf.sigma0(v, phi, theta, Polarization::VV).unwrap().value;
        let want = cmod5_oracle(&coef, v, phi, theta);
        assert!(
            ((got - want) / want).abs() < 1e-10,
            "{v} {phi} {theta}: {got} vs {want}"
        );
    }
}

#[test]
fn gmf_increases_with_wind_on_one_to_fifteen() {
    let gmf = GmfSpec::reference();
    for theta in [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 49.0] {
        for phi in [0.0, 45.0, 90.0, 135.0, 180.0] {
            let mut prev = 0.0;
            for k in 0..=140 {
                let v = 1.0 + 0.1 * k as f64;
                let s = gmf.sigma0(v, phi, theta, Polarization::VV).unwrap().value;
                assert!(s > prev, "theta {theta} phi {phi} v {v}");
                prev = s;
            }
        }
    }
}

#[test]
fn hh_is_vv_over_ratio_exactly() {
    let gmf = GmfSpec::reference();
    let mut rng = SplitMix64::new(11);
    for _ in 0..500 {
        let (v, phi, theta) = (
            rng.uniform_in(1.0, 20.0),
            rng.uniform_in(0.0, 360.0),
            rng.uniform_in(15.0, 60.0),
        );
        let vv = gmf.sigma0(v, phi, theta, Polarization::VV).unwrap().value;
        let hh = gmf.sigma0(v, phi, theta, Polarization::HH).unwrap().value;
        assert_eq!(hh, vv / gmf.polarization_ratio().at(theta));
    }
}

#[test]
fn flood_fill_oracle_sanity() {
    // a diagonal pair is one component under 8-connectivity only
    let g = Grid::new(2, 2, 800.0, 48.0, -64.0, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(flood_fill_labels(&g, true), vec![1, 0, 0, 1]);
    assert_eq!(flood_fill_labels(&g, false), vec![1, 0, 0, 2]);
}
