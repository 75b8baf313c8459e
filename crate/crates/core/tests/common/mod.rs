//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use filamap::synth::SplitMix64;
use filamap::Grid;

/// Mostly-zero grid with signed blobs of magnitude in [0.3, 1) and a few
/// invalid pixels.
pub fn random_sparse_grid(rng: &mut SplitMix64, ncols: usize, nrows: usize, density: f64) -> Grid {
    let values = (0..ncols * nrows)
        .map(|_| {
            let u = rng.uniform();
            if u < 0.04 {
                f64::NAN
            } else if u < 0.04 + density {
                let m = rng.uniform_in(0.3, 1.0);
                if rng.uniform() < 0.5 {
                    -m
                } else {
                    m
                }
            } else {
                0.0
            }
        })
        .collect();
    Grid::new(ncols, nrows, 800.0, 49.0, -65.0, values).unwrap()
}

/// Breadth-first flood fill from each unlabeled foreground pixel in raster
/// order.
pub fn flood_fill_labels(g: &Grid, eight: bool) -> Vec<u32> {
    let (nc, nr) = (g.ncols() as i64, g.nrows() as i64);
    let fg = |r: i64, c: i64| {
        r >= 0 && c >= 0 && r < nr && c < nc && g.get(r as usize, c as usize).is_some_and(|v| v != 0.0)
    };
    let mut steps = vec![(-1, 0), (1, 0), (0, -1), (0, 1)];
    if eight {
        steps.extend([(-1, -1), (-1, 1), (1, -1), (1, 1)]);
    }
    let mut labels = vec![0u32; g.len()];
    let mut next = 0;
    for r in 0..nr {
        for c in 0..nc {
            if !fg(r, c) || labels[(r * nc + c) as usize] != 0 {
                continue;
            }
            next += 1;
            labels[(r * nc + c) as usize] = next;
            let mut queue = VecDeque::from([(r, c)]);
            while let Some((pr, pc)) = queue.pop_front() {
                for &(dr, dc) in &steps {
                    let (qr, qc) = (pr + dr, pc + dc);
                    if fg(qr, qc) && labels[(qr * nc + qc) as usize] == 0 {
                        labels[(qr * nc + qc) as usize] = next;
                        queue.push_back((qr, qc));
                    }
                }
            }
        }
    }
    labels
}

/// Maximum pairwise pixel-centre distance in meters, by brute force.
pub fn all_pairs_span(members: &[(usize, usize)], pixel_m: f64) -> f64 {
    let mut best = 0i64;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            let dr = a.0 as i64 - b.0 as i64;
            let dc = a.1 as i64 - b.1 as i64;
            best = best.max(dr * dr + dc * dc);
        }
    }
    (best as f64).sqrt() * pixel_m
}

fn centered(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let d: Vec<Vec<f64>> = x.iter().map(|a| x.iter().map(|b| (a - b).abs()).collect()).collect();
    let row: Vec<f64> = d.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let col: Vec<f64> = (0..n).map(|j| d.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
    let grand = row.iter().sum::<f64>() / n as f64;
    (0..n)
        .map(|i| (0..n).map(|j| d[i][j] - row[i] - col[j] + grand).collect())
        .collect()
}

/// Sample distance correlation from explicit double-centred matrices.
pub fn dcor_full_matrix(x: &[f64], y: &[f64]) -> f64 {
    let (a, b) = (centered(x), centered(y));
    let dot = |p: &Vec<Vec<f64>>, q: &Vec<Vec<f64>>| -> f64 {
        p.iter()
            .zip(q)
            .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u * v).sum::<f64>())
            .sum()
    };
    let (ab, aa, bb) = (dot(&a, &b), dot(&a, &a), dot(&b, &b));
    if aa * bb <= 0.0 {
        return 0.0;
    }
    (ab / (aa * bb).sqrt()).max(0.0).sqrt()
}

/// Pearson correlation from raw power sums.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
    let mx = sx / n;
    let my = sy / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

pub fn bivariate_normal(rng: &mut SplitMix64, n: usize, rho: f64) -> (Vec<f64>, Vec<f64>) {
    let s = (1.0 - rho * rho).sqrt();
    (0..n)
        .map(|_| {
            let (a, b) = (rng.normal(), rng.normal());
            (a, rho * a + s * b)
        })
        .unzip()
}

/// Population distance correlation of a standard bivariate normal.
pub fn population_dcor_bvn(rho: f64) -> f64 {
    let r = rho.abs();
    let num = r * r.asin() + (1.0 - r * r).sqrt() - r * (r / 2.0).asin() - (4.0 - r * r).sqrt() + 1.0;
    let den = 1.0 + std::f64::consts::PI / 3.0 - 3f64.sqrt();
    (num / den).max(0.0).sqrt()
}

/// Coefficients of a model file, indexed from 1 with a dummy slot 0.
pub fn parse_coefficient_file(text: &str) -> Vec<f64> {
    let mut c = vec![0.0];
    c.extend(
        text.lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .skip(1)
            .map(|l| l.parse::<f64>().unwrap()),
    );
    c
}

/// Scalar CMOD5 with 1-based coefficients.
pub fn cmod5_oracle(c: &[f64], v: f64, phi_deg: f64, theta_deg: f64) -> f64 {
    let fi = phi_deg * std::f64::consts::PI / 180.0;
    let csfi = fi.cos();
    let cs2fi = (2.0 * fi).cos();
    let x = (theta_deg - 40.0) / 25.0;
    let xx = x * x;
    let (y0, pn) = (c[19], c[20]);
    let a = y0 - (y0 - 1.0) / pn;
    let b = 1.0 / (pn * (y0 - 1.0).powf(pn - 1.0));

    let a0 = c[1] + c[2] * x + c[3] * xx + c[4] * x * xx;
    let a1 = c[5] + c[6] * x;
    let a2 = c[7] + c[8] * x;
    let gam = c[9] + c[10] * x + c[11] * xx;
    let s0 = c[12] + c[13] * x;
    let s = a2 * v;
    let a3 = if s < s0 {
        let base = 1.0 / (1.0 + (-s0).exp());
        base * (s / s0).powf(s0 * (1.0 - base))
    } else {
        1.0 / (1.0 + (-s).exp())
    };
    let b0 = a3.powf(gam) * 10f64.powf(a0 + a1 * v);

    let b1 = c[15] * v * (0.5 + x - (4.0 * (x + c[16] + c[17] * v)).tanh());
    let b1 = (c[14] * (1.0 + x) - b1) / ((0.34 * (v - c[18])).exp() + 1.0);

    let v0 = c[21] + c[22] * x + c[23] * xx;
    let d1 = c[24] + c[25] * x + c[26] * xx;
    let d2 = c[27] + c[28] * x;
    let v2 = {
        let t = v / v0 + 1.0;
        if t < y0 {
            a + b * (t - 1.0).powf(pn)
        } else {
            t
        }
    };
    let b2 = (-d1 + d2 * v2) * (-v2).exp();
    b0 * (1.0 + b1 * csfi + b2 * cs2fi).powf(1.6)
}
