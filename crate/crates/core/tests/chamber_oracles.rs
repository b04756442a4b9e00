use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use mottlab::chamber::{model_cdf, planar_radius, sample_track_starts, track_density, ChamberGeometry, ScaleParams};
use mottlab::empirics::{ks_statistic, ks_two_sample, GridCdf};

/// Sphere of radius R centred on the source: planar-radius CDF at s/R in
/// {0.25, 0.5, 0.75} from a 1e7-sample brute-force simulation (seed
/// 20261015, independent code path). Standard error ≈ 1.5e-4.
const SPHERE_ORACLE: [(f64, f64); 3] = [(0.25, 0.3612188), (0.5, 0.657553), (0.75, 0.8807337)];

#[test]
fn centred_sphere_matches_frozen_oracle() {
    for radius in [1.0, 10.0, 45.0] {
        let g = ChamberGeometry::sphere(radius, [0.0, 0.0, 0.0]).unwrap();
        let radii: Vec<f64> = SPHERE_ORACLE.iter().map(|(x, _)| x * radius).collect();
        let cdf = model_cdf(&g, &radii).unwrap();
        for ((_, want), got) in SPHERE_ORACLE.iter().zip(cdf) {
            assert_abs_diff_eq!(got, *want, epsilon = 5e-4);
        }
    }
}

fn dkw_bound(n: usize) -> f64 {
    3.0 * (2f64.ln() / (2.0 * n as f64)).sqrt()
}

#[test]
fn sampler_and_quadrature_agree_within_dkw_band() {
    let geometries = [
        ChamberGeometry::default(),
        ChamberGeometry::cylinder(20.0, -5.0, 5.0, [3.0, -2.0, 1.0]).unwrap(),
        ChamberGeometry::sphere(8.0, [2.0, 1.0, -3.0]).unwrap(),
    ];
    let n = 50_000;
    for (i, g) in geometries.iter().enumerate() {
        let starts = sample_track_starts(n, 40 + i as u64, &ScaleParams::default(), g).unwrap();
        let radii: Vec<f64> = starts.iter().map(|t| planar_radius(t, g)).collect();
        let top = g.max_planar_extent();
        let grid: Vec<f64> = (0..=600).map(|k| top * f64::from(k) / 600.0).collect();
        let model = GridCdf::new(grid.clone(), model_cdf(g, &grid).unwrap()).unwrap();
        let d = ks_statistic(&radii, |r| model.eval(r.min(top)));
        assert!(
            d < dkw_bound(n),
            "geometry {i}: sup distance {d} vs bound {}",
            dkw_bound(n)
        );
    }
}

#[test]
fn spatial_distribution_is_independent_of_decay_rate() {
    let g = ChamberGeometry::default();
    let n = 40_000;
    let slow = sample_track_starts(n, 8, &ScaleParams { coeff: 1.0, gamma: 1.0 }, &g).unwrap();
    let fast = sample_track_starts(
        n,
        9,
        &ScaleParams {
            coeff: 1.0,
            gamma: 10.0,
        },
        &g,
    )
    .unwrap();
    let r1: Vec<f64> = slow.iter().map(|t| planar_radius(t, &g)).collect();
    let r2: Vec<f64> = fast.iter().map(|t| planar_radius(t, &g)).collect();
    // two-sample KS critical value at the 1% level
    let critical = 1.63 * (2.0 / n as f64).sqrt();
    assert!(ks_two_sample(&r1, &r2) < critical);

    let mean_time = |s: &[mottlab::TrackStart]| s.iter().map(|t| t.time).sum::<f64>() / s.len() as f64;
    assert!((mean_time(&slow) - 1.0).abs() < 0.02);
    assert!((mean_time(&fast) - 0.1).abs() < 0.002);
}

#[test]
fn density_through_a_spherical_shell_is_constant_per_unit_radius() {
    let g = ChamberGeometry::sphere(50.0, [0.0, 0.0, 0.0]).unwrap();
    let s = ScaleParams { coeff: 3.0, gamma: 0.5 };
    let t = 1.3;
    for r in [0.5, 5.0, 20.0, 49.0] {
        // midpoint rule over the sphere of directions
        let (n_theta, n_phi) = (200, 200);
        let mut total = 0.0;
        for i in 0..n_theta {
            let theta = PI * (f64::from(i) + 0.5) / f64::from(n_theta);
            for j in 0..n_phi {
                let phi = 2.0 * PI * (f64::from(j) + 0.5) / f64::from(n_phi);
                let x = [
                    r * theta.sin() * phi.cos(),
                    r * theta.sin() * phi.sin(),
                    r * theta.cos(),
                ];
                let d_omega = theta.sin() * (PI / f64::from(n_theta)) * (2.0 * PI / f64::from(n_phi));
                total += track_density(x, t, &s, &g).unwrap() * r * r * d_omega;
            }
        }
        assert_abs_diff_eq!(total, s.coeff * (-s.gamma * t).exp(), epsilon = 1e-4);
    }
}
