use rydtrap::emission::*;
use rydtrap::stark::RydbergLevel;
use rydtrap::units;

fn chip(z: f64, skin: f64) -> CavitySpec {
    CavitySpec { l: 1e-3, z_atom: z, lambda: 6e-3, skin_depth: skin }
}

#[test]
fn image_sum_matches_mode_sum_for_perfect_mirrors() {
    let lambda = 1.0;
    for &lr in &[0.05, 0.2, 0.37, 0.62, 0.9, 1.13, 1.4, 1.77, 2.0 - 1e-3] {
        for &zf in &[0.25, 0.5, 0.71] {
            let c = CavitySpec { l: lr * lambda, z_atom: zf * lr * lambda, lambda, skin_depth: 0.0 };
            for orient in [Orientation::Parallel, Orientation::Perpendicular] {
                let img = decay_ratio(&c, orient).unwrap();
                let modes = mode_sum_ratio(c.l, lambda, c.z_atom, orient);
                let scale = modes.abs().max(1e-2);
                assert!((img - modes).abs() < 1e-2 * scale, "L/lambda {lr} z {zf} {orient:?}: {img} vs {modes}");
            }
        }
    }
}

#[test]
fn complete_inhibition_below_half_wavelength() {
    for &lr in &[0.1, 0.3, 0.45, 0.49] {
        let c = CavitySpec { l: lr, z_atom: 0.4 * lr, lambda: 1.0, skin_depth: 0.0 };
        assert!(decay_ratio(&c, Orientation::Parallel).unwrap() < 1e-6);
    }
    let above = CavitySpec { l: 0.55, z_atom: 0.275, lambda: 1.0, skin_depth: 0.0 };
    assert!(decay_ratio(&above, Orientation::Parallel).unwrap() > 0.1);
}

#[test]
fn mirror_symmetry_and_surface_degradation() {
    let a = decay_ratio(&chip(120e-6, 30e-9), Orientation::Parallel).unwrap();
    let b = decay_ratio(&chip(1e-3 - 120e-6, 30e-9), Orientation::Parallel).unwrap();
    assert!((a - b).abs() < 1e-9 * a.max(1e-12));
    let zs = [20e-6, 50e-6, 120e-6, 250e-6, 500e-6];
    let g: Vec<f64> = zs.iter().map(|&z| decay_ratio(&chip(z, 30e-9), Orientation::Parallel).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[0] > w[1]), "{g:?}");
}

#[test]
fn truncation_converges() {
    let c = chip(120e-6, 30e-9);
    let full = image_susceptibility(&c, Orientation::Parallel).unwrap();
    let n = 500_000;
    let a = image_susceptibility_truncated(&c, Orientation::Parallel, n);
    let b = image_susceptibility_truncated(&c, Orientation::Parallel, 2 * n);
    assert!(1.5 * (a.im - b.im).abs() < 1e-8);
    assert!(1.5 * (full.im - b.im).abs() < 1e-8);
}

#[test]
fn survival_matches_independent_quadrature() {
    // smooth synthetic tilt history sampled on a fine grid
    let n = 2001;
    let t_end = 0.5;
    let samples: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let t = t_end * i as f64 / (n - 1) as f64;
            (t, 0.01 * (t * 400.0).sin() + 0.003)
        })
        .collect();
    let (g0, gpar, gperp) = (33.0, 0.003, 4.5);
    let p = survival_probability(g0, gpar, gperp, &samples);
    // Simpson oracle
    let h = t_end / (n - 1) as f64;
    let f = |i: usize| gpar + gperp * samples[i].1.powi(2);
    let mut s = f(0) + f(n - 1);
    for i in 1..n - 1 {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i);
    }
    let oracle = (-g0 * s * h / 3.0).exp();
    assert!((p - oracle).abs() < 1e-6, "{p} vs {oracle}");
}

#[test]
fn blackbody_numbers() {
    let cav = chip(120e-6, 30e-9);
    assert!((units::bose_occupation(50e9, 1.0) - 0.1).abs() < 0.005);
    let g = blackbody_rates(&RydbergLevel::circular(50), 1.0, &cav).unwrap();
    let e = blackbody_rates(&RydbergLevel::circular(51), 1.0, &cav).unwrap();
    assert!((g.rate_per_photon / 3.15 - 1.0).abs() < 0.3, "{}", g.rate_per_photon);
    assert!((e.rate_per_photon / 2.75 - 1.0).abs() < 0.3, "{}", e.rate_per_photon);
    let cold = blackbody_rates(&RydbergLevel::circular(50), 1e-3, &cav).unwrap();
    assert!(cold.rate < 1e-12);
}
