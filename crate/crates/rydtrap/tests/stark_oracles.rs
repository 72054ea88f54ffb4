use rydtrap::stark::{
    self, diagonalize_stark, dipole_matrix_element, fit_polynomial, FitOptions, Polarization, RydbergLevel,
    StarkBasis, StarkError,
};
use rydtrap::units;

/// Unnormalized radial function from the explicit Laguerre series, normalized
/// numerically on the same grid.
fn radial_grid(n: u32, l: u32, h: f64, npts: usize) -> Vec<f64> {
    let k = (n - l - 1) as i64;
    let alpha = (2 * l + 1) as i64;
    let binom = |a: i64, b: i64| -> f64 {
        let mut v = 1.0;
        for i in 0..b {
            v *= (a - i) as f64 / (i + 1) as f64;
        }
        v
    };
    let mut out: Vec<f64> = (0..npts)
        .map(|i| {
            let r = i as f64 * h;
            let x = 2.0 * r / n as f64;
            let mut lag = 0.0;
            let mut fact = 1.0;
            for j in 0..=k {
                if j > 0 {
                    fact *= j as f64;
                }
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                lag += sign * binom(k + alpha, k - j) * x.powi(j as i32) / fact;
            }
            // scale the power to keep numbers moderate
            let lnp = if x > 0.0 { l as f64 * (x / 50.0).ln() } else { f64::NEG_INFINITY };
            lag * (lnp - r / n as f64).exp()
        })
        .collect();
    let norm: f64 = simpson(&out.iter().enumerate().map(|(i, v)| v * v * (i as f64 * h).powi(2)).collect::<Vec<_>>(), h);
    let s = norm.sqrt();
    for v in out.iter_mut() {
        *v /= s;
    }
    out
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    assert!(n % 2 == 0);
    let mut s = f[0] + f[n];
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f[i];
    }
    s * h / 3.0
}

fn oracle_radial(n: u32, l: u32, n2: u32, l2: u32) -> f64 {
    let h = 2.0;
    let npts = 6001; // out to 12000 a0
    let a = radial_grid(n, l, h, npts);
    let b = radial_grid(n2, l2, h, npts);
    let f: Vec<f64> = (0..npts).map(|i| a[i] * b[i] * (i as f64 * h).powi(3)).collect();
    simpson(&f, h)
}

#[test]
fn radial_integrals_match_numerical_quadrature() {
    for &(n, l, n2, l2) in &[(50, 49, 51, 50), (51, 49, 50, 49), (52, 50, 53, 49), (50, 49, 55, 50)] {
        let lib = stark::hydrogen::radial_integral(n, l, n2, l2, 1);
        let num = oracle_radial(n, l, n2, l2);
        assert!((lib - num).abs() < 1e-6 * lib.abs().max(1.0), "{n}{l}->{n2}{l2}: {lib} vs {num}");
    }
}

#[test]
fn reference_pi_element_and_ratios() {
    let g = RydbergLevel::circular(50);
    let i = RydbergLevel::new(51, 0, 49).unwrap();
    let ip = RydbergLevel::new(51, 1, 49).unwrap();
    let m_ref = dipole_matrix_element(&g, &ip, Polarization::Pi).unwrap();
    assert_eq!(m_ref / dipole_matrix_element(&g, &ip, Polarization::Pi).unwrap(), 1.0);
    // oracle: parabolic states are equal-weight combinations of l = 49, 50 in n = 51
    let r50 = oracle_radial(50, 49, 51, 50);
    let ang = stark::hydrogen::cos_theta_up(49, 49);
    let want = (0.5f64).sqrt() * r50 * ang;
    let mi = dipole_matrix_element(&g, &i, Polarization::Pi).unwrap();
    assert!((mi.abs() - want.abs()).abs() < 1e-6 * want.abs(), "{mi} vs {want}");
    assert!((m_ref.abs() / mi.abs() - 1.0).abs() < 1e-9);
    assert!((m_ref.abs() - 177.637).abs() < 1e-3, "{m_ref}");
}

#[test]
fn circular_lifetime_about_30_ms() {
    let g = RydbergLevel::circular(50);
    let e = RydbergLevel::circular(51);
    let d = dipole_matrix_element(&e, &g, Polarization::Sigma).unwrap();
    let nu = units::au_to_hz(stark::bare_energy_au(51) - stark::bare_energy_au(50));
    let tau = 1.0 / units::einstein_a(units::TWO_PI * nu, d);
    assert!((tau - 0.030).abs() < 0.003, "tau = {tau}");
}

#[test]
fn diagonalization_vs_perturbation_scales_as_fourth_power() {
    let g = RydbergLevel::circular(50);
    let basis = StarkBasis::new(49, 50, 5).unwrap();
    let scan = stark::stark_scan(&basis, &[100.0, 200.0, 400.0]).unwrap();
    let series = scan.series(&g).unwrap();
    let diffs: Vec<f64> = series
        .iter()
        .map(|&(e, s)| s - stark::perturbative_energy(&g, e).unwrap().shift_hz)
        .collect();
    // local power-law exponents between successive doublings
    let p1 = (diffs[1] / diffs[0]).log2();
    let p2 = (diffs[2] / diffs[1]).log2();
    assert!((p1 - 4.0).abs() < 0.4 && (p2 - 4.0).abs() < 0.4, "{diffs:?}");
}

#[test]
fn adding_manifolds_converges() {
    let g = RydbergLevel::circular(50);
    let shift = |m: u32| {
        diagonalize_stark(49, 50, m, 1000.0)
            .unwrap()
            .into_iter()
            .find(|s| s.level == g)
            .unwrap()
            .shift_hz
    };
    let d45 = (shift(5) - shift(4)).abs();
    let d56 = (shift(6) - shift(5)).abs();
    let d89 = (shift(9) - shift(8)).abs();
    assert!(d56 < d45 && d89 < d56, "{d45} {d56} {d89}");
    assert!(d89 < 2.0, "{d89}");
}

#[test]
fn polynomial_fit_reproduces_polarizability() {
    let g = RydbergLevel::circular(50);
    let basis = StarkBasis::new(49, 50, 5).unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| 20.0 * i as f64).collect();
    let scan = stark::stark_scan(&basis, &grid).unwrap();
    let samples = scan.series(&g).unwrap();
    let loose = FitOptions { order: 4, tol_hz: 50.0 };
    let p4 = fit_polynomial(g, &samples, loose).unwrap();
    assert!((p4.coeffs[2] + 203.2).abs() < 0.1, "{:?}", p4.coeffs);
    assert!(p4.coeffs[1].abs() < 0.1);
    let resid = |p: &stark::StarkPolynomial| {
        samples.iter().map(|&(e, y)| (p.value(e) - y).abs()).fold(0.0, f64::max)
    };
    let p2 = fit_polynomial(g, &samples, FitOptions { order: 2, tol_hz: 1e9 }).unwrap();
    assert!(resid(&p2) > 10.0 * resid(&p4));
    // over the full range the order-4 residual is a little above the 0.5 Hz target
    match fit_polynomial(g, &samples, FitOptions::default()) {
        Err(StarkError::FitFailure { residual_hz, .. }) => assert!(residual_hz < 5.0),
        Ok(p) => assert!(resid(&p) < 0.5),
        Err(e) => panic!("{e}"),
    }
    // a narrower window around the working field meets it comfortably
    let window: Vec<_> = samples.iter().copied().filter(|(e, _)| (200.0..=600.0).contains(e)).collect();
    assert!(fit_polynomial(g, &window, FitOptions::default()).is_ok());
}
