use rydtrap::dynamics::{
    self, integrate, mathieu_bounded, mathieu_q, stability_classify, threshold_omega, trapping_efficiency, AtomSpec, InitialEnsemble,
    IntegratorOptions, Stability,
};
use rydtrap::field::DriveSettings;
use rydtrap::par::WorkerPool;
use rydtrap::presets::{AtomState, TRAP_A};

/// Trace of the one-period monodromy matrix of x'' + (a - 2q cos 2t) x = 0,
/// integrated with a fixed-step classical RK4 that shares nothing with the
/// library.
fn monodromy_trace(a: f64, q: f64) -> f64 {
    let n = 2000;
    let h = std::f64::consts::PI / n as f64;
    let rhs = |t: f64, y: [f64; 2]| [y[1], -(a - 2.0 * q * (2.0 * t).cos()) * y[0]];
    let mut cols = [[1.0, 0.0], [0.0, 1.0]];
    for y in cols.iter_mut() {
        let mut t = 0.0;
        for _ in 0..n {
            let k1 = rhs(t, *y);
            let k2 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
            let k3 = rhs(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
            let k4 = rhs(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            for i in 0..2 {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
        }
    }
    cols[0][0] + cols[1][1]
}

#[test]
fn q_scan_matches_floquet_monodromy() {
    let mut checked = 0;
    for k in 0..20 {
        let q = 0.05 + 0.075 * k as f64;
        // skip the immediate neighbourhood of the boundary
        if (q - 0.908).abs() < 0.02 {
            continue;
        }
        let floquet_stable = monodromy_trace(0.0, q).abs() < 2.0 && monodromy_trace(0.0, q / 2.0).abs() < 2.0;
        let classified = stability_classify([-q / 2.0, -q / 2.0, q]) == Stability::Stable;
        assert_eq!(classified, floquet_stable, "q = {q}");
        assert_eq!(mathieu_bounded(0.0, q, 40), floquet_stable, "bounded check at q = {q}");
        checked += 1;
    }
    assert!(checked >= 19);
}

#[test]
fn floquet_boundary_sits_at_the_classifier_bound() {
    // bisection on the monodromy trace, independent of the library constant
    let (mut lo, mut hi) = (0.5, 1.2);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if monodromy_trace(0.0, mid).abs() < 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    assert!((lo - dynamics::Q_STABLE).abs() < 2e-3, "Floquet boundary {lo}");
}

#[test]
fn trap_a_q_and_threshold_are_consistent() {
    let hp = TRAP_A.potential().unwrap();
    let alpha = AtomState::G.alpha_hz();
    let q = mathieu_q(&hp, &TRAP_A.drive, alpha, rydtrap::units::MASS_RB87);
    assert!((q[0] - q[1]).abs() < 1e-15 && (q[2] + 2.0 * q[0]).abs() < 1e-12);
    assert_eq!(stability_classify(q), Stability::Stable);
    let w = threshold_omega(&hp, &TRAP_A.drive, alpha, rydtrap::units::MASS_RB87);
    let at = DriveSettings { omega: w, ..TRAP_A.drive };
    let qt = mathieu_q(&hp, &at, alpha, rydtrap::units::MASS_RB87);
    assert!((qt[2].abs() - dynamics::Q_STABLE).abs() < 1e-9);
    // q scales as 1/omega^2
    let ratio = q[2] / qt[2];
    assert!((ratio - (w / TRAP_A.drive.omega).powi(2)).abs() < 1e-9);
}

#[test]
fn initial_velocity_spread_at_reference_temperature() {
    let ens = InitialEnsemble::new(100_000, 300e-9, 11);
    let n = ens.count as f64;
    let mut sum = [0.0; 3];
    let mut sq = [0.0; 3];
    let mut rsq = [0.0; 3];
    for i in 0..ens.count {
        let s = ens.state(i);
        for k in 0..3 {
            sum[k] += s.v[k];
            sq[k] += s.v[k] * s.v[k];
            rsq[k] += s.r[k] * s.r[k];
        }
    }
    for k in 0..3 {
        let mean = sum[k] / n;
        let std = (sq[k] / n - mean * mean).sqrt();
        assert!((std / 5.35e-3 - 1.0).abs() < 0.02, "axis {k}: std {std}");
        let rstd = (rsq[k] / n).sqrt();
        assert!((rstd / 0.27e-6 - 1.0).abs() < 0.02, "axis {k}: position std {rstd}");
    }
    assert!((sum[1] / n - 6e-3).abs() < 1e-4, "recoil mean {}", sum[1] / n);
    assert!((sum[0] / n).abs() < 1e-4 && (sum[2] / n).abs() < 1e-4);
}

#[test]
fn spread_scales_as_root_temperature() {
    let (r1, v1) = InitialEnsemble::new(1, 300e-9, 1).sigmas();
    let (r4, v4) = InitialEnsemble::new(1, 1200e-9, 1).sigmas();
    assert!((r4 / r1 - 2.0).abs() < 1e-12 && (v4 / v1 - 2.0).abs() < 1e-12);
}

#[test]
fn static_field_does_not_trap() {
    let hp = TRAP_A.potential().unwrap();
    let drive = DriveSettings { u30: 0.0, ..TRAP_A.drive };
    let atom = AtomSpec::bare(AtomState::G.alpha_hz());
    let ens = InitialEnsemble::new(8, 300e-9, 3);
    let rep = trapping_efficiency(&atom, &hp, &drive, &ens, 0.3, &IntegratorOptions::ensemble(&drive), &WorkerPool::new(1)).unwrap();
    assert_eq!(rep.trapped, 0);
    assert_eq!(rep.fraction, 0.0);
}

#[test]
fn static_field_is_axial_on_the_axis() {
    let hp = TRAP_A.potential().unwrap();
    let u = [TRAP_A.drive.u1, TRAP_A.drive.u2, 0.0];
    for k in -5..=5 {
        let z = k as f64 * 20e-6;
        let f = hp.field_with(u, [0.0, 0.0, z]).unwrap();
        assert!(f.theta.abs() < 1e-12, "theta {} at z = {z}", f.theta);
        assert!(f.evec[0].abs() < 1e-12 * f.modulus && f.evec[1].abs() < 1e-12 * f.modulus);
    }
}

#[test]
fn identical_seed_gives_identical_trajectory() {
    let hp = TRAP_A.potential().unwrap();
    let atom = AtomSpec::bare(AtomState::G.alpha_hz());
    let ens = InitialEnsemble::new(4, 300e-9, 42);
    let opts = IntegratorOptions::for_drive(&TRAP_A.drive);
    let a = integrate(&atom, &hp, &TRAP_A.drive, ens.state(2), 0.02, &opts).unwrap();
    let b = integrate(&atom, &hp, &TRAP_A.drive, ens.state(2), 0.02, &opts).unwrap();
    assert_eq!(a.samples, b.samples);
    assert_ne!(ens.state(2), ens.state(3));
}

#[test]
fn efficiency_is_independent_of_worker_count() {
    let hp = TRAP_A.potential().unwrap();
    let atom = AtomSpec::bare(AtomState::G.alpha_hz());
    let ens = InitialEnsemble::new(6, 20e-6, 5);
    let opts = IntegratorOptions::ensemble(&TRAP_A.drive);
    let one = trapping_efficiency(&atom, &hp, &TRAP_A.drive, &ens, 0.05, &opts, &WorkerPool::new(1)).unwrap();
    let three = trapping_efficiency(&atom, &hp, &TRAP_A.drive, &ens, 0.05, &opts, &WorkerPool::new(3)).unwrap();
    assert_eq!(one.trapped, three.trapped);
    assert_eq!(one.tilt.mean_theta.to_bits(), three.tilt.mean_theta.to_bits());
}

#[test]
fn depth_rejects_a_bracket_that_does_not_straddle() {
    let hp = TRAP_A.potential().unwrap();
    let drive = DriveSettings { u30: 0.0, ..TRAP_A.drive };
    let atom = AtomSpec::bare(AtomState::G.alpha_hz());
    let ens = InitialEnsemble::new(4, 300e-9, 1);
    let err = dynamics::trap_depth(&atom, &hp, &drive, &ens, (1e-6, 1e-4), 0.2, &IntegratorOptions::ensemble(&drive), &WorkerPool::new(1))
        .unwrap_err();
    assert!(matches!(err, dynamics::DynamicsError::Bracket { .. }));
}
