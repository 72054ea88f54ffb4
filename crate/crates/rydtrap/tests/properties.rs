use proptest::prelude::*;

use rydtrap::coherence::{contrast, echo_coherence};
use rydtrap::dressing::{build_and_diagonalize, DressedLadderSpec, StarkModel};
use rydtrap::dynamics::{integrate, AtomSpec, IntegratorOptions, State};
use rydtrap::emission::{decay_ratio, CavitySpec, Orientation};
use rydtrap::field::{gravity_compensating_u2, DriveSettings, HarmonicPotential};
use rydtrap::presets::{AtomState, TRAP_A};
use rydtrap::stark::StarkBasis;
use rydtrap::units;

fn trap_a() -> HarmonicPotential {
    TRAP_A.potential().unwrap()
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn shifted(r: [f64; 3], k: usize, d: f64) -> [f64; 3] {
    let mut out = r;
    out[k] += d;
    out
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-120e-6..120e-6f64)
}

fn voltages() -> impl Strategy<Value = [f64; 3]> {
    (0.05..1.0f64, -0.01..0.01f64, -0.2..0.2f64).prop_map(|(a, b, c)| [a, b, c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_is_minus_gradient_of_potential(r in point(), u in voltages()) {
        let hp = trap_a();
        let e = hp.evec_with(u, r);
        let h = 1e-8;
        let scale = norm(e).max(1e-3);
        for k in 0..3 {
            let fd = -(hp.potential_with(u, shifted(r, k, h)).unwrap() - hp.potential_with(u, shifted(r, k, -h)).unwrap()) / (2.0 * h);
            prop_assert!((fd - e[k]).abs() < 1e-6 * scale, "component {}: fd {} vs {}", k, fd, e[k]);
        }
    }

    #[test]
    fn jacobian_matches_differences_and_is_harmonic(r in point(), u in voltages()) {
        let hp = trap_a();
        let jet = hp.jet_with(u, r);
        let h = 1e-8;
        let jscale = jet.jac.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs())).max(1.0);
        for j in 0..3 {
            let ep = hp.evec_with(u, shifted(r, j, h));
            let em = hp.evec_with(u, shifted(r, j, -h));
            for i in 0..3 {
                let fd = (ep[i] - em[i]) / (2.0 * h);
                prop_assert!((fd - jet.jac[i][j]).abs() < 1e-6 * jscale);
            }
            let gm = (norm(ep) - norm(em)) / (2.0 * h);
            prop_assert!((gm - jet.grad_modulus[j]).abs() < 1e-6 * jscale);
        }
        let trace = jet.jac[0][0] + jet.jac[1][1] + jet.jac[2][2];
        prop_assert!(trace.abs() < 1e-9 * jscale);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((jet.jac[i][j] - jet.jac[j][i]).abs() < 1e-9 * jscale);
            }
        }
    }

    #[test]
    fn field_is_linear_in_voltages(r in point(), u in voltages(), w in voltages(), a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let hp = trap_a();
        let mix = [a * u[0] + b * w[0], a * u[1] + b * w[1], a * u[2] + b * w[2]];
        let lhs = hp.evec_with(mix, r);
        let eu = hp.evec_with(u, r);
        let ew = hp.evec_with(w, r);
        let scale = norm(eu).max(norm(ew)) * (a.abs() + b.abs()) + 1e-12;
        for k in 0..3 {
            prop_assert!((lhs[k] - (a * eu[k] + b * ew[k])).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn contrast_ignores_a_global_phase(phases in prop::collection::vec(-10.0..10.0f64, 1..60), offset in -20.0..20.0f64) {
        let moved: Vec<f64> = phases.iter().map(|p| p + offset).collect();
        let (c0, c1) = (contrast(&phases), contrast(&moved));
        prop_assert!((c0 - c1).abs() < 1e-12);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&c0));
    }

    #[test]
    fn perfect_echo_restores_full_coherence(phi in -50.0..50.0f64) {
        let c = echo_coherence(phi, phi, 0.0);
        prop_assert!((c.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn echo_coherence_never_exceeds_one(phi1 in -50.0..50.0f64, phi2 in -50.0..50.0f64, vartheta in -3.2..3.2f64) {
        prop_assert!(echo_coherence(phi1, phi2, vartheta).norm() <= 1.0 + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stark_hamiltonian_is_symmetric(m in -12i32..12, extra in 0u32..4, manifolds in 1u32..4, e in 0.0..600.0f64) {
        let basis = StarkBasis::new(m, m.unsigned_abs() + 1 + extra, manifolds).unwrap();
        let h = basis.hamiltonian(e);
        prop_assert_eq!(h.nrows(), basis.dim());
        for i in 0..h.nrows() {
            for j in 0..i {
                prop_assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
    }

    #[test]
    fn ladder_spectrum_translates_with_photon_number(
        m in 1i32..6,
        k in -5i64..5,
        e in 0.0..400.0f64,
        rabi in 0.0..3e8f64,
        omega in 2e10..8e10f64,
    ) {
        let model = StarkModel::perturbative();
        let mut spec = DressedLadderSpec::new(m, 2, 2, omega, rabi);
        let a = build_and_diagonalize(&spec, &model, e).unwrap();
        spec.photon_number = k;
        let b = build_and_diagonalize(&spec, &model, e).unwrap();
        prop_assert_eq!(a.energies.len(), b.energies.len());
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v
        };
        let (ea, eb) = (sorted(&a.energies), sorted(&b.energies));
        let scale = ea.iter().fold(0.0f64, |s, v| s.max(v.abs())) + (k.abs() as f64) * omega;
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((y - x - k as f64 * omega).abs() < 1e-12 * scale);
        }
    }

    #[test]
    fn emission_is_mirror_symmetric(
        l_over_lambda in 0.1..2.0f64,
        frac in 0.05..0.95f64,
        skin in 0.0..1e-7f64,
        par in any::<bool>(),
    ) {
        let lambda = 6e-3;
        let l = l_over_lambda * lambda;
        let orient = if par { Orientation::Parallel } else { Orientation::Perpendicular };
        let a = decay_ratio(&CavitySpec { l, z_atom: frac * l, lambda, skin_depth: skin }, orient).unwrap();
        let b = decay_ratio(&CavitySpec { l, z_atom: (1.0 - frac) * l, lambda, skin_depth: skin }, orient).unwrap();
        prop_assert!(a >= 0.0);
        prop_assert!((a - b).abs() < 1e-6 * a.max(1e-6), "{} vs {}", a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn energy_is_conserved_in_a_static_field(
        r in prop::array::uniform3(-3e-6..3e-6f64),
        v in prop::array::uniform3(-2e-3..2e-3f64),
    ) {
        let hp = trap_a();
        let alpha = AtomState::G.alpha_hz();
        let mut drive = DriveSettings { u30: 0.0, ..TRAP_A.drive };
        drive.u2 = gravity_compensating_u2(&hp, &drive, alpha, units::MASS_RB87);
        let atom = AtomSpec::bare(alpha);
        let mut opts = IntegratorOptions::for_drive(&drive);
        opts.rtol = 1e-11;
        opts.atol_pos = 1e-15;
        opts.atol_vel = 1e-12;
        let s0 = State { r, v };
        let tr = integrate(&atom, &hp, &drive, s0, 0.05, &opts).unwrap();
        let e0 = atom.total_energy(&hp, &drive, &s0, 0.0);
        let mut scale = 0.5 * atom.mass * v.iter().map(|x| x * x).sum::<f64>();
        let mut worst: f64 = 0.0;
        for s in &tr.samples {
            let st = State { r: s.r, v: s.v };
            worst = worst.max((atom.total_energy(&hp, &drive, &st, s.t) - e0).abs());
            scale = scale.max(0.5 * atom.mass * s.v.iter().map(|x| x * x).sum::<f64>());
        }
        prop_assert!(worst < 1e-6 * scale, "drift {} of {}", worst, scale);
    }
}
