use std::sync::OnceLock;

use rydtrap::coherence::{self, ClockSurfaces, PathMode, RamseyConfig};
use rydtrap::dressing::{DressedSurface, Dresser, MultilevelStrategy, SurfaceOptions, EXCITED, GROUND};
use rydtrap::dynamics::{InitialEnsemble, IntegratorOptions, ModeProfile};
use rydtrap::par::WorkerPool;
use rydtrap::presets::TRAP_A;
use rydtrap::units;

fn surfaces() -> &'static (DressedSurface, DressedSurface) {
    static S: OnceLock<(DressedSurface, DressedSurface)> = OnceLock::new();
    S.get_or_init(|| {
        let d = Dresser::reference().unwrap();
        let op = d.solve_multilevel(400.0, MultilevelStrategy::fixed_rabi(200e6)).unwrap().op;
        (
            d.fit_surface(&GROUND, &op, SurfaceOptions::default()).unwrap(),
            d.fit_surface(&EXCITED, &op, SurfaceOptions::default()).unwrap(),
        )
    })
}

fn clock(profile: ModeProfile) -> ClockSurfaces {
    let (g, e) = surfaces();
    ClockSurfaces { g: g.clone(), e: e.clone(), profile }
}

#[test]
fn identical_surfaces_keep_full_contrast() {
    let (g, _) = surfaces();
    let s = ClockSurfaces { g: g.clone(), e: g.clone(), profile: ModeProfile::default() };
    let hp = TRAP_A.potential().unwrap();
    let cfg = RamseyConfig::new(vec![0.0, 5e-3, 10e-3], InitialEnsemble::new(4, 300e-9, 2), &TRAP_A.drive);
    let r = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(1)).unwrap();
    assert_eq!(r.n_traj, 4);
    for c in &r.contrast {
        assert!((c - 1.0).abs() < 1e-12, "contrast {c}");
    }
    assert!(r.phases.iter().all(|p| p.abs() < 1e-9));
}

#[test]
fn contrast_starts_at_one_and_stays_bounded() {
    let s = clock(ModeProfile::default());
    let hp = TRAP_A.potential().unwrap();
    let times: Vec<f64> = (0..=5).map(|k| 2e-3 * k as f64).collect();
    let cfg = RamseyConfig::new(times, InitialEnsemble::new(6, 300e-9, 9), &TRAP_A.drive);
    let r = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(1)).unwrap();
    assert!((r.contrast[0] - 1.0).abs() < 1e-12);
    assert!(r.contrast.iter().all(|c| (0.0..=1.0 + 1e-12).contains(c)));
    assert_eq!(r.n_traj + r.n_lost, 6);
    // the stored phases reproduce the last contrast point
    assert!((coherence::contrast(&r.phases) - r.contrast[5]).abs() < 1e-9);
    let counted: usize = r.histogram.iter().map(|b| b.count).sum();
    assert_eq!(counted, r.n_traj);
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let s = clock(ModeProfile::default());
    let hp = TRAP_A.potential().unwrap();
    let cfg = RamseyConfig::new(vec![0.0, 4e-3], InitialEnsemble::new(5, 300e-9, 4), &TRAP_A.drive);
    let a = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(1)).unwrap();
    let b = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(3)).unwrap();
    assert_eq!(a.contrast, b.contrast);
    assert_eq!(a.phases, b.phases);
}

#[test]
fn echo_with_shared_path_and_uniform_drive_refocuses() {
    let s = clock(ModeProfile { node: f64::INFINITY });
    let hp = TRAP_A.potential().unwrap();
    let mut cfg = RamseyConfig::new(vec![0.0, 10e-3, 20e-3], InitialEnsemble::new(8, 300e-9, 21), &TRAP_A.drive);
    cfg.t_pi = Some(10e-3);
    cfg.theta_err_sigma = 0.0;
    cfg.paths = PathMode::Shared;
    let r = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(1)).unwrap();
    let echo = r.echo_contrast.as_ref().unwrap();
    assert!(echo[2] > 0.9, "echo contrast {}", echo[2]);
}

fn separation(profile: ModeProfile) -> coherence::SternGerlach {
    let s = clock(profile);
    let hp = TRAP_A.potential().unwrap();
    let ens = InitialEnsemble::new(3, 300e-9, 8);
    let opts = IntegratorOptions::for_drive(&TRAP_A.drive);
    let (g, e) = coherence::paired_trajectories(&s.atom(false), &s.atom(true), &hp, &TRAP_A.drive, ens.state(1), 10e-3, &opts).unwrap();
    coherence::stern_gerlach_check(&g, &e, 300e-9, units::MASS_RB87).unwrap()
}

#[test]
fn profile_force_dominates_the_clock_state_separation() {
    // the profile force has opposite signs for the two dressed states
    let cos = separation(ModeProfile::default());
    let flat = separation(ModeProfile { node: f64::INFINITY });
    assert!(!cos.ok);
    assert!(cos.max_separation > cos.lambda_db);
    assert!(flat.max_separation < flat.lambda_db);
    assert!(cos.max_separation > 10.0 * flat.max_separation);
    assert!(flat.mean_separation <= flat.max_separation);
}

#[test]
fn bad_configurations_are_rejected() {
    let s = clock(ModeProfile::default());
    let hp = TRAP_A.potential().unwrap();
    let pool = WorkerPool::new(1);
    let mut cfg = RamseyConfig::new(vec![2e-3, 1e-3], InitialEnsemble::new(1, 300e-9, 1), &TRAP_A.drive);
    assert!(coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &pool).is_err());
    cfg.times = vec![0.0, 1e-3];
    cfg.t_pi = Some(5e-3);
    assert!(coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &pool).is_err());
}

#[test]
fn csv_writers_use_the_documented_columns() {
    let s = clock(ModeProfile::default());
    let hp = TRAP_A.potential().unwrap();
    let cfg = RamseyConfig::new(vec![0.0, 2e-3], InitialEnsemble::new(3, 300e-9, 5), &TRAP_A.drive);
    let r = coherence::simulate_ramsey(&s, &hp, &TRAP_A.drive, &cfg, &WorkerPool::new(1)).unwrap();
    let mut buf = Vec::new();
    coherence::write_contrast_csv(&mut buf, &r).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("T,C,n_traj"));
    assert_eq!(lines.count(), 2);
    let mut buf = Vec::new();
    coherence::write_histogram_csv(&mut buf, &r.histogram).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("phase_bin,count,class"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",slow") || l.ends_with(",fast")));
}
